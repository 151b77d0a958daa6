// moldsched command-line tool.
//
// Exit status: 0 success, 1 infeasible instance or schedule violations,
// 2 usage/file errors, 3 time limit reached without any schedule.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "moldsched/bench.hpp"
#include "moldsched/io.hpp"
#include "moldsched/milp/lp_format.hpp"
#include "moldsched/milp/solver.hpp"
#include "moldsched/schedulers.hpp"
#include "moldsched/taskmodel.hpp"
#include "moldsched/validate.hpp"

namespace fs = std::filesystem;
using namespace moldsched;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitUsage = 2;
constexpr int kExitTimeout = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InstanceArgs {
  std::string tasks;
  std::string machine;
  std::optional<double> deadline;
  std::optional<double> d;
};

void add_instance_options(CLI::App* cmd, InstanceArgs& a, bool required = true) {
  cmd->add_option("--tasks", a.tasks, "task set JSON")->required(required);
  cmd->add_option("--machine", a.machine, "machine JSON")->required(required);
  auto* dl = cmd->add_option("--deadline", a.deadline, "deadline in seconds");
  auto* d = cmd->add_option("--d", a.d, "deadline slack factor (default 0.8 on 4 cores, else 1.0)");
  dl->excludes(d);
  d->excludes(dl);
}

ProblemInstance load_instance(const InstanceArgs& a, std::optional<double> fallback_deadline = std::nullopt) {
  ProblemInstance inst;
  inst.tasks = io::load_taskset(a.tasks);
  inst.machine = io::load_machine(a.machine);
  if (inst.tasks.empty()) throw UsageError("task set is empty");
  if (a.deadline) {
    inst.deadline = *a.deadline;
  } else if (a.d) {
    inst.deadline = deadline(inst.tasks, inst.machine, *a.d);
  } else if (fallback_deadline) {
    inst.deadline = *fallback_deadline;
  } else {
    inst.deadline = deadline(inst.tasks, inst.machine, default_d(inst.machine.core_count()));
  }
  if (!(inst.deadline > 0.0)) throw UsageError("deadline must be positive");
  return inst;
}

void check_scheduler(const ProblemInstance& inst, SchedulerKind kind) {
  if (uses_groups(kind)) require_power_of_two_cores(inst.machine.core_count());
}

int print_violations(const std::vector<Violation>& violations) {
  for (const auto& v : violations) std::cout << v.str() << "\n";
  return violations.empty() ? kExitOk : kExitInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-aware scheduling of moldable tasks on DVFS multicores"};
  app.require_subcommand(1, 1);

  // generate
  int gen_n = 0;
  std::uint64_t gen_seed = 1;
  std::string gen_out, gen_machine_out;
  int gen_cores = 4, gen_levels = 6;
  auto* gen = app.add_subcommand("generate", "generate a synthetic task set");
  gen->add_option("--n", gen_n, "number of tasks")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "random seed")->required();
  gen->add_option("--out", gen_out, "output task set JSON")->required();
  gen->add_option("--machine-out", gen_machine_out, "also write a machine JSON");
  gen->add_option("--cores", gen_cores, "machine core count for --machine-out")->check(CLI::PositiveNumber);
  gen->add_option("--levels", gen_levels, "frequency levels in [0.6, 1.6] GHz for --machine-out")
      ->check(CLI::PositiveNumber);

  // schedule
  InstanceArgs sched_args;
  std::string sched_kind, sched_out, sched_solution, sched_solution_out;
  double sched_timeout = 300.0;
  auto* sched = app.add_subcommand("schedule", "solve one scheduling ILP and write the schedule");
  add_instance_options(sched, sched_args);
  sched->add_option("--scheduler", sched_kind, "unrestricted, allocpow2, group or crown")
      ->required()
      ->check(CLI::IsMember({"unrestricted", "allocpow2", "group", "crown"}));
  sched->add_option("--timeout", sched_timeout, "wall-clock limit in seconds")->check(CLI::PositiveNumber);
  sched->add_option("--out", sched_out, "output schedule JSON")->required();
  sched->add_option("--solution", sched_solution, "use this external solution file instead of solving");
  sched->add_option("--solution-out", sched_solution_out, "also write the raw variable assignment");

  // export-lp
  InstanceArgs lp_args;
  std::string lp_kind, lp_out;
  double lp_timeout = 300.0;
  auto* lp = app.add_subcommand("export-lp", "write the scheduling ILP in LP format");
  add_instance_options(lp, lp_args);
  lp->add_option("--scheduler", lp_kind, "unrestricted, allocpow2, group or crown")
      ->required()
      ->check(CLI::IsMember({"unrestricted", "allocpow2", "group", "crown"}));
  lp->add_option("--timeout", lp_timeout, "accepted for symmetry with schedule; unused");
  lp->add_option("--out", lp_out, "output LP file")->required();

  // validate
  InstanceArgs val_args;
  std::string val_schedule;
  auto* val = app.add_subcommand("validate", "check a schedule for feasibility");
  val->add_option("--schedule", val_schedule, "schedule JSON")->required();
  add_instance_options(val, val_args);

  // gantt
  InstanceArgs gantt_args;
  std::string gantt_schedule, gantt_out;
  auto* gantt = app.add_subcommand("gantt", "draw a schedule as SVG");
  gantt->add_option("--schedule", gantt_schedule, "schedule JSON")->required();
  add_instance_options(gantt, gantt_args);
  gantt->add_option("--out", gantt_out, "output SVG")->required();

  // bench
  std::string bench_config, bench_preset, bench_out;
  bool bench_serial = false, bench_gantt = false, bench_quiet = false;
  std::optional<int> bench_workers;
  std::optional<double> bench_timeout;
  auto* bench_cmd = app.add_subcommand("bench", "run a benchmark suite");
  auto* cfg_opt = bench_cmd->add_option("--config", bench_config, "suite config JSON");
  auto* preset_opt = bench_cmd->add_option("--preset", bench_preset, "built-in suite: desk or full")
                         ->check(CLI::IsMember({"desk", "full"}));
  cfg_opt->excludes(preset_opt);
  bench_cmd->add_option("--out-dir", bench_out, "output directory")->required();
  bench_cmd->add_flag("--serial", bench_serial, "run one cell at a time");
  bench_cmd->add_option("--workers", bench_workers, "parallel cells")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--timeout", bench_timeout, "override the per-cell time limit")->check(CLI::PositiveNumber);
  bench_cmd->add_flag("--gantt", bench_gantt, "write an SVG for every schedule found");
  bench_cmd->add_flag("--quiet", bench_quiet, "do not print tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      io::save_taskset(gen_out, generate_taskset(gen_n, gen_seed));
      if (!gen_machine_out.empty()) io::save_machine(gen_machine_out, Machine::uniform(gen_cores, gen_levels));
      return kExitOk;
    }

    if (*sched) {
      const SchedulerKind kind = scheduler_from_string(sched_kind);
      const ProblemInstance inst = load_instance(sched_args);
      check_scheduler(inst, kind);
      const SchedulerModel sm = build_model(inst, kind);
      milp::SolveResult res;
      if (!sched_solution.empty()) {
        try {
          res = milp::import_solution(sm.model, io::read_text(sched_solution));
        } catch (const milp::ConstraintViolated& e) {
          std::cerr << "solution is infeasible: " << e.what() << "\n";
          return kExitInfeasible;
        }
      } else {
        res = milp::solve(sm.model, sched_timeout);
      }
      std::cerr << "status " << milp::to_string(res.status) << ", nodes " << res.nodes << ", "
                << res.wall_time << " s\n";
      if (!res.has_assignment()) {
        if (res.status == milp::SolveStatus::Infeasible) {
          std::cerr << "no feasible schedule meets the deadline\n";
          return kExitInfeasible;
        }
        std::cerr << "time limit reached without a schedule\n";
        return kExitTimeout;
      }
      if (!sched_solution_out.empty()) io::write_text(sched_solution_out, milp::write_solution(sm.model, res));
      const Schedule s = extract_schedule(inst, kind, res);
      const auto violations = validate(s, inst);
      if (!violations.empty()) {
        std::cerr << "extracted schedule is infeasible:\n";
        for (const auto& v : violations) std::cerr << v.str() << "\n";
        return kExitInfeasible;
      }
      io::save_schedule(sched_out, s);
      std::cout << "energy " << s.total_energy << " J\n";
      return kExitOk;
    }

    if (*lp) {
      const SchedulerKind kind = scheduler_from_string(lp_kind);
      const ProblemInstance inst = load_instance(lp_args);
      check_scheduler(inst, kind);
      io::write_text(lp_out, milp::export_lp(build_model(inst, kind).model));
      return kExitOk;
    }

    if (*val) {
      const Schedule s = io::load_schedule(val_schedule);
      const ProblemInstance inst = load_instance(val_args, s.deadline);
      return print_violations(validate(s, inst));
    }

    if (*gantt) {
      const Schedule s = io::load_schedule(gantt_schedule);
      const ProblemInstance inst = load_instance(gantt_args, s.deadline);
      io::write_text(gantt_out, bench::export_gantt(s, inst));
      return kExitOk;
    }

    if (*bench_cmd) {
      bench::SuiteConfig cfg = bench_config.empty()
                                   ? (bench_preset == "full" ? bench::SuiteConfig::full_scale()
                                                              : bench::SuiteConfig::desk_scale())
                                   : bench::config_from_json(io::parse_json(io::read_text(bench_config), bench_config));
      if (bench_workers) cfg.workers = *bench_workers;
      if (bench_serial) cfg.workers = 1;
      if (bench_timeout) cfg.time_limit = *bench_timeout;
      cfg.check();
      const fs::path dir(bench_out);
      fs::create_directories(dir);
      io::write_text((dir / "config.json").string(), bench::config_to_json(cfg).dump(2) + "\n");

      std::vector<bench::BenchResult> results;
      try {
        results = bench::run_suite(cfg, [&](const bench::BenchResult& r) {
          if (!bench_quiet)
            std::cerr << to_string(r.scheduler) << " p=" << r.machine_cores << " n=" << r.n_tasks << " set "
                      << r.set_index << ": " << milp::to_string(r.status) << "\n";
        });
      } catch (const bench::SuiteError& e) {
        std::cerr << e.what() << "\n";
        return kExitInfeasible;
      }
      io::write_text((dir / "results.csv").string(), bench::results_csv(results));
      const auto timeouts = bench::tabulate_timeouts(results);
      const auto optimal = bench::tabulate_optimal(results);
      io::write_text((dir / "timeouts.csv").string(), bench::counts_csv(timeouts));
      io::write_text((dir / "optimal.csv").string(), bench::counts_csv(optimal));
      std::string text = bench::counts_text(timeouts, "Runs stopped by the time limit") + "\n" +
                         bench::counts_text(optimal, "Optimal solutions found") + "\n";
      io::write_text((dir / "timeouts.txt").string(), bench::counts_text(timeouts, "Runs stopped by the time limit"));
      io::write_text((dir / "optimal.txt").string(), bench::counts_text(optimal, "Optimal solutions found"));
      try {
        const auto ratios = bench::tabulate_energy_relative(results);
        io::write_text((dir / "energy.csv").string(), bench::ratios_csv(ratios));
        io::write_text((dir / "energy.txt").string(), bench::ratios_text(ratios));
        text += bench::ratios_text(ratios);
      } catch (const bench::MissingBaseline& e) {
        text += std::string("energy table skipped: ") + e.what() + "\n";
      }
      if (bench_gantt) {
        fs::create_directories(dir / "gantt");
        for (const auto& r : results) {
          if (!r.schedule) continue;
          const ProblemInstance inst = bench::make_instance(cfg, r.machine_cores, r.n_tasks, r.set_index);
          const std::string name = std::string(to_string(r.scheduler)) + "_p" + std::to_string(r.machine_cores) +
                                   "_n" + std::to_string(r.n_tasks) + "_s" + std::to_string(r.set_index) + ".svg";
          io::write_text((dir / "gantt" / name).string(), bench::export_gantt(*r.schedule, inst));
        }
      }
      if (!bench_quiet) std::cout << text;
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const io::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const milp::LpParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const milp::UnknownVariable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
