#pragma once

// Benchmark harness: generated task-set suites solved by all four schedulers,
// result tables (timeouts, optimal solutions, energy relative to the
// unrestricted scheduler) and Gantt-style SVG drawings of schedules.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "moldsched/milp/solver.hpp"
#include "moldsched/schedulers.hpp"
#include "moldsched/taskmodel.hpp"
#include "moldsched/validate.hpp"

namespace moldsched::bench {

struct SuiteConfig {
  std::vector<int> task_set_sizes{2, 3, 4};
  int sets_per_size = 10;
  std::vector<int> machine_sizes{2, 4};
  std::map<int, double> d_values{{2, 1.0}, {4, 0.8}};
  double time_limit = 60.0;
  std::uint64_t seed = 1;
  std::vector<double> freq_ghz{0.6, 1.1, 1.6};
  std::vector<double> power_w;  // empty: cubic model
  int workers = 1;

  /// Small suite the bundled solver finishes quickly.
  static SuiteConfig desk_scale() { return SuiteConfig{}; }

  /// Evaluation-scale suite: 40 task sets on 4 and 8 cores, 5 minute limit.
  static SuiteConfig full_scale() {
    SuiteConfig c;
    c.task_set_sizes = {4, 8, 16, 32};
    c.sets_per_size = 10;
    c.machine_sizes = {4, 8};
    c.d_values = {{4, 0.8}, {8, 1.0}};
    c.time_limit = 300.0;
    c.freq_ghz = {0.6, 0.8, 1.0, 1.2, 1.4, 1.6};
    return c;
  }

  Machine machine(int cores) const {
    if (power_w.empty()) return Machine::with_cubic_power(cores, freq_ghz);
    return Machine(cores, freq_ghz, power_w);
  }

  void check() const {
    if (task_set_sizes.empty() || machine_sizes.empty()) throw std::invalid_argument("suite needs task set and machine sizes");
    for (int n : task_set_sizes)
      if (n < 1) throw std::invalid_argument("task set sizes must be positive");
    for (int p : machine_sizes) {
      if (p < 1) throw std::invalid_argument("machine sizes must be positive");
      if (!d_values.count(p)) throw std::invalid_argument("no d value for machine size " + std::to_string(p));
      require_power_of_two_cores(p);
    }
    if (sets_per_size < 1) throw std::invalid_argument("sets_per_size must be positive");
    if (!(time_limit > 0.0)) throw std::invalid_argument("time limit must be positive");
    if (workers < 1) throw std::invalid_argument("workers must be positive");
    machine(machine_sizes.front());  // validates the frequency/power tables
  }
};

inline SuiteConfig config_from_json(const nlohmann::json& j) {
  SuiteConfig c = SuiteConfig::desk_scale();
  auto get = [&](const char* key, auto& target) {
    if (j.contains(key)) target = j.at(key).get<std::decay_t<decltype(target)>>();
  };
  try {
    get("task_set_sizes", c.task_set_sizes);
    get("sets_per_size", c.sets_per_size);
    get("machine_sizes", c.machine_sizes);
    get("time_limit_s", c.time_limit);
    get("seed", c.seed);
    get("freq_ghz", c.freq_ghz);
    get("power_w", c.power_w);
    get("workers", c.workers);
    if (j.contains("d_values")) {
      c.d_values.clear();
      for (auto& [key, value] : j.at("d_values").items()) c.d_values[std::stoi(key)] = value.get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad suite config: ") + e.what());
  }
  c.check();
  return c;
}

inline nlohmann::json config_to_json(const SuiteConfig& c) {
  nlohmann::json d = nlohmann::json::object();
  for (auto [p, v] : c.d_values) d[std::to_string(p)] = v;
  nlohmann::json j{{"task_set_sizes", c.task_set_sizes}, {"sets_per_size", c.sets_per_size},
                   {"machine_sizes", c.machine_sizes},   {"d_values", d},
                   {"time_limit_s", c.time_limit},       {"seed", c.seed},
                   {"freq_ghz", c.freq_ghz},             {"workers", c.workers}};
  if (!c.power_w.empty()) j["power_w"] = c.power_w;
  return j;
}

inline ProblemInstance make_instance(const SuiteConfig& cfg, int cores, int n, int set_index) {
  ProblemInstance inst;
  inst.tasks = generate_taskset(n, derive_seed(cfg.seed, n, set_index));
  inst.machine = cfg.machine(cores);
  inst.deadline = deadline(inst.tasks, inst.machine, cfg.d_values.at(cores));
  return inst;
}

struct BenchResult {
  SchedulerKind scheduler = SchedulerKind::Unrestricted;
  int machine_cores = 0;
  int n_tasks = 0;
  int set_index = 0;
  milp::SolveStatus status = milp::SolveStatus::Infeasible;
  double wall_time_s = 0.0;
  long long nodes = 0;
  std::optional<double> energy_j;  // recomputed from the extracted schedule
  double objective = milp::kInf;   // solver objective
  double gap = milp::kInf;
  std::optional<Schedule> schedule;

  bool has_incumbent() const { return energy_j.has_value(); }
};

class SuiteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Builds, solves, extracts and validates one (instance, scheduler) cell.
/// Throws SuiteError if the extracted schedule is infeasible.
inline BenchResult run_cell(const ProblemInstance& inst, SchedulerKind kind, double time_limit,
                            milp::SolverOptions options = {}) {
  BenchResult r;
  r.scheduler = kind;
  r.machine_cores = inst.machine.core_count();
  r.n_tasks = static_cast<int>(inst.tasks.size());
  const SchedulerModel sm = build_model(inst, kind);
  const milp::SolveResult res = milp::solve(sm.model, time_limit, options);
  r.status = res.status;
  r.wall_time_s = res.wall_time;
  r.nodes = res.nodes;
  r.gap = res.gap;
  r.objective = res.objective;
  if (res.has_assignment()) {
    Schedule s = extract_schedule(inst, kind, res);
    const auto violations = validate(s, inst);
    if (!violations.empty()) {
      std::string msg = std::string(to_string(kind)) + " produced an infeasible schedule:";
      for (const auto& v : violations) msg += "\n  " + v.str();
      throw SuiteError(msg);
    }
    r.energy_j = recompute_energy(s, inst);
    r.schedule = std::move(s);
  }
  return r;
}

/// Number of (machine size, task set, scheduler) cells in a suite.
inline std::size_t cell_count(const SuiteConfig& cfg) {
  return cfg.machine_sizes.size() * cfg.task_set_sizes.size() * static_cast<std::size_t>(cfg.sets_per_size) *
         std::size(kAllSchedulers);
}

/// Runs every (machine size, task set size, set index, scheduler) cell.
/// Results are ordered by machine size, task set size, set index, scheduler.
inline std::vector<BenchResult> run_suite(const SuiteConfig& cfg,
                                          const std::function<void(const BenchResult&)>& on_result = {}) {
  cfg.check();
  struct Job {
    int cores, n, index;
    SchedulerKind kind;
  };
  std::vector<Job> jobs;
  for (int p : cfg.machine_sizes)
    for (int n : cfg.task_set_sizes)
      for (int idx = 0; idx < cfg.sets_per_size; ++idx)
        for (SchedulerKind k : kAllSchedulers) jobs.push_back(Job{p, n, idx, k});

  std::vector<BenchResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::optional<std::string> failure;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (failure) return;
      }
      const Job& job = jobs[i];
      try {
        const ProblemInstance inst = make_instance(cfg, job.cores, job.n, job.index);
        BenchResult r = run_cell(inst, job.kind, cfg.time_limit);
        r.set_index = job.index;
        std::lock_guard<std::mutex> lock(mu);
        results[i] = std::move(r);
        if (on_result) on_result(results[i]);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure)
          failure = "p=" + std::to_string(job.cores) + " n=" + std::to_string(job.n) + " set " +
                    std::to_string(job.index) + ": " + e.what();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(jobs.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) throw SuiteError(*failure);
  return results;
}

// ---------------------------------------------------------------------------
// Tables. A row with machine_cores == -1 or n_tasks == -1 is a total row.

inline constexpr int kTotal = -1;

struct CountRow {
  int machine_cores = kTotal;
  int n_tasks = kTotal;
  std::array<int, 4> counts{};  // unrestricted, allocpow2, group, crown
};

inline std::size_t kind_index(SchedulerKind k) { return static_cast<std::size_t>(k); }

namespace detail {

inline std::vector<CountRow> count_table(const std::vector<BenchResult>& results,
                                         const std::function<bool(const BenchResult&)>& pred) {
  std::map<int, std::map<int, std::array<int, 4>>> cells;
  for (const auto& r : results) {
    auto& c = cells[r.machine_cores][r.n_tasks];
    if (pred(r)) ++c[kind_index(r.scheduler)];
  }
  std::vector<CountRow> rows;
  std::array<int, 4> grand{};
  for (const auto& [p, by_n] : cells) {
    std::array<int, 4> machine_total{};
    for (const auto& [n, counts] : by_n) {
      rows.push_back(CountRow{p, n, counts});
      for (std::size_t k = 0; k < 4; ++k) machine_total[k] += counts[k];
    }
    rows.push_back(CountRow{p, kTotal, machine_total});
    for (std::size_t k = 0; k < 4; ++k) grand[k] += machine_total[k];
  }
  rows.push_back(CountRow{kTotal, kTotal, grand});
  return rows;
}

inline std::string label(int v) { return v == kTotal ? "total" : std::to_string(v); }

}  // namespace detail

/// Runs that hit the time limit without proving optimality.
inline std::vector<CountRow> tabulate_timeouts(const std::vector<BenchResult>& results) {
  return detail::count_table(results, [](const BenchResult& r) { return r.status == milp::SolveStatus::TimeLimit; });
}

inline std::vector<CountRow> tabulate_optimal(const std::vector<BenchResult>& results) {
  return detail::count_table(results, [](const BenchResult& r) { return r.status == milp::SolveStatus::Optimal; });
}

struct Ratio {
  double best = NAN;
  double avg = NAN;
  double worst = NAN;
  int samples = 0;
};

struct RatioRow {
  int machine_cores = kTotal;
  int n_tasks = kTotal;
  std::array<Ratio, 3> ratios{};  // allocpow2, group, crown
};

class MissingBaseline : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Energy of each constrained scheduler divided by the unrestricted energy on
/// the same task set: best/average/worst per cell, plus machine and grand
/// totals. Sets where a constrained scheduler has no schedule are skipped for
/// that scheduler.
inline std::vector<RatioRow> tabulate_energy_relative(const std::vector<BenchResult>& results) {
  using Key = std::tuple<int, int, int>;
  std::map<Key, const BenchResult*> baseline;
  for (const auto& r : results)
    if (r.scheduler == SchedulerKind::Unrestricted) baseline[{r.machine_cores, r.n_tasks, r.set_index}] = &r;

  std::map<int, std::map<int, std::array<std::vector<double>, 3>>> samples;
  for (const auto& r : results) {
    if (r.scheduler == SchedulerKind::Unrestricted) continue;
    auto it = baseline.find({r.machine_cores, r.n_tasks, r.set_index});
    // Every constrained model is nested in the baseline, so a proven-infeasible set has no ratio.
    if (it != baseline.end() && it->second->status == milp::SolveStatus::Infeasible) continue;
    if (it == baseline.end() || !it->second->has_incumbent())
      throw MissingBaseline("no unrestricted schedule for p=" + std::to_string(r.machine_cores) + " n=" +
                            std::to_string(r.n_tasks) + " set " + std::to_string(r.set_index));
    auto& cell = samples[r.machine_cores][r.n_tasks];
    if (!r.has_incumbent()) continue;
    cell[kind_index(r.scheduler) - 1].push_back(*r.energy_j / *it->second->energy_j);
  }
  auto summarize = [](const std::vector<double>& v) {
    Ratio out;
    if (v.empty()) return out;
    out.best = *std::min_element(v.begin(), v.end());
    out.worst = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    out.avg = s / static_cast<double>(v.size());
    out.samples = static_cast<int>(v.size());
    return out;
  };
  std::vector<RatioRow> rows;
  std::array<std::vector<double>, 3> grand;
  for (const auto& [p, by_n] : samples) {
    std::array<std::vector<double>, 3> machine_all;
    for (const auto& [n, cell] : by_n) {
      RatioRow row{p, n, {}};
      for (std::size_t k = 0; k < 3; ++k) {
        row.ratios[k] = summarize(cell[k]);
        machine_all[k].insert(machine_all[k].end(), cell[k].begin(), cell[k].end());
      }
      rows.push_back(row);
    }
    RatioRow total{p, kTotal, {}};
    for (std::size_t k = 0; k < 3; ++k) {
      total.ratios[k] = summarize(machine_all[k]);
      grand[k].insert(grand[k].end(), machine_all[k].begin(), machine_all[k].end());
    }
    rows.push_back(total);
  }
  RatioRow g{kTotal, kTotal, {}};
  for (std::size_t k = 0; k < 3; ++k) g.ratios[k] = summarize(grand[k]);
  rows.push_back(g);
  return rows;
}

// ---------------------------------------------------------------------------
// Text and CSV output.

inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::string results_csv(const std::vector<BenchResult>& results) {
  std::ostringstream os;
  os << "scheduler,machine_cores,n_tasks,set_index,status,wall_time_s,nodes,energy_j,gap\n";
  for (const auto& r : results) {
    os << to_string(r.scheduler) << ',' << r.machine_cores << ',' << r.n_tasks << ',' << r.set_index << ','
       << milp::to_string(r.status) << ',' << fmt("%.6f", r.wall_time_s) << ',' << r.nodes << ','
       << (r.energy_j ? fmt("%.10g", *r.energy_j) : std::string()) << ','
       << (std::isfinite(r.gap) ? fmt("%.6g", r.gap) : std::string()) << '\n';
  }
  return os.str();
}

inline std::string counts_csv(const std::vector<CountRow>& rows) {
  std::ostringstream os;
  os << "machine_cores,n_tasks,unrestricted,allocpow2,group,crown\n";
  for (const auto& r : rows)
    os << detail::label(r.machine_cores) << ',' << detail::label(r.n_tasks) << ',' << r.counts[0] << ','
       << r.counts[1] << ',' << r.counts[2] << ',' << r.counts[3] << '\n';
  return os.str();
}

inline std::string counts_text(const std::vector<CountRow>& rows, const std::string& title) {
  std::ostringstream os;
  os << title << "\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "%7s %7s %13s %10s %7s %7s\n", "# cores", "# tasks", "unrestricted", "allocpow2",
                "group", "crown");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%7s %7s %13d %10d %7d %7d\n", detail::label(r.machine_cores).c_str(),
                  detail::label(r.n_tasks).c_str(), r.counts[0], r.counts[1], r.counts[2], r.counts[3]);
    os << buf;
  }
  return os.str();
}

inline std::string ratio_cell(double v) { return std::isnan(v) ? "-" : fmt("%.2f", v); }

inline std::string ratios_csv(const std::vector<RatioRow>& rows) {
  std::ostringstream os;
  os << "machine_cores,n_tasks";
  for (const char* k : {"allocpow2", "group", "crown"}) os << ',' << k << "_best," << k << "_avg," << k << "_worst";
  os << '\n';
  for (const auto& r : rows) {
    os << detail::label(r.machine_cores) << ',' << detail::label(r.n_tasks);
    for (const auto& q : r.ratios) {
      for (double v : {q.best, q.avg, q.worst}) os << ',' << (std::isnan(v) ? std::string() : fmt("%.6f", v));
    }
    os << '\n';
  }
  return os.str();
}

inline std::string ratios_text(const std::vector<RatioRow>& rows) {
  std::ostringstream os;
  os << "Energy relative to the unrestricted scheduler (best / avg / worst)\n";
  char buf[200];
  std::snprintf(buf, sizeof buf, "%7s %7s   %-18s   %-18s   %-18s\n", "# cores", "# tasks", "allocpow2", "group",
                "crown");
  os << buf;
  for (const auto& r : rows) {
    std::string cells;
    for (const auto& q : r.ratios) {
      char c[40];
      std::snprintf(c, sizeof c, "   %4s %4s %4s     ", ratio_cell(q.best).c_str(), ratio_cell(q.avg).c_str(),
                    ratio_cell(q.worst).c_str());
      cells += c;
    }
    std::snprintf(buf, sizeof buf, "%7s %7s%s\n", detail::label(r.machine_cores).c_str(),
                  detail::label(r.n_tasks).c_str(), cells.c_str());
    os << buf;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Gantt SVG: one lane per core, time axis scaled so the deadline spans the
// full lane width, one rectangle per (task, core) shaded by frequency level.

inline std::string export_gantt(const Schedule& schedule, const ProblemInstance& inst) {
  constexpr double kLeft = 60.0, kWidth = 800.0, kLane = 28.0, kTop = 30.0, kPad = 4.0;
  const int p = inst.machine.core_count();
  const int levels = inst.machine.level_count();
  const double M = inst.deadline;
  const double height = kTop + p * kLane + 30.0;
  auto x_of = [&](double t) { return kLeft + t / M * kWidth; };
  auto shade = [&](int level) {
    // Light (slow) to dark (fast) blue.
    const double frac = levels > 1 ? static_cast<double>(level) / (levels - 1) : 1.0;
    const int r = static_cast<int>(std::lround(200 - 170 * frac));
    const int g = static_cast<int>(std::lround(220 - 150 * frac));
    const int b = static_cast<int>(std::lround(255 - 90 * frac));
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt("%.0f", kLeft + kWidth + 20) << "\" height=\""
     << fmt("%.0f", height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<text x=\"" << kLeft << "\" y=\"18\">" << to_string(schedule.kind) << " schedule, deadline "
     << fmt("%.3f", M) << " s, energy " << fmt("%.3f", schedule.total_energy) << " J</text>\n";
  for (int c = 0; c < p; ++c) {
    const double y = kTop + c * kLane;
    os << "<g class=\"lane\" data-core=\"" << c << "\">"
       << "<rect x=\"" << fmt("%.3f", kLeft) << "\" y=\"" << fmt("%.3f", y) << "\" width=\"" << fmt("%.3f", kWidth)
       << "\" height=\"" << fmt("%.3f", kLane) << "\" fill=\"none\" stroke=\"#999\"/>"
       << "<text x=\"8\" y=\"" << fmt("%.3f", y + kLane / 2 + 4) << "\">P" << c << "</text></g>\n";
  }
  for (const ScheduleEntry& e : schedule.entries) {
    for (int c : e.cores) {
      const double y = kTop + c * kLane + kPad / 2;
      const double x0 = x_of(e.start), x1 = x_of(e.end);
      os << "<g class=\"task\" data-task=\"" << e.task << "\" data-core=\"" << c << "\" data-level=\"" << e.level
         << "\"><rect x=\"" << fmt("%.3f", x0) << "\" y=\"" << fmt("%.3f", y) << "\" width=\""
         << fmt("%.3f", x1 - x0) << "\" height=\"" << fmt("%.3f", kLane - kPad) << "\" fill=\"" << shade(e.level)
         << "\" stroke=\"#222\"/><text x=\"" << fmt("%.3f", (x0 + x1) / 2) << "\" y=\""
         << fmt("%.3f", y + kLane / 2 + 2) << "\" text-anchor=\"middle\">" << e.task << "</text></g>\n";
    }
  }
  os << "<line x1=\"" << fmt("%.3f", kLeft + kWidth) << "\" y1=\"" << fmt("%.3f", kTop - 4) << "\" x2=\""
     << fmt("%.3f", kLeft + kWidth) << "\" y2=\"" << fmt("%.3f", kTop + p * kLane + 4)
     << "\" stroke=\"#c00\" stroke-dasharray=\"4 2\"/>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace moldsched::bench
