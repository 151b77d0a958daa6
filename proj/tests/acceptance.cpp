// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "moldsched/bench.hpp"
#include "moldsched/milp/lp_format.hpp"
#include "moldsched/milp/solver.hpp"
#include "moldsched/schedulers.hpp"
#include "moldsched/validate.hpp"
#include "support.hpp"

using namespace moldsched;
using testsupport::rel_diff;

namespace {

constexpr double kRel = 1e-6;

// Every extracted schedule of every solve below, for criterion 7.
struct Checked {
  int schedules = 0;
  int violations = 0;
  int energy_mismatches = 0;
  std::string first_problem;
};
Checked g_checked;

void check_extracted(const ProblemInstance& inst, SchedulerKind kind, const milp::SolveResult& r) {
  if (!r.has_assignment()) return;
  const Schedule s = extract_schedule(inst, kind, r);
  ++g_checked.schedules;
  const auto v = validate(s, inst);
  if (!v.empty()) {
    ++g_checked.violations;
    if (g_checked.first_problem.empty()) g_checked.first_problem = std::string(to_string(kind)) + ": " + v[0].str();
  }
  if (rel_diff(recompute_energy(s, inst), r.objective) > kRel) {
    ++g_checked.energy_mismatches;
    if (g_checked.first_problem.empty())
      g_checked.first_problem = std::string(to_string(kind)) + ": recomputed energy differs from objective";
  }
}

milp::SolveResult solve_checked(const ProblemInstance& inst, SchedulerKind kind, double limit) {
  const auto r = milp::solve(build_model(inst, kind).model, limit);
  check_extracted(inst, kind, r);
  return r;
}

ProblemInstance seeded_instance(std::uint64_t seed, int n, int p, int K) {
  ProblemInstance inst;
  inst.tasks = generate_taskset(n, seed);
  inst.machine = Machine::uniform(p, K);
  inst.deadline = deadline(inst.tasks, inst.machine, default_d(p));
  return inst;
}

struct Outcome {
  bool pass;
  std::string detail;
};

int g_failures = 0;

void report(int id, const char* title, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++g_failures;
  std::printf("criterion %d %s: %s (%s) [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", title, o.detail.c_str(), secs);
  std::fflush(stdout);
}

// Objectives of one n = 4, p = 4, K = 3 instance, shared by criteria 2 and 3.
struct ChainRow {
  bool all_optimal = false;
  double obj[4]{};
};
std::vector<ChainRow> g_chain;

}  // namespace

int main() {
  report(1, "ILP optimum equals exhaustive oracle (50 instances, n in {2,3}, p in {2,4}, K = 2)", [] {
    int compared = 0, mismatches = 0, infeasible_pairs = 0;
    std::string first;
    for (int i = 0; i < 50; ++i) {
      const int n = 2 + i % 2;
      const int p = (i / 2) % 2 ? 4 : 2;
      const auto inst = seeded_instance(derive_seed(101, n, i), n, p, 2);
      for (SchedulerKind k : kAllSchedulers) {
        const auto expected = oracle_optimal(inst, k);
        const auto r = solve_checked(inst, k, 300.0);
        ++compared;
        bool ok;
        if (!expected) {
          ok = r.status == milp::SolveStatus::Infeasible;
          ++infeasible_pairs;
        } else {
          ok = r.status == milp::SolveStatus::Optimal && rel_diff(r.objective, *expected) <= kRel;
        }
        if (!ok) {
          ++mismatches;
          if (first.empty()) first = "instance " + std::to_string(i) + " " + to_string(k);
        }
      }
    }
    return Outcome{mismatches == 0, std::to_string(compared) + " solves, " + std::to_string(mismatches) +
                                        " mismatches, " + std::to_string(infeasible_pairs) + " infeasible pairs" +
                                        (first.empty() ? "" : ", first: " + first)};
  });

  report(2, "nesting chain unrestricted <= allocpow2 <= group <= crown (30 instances, n = 4, p = 4, K = 3, 120 s)",
         [] {
           int violations = 0;
           for (int i = 0; i < 30; ++i) {
             const auto inst = seeded_instance(derive_seed(202, 4, i), 4, 4, 3);
             ChainRow row;
             row.all_optimal = true;
             for (SchedulerKind k : kAllSchedulers) {
               const auto r = solve_checked(inst, k, 120.0);
               row.all_optimal &= r.status == milp::SolveStatus::Optimal;
               row.obj[static_cast<int>(k)] = r.objective;
             }
             g_chain.push_back(row);
             if (!row.all_optimal) continue;
             for (int k = 1; k < 4; ++k)
               if (row.obj[k - 1] > row.obj[k] * (1 + kRel)) ++violations;
           }
           int optimal = 0;
           for (const auto& r : g_chain) optimal += r.all_optimal ? 1 : 0;
           return Outcome{violations == 0 && optimal > 0, std::to_string(optimal) + "/30 all-optimal, " +
                                                              std::to_string(violations) + " chain violations"};
         });

  report(3, "constrained/unrestricted energy ratio >= 1 at n = 4", [] {
    int ratios = 0, below = 0;
    double worst = 0.0, lowest = 1e300, sum = 0.0;
    for (const auto& row : g_chain) {
      if (!row.all_optimal) continue;
      for (int k = 1; k < 4; ++k) {
        const double q = row.obj[k] / row.obj[0];
        ++ratios;
        sum += q;
        worst = std::max(worst, q);
        lowest = std::min(lowest, q);
        if (q < 1.0 - kRel) ++below;
      }
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d ratios, %d below 1, min %.4f, avg %.4f, max %.4f", ratios, below,
                  ratios ? lowest : 0.0, ratios ? sum / ratios : 0.0, worst);
    return Outcome{ratios > 0 && below == 0, buf};
  });

  report(4, "zero timeouts on the desk-scale suite (n in {2,3,4}, p in {2,4}, K = 3, 120 s)", [] {
    bench::SuiteConfig cfg = bench::SuiteConfig::desk_scale();
    cfg.time_limit = 120.0;
    const auto results = bench::run_suite(cfg);
    for (const auto& r : results) {
      if (!r.schedule) continue;
      const auto inst = bench::make_instance(cfg, r.machine_cores, r.n_tasks, r.set_index);
      ++g_checked.schedules;
      const auto v = validate(*r.schedule, inst);
      if (!v.empty()) ++g_checked.violations;
      if (rel_diff(*r.energy_j, r.objective) > kRel) ++g_checked.energy_mismatches;
    }
    const auto totals = bench::tabulate_timeouts(results).back();
    int timeouts = 0;
    for (int c : totals.counts) timeouts += c;
    const auto optimal = bench::tabulate_optimal(results).back();
    std::string detail = std::to_string(results.size()) + " solves, timeouts per scheduler " +
                         std::to_string(totals.counts[0]) + "/" + std::to_string(totals.counts[1]) + "/" +
                         std::to_string(totals.counts[2]) + "/" + std::to_string(totals.counts[3]) +
                         ", optimal per scheduler " + std::to_string(optimal.counts[0]) + "/" +
                         std::to_string(optimal.counts[1]) + "/" + std::to_string(optimal.counts[2]) + "/" +
                         std::to_string(optimal.counts[3]);
    return Outcome{timeouts == 0, detail};
  });

  report(5, "crown explores fewer B&B nodes than unrestricted on >= 80% (10 instances, n = 6, p = 4, K = 3, 60 s)",
         [] {
           int fewer = 0, total = 0, unrestricted_timeouts = 0, crown_timeouts = 0;
           long long crown_nodes = 0, unrestricted_nodes = 0;
           for (int i = 0; i < 10; ++i) {
             const auto inst = seeded_instance(derive_seed(505, 6, i), 6, 4, 3);
             const auto u = solve_checked(inst, SchedulerKind::Unrestricted, 60.0);
             const auto c = solve_checked(inst, SchedulerKind::Crown, 60.0);
             ++total;
             unrestricted_timeouts += u.status == milp::SolveStatus::TimeLimit ? 1 : 0;
             crown_timeouts += c.status == milp::SolveStatus::TimeLimit ? 1 : 0;
             // A timed-out unrestricted count is a lower bound on the nodes it needs.
             const bool crown_done = c.status != milp::SolveStatus::TimeLimit;
             if (crown_done && c.nodes < u.nodes) ++fewer;
             crown_nodes += c.nodes;
             unrestricted_nodes += u.nodes;
           }
           const bool pass = fewer * 10 >= total * 8;
           return Outcome{pass, std::to_string(fewer) + "/" + std::to_string(total) + " instances; nodes crown " +
                                    std::to_string(crown_nodes) + " vs unrestricted " +
                                    std::to_string(unrestricted_nodes) + "; timeouts crown " +
                                    std::to_string(crown_timeouts) + ", unrestricted " +
                                    std::to_string(unrestricted_timeouts)};
         });

  report(6, "variable counts 2pnK + n^2 + 2n and (2p-1)nK over {2,4,8}x{1,2,4,8}x{1,2,3}", [] {
    int cases = 0, wrong = 0;
    for (int p : {2, 4, 8})
      for (int n : {1, 2, 4, 8})
        for (int K : {1, 2, 3}) {
          ProblemInstance inst;
          inst.tasks = generate_taskset(n, static_cast<std::uint64_t>(p * 1000 + n * 10 + K));
          inst.machine = Machine::uniform(p, K);
          inst.deadline = 100.0;
          ++cases;
          if (build_unrestricted(inst).model.variable_count() != 2 * p * n * K + n * n + 2 * n) ++wrong;
          if (build_crown(inst).model.variable_count() != (2 * p - 1) * n * K) ++wrong;
        }
    return Outcome{wrong == 0, std::to_string(cases) + " (p,n,K) cases, " + std::to_string(wrong) + " wrong counts"};
  });

  report(7, "every extracted schedule validates and energy matches objective (1e-6 relative)", [] {
    return Outcome{g_checked.schedules > 0 && g_checked.violations == 0 && g_checked.energy_mismatches == 0,
                   std::to_string(g_checked.schedules) + " schedules, " + std::to_string(g_checked.violations) +
                       " with violations, " + std::to_string(g_checked.energy_mismatches) + " energy mismatches" +
                       (g_checked.first_problem.empty() ? "" : ", first: " + g_checked.first_problem)};
  });

  report(8, "deadline for sum 100, p = 4, d = 0.8, f in [0.6, 1.6] is 39.583333 s (1e-9)", [] {
    const TaskSet tasks{Task{0, 100, 1}};
    const double M = deadline(tasks, Machine::uniform(4, 6), 0.8);
    const double expected = 475.0 / 12.0;  // 0.8 * (100/6.4 + 200/2.4) / 2
    char buf[96];
    std::snprintf(buf, sizeof buf, "M = %.12f, error %.2e", M, std::abs(M - expected));
    return Outcome{std::abs(M - expected) <= 1e-9, buf};
  });

  report(9, "solver equals 2^b enumeration (b <= 12); LP export/import preserves objective (1e-9)", [] {
    std::mt19937_64 rng(909);
    std::vector<milp::MilpModel> models;
    for (int i = 0; i < 300; ++i) models.push_back(testsupport::random_binary_model(rng, 1 + i % 12));
    for (int p : {1, 2, 4})
      for (int n = 1; n <= 2; ++n)
        for (int K = 1; K <= 2; ++K) {
          if ((2 * p - 1) * n * K > 12) continue;
          for (int rep = 0; rep < 5; ++rep) {
            auto inst = testsupport::random_instance(rng, n, p, K, 0.6 + 0.2 * rep);
            models.push_back(build_crown(inst).model);
          }
        }
    int enum_mismatch = 0, roundtrip_mismatch = 0, feasible = 0;
    for (const auto& m : models) {
      const auto expected = testsupport::enumerate_optimum(m);
      const auto r = milp::solve(m, 60.0);
      if (!expected) {
        if (r.status != milp::SolveStatus::Infeasible) ++enum_mismatch;
      } else {
        ++feasible;
        if (r.status != milp::SolveStatus::Optimal || rel_diff(r.objective, *expected) > kRel) ++enum_mismatch;
      }
      const auto reparsed = milp::parse_lp(milp::export_lp(m));
      const auto r2 = milp::solve(reparsed, 60.0);
      if (r2.status != r.status) ++roundtrip_mismatch;
      if (!r.has_assignment()) continue;
      if (std::abs(r2.objective - r.objective) > 1e-9 * std::max(1.0, std::abs(r.objective))) ++roundtrip_mismatch;
      const auto imported = milp::import_solution(reparsed, milp::write_solution(m, r));
      if (std::abs(imported.objective - r.objective) > 1e-9 * std::max(1.0, std::abs(r.objective)))
        ++roundtrip_mismatch;
    }
    return Outcome{enum_mismatch == 0 && roundtrip_mismatch == 0,
                   std::to_string(models.size()) + " models (" + std::to_string(feasible) + " feasible), " +
                       std::to_string(enum_mismatch) + " enumeration mismatches, " +
                       std::to_string(roundtrip_mismatch) + " round-trip mismatches"};
  });

  std::printf("%s: %d of 9 criteria failed\n", g_failures ? "FAIL" : "PASS", g_failures);
  return g_failures ? 1 : 0;
}
