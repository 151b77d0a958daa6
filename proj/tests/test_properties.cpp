// Seeded randomized checks of cross-module invariants.

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "moldsched/milp/solver.hpp"
#include "moldsched/schedulers.hpp"
#include "moldsched/validate.hpp"
#include "support.hpp"

using namespace moldsched;
using testsupport::rel_diff;

TEST(Properties, ExtractedSchedulesAreFeasibleAndNested) {
  std::mt19937_64 rng(1234);
  int all_optimal = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    const int p = (rng() % 2) ? 4 : 2;
    const int K = 2 + static_cast<int>(rng() % 2);
    const auto inst = testsupport::random_instance(rng, n, p, K, p == 4 ? 0.8 : 1.0);
    double obj[4];
    bool optimal = true;
    for (SchedulerKind k : kAllSchedulers) {
      const auto r = milp::solve(build_model(inst, k).model, 120.0);
      optimal &= r.status == milp::SolveStatus::Optimal;
      obj[static_cast<int>(k)] = r.objective;
      if (!r.has_assignment()) continue;
      EXPECT_LE(r.best_bound, r.objective * (1 + 1e-6) + 1e-9);
      const Schedule s = extract_schedule(inst, k, r);
      const auto v = validate(s, inst);
      EXPECT_TRUE(v.empty()) << to_string(k) << " trial " << trial << ": " << (v.empty() ? "" : v[0].str());
      EXPECT_LE(rel_diff(recompute_energy(s, inst), r.objective), 1e-6);
    }
    if (!optimal) continue;
    ++all_optimal;
    for (int k = 1; k < 4; ++k) EXPECT_LE(obj[k - 1], obj[k] * (1 + 1e-6)) << "trial " << trial;
  }
  EXPECT_GT(all_optimal, 50);
}

TEST(Properties, SingleTaskAllKindsAgree) {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 30; ++trial) {
    const int p = 1 << (1 + static_cast<int>(rng() % 3));
    auto inst = testsupport::random_instance(rng, 1, p, 1 + static_cast<int>(rng() % 3), 1.0);
    // Deadline between the fastest power-of-2 run and a relaxed sequential one, so every kind is feasible.
    const Task& t = inst.tasks[0];
    int w = 1;
    while (2 * w <= std::min(t.max_width, p)) w *= 2;
    const double fast = runtime(t, w, inst.machine.freq(inst.machine.level_count() - 1));
    const double slow = 1.2 * runtime(t, 1, inst.machine.freq(0));
    inst.deadline = fast + std::uniform_real_distribution<double>(0.0, 1.0)(rng) * (slow - fast);
    double obj[4];
    int unrestricted_width = 0;
    for (SchedulerKind k : kAllSchedulers) {
      const auto r = milp::solve(build_model(inst, k).model, 60.0);
      ASSERT_EQ(r.status, milp::SolveStatus::Optimal);
      obj[static_cast<int>(k)] = r.objective;
      if (k == SchedulerKind::Unrestricted)
        unrestricted_width = static_cast<int>(extract_schedule(inst, k, r).entries[0].cores.size());
    }
    for (int k = 1; k < 4; ++k) EXPECT_LE(obj[k - 1], obj[k] * (1 + 1e-6));
    if (is_power_of_two(unrestricted_width))
      for (int k = 1; k < 4; ++k) EXPECT_LE(rel_diff(obj[k], obj[0]), 1e-6) << "trial " << trial;
  }
}

TEST(Properties, EveryCrownFeasibleAssignmentIsAValidSchedule) {
  // p = 2, n = 2, K = 2: 12 binaries, so every assignment can be visited.
  std::mt19937_64 rng(606);
  int accepted = 0;
  for (int trial = 0; trial < 15; ++trial) {
    const auto inst = testsupport::random_instance(rng, 2, 2, 2, 0.5 + 0.1 * static_cast<double>(trial % 6));
    const auto sm = build_crown(inst);
    const int b = sm.model.variable_count();
    ASSERT_EQ(b, 12);
    std::vector<double> x(static_cast<std::size_t>(b));
    for (std::uint32_t mask = 0; mask < (1u << b); ++mask) {
      for (int j = 0; j < b; ++j) x[static_cast<std::size_t>(j)] = (mask >> j) & 1u;
      bool ok = true;
      for (const auto& c : sm.model.constraints()) ok &= sm.model.violation(c, x) <= 1e-9;
      if (!ok) continue;
      milp::SolveResult r;
      r.status = milp::SolveStatus::Feasible;
      r.assignment = x;
      r.objective = sm.model.objective_value(x);
      const Schedule s = extract_schedule(inst, SchedulerKind::Crown, r);
      EXPECT_TRUE(validate(s, inst).empty()) << "mask " << mask;
      EXPECT_LE(rel_diff(s.total_energy, r.objective), 1e-9);
      ++accepted;
    }
  }
  EXPECT_GT(accepted, 50);
}

TEST(Properties, SchedulerSolvesAreDeterministic) {
  std::mt19937_64 rng(4321);
  for (int trial = 0; trial < 8; ++trial) {
    const auto inst = testsupport::random_instance(rng, 4, 4, 3, 0.8);
    for (SchedulerKind k : kAllSchedulers) {
      const auto model = build_model(inst, k).model;
      const auto a = milp::solve(model, 120.0), b = milp::solve(model, 120.0);
      EXPECT_EQ(a.status, b.status);
      EXPECT_EQ(a.nodes, b.nodes);
      EXPECT_EQ(a.objective, b.objective);
      EXPECT_EQ(a.assignment, b.assignment);
    }
  }
}
