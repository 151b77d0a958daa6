#include <gtest/gtest.h>

#include <random>

#include "moldsched/milp/lp_format.hpp"
#include "moldsched/milp/solver.hpp"
#include "moldsched/schedulers.hpp"
#include "moldsched/validate.hpp"
#include "support.hpp"

using namespace moldsched;
using testsupport::rel_diff;
using testsupport::single_task_instance;

namespace {

ProblemInstance instance(TaskSet tasks, Machine m, double deadline) {
  ProblemInstance inst;
  inst.tasks = std::move(tasks);
  inst.machine = std::move(m);
  inst.deadline = deadline;
  return inst;
}

int pow2_widths_up_to(int p) {
  int c = 0;
  for (int w = 1; w <= p; ++w) c += is_power_of_two(w) ? 1 : 0;
  return c;
}

int core_rows(int n) { return 3 * n + n * (n - 1) / 2 + n * (n - 1); }

}  // namespace

TEST(SchedulerKind, Names) {
  for (SchedulerKind k : kAllSchedulers) EXPECT_EQ(scheduler_from_string(to_string(k)), k);
  EXPECT_THROW(scheduler_from_string("fastest"), std::invalid_argument);
  EXPECT_TRUE(uses_groups(SchedulerKind::Crown));
  EXPECT_FALSE(uses_groups(SchedulerKind::AllocPow2));
}

TEST(ModelSize, UnrestrictedReferenceExample) {
  const auto inst = instance(generate_taskset(8, 1), Machine::uniform(4, 6), 100.0);
  EXPECT_EQ(build_unrestricted(inst).model.variable_count(), 464);
}

TEST(ModelSize, GroupExample) {
  const auto inst = instance(generate_taskset(2, 1), Machine::uniform(8, 2), 100.0);
  EXPECT_EQ(build_group(inst).model.variable_count(), 68);
}

TEST(ModelSize, CrownSingleTask) {
  const auto inst = instance({Task{0, 10, 1}}, Machine::uniform(2, 2), 100.0);
  const auto sm = build_crown(inst);
  EXPECT_EQ(sm.model.variable_count(), 6);
  EXPECT_EQ(sm.model.binary_count(), 6);
  // assign, width ban, two core loads
  EXPECT_EQ(sm.model.constraint_count(), 4);
  EXPECT_NE(milp::export_lp(sm.model).find("Binaries"), std::string::npos);
}

TEST(ModelSize, CrownWidthBanOnEightCores) {
  const auto inst = instance({Task{0, 10, 1}}, Machine::uniform(8, 2), 100.0);
  const auto sm = build_crown(inst);
  int banned_groups = -1;
  for (const auto& c : sm.model.constraints())
    if (c.name == "maxwidth_0") banned_groups = static_cast<int>(c.expr.terms.size()) / 2;
  EXPECT_EQ(banned_groups, 7);
}

TEST(ModelSize, AllocPow2BansNonPowerWidths) {
  const auto inst = instance(generate_taskset(3, 4), Machine::uniform(4, 2), 100.0);
  const auto sm = build_allocpow2(inst);
  int bans = 0;
  for (const auto& c : sm.model.constraints())
    if (c.name.rfind("pow2_", 0) == 0) {
      ++bans;
      EXPECT_EQ(c.name.substr(0, 7), "pow2_3_");
    }
  EXPECT_EQ(bans, 3);
  const auto one = instance(generate_taskset(1, 4), Machine::uniform(8, 2), 100.0);
  EXPECT_EQ(pow2_widths_up_to(8), 4);
  int bans8 = 0;
  for (const auto& c : build_allocpow2(one).model.constraints()) bans8 += c.name.rfind("pow2_", 0) == 0 ? 1 : 0;
  EXPECT_EQ(bans8, 8 - 4);
}

TEST(ModelSize, ClosedFormsOverGrid) {
  for (int p : {2, 4, 8})
    for (int n = 1; n <= 6; ++n)
      for (int K = 1; K <= 3; ++K) {
        const auto inst = instance(generate_taskset(n, static_cast<std::uint64_t>(p * 100 + n * 10 + K)),
                                   Machine::uniform(p, K), 50.0);
        const auto u = build_unrestricted(inst).model;
        EXPECT_EQ(u.variable_count(), 2 * p * n * K + n * n + 2 * n);
        EXPECT_EQ(u.binary_count(), 2 * p * n * K + n * n);
        EXPECT_EQ(u.constraint_count(), core_rows(n) + p * n * (n - 1) / 2 + n * K);
        const auto a = build_allocpow2(inst).model;
        EXPECT_EQ(a.variable_count(), u.variable_count());
        EXPECT_EQ(a.constraint_count(), u.constraint_count() + (p - pow2_widths_up_to(p)) * n);
        const auto g = build_group(inst).model;
        EXPECT_EQ(g.variable_count(), (2 * p - 1) * n * K + n * n + 2 * n);
        EXPECT_EQ(g.constraint_count(), core_rows(n) + n * (n - 1) * (2 * p - 1));
        const auto c = build_crown(inst).model;
        EXPECT_EQ(c.variable_count(), (2 * p - 1) * n * K);
        EXPECT_EQ(c.binary_count(), c.variable_count());
        int narrow = 0;
        for (const Task& t : inst.tasks) narrow += t.max_width < p ? 1 : 0;
        EXPECT_EQ(c.constraint_count(), n + narrow + p);
      }
}

TEST(ModelShape, GroupRejectsNonPowerOfTwo) {
  const auto inst = instance(generate_taskset(2, 1), Machine::uniform(3, 2), 100.0);
  EXPECT_THROW(build_group(inst), std::invalid_argument);
  EXPECT_THROW(build_crown(inst), std::invalid_argument);
  EXPECT_NO_THROW(build_unrestricted(inst));
}

TEST(ModelShape, SingleTaskHasNoSelfPrecedence) {
  const auto sm = build_unrestricted(single_task_instance());
  const auto r = milp::solve(sm.model, 10.0);
  ASSERT_EQ(r.status, milp::SolveStatus::Optimal);
  EXPECT_EQ(r.assignment[static_cast<std::size_t>(sm.layout.y_at(0, 0))], 0.0);
  int set = 0;
  for (int v : sm.layout.x) set += r.assignment[static_cast<std::size_t>(v)] > 0.5 ? 1 : 0;
  EXPECT_EQ(set, 1);
}

TEST(ModelShape, GroupOrdersTasksSharingTheRootGroup) {
  const auto inst = instance({Task{0, 10, 2}, Task{1, 10, 2}}, Machine::uniform(2, 1), 100.0);
  const auto sm = build_group(inst);
  const auto& L = sm.layout;
  std::vector<double> x(static_cast<std::size_t>(sm.model.variable_count()), 0.0);
  x[static_cast<std::size_t>(L.x_at(0, 0, 0))] = 1;
  x[static_cast<std::size_t>(L.x_at(0, 1, 0))] = 1;
  double worst = 0.0;
  for (const auto& c : sm.model.constraints())
    if (c.name.rfind("nest_", 0) == 0) worst = std::max(worst, sm.model.violation(c, x));
  EXPECT_DOUBLE_EQ(worst, 1.0);
  x[static_cast<std::size_t>(L.y_at(1, 0))] = 1;
  worst = 0.0;
  for (const auto& c : sm.model.constraints())
    if (c.name.rfind("nest_", 0) == 0) worst = std::max(worst, sm.model.violation(c, x));
  EXPECT_DOUBLE_EQ(worst, 0.0);
}

TEST(ModelShape, GroupOrdersAncestorAndDescendantEitherWay) {
  // Task 1 in the root group, task 0 in a leaf: they share a core.
  const auto inst = instance({Task{0, 10, 2}, Task{1, 10, 2}}, Machine::uniform(2, 1), 100.0);
  const auto sm = build_group(inst);
  const auto& L = sm.layout;
  for (auto [root_task, leaf_task] : {std::pair{0, 1}, std::pair{1, 0}}) {
    std::vector<double> x(static_cast<std::size_t>(sm.model.variable_count()), 0.0);
    x[static_cast<std::size_t>(L.x_at(0, root_task, 0))] = 1;
    x[static_cast<std::size_t>(L.x_at(2, leaf_task, 0))] = 1;
    double worst = 0.0;
    for (const auto& c : sm.model.constraints())
      if (c.name.rfind("nest_", 0) == 0) worst = std::max(worst, sm.model.violation(c, x));
    EXPECT_DOUBLE_EQ(worst, 1.0) << "root task " << root_task;
  }
}

TEST(Solve, SingleTaskEveryKind) {
  const auto inst = single_task_instance();
  for (SchedulerKind k : kAllSchedulers) {
    const auto sm = build_model(inst, k);
    const auto r = milp::solve(sm.model, 10.0);
    ASSERT_EQ(r.status, milp::SolveStatus::Optimal) << to_string(k);
    EXPECT_NEAR(r.objective, 2.0, 1e-6) << to_string(k);
    const Schedule s = extract_schedule(inst, k, r);
    ASSERT_EQ(s.entries.size(), 1u);
    EXPECT_EQ(s.entries[0].cores.size(), 1u);
    EXPECT_EQ(s.entries[0].level, 0);
    EXPECT_NEAR(s.entries[0].start, 0.0, 1e-9);
    EXPECT_NEAR(s.entries[0].end, 2.0, 1e-6);
    EXPECT_NEAR(s.total_energy, 2.0, 1e-9);
    EXPECT_TRUE(validate(s, inst).empty());
  }
}

TEST(Solve, NonPowerOfTwoWidthBeatsAllocPow2) {
  // Task A (lambda 30, W 4) fits the deadline cheaply only on three cores;
  // task B occupies the fourth core for the whole horizon.
  const auto inst = instance({Task{0, 30, 4}, Task{1, 12, 1}}, Machine(4, {1.0, 2.0}, {1.0, 8.0}), 12.05);
  double value[4];
  for (SchedulerKind k : kAllSchedulers) {
    const auto r = milp::solve(build_model(inst, k).model, 60.0);
    ASSERT_EQ(r.status, milp::SolveStatus::Optimal) << to_string(k);
    const auto oracle = oracle_optimal(inst, k);
    ASSERT_TRUE(oracle.has_value());
    EXPECT_LE(rel_diff(r.objective, *oracle), 1e-6) << to_string(k);
    value[static_cast<int>(k)] = r.objective;
    const Schedule s = extract_schedule(inst, k, r);
    EXPECT_TRUE(validate(s, inst).empty()) << to_string(k);
  }
  EXPECT_LT(value[0], value[1] - 1.0);
  EXPECT_LE(value[1], value[2] * (1 + 1e-6));
  EXPECT_LE(value[2], value[3] * (1 + 1e-6));
  // A on three cores at 1 GHz, B on one core at 1 GHz
  const double expected_a = 30.0 / (3 * (1 - 0.3 * 9.0 / 16.0)) * 3;
  EXPECT_NEAR(value[0], expected_a + 12.0, 1e-6);
}

TEST(Extract, CrownFrontier) {
  // p = 2: A in the root group (1.4286 s), B in the leaf G_1 (1.0 s).
  const TaskSet tasks{Task{0, 2, 2}, Task{1, 1, 1}};
  const double ta = runtime(tasks[0], 2, 1.0);
  const auto start = crown_start_times({GroupPlacement{2 - 1, 1, 1.0}, GroupPlacement{0, 0, ta}}, tasks, 2);
  EXPECT_NEAR(ta, 1.4286, 1e-4);
  EXPECT_NEAR(start[1], 0.0, 1e-12);
  EXPECT_NEAR(start[0], ta, 1e-12);
}

TEST(Extract, CrownSiblingLeavesStartTogether) {
  const TaskSet tasks{Task{0, 5, 1}, Task{1, 7, 1}};
  const auto start = crown_start_times({GroupPlacement{1, 0, 5.0}, GroupPlacement{2, 1, 7.0}}, tasks, 2);
  EXPECT_DOUBLE_EQ(start[0], 0.0);
  EXPECT_DOUBLE_EQ(start[1], 0.0);
}

TEST(Extract, CrownOrderWiderFirstOnEveryCore) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = testsupport::random_instance(rng, 5, 4, 2, 1.0);
    const auto r = milp::solve(build_crown(inst).model, 60.0);
    if (!r.has_assignment()) continue;
    const Schedule s = extract_schedule(inst, SchedulerKind::Crown, r);
    EXPECT_TRUE(validate(s, inst).empty());
    for (const auto& a : s.entries)
      for (const auto& b : s.entries) {
        if (a.cores.size() <= b.cores.size()) continue;
        bool share = false;
        for (int c : a.cores)
          for (int d : b.cores) share |= c == d;
        if (share) EXPECT_LE(a.end, b.start + 1e-9);
      }
  }
}

TEST(Extract, RejectsMissingAssignment) {
  milp::SolveResult empty;
  EXPECT_THROW(extract_schedule(single_task_instance(), SchedulerKind::Crown, empty), InconsistentAssignment);
  milp::SolveResult wrong;
  wrong.assignment.assign(3, 0.0);
  EXPECT_THROW(extract_schedule(single_task_instance(), SchedulerKind::Crown, wrong), InconsistentAssignment);
  milp::SolveResult none;
  none.assignment.assign(6, 0.0);
  EXPECT_THROW(extract_schedule(single_task_instance(), SchedulerKind::Crown, none), InconsistentAssignment);
}
