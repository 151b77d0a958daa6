#pragma once

// Shared helpers for the test binaries: random pure-binary models, brute-force
// enumeration, small hand-built instances.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "moldsched/milp/model.hpp"
#include "moldsched/taskmodel.hpp"

namespace testsupport {

using namespace moldsched;
using namespace moldsched::milp;

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

/// Pure-binary model with `b` variables, a few random rows and integer
/// coefficients. May be infeasible.
inline MilpModel random_binary_model(std::mt19937_64& rng, int b) {
  MilpModel m;
  std::uniform_int_distribution<int> coef(-5, 5);
  std::uniform_int_distribution<int> rows(1, 6);
  std::uniform_int_distribution<int> rel(0, 2);
  std::bernoulli_distribution keep(0.6);
  for (int j = 0; j < b; ++j) m.add_binary("b" + std::to_string(j));
  LinearExpr obj;
  for (int j = 0; j < b; ++j) obj.add(j, coef(rng));
  m.set_objective(obj);
  const int r = rows(rng);
  for (int i = 0; i < r; ++i) {
    LinearExpr e;
    int sum_abs = 0;
    for (int j = 0; j < b; ++j) {
      if (!keep(rng)) continue;
      const int c = coef(rng);
      if (c == 0) continue;
      e.add(j, c);
      sum_abs += std::abs(c);
    }
    if (e.terms.empty()) continue;
    std::uniform_int_distribution<int> rhs(-sum_abs / 2, sum_abs / 2);
    const int which = rel(rng);
    const Relation relation = which == 0 ? Relation::LessEqual : which == 1 ? Relation::GreaterEqual : Relation::Equal;
    m.add_constraint(e, relation, rhs(rng));
  }
  return m;
}

/// Minimum objective over all 2^b assignments of a pure-binary model, or
/// nullopt when none is feasible.
inline std::optional<double> enumerate_optimum(const MilpModel& m, double tol = 1e-9) {
  const int b = m.variable_count();
  std::optional<double> best;
  std::vector<double> x(static_cast<std::size_t>(b));
  for (std::uint32_t mask = 0; mask < (1u << b); ++mask) {
    for (int j = 0; j < b; ++j) x[static_cast<std::size_t>(j)] = (mask >> j) & 1u;
    bool ok = true;
    for (const auto& c : m.constraints())
      if (m.violation(c, x) > tol) {
        ok = false;
        break;
      }
    if (!ok) continue;
    const double v = m.objective_value(x);
    if (!best || v < *best) best = v;
  }
  return best;
}

/// The single-task instance: lambda = 2, W = 2, p = 2, f = {1,2} GHz,
/// Pow = {1,8} W, M = 2 s. Optimum: one core at 1 GHz, 2.0 J.
inline ProblemInstance single_task_instance() {
  ProblemInstance inst;
  inst.tasks = {Task{0, 2, 2}};
  inst.machine = Machine(2, {1.0, 2.0}, {1.0, 8.0});
  inst.deadline = 2.0;
  return inst;
}

/// Random small instance with cubic power on `levels` uniform levels.
inline ProblemInstance random_instance(std::mt19937_64& rng, int n, int p, int levels, double d) {
  ProblemInstance inst;
  inst.tasks = generate_taskset(n, rng());
  inst.machine = Machine::uniform(p, levels);
  inst.deadline = deadline(inst.tasks, inst.machine, d);
  return inst;
}

}  // namespace testsupport
