#pragma once

// ILP formulations of the four schedulers (unrestricted, power-of-2
// allocation, core groups, crown) and extraction of concrete schedules from
// solver assignments.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "moldsched/milp/model.hpp"
#include "moldsched/milp/solver.hpp"
#include "moldsched/taskmodel.hpp"

namespace moldsched {

enum class SchedulerKind { Unrestricted, AllocPow2, Group, Crown };

inline constexpr SchedulerKind kAllSchedulers[] = {SchedulerKind::Unrestricted, SchedulerKind::AllocPow2,
                                                   SchedulerKind::Group, SchedulerKind::Crown};

inline const char* to_string(SchedulerKind k) {
  switch (k) {
    case SchedulerKind::Unrestricted: return "unrestricted";
    case SchedulerKind::AllocPow2: return "allocpow2";
    case SchedulerKind::Group: return "group";
    case SchedulerKind::Crown: return "crown";
  }
  return "?";
}

inline SchedulerKind scheduler_from_string(const std::string& s) {
  for (SchedulerKind k : kAllSchedulers)
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown scheduler '" + s + "' (expected unrestricted, allocpow2, group or crown)");
}

inline bool uses_groups(SchedulerKind k) { return k == SchedulerKind::Group || k == SchedulerKind::Crown; }

struct ScheduleEntry {
  int task = 0;            // task id
  std::vector<int> cores;  // ascending core indices
  int level = 0;
  double start = 0.0;
  double end = 0.0;
};

struct Schedule {
  SchedulerKind kind = SchedulerKind::Unrestricted;
  double deadline = 0.0;
  double total_energy = 0.0;
  std::vector<ScheduleEntry> entries;
};

/// Variable ids of a scheduler model. Unused families are empty. The x family
/// is indexed by (option, task, level) where the option is the width minus
/// one (unrestricted, allocpow2) or the core-group index (group, crown).
struct ModelLayout {
  SchedulerKind kind = SchedulerKind::Unrestricted;
  int tasks = 0;
  int cores = 0;
  int levels = 0;
  int options = 0;
  std::vector<int> x;
  std::vector<int> z;  // (core, task, level)
  std::vector<int> y;  // (task, task)
  std::vector<int> s;
  std::vector<int> e;

  int x_at(int option, int j, int k) const { return x[static_cast<std::size_t>((option * tasks + j) * levels + k)]; }
  int z_at(int core, int j, int k) const { return z[static_cast<std::size_t>((core * tasks + j) * levels + k)]; }
  int y_at(int j, int jp) const { return y[static_cast<std::size_t>(j * tasks + jp)]; }

  /// Width realized by choosing `option`.
  int width_of(int option) const {
    if (!uses_groups(kind)) return option + 1;
    // Group g lies on tree level floor(log2(g+1)) and has p >> level cores.
    int depth = 0;
    while ((2 << depth) <= option + 1) ++depth;
    return cores >> depth;
  }
};

struct SchedulerModel {
  milp::MilpModel model;
  ModelLayout layout;
};

class InconsistentAssignment : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string idx(std::initializer_list<int> parts) {
  std::string out;
  for (int v : parts) {
    out += '_';
    out += std::to_string(v);
  }
  return out;
}

// Variables and constraints shared by the unrestricted, allocpow2 and group
// models: x, optional z, y, s, e, assignment (1b), end time (1e),
// self-precedence (1f), mutual precedence (1g) and big-M ordering (1h).
inline SchedulerModel build_ordered_core(const ProblemInstance& inst, SchedulerKind kind) {
  inst.check();
  const int n = static_cast<int>(inst.tasks.size());
  const int p = inst.machine.core_count();
  const int K = inst.machine.level_count();
  const double M = inst.deadline;
  const bool grouped = uses_groups(kind);
  if (grouped) require_power_of_two_cores(p);

  SchedulerModel sm;
  ModelLayout& L = sm.layout;
  L.kind = kind;
  L.tasks = n;
  L.cores = p;
  L.levels = K;
  L.options = grouped ? 2 * p - 1 : p;
  auto& m = sm.model;

  L.x.resize(static_cast<std::size_t>(L.options * n * K));
  for (int i = 0; i < L.options; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < K; ++k)
        L.x[static_cast<std::size_t>((i * n + j) * K + k)] = m.add_binary("x" + idx({grouped ? i : i + 1, j, k}));
  if (!grouped) {
    L.z.resize(static_cast<std::size_t>(p * n * K));
    for (int c = 0; c < p; ++c)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < K; ++k)
          L.z[static_cast<std::size_t>((c * n + j) * K + k)] = m.add_binary("z" + idx({c, j, k}));
  }
  L.y.resize(static_cast<std::size_t>(n * n));
  for (int j = 0; j < n; ++j)
    for (int jp = 0; jp < n; ++jp) L.y[static_cast<std::size_t>(j * n + jp)] = m.add_binary("y" + idx({j, jp}));
  for (int j = 0; j < n; ++j) L.s.push_back(m.add_continuous("s" + idx({j}), 0.0, M));
  for (int j = 0; j < n; ++j) L.e.push_back(m.add_continuous("e" + idx({j}), 0.0, M));

  milp::LinearExpr obj;
  for (int i = 0; i < L.options; ++i) {
    const int w = L.width_of(i);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < K; ++k) obj.add(L.x_at(i, j, k), energy(inst.tasks[j], w, k, inst.machine));
  }
  m.set_objective(std::move(obj));

  for (int j = 0; j < n; ++j) {
    milp::LinearExpr e;
    for (int i = 0; i < L.options; ++i)
      for (int k = 0; k < K; ++k) e.add(L.x_at(i, j, k), 1.0);
    m.add_constraint(std::move(e), milp::Relation::Equal, 1.0, "assign" + idx({j}));
  }
  for (int j = 0; j < n; ++j) {
    milp::LinearExpr e;
    e.add(L.e[j], 1.0).add(L.s[j], -1.0);
    for (int i = 0; i < L.options; ++i)
      for (int k = 0; k < K; ++k)
        e.add(L.x_at(i, j, k), -runtime(inst.tasks[j], L.width_of(i), inst.machine.freq(k)));
    m.add_constraint(std::move(e), milp::Relation::Equal, 0.0, "end" + idx({j}));
  }
  for (int j = 0; j < n; ++j) {
    milp::LinearExpr e;
    e.add(L.y_at(j, j), 1.0);
    m.add_constraint(std::move(e), milp::Relation::Equal, 0.0, "noself" + idx({j}));
  }
  for (int j = 0; j < n; ++j)
    for (int jp = j + 1; jp < n; ++jp) {
      milp::LinearExpr e;
      e.add(L.y_at(j, jp), 1.0).add(L.y_at(jp, j), 1.0);
      m.add_constraint(std::move(e), milp::Relation::LessEqual, 1.0, "mutual" + idx({j, jp}));
    }
  // s_j >= e_j' - (1 - y_j'j) M
  for (int j = 0; j < n; ++j)
    for (int jp = 0; jp < n; ++jp) {
      if (j == jp) continue;
      milp::LinearExpr e;
      e.add(L.s[j], 1.0).add(L.e[jp], -1.0).add(L.y_at(jp, j), -M);
      m.add_constraint(std::move(e), milp::Relation::GreaterEqual, -M, "order" + idx({jp, j}));
    }
  return sm;
}

}  // namespace detail

/// Unrestricted scheduler: any width 1..p, any core subset, free ordering.
inline SchedulerModel build_unrestricted(const ProblemInstance& inst) {
  SchedulerModel sm = detail::build_ordered_core(inst, SchedulerKind::Unrestricted);
  ModelLayout& L = sm.layout;
  auto& m = sm.model;
  const int n = L.tasks, p = L.cores, K = L.levels;
  // Tasks sharing a core are ordered.
  for (int j = 0; j < n; ++j)
    for (int jp = 0; jp < j; ++jp)
      for (int c = 0; c < p; ++c) {
        milp::LinearExpr e;
        e.add(L.y_at(j, jp), 1.0).add(L.y_at(jp, j), 1.0);
        for (int k = 0; k < K; ++k) e.add(L.z_at(c, j, k), -1.0).add(L.z_at(c, jp, k), -1.0);
        m.add_constraint(std::move(e), milp::Relation::GreaterEqual, -1.0, "share" + detail::idx({j, jp, c}));
      }
  // Number of mapped cores equals the allocated width, per level.
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < K; ++k) {
      milp::LinearExpr e;
      for (int c = 0; c < p; ++c) e.add(L.z_at(c, j, k), 1.0);
      for (int i = 0; i < p; ++i) e.add(L.x_at(i, j, k), -static_cast<double>(i + 1));
      m.add_constraint(std::move(e), milp::Relation::Equal, 0.0, "map" + detail::idx({j, k}));
    }
  return sm;
}

/// Unrestricted scheduler with widths restricted to powers of 2.
inline SchedulerModel build_allocpow2(const ProblemInstance& inst) {
  SchedulerModel sm = build_unrestricted(inst);
  ModelLayout& L = sm.layout;
  L.kind = SchedulerKind::AllocPow2;
  for (int i = 0; i < L.cores; ++i) {
    if (is_power_of_two(i + 1)) continue;
    for (int j = 0; j < L.tasks; ++j) {
      milp::LinearExpr e;
      for (int k = 0; k < L.levels; ++k) e.add(L.x_at(i, j, k), 1.0);
      sm.model.add_constraint(std::move(e), milp::Relation::Equal, 0.0, "pow2" + detail::idx({i + 1, j}));
    }
  }
  return sm;
}

/// Group scheduler: tasks run on one of the 2p-1 core groups; tasks in the
/// same group, or in nested groups, are ordered.
inline SchedulerModel build_group(const ProblemInstance& inst) {
  SchedulerModel sm = detail::build_ordered_core(inst, SchedulerKind::Group);
  ModelLayout& L = sm.layout;
  auto& m = sm.model;
  const int n = L.tasks, K = L.levels;
  std::vector<std::vector<int>> off;
  for (int i = 0; i < L.options; ++i) off.push_back(offspring(i, L.cores));
  // One task in G_i, the other in G_i or below. Both orientations of every
  // pair are emitted so an ancestor/descendant pair is ordered whichever task
  // has the lower index.
  for (int j = 0; j < n; ++j)
    for (int jp = 0; jp < n; ++jp) {
      if (j == jp) continue;
      const int hi = std::max(j, jp), lo = std::min(j, jp);
      for (int i = 0; i < L.options; ++i) {
        milp::LinearExpr e;
        e.add(L.y_at(hi, lo), 1.0).add(L.y_at(lo, hi), 1.0);
        for (int k = 0; k < K; ++k) e.add(L.x_at(i, j, k), -1.0);
        for (int g : off[static_cast<std::size_t>(i)])
          for (int k = 0; k < K; ++k) e.add(L.x_at(g, jp, k), -1.0);
        m.add_constraint(std::move(e), milp::Relation::GreaterEqual, -1.0, "nest" + detail::idx({j, jp, i}));
      }
    }
  return sm;
}

/// Crown scheduler: group mapping, no width above the task's maximum, and a
/// fixed execution order (larger groups first) that reduces ordering to a
/// per-core load bound.
inline SchedulerModel build_crown(const ProblemInstance& inst) {
  inst.check();
  const int n = static_cast<int>(inst.tasks.size());
  const int p = inst.machine.core_count();
  const int K = inst.machine.level_count();
  require_power_of_two_cores(p);

  SchedulerModel sm;
  ModelLayout& L = sm.layout;
  L.kind = SchedulerKind::Crown;
  L.tasks = n;
  L.cores = p;
  L.levels = K;
  L.options = 2 * p - 1;
  auto& m = sm.model;
  L.x.resize(static_cast<std::size_t>(L.options * n * K));
  for (int i = 0; i < L.options; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < K; ++k)
        L.x[static_cast<std::size_t>((i * n + j) * K + k)] = m.add_binary("x" + detail::idx({i, j, k}));

  milp::LinearExpr obj;
  for (int i = 0; i < L.options; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < K; ++k) obj.add(L.x_at(i, j, k), energy(inst.tasks[j], L.width_of(i), k, inst.machine));
  m.set_objective(std::move(obj));

  for (int j = 0; j < n; ++j) {
    milp::LinearExpr e;
    for (int i = 0; i < L.options; ++i)
      for (int k = 0; k < K; ++k) e.add(L.x_at(i, j, k), 1.0);
    m.add_constraint(std::move(e), milp::Relation::Equal, 1.0, "assign" + detail::idx({j}));
  }
  for (int j = 0; j < n; ++j) {
    milp::LinearExpr e;
    for (int i = 0; i < L.options; ++i) {
      if (L.width_of(i) <= inst.tasks[j].max_width) continue;
      for (int k = 0; k < K; ++k) e.add(L.x_at(i, j, k), 1.0);
    }
    if (e.terms.empty()) continue;
    m.add_constraint(std::move(e), milp::Relation::Equal, 0.0, "maxwidth" + detail::idx({j}));
  }
  for (int c = 0; c < p; ++c) {
    milp::LinearExpr e;
    for (int i : groups_of_core(c, p))
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < K; ++k)
          e.add(L.x_at(i, j, k), runtime(inst.tasks[j], L.width_of(i), inst.machine.freq(k)));
    m.add_constraint(std::move(e), milp::Relation::LessEqual, inst.deadline, "load" + detail::idx({c}));
  }
  return sm;
}

inline SchedulerModel build_model(const ProblemInstance& inst, SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::Unrestricted: return build_unrestricted(inst);
    case SchedulerKind::AllocPow2: return build_allocpow2(inst);
    case SchedulerKind::Group: return build_group(inst);
    case SchedulerKind::Crown: return build_crown(inst);
  }
  throw std::invalid_argument("unknown scheduler kind");
}

/// Start times for tasks placed on core groups under the crown order: groups
/// by non-increasing size, then ascending group index, then ascending task
/// id; each task starts at the latest accumulated load among its cores.
/// `placements` holds (group, task position, runtime) triples.
struct GroupPlacement {
  int group = 0;
  int task = 0;  // position in the task set
  double runtime = 0.0;
};

inline std::vector<double> crown_start_times(const std::vector<GroupPlacement>& placements,
                                             const std::vector<Task>& tasks, int p) {
  const auto groups = build_groups(p);
  std::vector<std::size_t> order(placements.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = placements[a];
    const auto& pb = placements[b];
    const int sa = groups[static_cast<std::size_t>(pa.group)].size;
    const int sb = groups[static_cast<std::size_t>(pb.group)].size;
    if (sa != sb) return sa > sb;
    if (pa.group != pb.group) return pa.group < pb.group;
    return tasks[static_cast<std::size_t>(pa.task)].id < tasks[static_cast<std::size_t>(pb.task)].id;
  });
  std::vector<double> frontier(static_cast<std::size_t>(p), 0.0);
  std::vector<double> start(placements.size(), 0.0);
  for (std::size_t idx : order) {
    const CoreGroup& g = groups[static_cast<std::size_t>(placements[idx].group)];
    double t0 = 0.0;
    for (int c = g.first_core; c < g.first_core + g.size; ++c) t0 = std::max(t0, frontier[static_cast<std::size_t>(c)]);
    start[idx] = t0;
    for (int c = g.first_core; c < g.first_core + g.size; ++c)
      frontier[static_cast<std::size_t>(c)] = t0 + placements[idx].runtime;
  }
  return start;
}

/// Turns a solver assignment into a schedule. Throws InconsistentAssignment
/// when the assignment does not describe exactly one placement per task.
inline Schedule extract_schedule(const ProblemInstance& inst, SchedulerKind kind, const milp::SolveResult& result) {
  if (!result.has_assignment()) throw InconsistentAssignment("solve result carries no assignment");
  const SchedulerModel sm = build_model(inst, kind);
  const ModelLayout& L = sm.layout;
  const auto& x = result.assignment;
  if (static_cast<int>(x.size()) != sm.model.variable_count())
    throw InconsistentAssignment("assignment size does not match the model");
  auto on = [&](int var) { return x[static_cast<std::size_t>(var)] > 0.5; };

  Schedule sched;
  sched.kind = kind;
  sched.deadline = inst.deadline;
  std::vector<GroupPlacement> placements;
  for (int j = 0; j < L.tasks; ++j) {
    int chosen_i = -1, chosen_k = -1;
    for (int i = 0; i < L.options; ++i)
      for (int k = 0; k < L.levels; ++k)
        if (on(L.x_at(i, j, k))) {
          if (chosen_i >= 0)
            throw InconsistentAssignment("task " + std::to_string(inst.tasks[j].id) + " has several placements");
          chosen_i = i;
          chosen_k = k;
        }
    if (chosen_i < 0) throw InconsistentAssignment("task " + std::to_string(inst.tasks[j].id) + " is not placed");
    const int width = L.width_of(chosen_i);
    ScheduleEntry entry;
    entry.task = inst.tasks[j].id;
    entry.level = chosen_k;
    if (uses_groups(kind)) {
      const auto g = build_groups(L.cores)[static_cast<std::size_t>(chosen_i)];
      for (int c = g.first_core; c < g.first_core + g.size; ++c) entry.cores.push_back(c);
    } else {
      for (int c = 0; c < L.cores; ++c) {
        int count = 0;
        for (int k = 0; k < L.levels; ++k) count += on(L.z_at(c, j, k)) ? (k == chosen_k ? 1 : 1000) : 0;
        if (count >= 1000) throw InconsistentAssignment("task " + std::to_string(entry.task) + " mapped at a foreign level");
        if (count == 1) entry.cores.push_back(c);
      }
      if (static_cast<int>(entry.cores.size()) != width)
        throw InconsistentAssignment("task " + std::to_string(entry.task) + " maps " +
                                     std::to_string(entry.cores.size()) + " cores for width " + std::to_string(width));
    }
    const double t = runtime(inst.tasks[j], width, inst.machine.freq(chosen_k));
    if (kind == SchedulerKind::Crown) {
      placements.push_back(GroupPlacement{chosen_i, j, t});
    } else {
      entry.start = std::max(0.0, x[static_cast<std::size_t>(L.s[j])]);
    }
    entry.end = entry.start + t;
    sched.total_energy += energy(inst.tasks[j], width, chosen_k, inst.machine);
    sched.entries.push_back(std::move(entry));
  }
  if (kind == SchedulerKind::Crown) {
    const auto start = crown_start_times(placements, inst.tasks, L.cores);
    for (std::size_t idx = 0; idx < placements.size(); ++idx) {
      auto& entry = sched.entries[idx];
      entry.start = start[idx];
      entry.end = entry.start + placements[idx].runtime;
    }
  }
  return sched;
}

}  // namespace moldsched
