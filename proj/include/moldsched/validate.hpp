#pragma once

// Schedule feasibility checking and an exhaustive optimality oracle for tiny
// instances. Nothing here depends on the ILP models or the solver.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "moldsched/schedulers.hpp"
#include "moldsched/taskmodel.hpp"

namespace moldsched {

inline constexpr double kScheduleTol = 1e-6;

enum class ViolationKind { DeadlineExceeded, Overlap, BadWidth, NegativeStart, DuplicateTask, EnergyMismatch };

inline const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::DeadlineExceeded: return "DeadlineExceeded";
    case ViolationKind::Overlap: return "Overlap";
    case ViolationKind::BadWidth: return "BadWidth";
    case ViolationKind::NegativeStart: return "NegativeStart";
    case ViolationKind::DuplicateTask: return "DuplicateTask";
    case ViolationKind::EnergyMismatch: return "EnergyMismatch";
  }
  return "?";
}

struct Violation {
  ViolationKind kind;
  std::vector<int> tasks;
  std::vector<int> cores;
  double magnitude = 0.0;  // always > 0
  std::string detail;

  std::string str() const { return std::string(to_string(kind)) + ": " + detail; }
};

/// Checks `schedule` against `inst`. Returns the empty list iff the schedule
/// is feasible and its stated energy matches the recomputed one. Throws
/// std::invalid_argument if the schedule names unknown tasks, cores or levels.
inline std::vector<Violation> validate(const Schedule& schedule, const ProblemInstance& inst) {
  std::vector<Violation> out;
  const double M = inst.deadline;
  const int p = inst.machine.core_count();
  std::map<int, std::size_t> task_pos;
  for (std::size_t j = 0; j < inst.tasks.size(); ++j) task_pos[inst.tasks[j].id] = j;

  auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(9);
    os << v;
    return os.str();
  };

  std::map<int, int> seen;
  double energy_sum = 0.0;
  for (const ScheduleEntry& e : schedule.entries) {
    auto it = task_pos.find(e.task);
    if (it == task_pos.end()) throw std::invalid_argument("schedule names unknown task " + std::to_string(e.task));
    if (e.level < 0 || e.level >= inst.machine.level_count())
      throw std::invalid_argument("task " + std::to_string(e.task) + " uses unknown level " + std::to_string(e.level));
    for (int c : e.cores)
      if (c < 0 || c >= p) throw std::invalid_argument("task " + std::to_string(e.task) + " uses unknown core " + std::to_string(c));
    ++seen[e.task];
    const Task& task = inst.tasks[it->second];

    std::vector<int> cores = e.cores;
    std::sort(cores.begin(), cores.end());
    if (cores.empty() || std::adjacent_find(cores.begin(), cores.end()) != cores.end()) {
      out.push_back({ViolationKind::BadWidth, {e.task}, cores, 1.0,
                     "task " + std::to_string(e.task) + " needs a non-empty set of distinct cores"});
      continue;
    }
    const int width = static_cast<int>(cores.size());
    const double t = runtime(task, width, inst.machine.freq(e.level));
    energy_sum += energy(task, width, e.level, inst.machine);
    if (e.start < -kScheduleTol)
      out.push_back({ViolationKind::NegativeStart, {e.task}, {}, -e.start,
                     "task " + std::to_string(e.task) + " starts at " + fmt(e.start)});
    if (e.end > M + kScheduleTol)
      out.push_back({ViolationKind::DeadlineExceeded, {e.task}, {}, e.end - M,
                     "task " + std::to_string(e.task) + " ends at " + fmt(e.end) + " after deadline " + fmt(M)});
    const double dur_err = std::abs((e.end - e.start) - t);
    if (dur_err > kScheduleTol)
      out.push_back({ViolationKind::BadWidth, {e.task}, cores, dur_err,
                     "task " + std::to_string(e.task) + " runs " + fmt(e.end - e.start) + " s but needs " + fmt(t) +
                         " s on " + std::to_string(width) + " cores at level " + std::to_string(e.level)});
  }
  for (const Task& task : inst.tasks) {
    const int count = seen.count(task.id) ? seen[task.id] : 0;
    if (count != 1)
      out.push_back({ViolationKind::DuplicateTask, {task.id}, {}, count == 0 ? 1.0 : static_cast<double>(count),
                     "task " + std::to_string(task.id) + " appears " + std::to_string(count) + " times"});
  }
  for (std::size_t a = 0; a < schedule.entries.size(); ++a) {
    for (std::size_t b = a + 1; b < schedule.entries.size(); ++b) {
      const auto& ea = schedule.entries[a];
      const auto& eb = schedule.entries[b];
      std::vector<int> shared;
      for (int c : ea.cores)
        if (std::find(eb.cores.begin(), eb.cores.end(), c) != eb.cores.end()) shared.push_back(c);
      if (shared.empty()) continue;
      const double overlap = std::min(ea.end, eb.end) - std::max(ea.start, eb.start);
      if (overlap > kScheduleTol) {
        std::sort(shared.begin(), shared.end());
        std::string cores_txt;
        for (int c : shared) cores_txt += (cores_txt.empty() ? "" : ",") + std::to_string(c);
        out.push_back({ViolationKind::Overlap, {ea.task, eb.task}, shared, overlap,
                       "tasks " + std::to_string(ea.task) + " and " + std::to_string(eb.task) + " overlap by " +
                           fmt(overlap) + " s on cores " + cores_txt});
      }
    }
  }
  const double e_err = std::abs(energy_sum - schedule.total_energy);
  if (e_err > kScheduleTol * std::max(1.0, std::abs(energy_sum)))
    out.push_back({ViolationKind::EnergyMismatch, {}, {}, e_err,
                   "stated energy " + fmt(schedule.total_energy) + " J, recomputed " + fmt(energy_sum) + " J"});
  return out;
}

/// Total energy of a schedule recomputed from its placements.
inline double recompute_energy(const Schedule& schedule, const ProblemInstance& inst) {
  double sum = 0.0;
  for (const ScheduleEntry& e : schedule.entries) {
    for (const Task& t : inst.tasks)
      if (t.id == e.task) sum += energy(t, static_cast<int>(e.cores.size()), e.level, inst.machine);
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle.

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleLimits {
  int max_tasks = 5;
  int max_cores = 4;
  int max_levels = 3;
};

namespace detail {

struct OracleOption {
  std::uint32_t mask = 0;
  double runtime = 0.0;
  double energy = 0.0;
};

class Oracle {
 public:
  Oracle(const ProblemInstance& inst, SchedulerKind kind) : inst_(inst), kind_(kind) {
    const int p = inst.machine.core_count();
    const int K = inst.machine.level_count();
    const double M = inst.deadline;
    std::vector<std::uint32_t> masks;
    if (uses_groups(kind)) {
      for (const CoreGroup& g : build_groups(p)) masks.push_back(((1u << g.size) - 1u) << g.first_core);
    } else {
      for (std::uint32_t m = 1; m < (1u << p); ++m) {
        const int w = std::popcount(m);
        if (kind == SchedulerKind::AllocPow2 && !is_power_of_two(w)) continue;
        masks.push_back(m);
      }
    }
    for (const Task& task : inst.tasks) {
      std::vector<OracleOption> opts;
      for (std::uint32_t m : masks) {
        const int w = std::popcount(m);
        if (kind == SchedulerKind::Crown && w > task.max_width) continue;
        for (int k = 0; k < K; ++k) {
          const double t = runtime(task, w, inst.machine.freq(k));
          if (t > M + kScheduleTol) continue;  // cannot fit even alone
          opts.push_back(OracleOption{m, t, energy(task, w, k, inst.machine)});
        }
      }
      std::sort(opts.begin(), opts.end(), [](const auto& a, const auto& b) { return a.energy < b.energy; });
      options_.push_back(std::move(opts));
    }
    // min_rest_[j] = cheapest completion of tasks j..n-1
    min_rest_.assign(inst.tasks.size() + 1, 0.0);
    for (std::size_t j = inst.tasks.size(); j-- > 0;) {
      const double cheapest = options_[j].empty() ? std::numeric_limits<double>::infinity() : options_[j].front().energy;
      min_rest_[j] = min_rest_[j + 1] + cheapest;
    }
  }

  std::optional<double> run() {
    chosen_.assign(inst_.tasks.size(), nullptr);
    best_ = std::numeric_limits<double>::infinity();
    if (std::isfinite(min_rest_[0])) recurse(0, 0.0);
    if (!std::isfinite(best_)) return std::nullopt;
    return best_;
  }

 private:
  void recurse(std::size_t j, double partial) {
    if (partial + min_rest_[j] >= best_) return;
    if (j == inst_.tasks.size()) {
      if (feasible()) best_ = partial;
      return;
    }
    for (const OracleOption& opt : options_[j]) {
      if (partial + opt.energy + min_rest_[j + 1] >= best_) break;  // options sorted by energy
      chosen_[j] = &opt;
      recurse(j + 1, partial + opt.energy);
    }
  }

  bool feasible() const {
    const int p = inst_.machine.core_count();
    const double limit = inst_.deadline + kScheduleTol;
    if (kind_ == SchedulerKind::Crown) {
      std::vector<double> load(static_cast<std::size_t>(p), 0.0);
      for (const OracleOption* o : chosen_)
        for (int c = 0; c < p; ++c)
          if (o->mask & (1u << c)) load[static_cast<std::size_t>(c)] += o->runtime;
      return std::all_of(load.begin(), load.end(), [&](double l) { return l <= limit; });
    }
    // Some start-time order, placed greedily, meets the deadline.
    std::vector<std::size_t> perm(chosen_.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    do {
      std::vector<double> free_at(static_cast<std::size_t>(p), 0.0);
      bool ok = true;
      for (std::size_t idx : perm) {
        const OracleOption* o = chosen_[idx];
        double start = 0.0;
        for (int c = 0; c < p; ++c)
          if (o->mask & (1u << c)) start = std::max(start, free_at[static_cast<std::size_t>(c)]);
        const double end = start + o->runtime;
        if (end > limit) {
          ok = false;
          break;
        }
        for (int c = 0; c < p; ++c)
          if (o->mask & (1u << c)) free_at[static_cast<std::size_t>(c)] = end;
      }
      if (ok) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
  }

  const ProblemInstance& inst_;
  SchedulerKind kind_;
  std::vector<std::vector<OracleOption>> options_;
  std::vector<double> min_rest_;
  std::vector<const OracleOption*> chosen_;
  double best_ = 0.0;
};

}  // namespace detail

/// Minimum energy of `kind` on `inst` by exhaustive search, or nullopt if no
/// feasible schedule exists. Throws BudgetExceeded beyond `limits`.
inline std::optional<double> oracle_optimal(const ProblemInstance& inst, SchedulerKind kind,
                                            OracleLimits limits = {}) {
  inst.check();
  const int n = static_cast<int>(inst.tasks.size());
  if (n > limits.max_tasks || inst.machine.core_count() > limits.max_cores ||
      inst.machine.level_count() > limits.max_levels)
    throw BudgetExceeded("oracle budget is n <= " + std::to_string(limits.max_tasks) + ", p <= " +
                         std::to_string(limits.max_cores) + ", K <= " + std::to_string(limits.max_levels));
  if (uses_groups(kind)) require_power_of_two_cores(inst.machine.core_count());
  detail::Oracle oracle(inst, kind);
  return oracle.run();
}

}  // namespace moldsched
