#pragma once

// Task and machine model for moldable tasks on a DVFS multicore: parallel
// efficiency, runtime and energy formulas, the deadline heuristic, the
// synthetic task-set generator and the binary core-group tree.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace moldsched {

/// A moldable task. `workload` is in gigacycles, `max_width` in cores.
struct Task {
  int id = 0;
  std::int64_t workload = 1;
  int max_width = 1;
};

using TaskSet = std::vector<Task>;

/// Homogeneous machine with `core_count` cores sharing a table of discrete
/// frequency levels (GHz) and the per-core power drawn at each level (W).
class Machine {
 public:
  Machine() = default;

  Machine(int core_count, std::vector<double> freq_ghz, std::vector<double> power_w)
      : core_count_(core_count), freq_ghz_(std::move(freq_ghz)), power_w_(std::move(power_w)) {
    if (core_count_ < 1) throw std::invalid_argument("machine needs at least one core");
    if (freq_ghz_.empty()) throw std::invalid_argument("machine needs at least one frequency level");
    if (freq_ghz_.size() != power_w_.size())
      throw std::invalid_argument("frequency and power tables differ in length");
    for (std::size_t k = 0; k < freq_ghz_.size(); ++k) {
      if (!(freq_ghz_[k] > 0.0) || !(power_w_[k] > 0.0))
        throw std::invalid_argument("frequencies and powers must be positive");
      if (k > 0 && !(freq_ghz_[k] > freq_ghz_[k - 1]))
        throw std::invalid_argument("frequency levels must be strictly increasing");
      if (k > 0 && !(power_w_[k] > power_w_[k - 1]))
        throw std::invalid_argument("power must strictly increase with frequency");
    }
  }

  /// Cubic dynamic power model, Pow(f) = f^3 with f in GHz.
  static double cubic_power(double freq_ghz) { return freq_ghz * freq_ghz * freq_ghz; }

  static Machine with_cubic_power(int core_count, std::vector<double> freq_ghz) {
    std::vector<double> power;
    power.reserve(freq_ghz.size());
    for (double f : freq_ghz) power.push_back(cubic_power(f));
    return Machine(core_count, std::move(freq_ghz), std::move(power));
  }

  /// `levels` equally spaced frequencies from `f_min` to `f_max` with cubic power.
  static Machine uniform(int core_count, int levels, double f_min = 0.6, double f_max = 1.6) {
    if (levels < 1) throw std::invalid_argument("need at least one frequency level");
    std::vector<double> freq;
    if (levels == 1) {
      freq.push_back(f_max);
    } else {
      for (int k = 0; k < levels; ++k)
        freq.push_back(f_min + (f_max - f_min) * static_cast<double>(k) / (levels - 1));
    }
    return with_cubic_power(core_count, std::move(freq));
  }

  int core_count() const { return core_count_; }
  int level_count() const { return static_cast<int>(freq_ghz_.size()); }
  double freq(int level) const { return freq_ghz_.at(static_cast<std::size_t>(level)); }
  double power(int level) const { return power_w_.at(static_cast<std::size_t>(level)); }
  double f_min() const { return freq_ghz_.front(); }
  double f_max() const { return freq_ghz_.back(); }
  const std::vector<double>& freq_table() const { return freq_ghz_; }
  const std::vector<double>& power_table() const { return power_w_; }

 private:
  int core_count_ = 1;
  std::vector<double> freq_ghz_{1.0};
  std::vector<double> power_w_{1.0};
};

struct ProblemInstance {
  TaskSet tasks;
  Machine machine;
  double deadline = 0.0;  // seconds

  void check() const {
    if (!(deadline > 0.0)) throw std::invalid_argument("deadline must be positive");
    for (const Task& t : tasks) {
      if (t.workload < 1) throw std::invalid_argument("task workload must be >= 1");
      if (t.max_width < 1) throw std::invalid_argument("task max_width must be >= 1");
    }
  }
};

inline bool is_power_of_two(long long v) { return v > 0 && (v & (v - 1)) == 0; }

inline int log2_exact(int v) {
  int r = 0;
  while ((1 << r) < v) ++r;
  return r;
}

/// Parallel efficiency of `task` on `q` cores.
inline double efficiency(const Task& task, int q) {
  if (q <= 1) return 1.0;
  if (q <= task.max_width) {
    const double ratio = static_cast<double>(q) / static_cast<double>(task.max_width);
    return 1.0 - 0.3 * ratio * ratio;
  }
  return 0.000001;
}

/// Per-core runtime in seconds on `width` cores at `freq_ghz`.
inline double runtime(const Task& task, int width, double freq_ghz) {
  return static_cast<double>(task.workload) / (freq_ghz * width * efficiency(task, width));
}

/// Energy in joules: runtime times per-core power times core count.
inline double energy(const Task& task, int width, int level, const Machine& machine) {
  return runtime(task, width, machine.freq(level)) * machine.power(level) * width;
}

inline std::int64_t total_workload(const TaskSet& tasks) {
  std::int64_t sum = 0;
  for (const Task& t : tasks) sum += t.workload;
  return sum;
}

/// Deadline M = d * (sum/(p f_max) + 2 sum/(p f_min)) / 2.
inline double deadline(const TaskSet& tasks, const Machine& machine, double d) {
  const double sum = static_cast<double>(total_workload(tasks));
  const double p = machine.core_count();
  return d * (sum / (p * machine.f_max()) + 2.0 * sum / (p * machine.f_min())) / 2.0;
}

/// Default slack factor: 0.8 on four cores, 1.0 otherwise.
inline double default_d(int core_count) { return core_count == 4 ? 0.8 : 1.0; }

/// Widths from {1,2,4,8} a task of the given workload may be generated with:
/// those with workload/width > 25, and width 1 unconditionally.
inline std::vector<int> admissible_widths(std::int64_t workload) {
  std::vector<int> widths{1};
  for (int w : {2, 4, 8})
    if (workload > 25LL * w) widths.push_back(w);
  return widths;
}

/// Synthetic task set: workloads uniform in [1,100], max widths uniform over
/// the admissible subset of {1,2,4,8}. Deterministic in `seed`.
inline TaskSet generate_taskset(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("task set size must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> workload_dist(1, 100);
  TaskSet tasks;
  tasks.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    Task t;
    t.id = j;
    t.workload = workload_dist(rng);
    const auto widths = admissible_widths(t.workload);
    std::uniform_int_distribution<std::size_t> pick(0, widths.size() - 1);
    t.max_width = widths[pick(rng)];
    tasks.push_back(t);
  }
  return tasks;
}

/// Seed for the `index`-th set of size `n` in a suite seeded with `base`.
inline std::uint64_t derive_seed(std::uint64_t base, int n, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(index)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// ---------------------------------------------------------------------------
// Core groups. Breadth-first numbering: G_0 spans all cores, the children of
// G_i are G_{2i+1} (lower half) and G_{2i+2} (upper half), leaves are single
// cores G_{p-1} .. G_{2p-2}.

struct CoreGroup {
  int index = 0;
  int first_core = 0;
  int size = 1;

  bool contains(int core) const { return core >= first_core && core < first_core + size; }
};

inline void require_power_of_two_cores(int p) {
  if (!is_power_of_two(p))
    throw std::invalid_argument("core groups require a power-of-2 core count, got " +
                                std::to_string(p));
}

inline std::vector<CoreGroup> build_groups(int p) {
  require_power_of_two_cores(p);
  std::vector<CoreGroup> groups(static_cast<std::size_t>(2 * p - 1));
  groups[0] = CoreGroup{0, 0, p};
  for (int i = 0; 2 * i + 2 < 2 * p - 1; ++i) {
    const CoreGroup& g = groups[static_cast<std::size_t>(i)];
    const int half = g.size / 2;
    groups[static_cast<std::size_t>(2 * i + 1)] = CoreGroup{2 * i + 1, g.first_core, half};
    groups[static_cast<std::size_t>(2 * i + 2)] = CoreGroup{2 * i + 2, g.first_core + half, half};
  }
  return groups;
}

/// Group `i` and all groups it embraces, ascending.
inline std::vector<int> offspring(int i, int p) {
  require_power_of_two_cores(p);
  if (i < 0 || i >= 2 * p - 1) throw std::out_of_range("group index out of range");
  std::vector<int> out;
  std::vector<int> frontier{i};
  while (!frontier.empty()) {
    std::vector<int> next;
    for (int g : frontier) {
      out.push_back(g);
      if (2 * g + 2 < 2 * p - 1) {
        next.push_back(2 * g + 1);
        next.push_back(2 * g + 2);
      }
    }
    frontier = std::move(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Groups on the root-to-leaf path of `core`, ascending.
inline std::vector<int> groups_of_core(int core, int p) {
  require_power_of_two_cores(p);
  if (core < 0 || core >= p) throw std::out_of_range("core index out of range");
  std::vector<int> path;
  for (int g = p - 1 + core;; g = (g - 1) / 2) {
    path.push_back(g);
    if (g == 0) break;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace moldsched
