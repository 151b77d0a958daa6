#pragma once

// Bounded-variable dual simplex on a dense tableau.
//
// Every row i of A x carries a logical variable s_i = a_i x whose bounds encode
// the row relation, so the system solved is [A | -I] (x, s) = 0 with box
// bounds on all n + m variables. The all-logical basis is always available,
// and for nonnegative costs it is dual feasible, which makes the dual method a
// natural fit for branch-and-bound: bound changes keep dual feasibility and
// the parent basis is a warm start for both children.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace moldsched::milp {

/// Dense LP in the form: minimize c x, row_lo <= A x <= row_hi, lo <= x <= hi.
struct LpData {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;  // row-major rows x cols
  std::vector<double> cost;
  std::vector<double> row_lo;
  std::vector<double> row_hi;

  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, Cutoff, IterationLimit };

class DualSimplex {
 public:
  enum VarState : std::uint8_t { kBasic = 0, kAtLower = 1, kAtUpper = 2, kFreeZero = 3 };

  struct Basis {
    std::vector<int> head;
    std::vector<std::uint8_t> state;
  };

  explicit DualSimplex(LpData data)
      : lp_(std::move(data)),
        m_(lp_.rows),
        n_(lp_.cols),
        total_(lp_.rows + lp_.cols),
        lo_(static_cast<std::size_t>(total_), 0.0),
        hi_(static_cast<std::size_t>(total_), 0.0),
        x_(static_cast<std::size_t>(total_), 0.0),
        d_(static_cast<std::size_t>(total_), 0.0),
        cost_(static_cast<std::size_t>(total_), 0.0),
        state_(static_cast<std::size_t>(total_), kAtLower),
        head_(static_cast<std::size_t>(m_), 0),
        tab_(static_cast<std::size_t>(m_) * total_, 0.0),
        artificial_(static_cast<std::size_t>(total_), 0) {
    for (int j = 0; j < n_; ++j) cost_[j] = lp_.cost[static_cast<std::size_t>(j)];
    for (int i = 0; i < m_; ++i) {
      lo_[n_ + i] = lp_.row_lo[static_cast<std::size_t>(i)];
      hi_[n_ + i] = lp_.row_hi[static_cast<std::size_t>(i)];
    }
    for (int j = 0; j < n_; ++j) hi_[j] = std::numeric_limits<double>::infinity();
    reset_slack_basis();
  }

  int rows() const { return m_; }
  int cols() const { return n_; }

  double lower(int j) const { return lo_[j]; }
  double upper(int j) const { return hi_[j]; }

  /// Changes the bounds of structural variable `j`, keeping the basis.
  void set_bounds(int j, double lo, double hi) {
    if (lo_[j] == lo && hi_[j] == hi && !artificial_[j]) return;
    lo_[j] = lo;
    hi_[j] = hi;
    artificial_[j] = 0;
    if (state_[j] == kBasic) return;
    const double old = x_[j];
    place_nonbasic(j);
    const double delta = x_[j] - old;
    if (delta != 0.0) shift_basics(j, delta);
  }

  void reset_slack_basis() {
    restore_row_bounds();
    for (int i = 0; i < m_; ++i) {
      head_[i] = n_ + i;
      state_[n_ + i] = kBasic;
    }
    for (int j = 0; j < n_; ++j) state_[j] = kAtLower;
    refactor_or_throw();
  }

  Basis basis() const { return Basis{head_, state_}; }

  /// Loads a basis saved by basis(); falls back to the slack basis if the
  /// stored one is numerically singular.
  void load_basis(const Basis& b) {
    head_ = b.head;
    state_ = b.state;
    restore_row_bounds();
    if (!refactor()) reset_slack_basis();
  }

  using Clock = std::chrono::steady_clock;

  /// Runs dual simplex iterations until optimality, infeasibility, or until the
  /// (dual) objective reaches `cutoff`.
  LpStatus solve(double cutoff = std::numeric_limits<double>::infinity(),
                 std::optional<Clock::time_point> deadline = std::nullopt,
                 long max_iterations = 200000) {
    make_dual_feasible();
    long since_progress = 0;
    double last_obj = -std::numeric_limits<double>::infinity();
    bool bland = false;
    for (long it = 0; it < max_iterations; ++it) {
      if (deadline && (it & 63) == 63 && Clock::now() > *deadline) return LpStatus::IterationLimit;
      if (++pivots_since_refactor_ > kRefactorInterval) {
        if (!refactor()) reset_slack_basis();
        make_dual_feasible();
      }
      const double obj = objective();
      if (obj >= cutoff) return LpStatus::Cutoff;
      if (obj > last_obj + 1e-12 * std::max(1.0, std::abs(obj))) {
        last_obj = obj;
        since_progress = 0;
      } else if (++since_progress > kStallLimit) {
        bland = true;
      }

      const int r = choose_leaving_row(bland);
      if (r < 0) {
        // Incremental updates lose digits next to artificial bounds; confirm on a fresh factorization.
        if (pivots_since_refactor_ > 1) {
          if (!refactor()) reset_slack_basis();
          make_dual_feasible();
          continue;
        }
        for (int j = 0; j < total_; ++j)
          if (artificial_[j] && state_[j] != kBasic) return LpStatus::Unbounded;
        return LpStatus::Optimal;
      }
      const int leaving = head_[r];
      const bool to_lower = x_[leaving] < lo_[leaving];
      const int q = choose_entering(r, to_lower, bland);
      if (q < 0) return LpStatus::Infeasible;
      pivot(r, q, to_lower ? lo_[leaving] : hi_[leaving], to_lower);
    }
    return LpStatus::IterationLimit;
  }

  double objective() const {
    double s = 0.0;
    for (int j = 0; j < total_; ++j) s += cost_[j] * x_[j];
    return s;
  }

  double value(int j) const { return x_[j]; }

  std::vector<double> primal() const { return std::vector<double>(x_.begin(), x_.begin() + n_); }

 private:
  static constexpr double kPivotTol = 1e-9;
  static constexpr double kPrimalTol = 1e-9;
  static constexpr double kDualTol = 1e-9;
  static constexpr double kArtificialBound = 1e7;
  static constexpr long kStallLimit = 50;
  static constexpr int kRefactorInterval = 150;

  double* row(int r) { return tab_.data() + static_cast<std::size_t>(r) * total_; }
  const double* row(int r) const { return tab_.data() + static_cast<std::size_t>(r) * total_; }

  void restore_row_bounds() {
    for (int i = 0; i < m_; ++i) {
      lo_[n_ + i] = lp_.row_lo[static_cast<std::size_t>(i)];
      hi_[n_ + i] = lp_.row_hi[static_cast<std::size_t>(i)];
      artificial_[n_ + i] = 0;
    }
  }

  void place_nonbasic(int j) {
    const bool lo_fin = std::isfinite(lo_[j]);
    const bool hi_fin = std::isfinite(hi_[j]);
    if (state_[j] == kAtUpper && hi_fin) {
      x_[j] = hi_[j];
    } else if (lo_fin) {
      state_[j] = kAtLower;
      x_[j] = lo_[j];
    } else if (hi_fin) {
      state_[j] = kAtUpper;
      x_[j] = hi_[j];
    } else {
      state_[j] = kFreeZero;
      x_[j] = 0.0;
    }
  }

  // Basic values respond to a nonbasic change dx_j by -T[:, j] dx_j.
  void shift_basics(int j, double delta) {
    for (int r = 0; r < m_; ++r) {
      const double t = row(r)[j];
      if (t != 0.0) x_[head_[r]] -= t * delta;
    }
  }

  void refactor_or_throw() {
    if (!refactor()) throw std::runtime_error("slack basis is singular");
  }

  // Rebuilds the tableau, basic values and reduced costs from head_/state_.
  bool refactor() {
    pivots_since_refactor_ = 0;
    // B = columns of [A | -I] for the basic variables.
    std::vector<double> inv(static_cast<std::size_t>(m_) * m_, 0.0);
    std::vector<double> b(static_cast<std::size_t>(m_) * m_, 0.0);
    for (int c = 0; c < m_; ++c) {
      const int j = head_[c];
      if (j < n_) {
        for (int r = 0; r < m_; ++r) b[static_cast<std::size_t>(r) * m_ + c] = lp_.at(r, j);
      } else {
        b[static_cast<std::size_t>(j - n_) * m_ + c] = -1.0;
      }
    }
    for (int r = 0; r < m_; ++r) inv[static_cast<std::size_t>(r) * m_ + r] = 1.0;
    // Gauss-Jordan with partial pivoting.
    for (int c = 0; c < m_; ++c) {
      int best = -1;
      double best_abs = 1e-11;
      for (int r = c; r < m_; ++r) {
        const double v = std::abs(b[static_cast<std::size_t>(r) * m_ + c]);
        if (v > best_abs) {
          best_abs = v;
          best = r;
        }
      }
      if (best < 0) return false;
      if (best != c) {
        for (int k = 0; k < m_; ++k) {
          std::swap(b[static_cast<std::size_t>(best) * m_ + k], b[static_cast<std::size_t>(c) * m_ + k]);
          std::swap(inv[static_cast<std::size_t>(best) * m_ + k], inv[static_cast<std::size_t>(c) * m_ + k]);
        }
      }
      const double piv = b[static_cast<std::size_t>(c) * m_ + c];
      for (int k = 0; k < m_; ++k) {
        b[static_cast<std::size_t>(c) * m_ + k] /= piv;
        inv[static_cast<std::size_t>(c) * m_ + k] /= piv;
      }
      for (int r = 0; r < m_; ++r) {
        if (r == c) continue;
        const double f = b[static_cast<std::size_t>(r) * m_ + c];
        if (f == 0.0) continue;
        for (int k = 0; k < m_; ++k) {
          b[static_cast<std::size_t>(r) * m_ + k] -= f * b[static_cast<std::size_t>(c) * m_ + k];
          inv[static_cast<std::size_t>(r) * m_ + k] -= f * inv[static_cast<std::size_t>(c) * m_ + k];
        }
      }
    }
    // inv = B^-1; row r belongs to the basic variable head_[r].
    for (int r = 0; r < m_; ++r) {
      double* t = row(r);
      const double* ir = inv.data() + static_cast<std::size_t>(r) * m_;
      std::fill(t, t + total_, 0.0);
      for (int k = 0; k < m_; ++k) {
        const double f = ir[k];
        if (f == 0.0) continue;
        const double* ak = lp_.a.data() + static_cast<std::size_t>(k) * n_;
        for (int j = 0; j < n_; ++j) t[j] += f * ak[j];
        t[n_ + k] = -f;
      }
    }
    for (int r = 0; r < m_; ++r) {
      state_[head_[r]] = kBasic;
      double* t = row(r);
      // Clean the unit columns of the basis.
      for (int k = 0; k < m_; ++k) t[head_[k]] = (k == r) ? 1.0 : 0.0;
    }
    for (int j = 0; j < total_; ++j)
      if (state_[j] != kBasic) place_nonbasic(j);
    recompute_basics();
    recompute_duals();
    return true;
  }

  void recompute_basics() {
    for (int r = 0; r < m_; ++r) {
      const double* t = row(r);
      double v = 0.0;
      for (int j = 0; j < total_; ++j)
        if (state_[j] != kBasic && x_[j] != 0.0) v -= t[j] * x_[j];
      x_[head_[r]] = v;
    }
  }

  void recompute_duals() {
    for (int j = 0; j < total_; ++j) d_[j] = cost_[j];
    for (int r = 0; r < m_; ++r) {
      const double cb = cost_[head_[r]];
      if (cb == 0.0) continue;
      const double* t = row(r);
      for (int j = 0; j < total_; ++j) d_[j] -= cb * t[j];
    }
    for (int r = 0; r < m_; ++r) d_[head_[r]] = 0.0;
  }

  // Moves nonbasic variables to the bound their reduced cost prefers. Variables
  // without that bound get an artificial box; ending on it signals unboundedness.
  void make_dual_feasible() {
    for (int j = 0; j < total_; ++j) {
      if (state_[j] == kBasic) continue;
      const double old = x_[j];
      if (d_[j] < -kDualTol && state_[j] != kAtUpper) {
        if (!std::isfinite(hi_[j])) {
          hi_[j] = std::max(0.0, std::isfinite(lo_[j]) ? lo_[j] : 0.0) + kArtificialBound;
          artificial_[j] = 1;
        }
        state_[j] = kAtUpper;
        x_[j] = hi_[j];
      } else if (d_[j] > kDualTol && state_[j] != kAtLower) {
        if (!std::isfinite(lo_[j])) {
          lo_[j] = std::min(0.0, std::isfinite(hi_[j]) ? hi_[j] : 0.0) - kArtificialBound;
          artificial_[j] = 1;
        }
        state_[j] = kAtLower;
        x_[j] = lo_[j];
      }
      if (x_[j] != old) shift_basics(j, x_[j] - old);
    }
  }

  int choose_leaving_row(bool bland) const {
    int best = -1;
    double best_inf = 0.0;
    int best_var = total_;
    for (int r = 0; r < m_; ++r) {
      const int j = head_[r];
      const double v = x_[j];
      double inf = 0.0;
      if (v < lo_[j] - kPrimalTol * std::max(1.0, std::abs(lo_[j])))
        inf = lo_[j] - v;
      else if (v > hi_[j] + kPrimalTol * std::max(1.0, std::abs(hi_[j])))
        inf = v - hi_[j];
      if (inf <= 0.0) continue;
      if (bland) {
        if (j < best_var) {
          best_var = j;
          best = r;
        }
      } else if (inf > best_inf) {
        best_inf = inf;
        best = r;
      }
    }
    return best;
  }

  bool eligible(int j, double alpha, bool to_lower) const {
    if (state_[j] == kBasic) return false;
    if (lo_[j] == hi_[j]) return false;
    if (std::abs(alpha) <= kPivotTol) return false;
    // Leaving var must increase (to_lower) or decrease; basic value moves by -alpha*dx.
    if (state_[j] == kFreeZero) return true;
    const bool increase = state_[j] == kAtLower;
    if (to_lower) return increase ? alpha < 0.0 : alpha > 0.0;
    return increase ? alpha > 0.0 : alpha < 0.0;
  }

  // Harris two-pass ratio test; Bland mode takes the lowest index at minimum ratio.
  int choose_entering(int r, bool to_lower, bool bland) const {
    const double* t = row(r);
    if (bland) {
      int best = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int j = 0; j < total_; ++j) {
        if (!eligible(j, t[j], to_lower)) continue;
        const double ratio = std::abs(d_[j]) / std::abs(t[j]);
        if (ratio < best_ratio - 1e-12) {
          best_ratio = ratio;
          best = j;
        }
      }
      return best;
    }
    double bound = std::numeric_limits<double>::infinity();
    for (int j = 0; j < total_; ++j) {
      if (!eligible(j, t[j], to_lower)) continue;
      const double ratio = (std::abs(d_[j]) + kDualTol) / std::abs(t[j]);
      bound = std::min(bound, ratio);
    }
    if (!std::isfinite(bound)) return -1;
    int best = -1;
    double best_alpha = 0.0;
    for (int j = 0; j < total_; ++j) {
      if (!eligible(j, t[j], to_lower)) continue;
      const double ratio = std::abs(d_[j]) / std::abs(t[j]);
      if (ratio <= bound && std::abs(t[j]) > best_alpha) {
        best_alpha = std::abs(t[j]);
        best = j;
      }
    }
    return best;
  }

  void pivot(int r, int q, double leave_bound, bool to_lower) {
    const int leaving = head_[r];
    double* pr = row(r);
    const double alpha = pr[q];
    const double dx = (x_[leaving] - leave_bound) / alpha;
    for (int i = 0; i < m_; ++i) {
      const double t = row(i)[q];
      if (t != 0.0) x_[head_[i]] -= t * dx;
    }
    x_[q] += dx;
    x_[leaving] = leave_bound;

    const double inv = 1.0 / alpha;
    nz_.clear();
    for (int j = 0; j < total_; ++j) {
      if (pr[j] != 0.0) {
        pr[j] *= inv;
        nz_.push_back(j);
      }
    }
    pr[q] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* pi = row(i);
      const double f = pi[q];
      if (f == 0.0) continue;
      for (int j : nz_) pi[j] -= f * pr[j];
      pi[q] = 0.0;
    }
    const double dq = d_[q];
    if (dq != 0.0)
      for (int j : nz_) d_[j] -= dq * pr[j];
    d_[q] = 0.0;

    head_[r] = q;
    state_[q] = kBasic;
    state_[leaving] = to_lower ? kAtLower : kAtUpper;
  }

  LpData lp_;
  int m_;
  int n_;
  int total_;
  std::vector<double> lo_;
  std::vector<double> hi_;
  std::vector<double> x_;
  std::vector<double> d_;
  std::vector<double> cost_;
  std::vector<std::uint8_t> state_;
  std::vector<int> head_;
  std::vector<double> tab_;
  std::vector<std::uint8_t> artificial_;
  std::vector<int> nz_;
  int pivots_since_refactor_ = 0;
};

}  // namespace moldsched::milp
