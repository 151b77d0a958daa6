#pragma once

// Branch-and-bound over LP relaxations for MilpModel.
//
// Node processing: bound propagation over the constraint rows, then a warm
// started dual simplex solve with the incumbent as cutoff. Branching is on the
// most fractional binary (lowest index on ties). The search dives depth first
// from the current node and, once a dive ends, resumes from the open node
// with the smallest bound (lowest creation id on ties), so results are
// deterministic for a given model whenever no time limit is hit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "moldsched/milp/dual_simplex.hpp"
#include "moldsched/milp/model.hpp"

namespace moldsched::milp {

struct SolverOptions {
  double time_limit = 300.0;  // wall-clock seconds
  long long node_limit = -1;  // negative: unlimited
  Tolerances tol{};
  bool heuristic = true;      // round-and-repair at the root and periodically
  bool propagate = true;
};

class UnboundedModel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct SparseRow {
  std::vector<Term> terms;
  double lo = -kInf;
  double hi = kInf;
};

inline std::vector<Term> merge_terms(const LinearExpr& e) {
  std::map<int, double> acc;
  for (const Term& t : e.terms) acc[t.var] += t.coef;
  std::vector<Term> out;
  for (auto [v, c] : acc)
    if (c != 0.0) out.push_back(Term{v, c});
  return out;
}

inline SparseRow to_row(const Constraint& c) {
  SparseRow r;
  r.terms = merge_terms(c.expr);
  switch (c.relation) {
    case Relation::LessEqual: r.hi = c.rhs; break;
    case Relation::GreaterEqual: r.lo = c.rhs; break;
    case Relation::Equal: r.lo = r.hi = c.rhs; break;
  }
  return r;
}

/// Activity-based bound tightening. Returns false when a row cannot be met.
class Propagator {
 public:
  Propagator(std::vector<SparseRow> rows, std::vector<bool> is_binary, double feas_tol)
      : rows_(std::move(rows)), binary_(std::move(is_binary)), tol_(feas_tol) {}

  bool run(std::vector<double>& lo, std::vector<double>& hi, int max_passes = 20) const {
    for (int pass = 0; pass < max_passes; ++pass) {
      bool changed = false;
      for (const SparseRow& row : rows_) {
        if (!propagate_row(row, lo, hi, changed)) return false;
      }
      if (!changed) break;
    }
    return true;
  }

 private:
  bool tighten(int j, double new_lo, double new_hi, std::vector<double>& lo, std::vector<double>& hi,
               bool& changed) const {
    if (binary_[static_cast<std::size_t>(j)]) {
      new_lo = std::ceil(new_lo - tol_);
      new_hi = std::floor(new_hi + tol_);
    }
    const double scale_lo = std::max(1.0, std::abs(new_lo));
    const double scale_hi = std::max(1.0, std::abs(new_hi));
    if (new_lo > lo[j] + 1e-7 * scale_lo) {
      lo[j] = binary_[static_cast<std::size_t>(j)] ? new_lo : new_lo - 1e-9 * scale_lo;
      changed = true;
    }
    if (new_hi < hi[j] - 1e-7 * scale_hi) {
      hi[j] = binary_[static_cast<std::size_t>(j)] ? new_hi : new_hi + 1e-9 * scale_hi;
      changed = true;
    }
    if (lo[j] > hi[j]) {
      if (lo[j] > hi[j] + tol_ * std::max(1.0, std::abs(hi[j]))) return false;
      hi[j] = lo[j];
    }
    return true;
  }

  bool propagate_row(const SparseRow& row, std::vector<double>& lo, std::vector<double>& hi,
                     bool& changed) const {
    double min_act = 0.0, max_act = 0.0;
    int min_inf = 0, max_inf = 0;
    for (const Term& t : row.terms) {
      const double l = lo[t.var], h = hi[t.var];
      const double cmin = t.coef > 0 ? t.coef * l : t.coef * h;
      const double cmax = t.coef > 0 ? t.coef * h : t.coef * l;
      if (std::isfinite(cmin)) min_act += cmin; else ++min_inf;
      if (std::isfinite(cmax)) max_act += cmax; else ++max_inf;
    }
    const double scale = std::max({1.0, std::abs(row.lo) == kInf ? 0.0 : std::abs(row.lo),
                                   std::abs(row.hi) == kInf ? 0.0 : std::abs(row.hi)});
    if (min_inf == 0 && min_act > row.hi + tol_ * scale) return false;
    if (max_inf == 0 && max_act < row.lo - tol_ * scale) return false;

    for (const Term& t : row.terms) {
      const double l = lo[t.var], h = hi[t.var];
      const double cmin = t.coef > 0 ? t.coef * l : t.coef * h;
      const double cmax = t.coef > 0 ? t.coef * h : t.coef * l;
      double new_lo = -kInf, new_hi = kInf;
      // a x <= row.hi - (min activity of the others)
      if (std::isfinite(row.hi)) {
        double rest;
        bool ok = true;
        if (min_inf == 0) rest = min_act - cmin;
        else if (min_inf == 1 && !std::isfinite(cmin)) rest = min_act;
        else ok = false;
        if (ok) {
          const double b = (row.hi - rest) / t.coef;
          if (t.coef > 0) new_hi = b; else new_lo = b;
        }
      }
      // a x >= row.lo - (max activity of the others)
      if (std::isfinite(row.lo)) {
        double rest;
        bool ok = true;
        if (max_inf == 0) rest = max_act - cmax;
        else if (max_inf == 1 && !std::isfinite(cmax)) rest = max_act;
        else ok = false;
        if (ok) {
          const double b = (row.lo - rest) / t.coef;
          if (t.coef > 0) new_lo = std::max(new_lo, b); else new_hi = std::min(new_hi, b);
        }
      }
      if (!tighten(t.var, new_lo, new_hi, lo, hi, changed)) return false;
    }
    return true;
  }

  std::vector<SparseRow> rows_;
  std::vector<bool> binary_;
  double tol_;
};

}  // namespace detail

/// Solves `model` to proven optimality (relative gap tolerance) or until the
/// time or node limit is reached. Throws MalformedModel or UnboundedModel.
class BranchAndBound {
 public:
  explicit BranchAndBound(const MilpModel& model, SolverOptions options = {})
      : model_(model), opt_(options) {
    model_.validate();
    build();
  }

  SolveResult solve() {
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    const auto deadline = start + std::chrono::duration_cast<Clock::duration>(
                                      std::chrono::duration<double>(opt_.time_limit));
    SolveResult res;
    auto finish = [&](SolveResult& r) {
      r.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
      return r;
    };

    if (root_infeasible_) {
      res.status = SolveStatus::Infeasible;
      res.best_bound = kInf;
      return finish(res);
    }

    Node root;
    root.lo = root_lo_;
    root.hi = root_hi_;
    root.bound = -kInf;
    root.id = next_id_++;
    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    lp_->reset_slack_basis();

    bool have_node = true;
    bool refactor_needed = false;
    bool limit_hit = false;
    Node cur = std::move(root);
    double incumbent = kInf;
    double pruned_bound = kInf;  // smallest bound among nodes cut off by the incumbent
    std::vector<double> best_x;

    auto cutoff = [&]() {
      if (!std::isfinite(incumbent)) return kInf;
      return incumbent - opt_.tol.relative_gap * std::max(std::abs(incumbent), 1e-10);
    };

    while (true) {
      if (!have_node) {
        if (open.empty()) break;
        if (open.top().bound >= cutoff()) {
          pruned_bound = std::min(pruned_bound, open.top().bound);
          open = {};
          break;
        }
        cur = open.top();
        open.pop();
        refactor_needed = true;
        have_node = true;
      }
      if (Clock::now() > deadline ||
          (opt_.node_limit >= 0 && res.nodes >= opt_.node_limit)) {
        limit_hit = true;
        open.push(std::move(cur));
        break;
      }
      ++res.nodes;
      have_node = false;

      if (opt_.propagate && !propagator_->run(cur.lo, cur.hi)) continue;
      for (int j = 0; j < n_; ++j) lp_->set_bounds(j, cur.lo[j], cur.hi[j]);
      if (refactor_needed) {
        lp_->load_basis(cur.basis);
        refactor_needed = false;
      }
      const LpStatus st = lp_->solve(cutoff(), deadline);
      if (st == LpStatus::IterationLimit) {
        // Out of time inside the LP; the node stays open with its parent bound.
        --res.nodes;
        limit_hit = true;
        refactor_needed = true;
        open.push(std::move(cur));
        break;
      }
      if (st == LpStatus::Unbounded) throw UnboundedModel("LP relaxation is unbounded");
      if (st == LpStatus::Infeasible) continue;
      const double obj = lp_->objective();
      cur.bound = std::max(cur.bound, obj);
      if (st == LpStatus::Cutoff || cur.bound >= cutoff()) {
        pruned_bound = std::min(pruned_bound, cur.bound);
        continue;
      }

      std::vector<double> x = lp_->primal();
      const int branch_var = most_fractional(x);
      if (branch_var < 0) {
        if (auto sol = polish(x, cur.lo, cur.hi)) {
          const double val = model_.objective_value(*sol);
          if (val < incumbent) {
            incumbent = val;
            best_x = std::move(*sol);
          }
        }
        continue;
      }
      if (opt_.heuristic && (res.nodes == 1 || res.nodes % kHeuristicPeriod == 0)) {
        if (auto sol = round_and_repair(x, cur.lo, cur.hi)) {
          const double val = model_.objective_value(*sol);
          if (val < incumbent) {
            incumbent = val;
            best_x = std::move(*sol);
          }
        }
        if (cur.bound >= cutoff()) {
          pruned_bound = std::min(pruned_bound, cur.bound);
          continue;
        }
      }

      Node down = cur;
      Node up = std::move(cur);
      down.hi[branch_var] = 0.0;
      up.lo[branch_var] = 1.0;
      down.id = next_id_++;
      up.id = next_id_++;
      const bool dive_up = x[branch_var] >= 0.5;
      Node& other = dive_up ? down : up;
      other.basis = lp_->basis();
      other.depth = (dive_up ? up : down).depth + 1;
      cur = dive_up ? std::move(up) : std::move(down);
      cur.depth += 1;
      open.push(std::move(other));
      have_node = true;
    }

    double bound = std::min(incumbent, pruned_bound);
    while (!open.empty()) {
      bound = std::min(bound, open.top().bound);
      open.pop();
    }
    if (std::isfinite(incumbent)) {
      res.objective = incumbent;
      res.assignment = std::move(best_x);
      res.best_bound = bound;
      res.gap = relative_gap(incumbent, bound);
      res.status = (!limit_hit || res.gap <= opt_.tol.relative_gap) ? SolveStatus::Optimal
                                                                     : SolveStatus::TimeLimit;
    } else {
      res.status = limit_hit ? SolveStatus::TimeLimit : SolveStatus::Infeasible;
      res.best_bound = limit_hit ? bound : kInf;
      res.gap = kInf;
    }
    return finish(res);
  }

 private:
  static constexpr long long kHeuristicPeriod = 64;

  struct Node {
    std::vector<double> lo;
    std::vector<double> hi;
    double bound = -kInf;
    long long id = 0;
    int depth = 0;
    DualSimplex::Basis basis;
  };

  struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
      if (a.bound != b.bound) return a.bound > b.bound;
      return a.id > b.id;
    }
  };

  void build() {
    n_ = model_.variable_count();
    root_lo_.resize(static_cast<std::size_t>(n_));
    root_hi_.resize(static_cast<std::size_t>(n_));
    binary_.assign(static_cast<std::size_t>(n_), false);
    for (int j = 0; j < n_; ++j) {
      const Variable& v = model_.variable(j);
      root_lo_[j] = v.lower;
      root_hi_[j] = v.upper;
      binary_[j] = v.kind == VarKind::Binary;
    }

    std::vector<detail::SparseRow> all_rows;
    std::vector<detail::SparseRow> lp_rows;
    for (const Constraint& c : model_.constraints()) {
      detail::SparseRow r = detail::to_row(c);
      if (r.terms.empty()) {
        if (r.lo > opt_.tol.feasibility || r.hi < -opt_.tol.feasibility) root_infeasible_ = true;
        continue;
      }
      if (r.terms.size() == 1) {
        // Singleton rows become variable bounds.
        const Term t = r.terms.front();
        double lo = t.coef > 0 ? r.lo / t.coef : r.hi / t.coef;
        double hi = t.coef > 0 ? r.hi / t.coef : r.lo / t.coef;
        if (binary_[t.var]) {
          lo = std::ceil(lo - opt_.tol.feasibility);
          hi = std::floor(hi + opt_.tol.feasibility);
        }
        root_lo_[t.var] = std::max(root_lo_[t.var], lo);
        root_hi_[t.var] = std::min(root_hi_[t.var], hi);
        if (root_lo_[t.var] > root_hi_[t.var] + opt_.tol.feasibility) root_infeasible_ = true;
        if (root_lo_[t.var] > root_hi_[t.var]) root_hi_[t.var] = root_lo_[t.var];
        continue;
      }
      all_rows.push_back(r);
      lp_rows.push_back(std::move(r));
    }

    LpData data;
    data.rows = static_cast<int>(lp_rows.size());
    data.cols = n_;
    data.a.assign(static_cast<std::size_t>(data.rows) * n_, 0.0);
    data.cost.assign(static_cast<std::size_t>(n_), 0.0);
    for (const Term& t : detail::merge_terms(model_.objective())) data.cost[t.var] = t.coef;
    for (int i = 0; i < data.rows; ++i) {
      for (const Term& t : lp_rows[i].terms) data.at(i, t.var) = t.coef;
      data.row_lo.push_back(lp_rows[i].lo);
      data.row_hi.push_back(lp_rows[i].hi);
    }
    lp_data_ = data;
    lp_ = std::make_unique<DualSimplex>(std::move(data));
    propagator_ = std::make_unique<detail::Propagator>(std::move(all_rows), binary_, opt_.tol.feasibility);
    if (!root_infeasible_ && opt_.propagate && !propagator_->run(root_lo_, root_hi_)) root_infeasible_ = true;
  }

  int most_fractional(const std::vector<double>& x) const {
    int best = -1;
    double best_frac = opt_.tol.integrality;
    for (int j = 0; j < n_; ++j) {
      if (!binary_[j]) continue;
      const double f = x[j] - std::floor(x[j]);
      const double dist = std::min(f, 1.0 - f);
      if (dist > best_frac) {
        best_frac = dist;
        best = j;
      }
    }
    return best;
  }

  bool satisfies_model(const std::vector<double>& x) const {
    for (int j = 0; j < n_; ++j) {
      const Variable& v = model_.variable(j);
      if (x[j] < v.lower - opt_.tol.feasibility || x[j] > v.upper + opt_.tol.feasibility) return false;
    }
    for (const Constraint& c : model_.constraints())
      if (model_.violation(c, x) > opt_.tol.feasibility) return false;
    return true;
  }

  // Snaps binaries of an integral LP point; falls back to a fresh LP over the
  // continuous variables when snapping leaves a residual violation.
  std::optional<std::vector<double>> polish(std::vector<double> x, const std::vector<double>& lo,
                                            const std::vector<double>& hi) {
    for (int j = 0; j < n_; ++j) {
      if (binary_[j]) x[j] = std::round(x[j]);
      else x[j] = std::clamp(x[j], model_.variable(j).lower, model_.variable(j).upper);
    }
    if (satisfies_model(x)) return x;
    return solve_fixed(x, lo, hi);
  }

  std::optional<std::vector<double>> round_and_repair(const std::vector<double>& x,
                                                      const std::vector<double>& lo,
                                                      const std::vector<double>& hi) {
    std::vector<double> r = x;
    for (int j = 0; j < n_; ++j)
      if (binary_[j]) r[j] = std::clamp(std::round(x[j]), lo[j], hi[j]);
    return solve_fixed(r, lo, hi);
  }

  // LP over the continuous variables with every binary fixed to its value in `x`.
  std::optional<std::vector<double>> solve_fixed(const std::vector<double>& x,
                                                 const std::vector<double>& lo,
                                                 const std::vector<double>& hi) {
    std::vector<double> flo = lo, fhi = hi;
    for (int j = 0; j < n_; ++j)
      if (binary_[j]) flo[j] = fhi[j] = x[j];
    if (opt_.propagate && !propagator_->run(flo, fhi)) return std::nullopt;
    DualSimplex fixed(lp_data_);
    for (int j = 0; j < n_; ++j) fixed.set_bounds(j, flo[j], fhi[j]);
    if (fixed.solve() != LpStatus::Optimal) return std::nullopt;
    std::vector<double> y = fixed.primal();
    for (int j = 0; j < n_; ++j) {
      if (binary_[j]) y[j] = x[j];
      else y[j] = std::clamp(y[j], model_.variable(j).lower, model_.variable(j).upper);
    }
    if (!satisfies_model(y)) return std::nullopt;
    return y;
  }

  const MilpModel& model_;
  SolverOptions opt_;
  int n_ = 0;
  std::vector<double> root_lo_;
  std::vector<double> root_hi_;
  std::vector<bool> binary_;
  bool root_infeasible_ = false;
  LpData lp_data_;
  std::unique_ptr<DualSimplex> lp_;
  std::unique_ptr<detail::Propagator> propagator_;
  long long next_id_ = 0;
};

/// Solves `model` with the bundled branch-and-bound solver.
inline SolveResult solve(const MilpModel& model, double time_limit, SolverOptions options = {}) {
  if (!(time_limit > 0.0)) throw std::invalid_argument("time limit must be positive");
  options.time_limit = time_limit;
  BranchAndBound bb(model, options);
  return bb.solve();
}

}  // namespace moldsched::milp
