#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace moldsched::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { Binary, Continuous };
enum class Relation { LessEqual, Equal, GreaterEqual };

struct Variable {
  std::string name;
  VarKind kind = VarKind::Continuous;
  double lower = 0.0;
  double upper = kInf;
};

struct Term {
  int var = 0;
  double coef = 0.0;
};

struct LinearExpr {
  std::vector<Term> terms;

  LinearExpr& add(int var, double coef) {
    terms.push_back(Term{var, coef});
    return *this;
  }
};

struct Constraint {
  std::string name;
  LinearExpr expr;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
};

class MalformedModel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A minimization MILP over binary and bounded continuous variables.
class MilpModel {
 public:
  int add_binary(std::string name) { return add_variable(std::move(name), VarKind::Binary, 0.0, 1.0); }

  int add_continuous(std::string name, double lower, double upper) {
    return add_variable(std::move(name), VarKind::Continuous, lower, upper);
  }

  int add_variable(std::string name, VarKind kind, double lower, double upper) {
    if (index_.count(name)) throw MalformedModel("duplicate variable name '" + name + "'");
    const int id = static_cast<int>(vars_.size());
    index_.emplace(name, id);
    vars_.push_back(Variable{std::move(name), kind, lower, upper});
    return id;
  }

  /// Unnamed constraints are called c1, c2, ... by position.
  int add_constraint(LinearExpr expr, Relation rel, double rhs, std::string name = {}) {
    const int id = static_cast<int>(cons_.size());
    if (name.empty()) name = "c" + std::to_string(id + 1);
    cons_.push_back(Constraint{std::move(name), std::move(expr), rel, rhs});
    return id;
  }

  void set_objective(LinearExpr expr) { objective_ = std::move(expr); }

  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return cons_; }
  const LinearExpr& objective() const { return objective_; }
  int variable_count() const { return static_cast<int>(vars_.size()); }
  int constraint_count() const { return static_cast<int>(cons_.size()); }

  int binary_count() const {
    int b = 0;
    for (const auto& v : vars_) b += v.kind == VarKind::Binary;
    return b;
  }

  std::optional<int> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const Variable& variable(int id) const { return vars_.at(static_cast<std::size_t>(id)); }

  /// Throws MalformedModel on dangling references, bad bounds or non-finite data.
  void validate() const {
    auto check_expr = [&](const LinearExpr& e, const std::string& where) {
      for (const Term& t : e.terms) {
        if (t.var < 0 || t.var >= variable_count())
          throw MalformedModel(where + " references unknown variable #" + std::to_string(t.var));
        if (!std::isfinite(t.coef)) throw MalformedModel(where + " has a non-finite coefficient");
      }
    };
    for (const auto& v : vars_) {
      if (v.kind == VarKind::Binary && (v.lower != 0.0 || v.upper != 1.0))
        throw MalformedModel("binary variable '" + v.name + "' must have bounds [0,1]");
      if (v.lower > v.upper) throw MalformedModel("variable '" + v.name + "' has empty domain");
      if (v.lower == kInf || v.upper == -kInf)
        throw MalformedModel("variable '" + v.name + "' has an infinite fixed bound");
    }
    check_expr(objective_, "objective");
    for (const auto& c : cons_) {
      check_expr(c.expr, "constraint '" + c.name + "'");
      if (!std::isfinite(c.rhs)) throw MalformedModel("constraint '" + c.name + "' has non-finite rhs");
    }
  }

  double evaluate(const LinearExpr& e, const std::vector<double>& x) const {
    double s = 0.0;
    for (const Term& t : e.terms) s += t.coef * x[static_cast<std::size_t>(t.var)];
    return s;
  }

  double objective_value(const std::vector<double>& x) const { return evaluate(objective_, x); }

  /// Amount by which `c` is violated at `x` (0 if satisfied).
  double violation(const Constraint& c, const std::vector<double>& x) const {
    const double lhs = evaluate(c.expr, x);
    switch (c.relation) {
      case Relation::LessEqual: return std::max(0.0, lhs - c.rhs);
      case Relation::GreaterEqual: return std::max(0.0, c.rhs - lhs);
      case Relation::Equal: return std::abs(lhs - c.rhs);
    }
    return 0.0;
  }

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> cons_;
  LinearExpr objective_;
  std::unordered_map<std::string, int> index_;
};

enum class SolveStatus { Optimal, Feasible, Infeasible, TimeLimit };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Feasible: return "Feasible";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::TimeLimit: return "TimeLimit";
  }
  return "?";
}

inline SolveStatus status_from_string(const std::string& s) {
  if (s == "Optimal") return SolveStatus::Optimal;
  if (s == "Feasible") return SolveStatus::Feasible;
  if (s == "Infeasible") return SolveStatus::Infeasible;
  if (s == "TimeLimit") return SolveStatus::TimeLimit;
  throw std::invalid_argument("unknown solve status '" + s + "'");
}

struct SolveResult {
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<double> assignment;  // indexed by variable id; empty without incumbent
  double objective = kInf;
  double best_bound = -kInf;
  double gap = kInf;
  long long nodes = 0;
  double wall_time = 0.0;

  bool has_assignment() const { return !assignment.empty(); }
};

struct Tolerances {
  double integrality = 1e-6;
  double feasibility = 1e-6;
  double relative_gap = 1e-6;
};

inline double relative_gap(double incumbent, double bound) {
  if (!std::isfinite(incumbent)) return kInf;
  if (!std::isfinite(bound)) return kInf;
  const double diff = std::max(0.0, incumbent - bound);
  return diff / std::max(std::abs(incumbent), 1e-10);
}

}  // namespace moldsched::milp
