#pragma once

// CPLEX LP text export/parse and the plain "name value" solution format used
// to exchange assignments with external solvers.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "moldsched/milp/model.hpp"

namespace moldsched::milp {

class LpParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownVariable : public std::runtime_error {
 public:
  explicit UnknownVariable(const std::string& name)
      : std::runtime_error("unknown variable '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// Raised by import_solution. `index` is the violated constraint, or -1 when
/// a variable bound or integrality requirement is violated.
class ConstraintViolated : public std::runtime_error {
 public:
  ConstraintViolated(int index, double amount, const std::string& what)
      : std::runtime_error(what), index_(index), amount_(amount) {}
  int index() const { return index_; }
  double amount() const { return amount_; }

 private:
  int index_;
  double amount_;
};

/// Maps an arbitrary identifier onto [A-Za-z0-9_], never starting with a digit.
inline std::string sanitize_name(const std::string& raw) {
  std::string out;
  out.reserve(raw.size() + 1);
  for (char c : raw) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_') ? c : '_';
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out.front()))) out.insert(out.begin(), 'v');
  return out;
}

namespace detail {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Sanitized names, made unique by suffixing when sanitizing collides.
inline std::vector<std::string> unique_names(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  std::set<std::string> used;
  for (const auto& r : raw) {
    std::string s = sanitize_name(r);
    if (used.count(s)) {
      int k = 1;
      while (used.count(s + "_" + std::to_string(k))) ++k;
      s += "_" + std::to_string(k);
    }
    used.insert(s);
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_expr(std::ostringstream& os, const LinearExpr& e, const std::vector<std::string>& names,
                       std::size_t& col) {
  bool first = true;
  for (const Term& t : e.terms) {
    std::string piece;
    double c = t.coef;
    if (first) {
      if (c < 0) {
        piece += "- ";
        c = -c;
      }
    } else {
      piece += c < 0 ? " - " : " + ";
      c = std::abs(c);
    }
    if (c != 1.0) piece += num(c) + " ";
    piece += names[static_cast<std::size_t>(t.var)];
    if (col + piece.size() > 240) {
      os << "\n   ";
      col = 3;
    }
    os << piece;
    col += piece.size();
    first = false;
  }
}

}  // namespace detail

/// Writes `model` in CPLEX LP format (Minimize / Subject To / Bounds /
/// Binaries / End). Names are sanitized to [A-Za-z0-9_].
inline std::string export_lp(const MilpModel& model) {
  model.validate();
  std::vector<std::string> raw;
  for (const auto& v : model.variables()) raw.push_back(v.name);
  const auto names = detail::unique_names(raw);
  std::vector<std::string> craw;
  for (const auto& c : model.constraints()) craw.push_back(c.name);
  const auto cnames = detail::unique_names(craw);

  std::ostringstream os;
  os << "Minimize\n obj: ";
  std::size_t col = 6;
  if (model.objective().terms.empty()) {
    os << "0";
  } else {
    detail::write_expr(os, model.objective(), names, col);
  }
  os << "\nSubject To\n";
  for (std::size_t i = 0; i < model.constraints().size(); ++i) {
    const Constraint& c = model.constraints()[i];
    os << " " << cnames[i] << ": ";
    col = cnames[i].size() + 3;
    if (c.expr.terms.empty()) {
      if (names.empty()) throw MalformedModel("cannot write an empty constraint without variables");
      os << "0 " << names.front();
    } else {
      detail::write_expr(os, c.expr, names, col);
    }
    const char* rel = c.relation == Relation::LessEqual ? " <= " : c.relation == Relation::Equal ? " = " : " >= ";
    os << rel << detail::num(c.rhs) << "\n";
  }
  os << "Bounds\n";
  for (std::size_t j = 0; j < model.variables().size(); ++j) {
    const Variable& v = model.variables()[j];
    if (v.kind == VarKind::Binary) continue;
    const bool lo_inf = v.lower == -kInf, hi_inf = v.upper == kInf;
    if (lo_inf && hi_inf) {
      os << " " << names[j] << " free\n";
    } else if (hi_inf) {
      os << " " << names[j] << " >= " << detail::num(v.lower) << "\n";
    } else {
      os << " " << (lo_inf ? std::string("-inf") : detail::num(v.lower)) << " <= " << names[j]
         << " <= " << detail::num(v.upper) << "\n";
    }
  }
  os << "Binaries\n";
  col = 0;
  for (std::size_t j = 0; j < model.variables().size(); ++j) {
    if (model.variables()[j].kind != VarKind::Binary) continue;
    if (col > 0 && col + names[j].size() > 240) {
      os << "\n";
      col = 0;
    }
    os << " " << names[j];
    col += names[j].size() + 1;
  }
  if (col > 0) os << "\n";
  os << "End\n";
  return os.str();
}

namespace detail {

struct LpToken {
  enum Kind { Name, Number, Op, Colon, End } kind;
  std::string text;
  double value = 0.0;
};

class LpLexer {
 public:
  explicit LpLexer(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      const auto bs = line.find('\\');
      if (bs != std::string::npos) line.erase(bs);
      tokenize_line(line);
    }
    tokens_.push_back(LpToken{LpToken::End, "", 0.0});
  }
  const std::vector<LpToken>& tokens() const { return tokens_; }

 private:
  void tokenize_line(const std::string& line) {
    std::size_t i = 0;
    while (i < line.size()) {
      const char c = line[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else if (c == ':') {
        tokens_.push_back({LpToken::Colon, ":", 0.0});
        ++i;
      } else if (c == '<' || c == '>' || c == '=') {
        std::string op(1, c);
        ++i;
        if (i < line.size() && line[i] == '=') {
          op += '=';
          ++i;
        } else if (c == '=' && i < line.size() && (line[i] == '<' || line[i] == '>')) {
          op = std::string(1, line[i]) + "=";
          ++i;
        }
        if (op == "<") op = "<=";
        if (op == ">") op = ">=";
        if (op == "==") op = "=";
        tokens_.push_back({LpToken::Op, op, 0.0});
      } else if (c == '+' || c == '-') {
        tokens_.push_back({LpToken::Op, std::string(1, c), 0.0});
        ++i;
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t used = 0;
        const double v = std::stod(line.substr(i), &used);
        tokens_.push_back({LpToken::Number, line.substr(i, used), v});
        i += used;
      } else {
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])) &&
               std::string(":<>=+-").find(line[j]) == std::string::npos)
          ++j;
        tokens_.push_back({LpToken::Name, line.substr(i, j - i), 0.0});
        i = j;
      }
    }
  }
  std::vector<LpToken> tokens_;
};

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

/// Parses the LP subset written by export_lp (plus "st"/"s.t." and "binary"
/// aliases). Variables appear in order of first mention.
inline MilpModel parse_lp(const std::string& text) {
  detail::LpLexer lexer(text);
  const auto& tok = lexer.tokens();
  std::size_t pos = 0;
  auto peek = [&]() -> const detail::LpToken& { return tok[pos]; };
  auto next = [&]() -> const detail::LpToken& { return tok[pos++]; };
  auto is_kw = [&](const detail::LpToken& t, std::initializer_list<const char*> kws) {
    if (t.kind != detail::LpToken::Name) return false;
    const std::string l = detail::lower(t.text);
    for (const char* k : kws)
      if (l == k) return true;
    return false;
  };

  struct PendingVar {
    std::string name;
    bool binary = false;
    double lo = 0.0, hi = kInf;
  };
  std::vector<PendingVar> vars;
  std::unordered_map<std::string, int> index;
  auto var_id = [&](const std::string& name) {
    auto it = index.find(name);
    if (it != index.end()) return it->second;
    const int id = static_cast<int>(vars.size());
    vars.push_back(PendingVar{name});
    index.emplace(name, id);
    return id;
  };

  // Section keywords terminate an expression.
  auto at_section = [&]() {
    const auto& t = peek();
    if (t.kind == detail::LpToken::End) return true;
    if (is_kw(t, {"subject", "st", "s.t.", "bounds", "bound", "binaries", "binary", "bin", "end", "generals",
                  "general", "integers"}))
      return true;
    return false;
  };

  auto parse_expr = [&](LinearExpr& e) {
    bool any = false;
    while (true) {
      const auto& t = peek();
      if (t.kind == detail::LpToken::Op && (t.text == "<=" || t.text == ">=" || t.text == "=")) break;
      if (at_section()) break;
      // A name followed by ':' starts the next row.
      if (t.kind == detail::LpToken::Name && tok[pos + 1].kind == detail::LpToken::Colon) break;
      double sign = 1.0;
      while (peek().kind == detail::LpToken::Op && (peek().text == "+" || peek().text == "-")) {
        if (next().text == "-") sign = -sign;
      }
      double coef = 1.0;
      bool has_coef = false;
      if (peek().kind == detail::LpToken::Number) {
        coef = next().value;
        has_coef = true;
      }
      const bool name_follows = peek().kind == detail::LpToken::Name && !at_section() &&
                                tok[pos + 1].kind != detail::LpToken::Colon;
      if (!name_follows) {
        if (!any && has_coef && coef == 0.0) break;  // "obj: 0"
        throw LpParseError("expected a variable name near '" + peek().text + "'");
      }
      const std::string name = next().text;
      e.add(var_id(name), sign * coef);
      any = true;
    }
  };

  if (!is_kw(peek(), {"minimize", "minimise", "min"}))
    throw LpParseError("only minimization LP files are supported");
  next();
  LinearExpr objective;
  if (peek().kind == detail::LpToken::Name && tok[pos + 1].kind == detail::LpToken::Colon) pos += 2;
  parse_expr(objective);

  struct PendingRow {
    std::string name;
    LinearExpr expr;
    Relation rel;
    double rhs;
  };
  std::vector<PendingRow> rows;

  while (peek().kind != detail::LpToken::End) {
    const auto& t = peek();
    if (is_kw(t, {"subject", "st", "s.t."})) {
      const bool long_form = is_kw(next(), {"subject"});
      if (long_form && is_kw(peek(), {"to"})) next();
      while (!at_section()) {
        PendingRow row;
        if (peek().kind == detail::LpToken::Name && tok[pos + 1].kind == detail::LpToken::Colon) {
          row.name = next().text;
          next();
        }
        parse_expr(row.expr);
        const auto& op = next();
        if (op.kind != detail::LpToken::Op) throw LpParseError("expected a relation in row '" + row.name + "'");
        row.rel = op.text == "<=" ? Relation::LessEqual : op.text == ">=" ? Relation::GreaterEqual : Relation::Equal;
        double sign = 1.0;
        while (peek().kind == detail::LpToken::Op && (peek().text == "-" || peek().text == "+"))
          if (next().text == "-") sign = -sign;
        if (peek().kind != detail::LpToken::Number) throw LpParseError("expected a right-hand side in row '" + row.name + "'");
        row.rhs = sign * next().value;
        rows.push_back(std::move(row));
      }
    } else if (is_kw(t, {"bounds", "bound"})) {
      next();
      while (!at_section()) {
        auto read_num = [&]() {
          double sign = 1.0;
          while (peek().kind == detail::LpToken::Op && (peek().text == "-" || peek().text == "+"))
            if (next().text == "-") sign = -sign;
          if (peek().kind == detail::LpToken::Name && is_kw(peek(), {"inf", "infinity"})) {
            next();
            return sign * kInf;
          }
          if (peek().kind != detail::LpToken::Number) throw LpParseError("expected a bound value");
          return sign * next().value;
        };
        const bool starts_with_value =
            peek().kind == detail::LpToken::Number || peek().kind == detail::LpToken::Op || is_kw(peek(), {"inf", "infinity"});
        if (starts_with_value) {
          const double lo = read_num();
          if (next().text != "<=") throw LpParseError("expected '<=' in bound");
          const int v = var_id(next().text);
          vars[v].lo = lo;
          if (peek().kind == detail::LpToken::Op && peek().text == "<=") {
            next();
            vars[v].hi = read_num();
          }
        } else {
          const int v = var_id(next().text);
          if (is_kw(peek(), {"free"})) {
            next();
            vars[v].lo = -kInf;
            vars[v].hi = kInf;
            continue;
          }
          const std::string op = next().text;
          const double val = read_num();
          if (op == "<=") vars[v].hi = val;
          else if (op == ">=") vars[v].lo = val;
          else if (op == "=") vars[v].lo = vars[v].hi = val;
          else throw LpParseError("bad bound operator '" + op + "'");
        }
      }
    } else if (is_kw(t, {"binaries", "binary", "bin"})) {
      next();
      while (!at_section()) vars[var_id(next().text)].binary = true;
    } else if (is_kw(t, {"generals", "general", "integers"})) {
      throw LpParseError("general integer variables are not supported");
    } else if (is_kw(t, {"end"})) {
      next();
      break;
    } else {
      throw LpParseError("unexpected token '" + t.text + "'");
    }
  }

  MilpModel model;
  for (const auto& v : vars) {
    if (v.binary) model.add_binary(v.name);
    else model.add_continuous(v.name, v.lo, v.hi);
  }
  model.set_objective(std::move(objective));
  for (auto& r : rows) model.add_constraint(std::move(r.expr), r.rel, r.rhs, r.name);
  return model;
}

/// One "name value" line per variable, with full double precision.
inline std::string write_solution(const MilpModel& model, const SolveResult& result) {
  std::ostringstream os;
  os << "# objective " << detail::num(result.objective) << "\n";
  for (std::size_t j = 0; j < result.assignment.size(); ++j)
    os << sanitize_name(model.variables()[j].name) << " " << detail::num(result.assignment[j]) << "\n";
  return os.str();
}

/// Reads "name value" pairs ('#' starts a comment; unlisted variables are 0)
/// and checks bounds, integrality and every constraint within the
/// feasibility tolerance. Returns a Feasible result.
inline SolveResult import_solution(const MilpModel& model, const std::string& text, Tolerances tol = {}) {
  model.validate();
  std::unordered_map<std::string, int> by_name;
  for (int j = 0; j < model.variable_count(); ++j) {
    by_name.emplace(model.variable(j).name, j);
    by_name.emplace(sanitize_name(model.variable(j).name), j);
  }
  std::vector<double> x(static_cast<std::size_t>(model.variable_count()), 0.0);
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string name;
    if (!(ls >> name)) continue;
    double value = 0.0;
    if (!(ls >> value)) throw LpParseError("line " + std::to_string(line_no) + ": expected 'name value'");
    auto it = by_name.find(name);
    if (it == by_name.end()) throw UnknownVariable(name);
    x[static_cast<std::size_t>(it->second)] = value;
  }
  for (int j = 0; j < model.variable_count(); ++j) {
    const Variable& v = model.variable(j);
    const double val = x[static_cast<std::size_t>(j)];
    const double below = v.lower - val, above = val - v.upper;
    if (below > tol.feasibility || above > tol.feasibility)
      throw ConstraintViolated(-1, std::max(below, above), "variable '" + v.name + "' is outside its bounds");
    if (v.kind == VarKind::Binary) {
      const double frac = std::abs(val - std::round(val));
      if (frac > tol.integrality) throw ConstraintViolated(-1, frac, "binary variable '" + v.name + "' is fractional");
      x[static_cast<std::size_t>(j)] = std::round(val);
    }
  }
  for (int i = 0; i < model.constraint_count(); ++i) {
    const Constraint& c = model.constraints()[static_cast<std::size_t>(i)];
    const double viol = model.violation(c, x);
    if (viol > tol.feasibility)
      throw ConstraintViolated(i, viol, "constraint '" + c.name + "' violated by " + detail::num(viol));
  }
  SolveResult r;
  r.status = SolveStatus::Feasible;
  r.objective = model.objective_value(x);
  r.assignment = std::move(x);
  r.best_bound = -kInf;
  r.gap = kInf;
  return r;
}

}  // namespace moldsched::milp
