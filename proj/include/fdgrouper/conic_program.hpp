// Copyright 2026 The fdgrouper Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Solver-agnostic convex program: real variables, a linear objective to be
// maximized, linear rows, and second-order cones over affine expressions.

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdgrouper {

struct LinearTerm {
  int var = 0;
  double coef = 0.0;
};

struct AffineExpr {
  std::vector<LinearTerm> terms;
  double constant = 0.0;

  AffineExpr() = default;
  explicit AffineExpr(double c) : constant(c) {}
  static AffineExpr var(int j, double coef = 1.0) {
    AffineExpr e;
    e.terms.push_back({j, coef});
    return e;
  }

  AffineExpr& add(int j, double coef) {
    if (coef != 0.0) terms.push_back({j, coef});
    return *this;
  }
  AffineExpr& add(const AffineExpr& o, double scale = 1.0) {
    for (const auto& t : o.terms) add(t.var, scale * t.coef);
    constant += scale * o.constant;
    return *this;
  }
  AffineExpr& scale(double s) {
    for (auto& t : terms) t.coef *= s;
    constant *= s;
    return *this;
  }

  // Sums repeated variables and drops exact zeros.
  AffineExpr& compress() {
    std::map<int, double> acc;
    for (const auto& t : terms) acc[t.var] += t.coef;
    terms.clear();
    for (const auto& [j, c] : acc)
      if (c != 0.0) terms.push_back({j, c});
    return *this;
  }

  double eval(const Eigen::VectorXd& x) const {
    double v = constant;
    for (const auto& t : terms) v += t.coef * x(t.var);
    return v;
  }
};

struct EqRow {
  AffineExpr expr;  // expr == rhs
  double rhs = 0.0;
  std::string tag;
};

struct IneqRow {
  AffineExpr expr;  // lo <= expr <= hi, either side may be infinite
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  std::string tag;
};

// ||body|| <= head
struct SocConstraint {
  AffineExpr head;
  std::vector<AffineExpr> body;
  std::string tag;
};

// 2 u v >= ||body||^2, u >= 0, v >= 0
struct RotatedSocConstraint {
  AffineExpr u, v;
  std::vector<AffineExpr> body;
  std::string tag;
};

struct VarBlock {
  std::string name;
  int offset = 0;
  int size = 0;
  bool auxiliary = false;
  bool complex_embedded = false;  // stacked (Re, Im) pairs of complex scalars
};

struct Census {
  int real_vars = 0;
  int paper_vars = 0;  // complex scalars counted once, auxiliaries excluded
  int aux_vars = 0;
  int eq_rows = 0;
  int ineq_rows = 0;
  int soc_cones = 0;
  int rsoc_cones = 0;
  int cone_rows = 0;  // total SOC + rotated-SOC dimension
};

struct ConicProgram {
  int n_vars = 0;
  Eigen::VectorXd objective;  // maximize objective . x + objective_constant
  double objective_constant = 0.0;
  std::vector<EqRow> eq_constraints;
  std::vector<IneqRow> ineq_constraints;
  std::vector<SocConstraint> soc_constraints;
  std::vector<RotatedSocConstraint> rotated_soc_constraints;
  std::vector<VarBlock> var_map;

  int add_block(const std::string& name, int size, bool auxiliary = false, bool complex_embedded = false) {
    if (size < 0) throw std::invalid_argument("add_block: negative size for " + name);
    if (find_block(name)) throw std::invalid_argument("add_block: duplicate block " + name);
    const int offset = n_vars;
    var_map.push_back({name, offset, size, auxiliary, complex_embedded});
    n_vars += size;
    objective.conservativeResize(n_vars);
    objective.tail(size).setZero();
    return offset;
  }

  const VarBlock* find_block(const std::string& name) const {
    for (const auto& b : var_map)
      if (b.name == name) return &b;
    return nullptr;
  }
  const VarBlock& block(const std::string& name) const {
    const VarBlock* b = find_block(name);
    if (!b) throw std::out_of_range("ConicProgram: no block named " + name);
    return *b;
  }

  void add_eq(AffineExpr e, double rhs, std::string tag) {
    eq_constraints.push_back({std::move(e.compress()), rhs, std::move(tag)});
  }
  void add_ineq(AffineExpr e, double lo, double hi, std::string tag) {
    ineq_constraints.push_back({std::move(e.compress()), lo, hi, std::move(tag)});
  }
  void add_soc(AffineExpr head, std::vector<AffineExpr> body, std::string tag) {
    head.compress();
    for (auto& b : body) b.compress();
    soc_constraints.push_back({std::move(head), std::move(body), std::move(tag)});
  }
  void add_rsoc(AffineExpr u, AffineExpr v, std::vector<AffineExpr> body, std::string tag) {
    u.compress();
    v.compress();
    for (auto& b : body) b.compress();
    rotated_soc_constraints.push_back({std::move(u), std::move(v), std::move(body), std::move(tag)});
  }

  double objective_value(const Eigen::VectorXd& x) const { return objective.dot(x) + objective_constant; }

  // Structural checks: indices in range, no repeated variable inside one
  // expression, nonempty cones, cone heads disjoint from cone bodies, and
  // var_map tiling [0, n_vars) exactly once.
  void validate() const {
    if (objective.size() != n_vars) throw std::invalid_argument("ConicProgram: objective length mismatch");
    if (!objective.allFinite()) throw std::invalid_argument("ConicProgram: non-finite objective");
    auto check_expr = [&](const AffineExpr& e, const std::string& where) {
      if (!std::isfinite(e.constant)) throw std::invalid_argument("ConicProgram: non-finite constant in " + where);
      std::set<int> seen;
      for (const auto& t : e.terms) {
        if (t.var < 0 || t.var >= n_vars)
          throw std::invalid_argument("ConicProgram: variable index " + std::to_string(t.var) + " out of range in " +
                                      where);
        if (!seen.insert(t.var).second)
          throw std::invalid_argument("ConicProgram: duplicate index " + std::to_string(t.var) + " in " + where);
        if (!std::isfinite(t.coef)) throw std::invalid_argument("ConicProgram: non-finite coefficient in " + where);
      }
    };
    auto vars_of = [](const AffineExpr& e, std::set<int>& out) {
      for (const auto& t : e.terms) out.insert(t.var);
    };
    auto disjoint = [&](const std::set<int>& head, const std::vector<AffineExpr>& body, const std::string& where) {
      for (const auto& b : body)
        for (const auto& t : b.terms)
          if (head.count(t.var))
            throw std::invalid_argument("ConicProgram: cone head shares variable " + std::to_string(t.var) +
                                        " with its body in " + where);
    };

    for (const auto& r : eq_constraints) {
      check_expr(r.expr, "eq " + r.tag);
      if (!std::isfinite(r.rhs)) throw std::invalid_argument("ConicProgram: non-finite rhs in eq " + r.tag);
    }
    for (const auto& r : ineq_constraints) {
      check_expr(r.expr, "ineq " + r.tag);
      if (std::isnan(r.lo) || std::isnan(r.hi) || r.lo > r.hi)
        throw std::invalid_argument("ConicProgram: bad bounds in ineq " + r.tag);
    }
    for (const auto& c : soc_constraints) {
      if (c.body.empty()) throw std::invalid_argument("ConicProgram: empty cone " + c.tag);
      check_expr(c.head, "soc " + c.tag);
      for (const auto& b : c.body) check_expr(b, "soc " + c.tag);
      std::set<int> head;
      vars_of(c.head, head);
      disjoint(head, c.body, "soc " + c.tag);
    }
    for (const auto& c : rotated_soc_constraints) {
      if (c.body.empty()) throw std::invalid_argument("ConicProgram: empty cone " + c.tag);
      check_expr(c.u, "rsoc " + c.tag);
      check_expr(c.v, "rsoc " + c.tag);
      for (const auto& b : c.body) check_expr(b, "rsoc " + c.tag);
      std::set<int> head;
      vars_of(c.u, head);
      vars_of(c.v, head);
      disjoint(head, c.body, "rsoc " + c.tag);
    }

    std::vector<VarBlock> sorted = var_map;
    std::sort(sorted.begin(), sorted.end(), [](const VarBlock& a, const VarBlock& b) { return a.offset < b.offset; });
    int next = 0;
    std::set<std::string> names;
    for (const auto& b : sorted) {
      if (!names.insert(b.name).second) throw std::invalid_argument("ConicProgram: duplicate block " + b.name);
      if (b.offset != next) throw std::invalid_argument("ConicProgram: var_map gap or overlap at block " + b.name);
      if (b.complex_embedded && b.size % 2 != 0)
        throw std::invalid_argument("ConicProgram: complex block with odd size " + b.name);
      next += b.size;
    }
    if (next != n_vars) throw std::invalid_argument("ConicProgram: var_map does not cover all variables");
  }

  Census census() const {
    Census c;
    c.real_vars = n_vars;
    for (const auto& b : var_map) {
      if (b.auxiliary)
        c.aux_vars += b.size;
      else
        c.paper_vars += b.complex_embedded ? b.size / 2 : b.size;
    }
    c.eq_rows = static_cast<int>(eq_constraints.size());
    c.ineq_rows = static_cast<int>(ineq_constraints.size());
    c.soc_cones = static_cast<int>(soc_constraints.size());
    c.rsoc_cones = static_cast<int>(rotated_soc_constraints.size());
    for (const auto& s : soc_constraints) c.cone_rows += 1 + static_cast<int>(s.body.size());
    for (const auto& s : rotated_soc_constraints) c.cone_rows += 2 + static_cast<int>(s.body.size());
    return c;
  }
};

// Text dump. Layout, one record per line:
//   fdgrouper-conic 1
//   vars N eq E ineq I soc S rsoc R blocks B affine A
//   objective <constant> <nnz>            followed by nnz lines "j coef"
//   affine <id> <constant> <nnz>          followed by nnz lines "j coef"  (A records)
//   eq <affine> <rhs> <tag>
//   ineq <affine> <lo> <hi> <tag>
//   soc <tag> <head> <m> <body affine ids...>
//   rsoc <tag> <u> <v> <m> <body affine ids...>
//   block <name> <offset> <size> <aux 0/1> <complex 0/1>
// Tags contain no whitespace. Infinite bounds are written inf / -inf.
namespace detail {

inline std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::runtime_error("read_program: bad number '" + s + "'");
  return v;
}

inline std::string safe_tag(const std::string& tag) {
  std::string out = tag.empty() ? "-" : tag;
  for (char& ch : out)
    if (std::isspace(static_cast<unsigned char>(ch))) ch = '_';
  return out;
}

}  // namespace detail

inline void write_program(std::ostream& os, const ConicProgram& p) {
  std::vector<const AffineExpr*> aff;
  auto id = [&](const AffineExpr& e) {
    aff.push_back(&e);
    return aff.size() - 1;
  };
  std::ostringstream rows;
  for (const auto& r : p.eq_constraints)
    rows << "eq " << id(r.expr) << ' ' << detail::fmt_double(r.rhs) << ' ' << detail::safe_tag(r.tag) << '\n';
  for (const auto& r : p.ineq_constraints)
    rows << "ineq " << id(r.expr) << ' ' << detail::fmt_double(r.lo) << ' ' << detail::fmt_double(r.hi) << ' '
         << detail::safe_tag(r.tag) << '\n';
  for (const auto& c : p.soc_constraints) {
    rows << "soc " << detail::safe_tag(c.tag) << ' ' << id(c.head) << ' ' << c.body.size();
    for (const auto& b : c.body) rows << ' ' << id(b);
    rows << '\n';
  }
  for (const auto& c : p.rotated_soc_constraints) {
    const auto u = id(c.u);
    const auto v = id(c.v);
    rows << "rsoc " << detail::safe_tag(c.tag) << ' ' << u << ' ' << v << ' ' << c.body.size();
    for (const auto& b : c.body) rows << ' ' << id(b);
    rows << '\n';
  }

  os << "fdgrouper-conic 1\n";
  os << "vars " << p.n_vars << " eq " << p.eq_constraints.size() << " ineq " << p.ineq_constraints.size() << " soc "
     << p.soc_constraints.size() << " rsoc " << p.rotated_soc_constraints.size() << " blocks " << p.var_map.size()
     << " affine " << aff.size() << '\n';
  int nnz = 0;
  for (int j = 0; j < p.n_vars; ++j) nnz += p.objective(j) != 0.0;
  os << "objective " << detail::fmt_double(p.objective_constant) << ' ' << nnz << '\n';
  for (int j = 0; j < p.n_vars; ++j)
    if (p.objective(j) != 0.0) os << j << ' ' << detail::fmt_double(p.objective(j)) << '\n';
  for (size_t i = 0; i < aff.size(); ++i) {
    os << "affine " << i << ' ' << detail::fmt_double(aff[i]->constant) << ' ' << aff[i]->terms.size() << '\n';
    for (const auto& t : aff[i]->terms) os << t.var << ' ' << detail::fmt_double(t.coef) << '\n';
  }
  os << rows.str();
  for (const auto& b : p.var_map)
    os << "block " << b.name << ' ' << b.offset << ' ' << b.size << ' ' << b.auxiliary << ' ' << b.complex_embedded
       << '\n';
}

inline ConicProgram read_program(std::istream& is) {
  auto fail = [](const std::string& what) { throw std::runtime_error("read_program: " + what); };
  std::string word;
  int version = 0;
  if (!(is >> word >> version) || word != "fdgrouper-conic" || version != 1) fail("bad header");

  std::map<std::string, long> counts;
  for (int i = 0; i < 7; ++i) {
    long n = 0;
    if (!(is >> word >> n)) fail("bad count line");
    counts[word] = n;
  }
  ConicProgram p;
  p.n_vars = static_cast<int>(counts["vars"]);
  p.objective = Eigen::VectorXd::Zero(p.n_vars);

  std::string tok;
  int nnz = 0;
  if (!(is >> word >> tok >> nnz) || word != "objective") fail("missing objective");
  p.objective_constant = detail::parse_double(tok);
  for (int i = 0; i < nnz; ++i) {
    int j = 0;
    if (!(is >> j >> tok)) fail("truncated objective");
    if (j < 0 || j >= p.n_vars) fail("objective index out of range");
    p.objective(j) = detail::parse_double(tok);
  }

  std::vector<AffineExpr> aff(static_cast<size_t>(counts["affine"]));
  for (size_t i = 0; i < aff.size(); ++i) {
    size_t id = 0;
    if (!(is >> word >> id >> tok >> nnz) || word != "affine" || id != i) fail("bad affine record");
    aff[i].constant = detail::parse_double(tok);
    for (int k = 0; k < nnz; ++k) {
      int j = 0;
      std::string c;
      if (!(is >> j >> c)) fail("truncated affine record");
      aff[i].terms.push_back({j, detail::parse_double(c)});
    }
  }
  auto get = [&](size_t id) -> const AffineExpr& {
    if (id >= aff.size()) fail("affine id out of range");
    return aff[id];
  };
  auto tag_of = [](const std::string& t) { return t == "-" ? std::string() : t; };
  auto read_body = [&](std::vector<AffineExpr>& body) {
    size_t m = 0;
    if (!(is >> m)) fail("truncated cone");
    for (size_t k = 0; k < m; ++k) {
      size_t id = 0;
      if (!(is >> id)) fail("truncated cone body");
      body.push_back(get(id));
    }
  };

  for (long i = 0; i < counts["eq"]; ++i) {
    size_t id = 0;
    std::string rhs, tag;
    if (!(is >> word >> id >> rhs >> tag) || word != "eq") fail("bad eq record");
    p.eq_constraints.push_back({get(id), detail::parse_double(rhs), tag_of(tag)});
  }
  for (long i = 0; i < counts["ineq"]; ++i) {
    size_t id = 0;
    std::string lo, hi, tag;
    if (!(is >> word >> id >> lo >> hi >> tag) || word != "ineq") fail("bad ineq record");
    p.ineq_constraints.push_back({get(id), detail::parse_double(lo), detail::parse_double(hi), tag_of(tag)});
  }
  for (long i = 0; i < counts["soc"]; ++i) {
    SocConstraint c;
    size_t head = 0;
    std::string tag;
    if (!(is >> word >> tag >> head) || word != "soc") fail("bad soc record");
    c.tag = tag_of(tag);
    c.head = get(head);
    read_body(c.body);
    p.soc_constraints.push_back(std::move(c));
  }
  for (long i = 0; i < counts["rsoc"]; ++i) {
    RotatedSocConstraint c;
    size_t u = 0, v = 0;
    std::string tag;
    if (!(is >> word >> tag >> u >> v) || word != "rsoc") fail("bad rsoc record");
    c.tag = tag_of(tag);
    c.u = get(u);
    c.v = get(v);
    read_body(c.body);
    p.rotated_soc_constraints.push_back(std::move(c));
  }
  for (long i = 0; i < counts["blocks"]; ++i) {
    VarBlock b;
    if (!(is >> word >> b.name >> b.offset >> b.size >> b.auxiliary >> b.complex_embedded) || word != "block")
      fail("bad block record");
    p.var_map.push_back(b);
  }
  return p;
}

}  // namespace fdgrouper
