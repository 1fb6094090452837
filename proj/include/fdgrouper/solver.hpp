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

// Reference primal-dual interior-point method for LP + SOC programs.
//
// Standard form: minimize c'x  s.t.  A x = b,  G x + s = h,  s in K, where K
// is a product of a nonnegative orthant and second-order cones. The iteration
// is a homogeneous self-dual embedding with Nesterov-Todd scaling and a
// Mehrotra predictor-corrector, along the lines of ECOS and CVXOPT's conelp.
// The KKT system is reduced to the dense normal matrix G'W^-2 G, which is fine
// for the few-hundred-variable programs the path-following loops produce.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdgrouper/conic_program.hpp"

namespace fdgrouper {

enum class SolverStatus { Optimal, AlmostOptimal, Infeasible, Unbounded, IterLimit, NumericalFailure };

inline const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::Optimal: return "Optimal";
    case SolverStatus::AlmostOptimal: return "AlmostOptimal";
    case SolverStatus::Infeasible: return "Infeasible";
    case SolverStatus::Unbounded: return "Unbounded";
    case SolverStatus::IterLimit: return "IterLimit";
    case SolverStatus::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

inline bool is_usable(SolverStatus s) { return s == SolverStatus::Optimal || s == SolverStatus::AlmostOptimal; }

struct SolverSettings {
  double abs_tol = 1e-8;
  double rel_tol = 1e-8;
  int max_ipm_iters = 200;
  double static_regularization = 1e-9;
  // Accepted as AlmostOptimal when the iteration stalls.
  double inaccurate_feas_tol = 1e-4;
  double inaccurate_gap_tol = 5e-5;
  std::optional<Eigen::VectorXd> warm_start;  // primal guess
};

struct KktResiduals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;  // s'z / (1 + |obj|)
};

struct SolverResult {
  SolverStatus status = SolverStatus::NumericalFailure;
  Eigen::VectorXd x;
  double obj = std::numeric_limits<double>::quiet_NaN();       // maximization sense
  double dual_obj = std::numeric_limits<double>::quiet_NaN();  // upper bound on obj, up to residuals
  KktResiduals kkt;
  double certificate = std::numeric_limits<double>::quiet_NaN();  // for Infeasible / Unbounded
  int iters = 0;
};

using SolveFn = std::function<SolverResult(const ConicProgram&, const SolverSettings&)>;

namespace detail {

struct SparseRow {
  std::vector<int> idx;
  std::vector<double> val;

  double dot(const Eigen::VectorXd& x) const {
    double acc = 0.0;
    for (size_t k = 0; k < idx.size(); ++k) acc += val[k] * x(idx[k]);
    return acc;
  }
  void axpy_t(double a, Eigen::VectorXd& out) const {
    for (size_t k = 0; k < idx.size(); ++k) out(idx[k]) += a * val[k];
  }
};

inline SparseRow to_row(const AffineExpr& e, double scale) {
  SparseRow r;
  for (const auto& t : e.terms) {
    if (t.coef == 0.0) continue;
    r.idx.push_back(t.var);
    r.val.push_back(scale * t.coef);
  }
  return r;
}

struct SocBlock {
  int offset = 0;
  int dim = 0;
  std::vector<int> support;
  Eigen::MatrixXd Gloc;  // dim x |support|
  // W = eta (2 v v' - J)
  double eta = 1.0;
  Eigen::VectorXd v;
};

struct StandardForm {
  int n = 0;
  Eigen::VectorXd c;
  double obj_constant = 0.0;  // max-sense objective = -c'x + obj_constant
  std::vector<SparseRow> A;
  Eigen::VectorXd b;
  std::vector<SparseRow> G;  // LP rows first, then SOC rows block by block
  Eigen::VectorXd h;
  int m_lp = 0;
  std::vector<SocBlock> soc;
  bool trivially_infeasible = false;

  int m() const { return static_cast<int>(G.size()); }
  int degree() const { return m_lp + static_cast<int>(soc.size()); }
};

inline StandardForm to_standard_form(const ConicProgram& prog) {
  StandardForm sf;
  sf.n = prog.n_vars;
  sf.c = -prog.objective;
  sf.obj_constant = prog.objective_constant;
  constexpr double kEmptyTol = 1e-12;

  std::vector<double> bvals, hvals;
  auto push_eq = [&](const AffineExpr& e, double rhs) {
    SparseRow r = to_row(e, 1.0);
    const double b = rhs - e.constant;
    if (r.idx.empty()) {
      if (std::abs(b) > kEmptyTol) sf.trivially_infeasible = true;
      return;
    }
    sf.A.push_back(std::move(r));
    bvals.push_back(b);
  };
  auto push_lp = [&](SparseRow r, double h) {
    if (r.idx.empty()) {
      if (h < -kEmptyTol) sf.trivially_infeasible = true;
      return;
    }
    sf.G.push_back(std::move(r));
    hvals.push_back(h);
  };

  for (const auto& r : prog.eq_constraints) push_eq(r.expr, r.rhs);
  for (const auto& r : prog.ineq_constraints) {
    if (r.lo == r.hi) {
      push_eq(r.expr, r.lo);
      continue;
    }
    if (std::isfinite(r.lo)) push_lp(to_row(r.expr, -1.0), r.expr.constant - r.lo);
    if (std::isfinite(r.hi)) push_lp(to_row(r.expr, 1.0), r.hi - r.expr.constant);
  }
  sf.m_lp = static_cast<int>(sf.G.size());

  // Cone member e becomes the row (-a, e.constant) so that s = h - G x = e(x).
  auto push_cone = [&](const std::vector<AffineExpr>& members) {
    SocBlock blk;
    blk.offset = static_cast<int>(sf.G.size());
    blk.dim = static_cast<int>(members.size());
    std::vector<int> support;
    for (const auto& e : members) {
      sf.G.push_back(to_row(e, -1.0));
      hvals.push_back(e.constant);
      for (const auto& t : e.terms) support.push_back(t.var);
    }
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
    blk.support = support;
    blk.Gloc = Eigen::MatrixXd::Zero(blk.dim, static_cast<int>(support.size()));
    for (int i = 0; i < blk.dim; ++i) {
      const auto& row = sf.G[blk.offset + i];
      for (size_t k = 0; k < row.idx.size(); ++k) {
        const int col = static_cast<int>(std::lower_bound(support.begin(), support.end(), row.idx[k]) - support.begin());
        blk.Gloc(i, col) += row.val[k];
      }
    }
    blk.v = Eigen::VectorXd::Zero(blk.dim);
    blk.v(0) = 1.0;
    sf.soc.push_back(std::move(blk));
  };

  for (const auto& c : prog.soc_constraints) {
    std::vector<AffineExpr> members;
    members.push_back(c.head);
    members.insert(members.end(), c.body.begin(), c.body.end());
    push_cone(members);
  }
  const double r2 = std::sqrt(2.0);
  for (const auto& c : prog.rotated_soc_constraints) {
    std::vector<AffineExpr> members;
    AffineExpr sum = c.u, diff = c.u;
    sum.add(c.v).compress();
    diff.add(c.v, -1.0).compress();
    members.push_back(sum);
    members.push_back(diff);
    for (const auto& b : c.body) {
      AffineExpr e = b;
      members.push_back(e.scale(r2));
    }
    push_cone(members);
  }

  sf.b = Eigen::Map<Eigen::VectorXd>(bvals.data(), static_cast<Eigen::Index>(bvals.size()));
  sf.h = Eigen::Map<Eigen::VectorXd>(hvals.data(), static_cast<Eigen::Index>(hvals.size()));
  return sf;
}

// Jordan algebra helpers on one SOC segment.
inline double jdot(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v) {
  return u(0) * v(0) - u.tail(u.size() - 1).dot(v.tail(v.size() - 1));
}

inline double jnorm(const Eigen::Ref<const Eigen::VectorXd>& u) {
  const double t = u.tail(u.size() - 1).norm();
  const double a = u(0) - t;
  const double b = u(0) + t;
  return (a > 0.0 && b > 0.0) ? std::sqrt(a) * std::sqrt(b) : 0.0;
}

// Largest alpha with x + alpha d in the cone, x interior.
inline double soc_max_step(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& d) {
  const double xn = jnorm(x);
  if (!(xn > 0.0)) return 0.0;
  const int m = static_cast<int>(x.size());
  const Eigen::VectorXd xb = x / xn;
  const double xb_d = jdot(xb, d);
  const double coef = (xb_d + d(0)) / (xb(0) + 1.0);
  const Eigen::VectorXd rho1 = (d.tail(m - 1) - coef * xb.tail(m - 1)) / xn;
  const double sigma = rho1.norm() - xb_d / xn;
  return sigma > 0.0 ? 1.0 / sigma : std::numeric_limits<double>::infinity();
}

class Ipm {
 public:
  Ipm(const StandardForm& sf, const SolverSettings& st) : sf_(sf), st_(st) {
    n_ = sf.n;
    p_ = static_cast<int>(sf.A.size());
    m_ = sf.m();
    Adense_ = Eigen::MatrixXd::Zero(p_, n_);
    for (int i = 0; i < p_; ++i)
      for (size_t k = 0; k < sf.A[i].idx.size(); ++k) Adense_(i, sf.A[i].idx[k]) += sf.A[i].val[k];
    lp_w_ = Eigen::VectorXd::Ones(sf.m_lp);
    soc_ = sf.soc;
  }

  SolverResult run();

 private:
  // --- linear operators -----------------------------------------------------
  Eigen::VectorXd G_mul(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(m_);
    for (int i = 0; i < m_; ++i) out(i) = sf_.G[i].dot(x);
    return out;
  }
  Eigen::VectorXd Gt_mul(const Eigen::VectorXd& z) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < m_; ++i)
      if (z(i) != 0.0) sf_.G[i].axpy_t(z(i), out);
    return out;
  }

  // W, W^-1 act blockwise. lp_w_ holds sqrt(s/z).
  Eigen::VectorXd W_mul(const Eigen::VectorXd& u) const {
    Eigen::VectorXd out(m_);
    out.head(sf_.m_lp) = lp_w_.cwiseProduct(u.head(sf_.m_lp));
    for (const auto& b : soc_) {
      const auto ub = u.segment(b.offset, b.dim);
      Eigen::VectorXd ju = -ub;
      ju(0) = ub(0);
      out.segment(b.offset, b.dim) = b.eta * (2.0 * b.v.dot(ub) * b.v - ju);
    }
    return out;
  }
  Eigen::VectorXd Winv_mul(const Eigen::VectorXd& u) const {
    Eigen::VectorXd out(m_);
    out.head(sf_.m_lp) = u.head(sf_.m_lp).cwiseQuotient(lp_w_);
    for (const auto& b : soc_) {
      const auto ub = u.segment(b.offset, b.dim);
      Eigen::VectorXd ju = -ub;
      ju(0) = ub(0);
      Eigen::VectorXd jv = -b.v;
      jv(0) = b.v(0);
      out.segment(b.offset, b.dim) = (2.0 * jv.dot(ub) * jv - ju) / b.eta;
    }
    return out;
  }

  // Jordan product and its inverse, cone by cone.
  Eigen::VectorXd jprod(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(m_);
    out.head(sf_.m_lp) = u.head(sf_.m_lp).cwiseProduct(v.head(sf_.m_lp));
    for (const auto& b : soc_) {
      const auto ub = u.segment(b.offset, b.dim);
      const auto vb = v.segment(b.offset, b.dim);
      out(b.offset) = ub.dot(vb);
      out.segment(b.offset + 1, b.dim - 1) = ub(0) * vb.tail(b.dim - 1) + vb(0) * ub.tail(b.dim - 1);
    }
    return out;
  }
  // Solves lam o u = d.
  Eigen::VectorXd jdiv(const Eigen::VectorXd& lam, const Eigen::VectorXd& d) const {
    Eigen::VectorXd out(m_);
    out.head(sf_.m_lp) = d.head(sf_.m_lp).cwiseQuotient(lam.head(sf_.m_lp));
    for (const auto& b : soc_) {
      const auto l = lam.segment(b.offset, b.dim);
      const auto db = d.segment(b.offset, b.dim);
      const double l0 = l(0);
      const auto l1 = l.tail(b.dim - 1);
      const double den = (l0 - l1.norm()) * (l0 + l1.norm());
      const double u0 = (l0 * db(0) - l1.dot(db.tail(b.dim - 1))) / den;
      out(b.offset) = u0;
      out.segment(b.offset + 1, b.dim - 1) = (db.tail(b.dim - 1) - u0 * l1) / l0;
    }
    return out;
  }
  Eigen::VectorXd identity_e() const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m_);
    e.head(sf_.m_lp).setOnes();
    for (const auto& b : soc_) e(b.offset) = 1.0;
    return e;
  }

  // Most negative alpha such that u + alpha e would be on the cone boundary:
  // returns max over cones of (lp: -u_i, soc: ||u1|| - u0).
  double interior_deficit(const Eigen::VectorXd& u) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < sf_.m_lp; ++i) worst = std::max(worst, -u(i));
    for (const auto& b : soc_) worst = std::max(worst, u.segment(b.offset + 1, b.dim - 1).norm() - u(b.offset));
    return worst;
  }

  void set_identity_scaling() {
    lp_w_.setOnes();
    for (auto& b : soc_) {
      b.eta = 1.0;
      b.v.setZero();
      b.v(0) = 1.0;
    }
  }

  bool update_scaling(const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
    for (int i = 0; i < sf_.m_lp; ++i) {
      if (!(s(i) > 0.0) || !(z(i) > 0.0)) return false;
      lp_w_(i) = std::sqrt(s(i) / z(i));
    }
    for (auto& b : soc_) {
      const auto sb = s.segment(b.offset, b.dim);
      const auto zb = z.segment(b.offset, b.dim);
      const double sn = jnorm(sb), zn = jnorm(zb);
      if (!(sn > 0.0) || !(zn > 0.0)) return false;
      const Eigen::VectorXd sbar = sb / sn;
      const Eigen::VectorXd zbar = zb / zn;
      const double gamma = std::sqrt(std::max(0.0, (1.0 + sbar.dot(zbar)) / 2.0));
      if (!(gamma > 0.0)) return false;
      Eigen::VectorXd wbar = sbar;
      wbar(0) += zbar(0);
      wbar.tail(b.dim - 1) -= zbar.tail(b.dim - 1);
      wbar /= 2.0 * gamma;
      b.v = wbar;
      b.v(0) += 1.0;
      b.v /= std::sqrt(2.0 * (wbar(0) + 1.0));
      b.eta = std::sqrt(sn / zn);
    }
    return true;
  }

  // Factor H = G'W^-2G + delta I and the Schur complement of A.
  bool factor() {
    double delta = st_.static_regularization;
    for (int attempt = 0; attempt < 6; ++attempt, delta *= 100.0) {
      H_.setZero(n_, n_);
      for (int i = 0; i < sf_.m_lp; ++i) {
        const auto& r = sf_.G[i];
        const double wt = 1.0 / (lp_w_(i) * lp_w_(i));
        for (size_t a = 0; a < r.idx.size(); ++a)
          for (size_t c = 0; c < r.idx.size(); ++c) H_(r.idx[a], r.idx[c]) += wt * r.val[a] * r.val[c];
      }
      for (const auto& b : soc_) {
        // Accumulate (W^-1 G)'(W^-1 G); forming W^-2 explicitly loses the
        // small eigenvalues to cancellation near the boundary.
        Eigen::VectorXd q = -b.v;
        q(0) = b.v(0);
        Eigen::MatrixXd M = b.Gloc;  // -J G
        M.row(0) = -b.Gloc.row(0);
        M.noalias() += 2.0 * q * (q.transpose() * b.Gloc);
        M /= b.eta;
        const Eigen::MatrixXd MtM = M.transpose() * M;
        const int ns = static_cast<int>(b.support.size());
        for (int jc = 0; jc < ns; ++jc)
          for (int ic = 0; ic < ns; ++ic) H_(b.support[ic], b.support[jc]) += MtM(ic, jc);
      }
      H_.diagonal().array() += delta;
      llt_.compute(H_);
      if (llt_.info() != Eigen::Success) continue;
      if (p_ > 0) {
        HinvAt_ = llt_.solve(Adense_.transpose());
        Eigen::MatrixXd S = Adense_ * HinvAt_;
        S.diagonal().array() += delta;
        schur_.compute(S);
        if (schur_.info() != Eigen::Success) continue;
      }
      delta_ = delta;
      return true;
    }
    return false;
  }

  Eigen::VectorXd Wsq_inv_mul(const Eigen::VectorXd& u) const { return Winv_mul(Winv_mul(u)); }
  Eigen::VectorXd Wsq_mul(const Eigen::VectorXd& u) const { return W_mul(W_mul(u)); }

  struct Dir {
    Eigen::VectorXd x, y, z;
  };

  Dir solve_reg(const Eigen::VectorXd& rx, const Eigen::VectorXd& ry, const Eigen::VectorXd& rz) const {
    Dir d;
    const Eigen::VectorXd rt = rx + Gt_mul(Wsq_inv_mul(rz));
    if (p_ > 0) {
      d.y = schur_.solve(HinvAt_.transpose() * rt - ry);
      d.x = llt_.solve(rt - Adense_.transpose() * d.y);
    } else {
      d.y = Eigen::VectorXd::Zero(0);
      d.x = llt_.solve(rt);
    }
    d.z = Wsq_inv_mul(G_mul(d.x) - rz);
    return d;
  }

  // A'y + G'z = rx, A x = ry, G x - W^2 z = rz, with iterative refinement
  // against the unregularized operator.
  Dir solve_kkt(const Eigen::VectorXd& rx, const Eigen::VectorXd& ry, const Eigen::VectorXd& rz) const {
    Dir d = solve_reg(rx, ry, rz);
    const double rhs_norm = std::sqrt(rx.squaredNorm() + ry.squaredNorm() + rz.squaredNorm());
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 4; ++it) {
      const Eigen::VectorXd ex = rx - (Adense_.transpose() * d.y + Gt_mul(d.z));
      const Eigen::VectorXd ey = ry - Adense_ * d.x;
      const Eigen::VectorXd ez = rz - (G_mul(d.x) - Wsq_mul(d.z));
      const double err = std::sqrt(ex.squaredNorm() + ey.squaredNorm() + ez.squaredNorm());
      if (!(err > 1e-14 * (1.0 + rhs_norm)) || !(err < 0.5 * prev)) break;
      prev = err;
      const Dir c = solve_reg(ex, ey, ez);
      d.x += c.x;
      d.y += c.y;
      d.z += c.z;
    }
    return d;
  }

  const StandardForm& sf_;
  const SolverSettings& st_;
  int n_ = 0, p_ = 0, m_ = 0;
  Eigen::MatrixXd Adense_;
  Eigen::VectorXd lp_w_;
  std::vector<SocBlock> soc_;
  Eigen::MatrixXd H_, HinvAt_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::LLT<Eigen::MatrixXd> schur_;
  double delta_ = 0.0;
};

inline SolverResult Ipm::run() {
  SolverResult res;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const Eigen::VectorXd e = identity_e();
  const Eigen::VectorXd& c = sf_.c;
  const Eigen::VectorXd& b = sf_.b;
  const Eigen::VectorXd& h = sf_.h;
  const double D = static_cast<double>(sf_.degree());

  // Initial point from two least-squares solves with identity scaling.
  set_identity_scaling();
  if (!factor()) {
    res.status = SolverStatus::NumericalFailure;
    return res;
  }
  Eigen::VectorXd x, y, z, s;
  {
    const Dir primal = solve_kkt(Eigen::VectorXd::Zero(n_), b, h);
    x = primal.x;
    if (st_.warm_start && st_.warm_start->size() == n_) x = *st_.warm_start;
    s = h - G_mul(x);
    const Dir dual = solve_kkt(-c, Eigen::VectorXd::Zero(p_), Eigen::VectorXd::Zero(m_));
    y = dual.y;
    z = dual.z;
    const double as = interior_deficit(s);
    if (as >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + as) * e;
    const double az = interior_deficit(z);
    if (az >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + az) * e;
  }
  double tau = 1.0, kappa = 1.0;

  const double bh_norm = std::max(1.0, std::sqrt(b.squaredNorm() + h.squaredNorm()));
  const double c_norm = std::max(1.0, c.norm());

  struct Stats {
    double pres, dres, gap, pcost, dcost, gap_rel;
  };
  auto stats = [&]() {
    Stats o;
    const Eigen::VectorXd xs = x / tau;
    o.pres = std::max((Adense_ * xs - b).norm(), (G_mul(xs) + s / tau - h).norm()) / bh_norm;
    o.dres = (Adense_.transpose() * (y / tau) + Gt_mul(z / tau) + c).norm() / c_norm;
    o.pcost = c.dot(xs);
    o.dcost = -(b.dot(y) + h.dot(z)) / tau;
    o.gap = s.dot(z) / (tau * tau);
    o.gap_rel = o.gap / (1.0 + std::abs(o.pcost));
    return o;
  };
  auto finish = [&](SolverStatus status, const Stats& o, int iters) {
    res.status = status;
    res.iters = iters;
    res.x = x / tau;
    res.obj = -o.pcost + sf_.obj_constant;
    res.dual_obj = -o.dcost + sf_.obj_constant;
    res.kkt = {o.pres, o.dres, o.gap_rel};
    return res;
  };
  auto certificates = [&](double tol, SolverResult& out) {
    const double hz_by = h.dot(z) + b.dot(y);
    if (hz_by < 0.0) {
      const double r = (Adense_.transpose() * y + Gt_mul(z)).norm() / (-hz_by);
      if (r <= tol) {
        out.status = SolverStatus::Infeasible;
        out.certificate = r;
        return true;
      }
    }
    const double cx = c.dot(x);
    if (cx < 0.0) {
      const double r = std::max((Adense_ * x).norm(), (G_mul(x) + s).norm()) / (-cx);
      if (r <= tol) {
        out.status = SolverStatus::Unbounded;
        out.certificate = r;
        return true;
      }
    }
    return false;
  };
  auto inaccurate_ok = [&](const Stats& o) {
    return o.pres <= st_.inaccurate_feas_tol && o.dres <= st_.inaccurate_feas_tol &&
           o.gap_rel <= st_.inaccurate_gap_tol;
  };
  // Best iterate seen so far, by the largest of the three residuals.
  struct Snapshot {
    Eigen::VectorXd x, y, z, s;
    double tau = 1.0, kappa = 1.0, merit = std::numeric_limits<double>::infinity();
    Stats o{};
  } best;
  auto merit = [](const Stats& o) { return std::max({o.pres, o.dres, o.gap_rel}); };
  auto stalled = [&](Stats o, int iters) {
    if (!std::isfinite(merit(o)) || best.merit < merit(o)) {
      if (best.x.size() == x.size()) {
        x = best.x, y = best.y, z = best.z, s = best.s, tau = best.tau, kappa = best.kappa;
        o = best.o;
      }
    }
    if (inaccurate_ok(o)) return finish(SolverStatus::AlmostOptimal, o, iters);
    SolverResult tmp = finish(SolverStatus::NumericalFailure, o, iters);
    SolverResult cert;
    if (certificates(std::sqrt(st_.abs_tol), cert)) {
      tmp.status = cert.status;
      tmp.certificate = cert.certificate;
      tmp.obj = nan;
    }
    return tmp;
  };

  Stats o{};
  for (int iter = 0;; ++iter) {
    o = stats();
    if (!std::isfinite(o.pres) || !std::isfinite(o.dres) || !std::isfinite(o.gap)) return stalled(o, iter);
    if (merit(o) < best.merit) best = {x, y, z, s, tau, kappa, merit(o), o};
    if (o.pres <= st_.abs_tol && o.dres <= st_.abs_tol && o.gap_rel <= st_.rel_tol)
      return finish(SolverStatus::Optimal, o, iter);
    {
      SolverResult cert;
      if (certificates(st_.abs_tol, cert)) {
        SolverResult out = finish(cert.status, o, iter);
        out.certificate = cert.certificate;
        out.obj = nan;
        return out;
      }
    }
    if (iter >= st_.max_ipm_iters) {
      if (inaccurate_ok(o)) return finish(SolverStatus::AlmostOptimal, o, iter);
      return finish(SolverStatus::IterLimit, o, iter);
    }

    const Eigen::VectorXd rx = -(Adense_.transpose() * y) - Gt_mul(z) - c * tau;
    const Eigen::VectorXd ry = Adense_ * x - b * tau;
    const Eigen::VectorXd rz = s + G_mul(x) - h * tau;
    const double rt = kappa + c.dot(x) + b.dot(y) + h.dot(z);
    const double mu = (s.dot(z) + tau * kappa) / (D + 1.0);

    if (!update_scaling(s, z) || !factor()) return stalled(o, iter);
    const Eigen::VectorXd lam = W_mul(z);

    const Dir d1 = solve_kkt(-c, b, h);
    const double den_base = c.dot(d1.x) + b.dot(d1.y) + h.dot(d1.z);

    struct Step {
      Dir d;
      Eigen::VectorXd ds;
      double dtau, dkappa;
    };
    auto direction = [&](double sigma, const Eigen::VectorXd& dsc, double dk) {
      const Eigen::VectorXd u = jdiv(lam, dsc);
      const Dir d2 = solve_kkt((1.0 - sigma) * rx, -(1.0 - sigma) * ry, -(1.0 - sigma) * rz - W_mul(u));
      Step st;
      st.dtau = (-(1.0 - sigma) * rt - dk / tau - c.dot(d2.x) - b.dot(d2.y) - h.dot(d2.z)) / (den_base - kappa / tau);
      st.d.x = d2.x + st.dtau * d1.x;
      st.d.y = d2.y + st.dtau * d1.y;
      st.d.z = d2.z + st.dtau * d1.z;
      st.ds = W_mul(u - W_mul(st.d.z));
      st.dkappa = (dk - kappa * st.dtau) / tau;
      return st;
    };
    auto max_step = [&](const Step& st) {
      double a = std::numeric_limits<double>::infinity();
      const Eigen::VectorXd dsl = Winv_mul(st.ds);
      const Eigen::VectorXd dzl = W_mul(st.d.z);
      for (int i = 0; i < sf_.m_lp; ++i) {
        if (dsl(i) < 0.0) a = std::min(a, -lam(i) / dsl(i));
        if (dzl(i) < 0.0) a = std::min(a, -lam(i) / dzl(i));
      }
      for (const auto& blk : soc_) {
        a = std::min(a, soc_max_step(lam.segment(blk.offset, blk.dim), dsl.segment(blk.offset, blk.dim)));
        a = std::min(a, soc_max_step(lam.segment(blk.offset, blk.dim), dzl.segment(blk.offset, blk.dim)));
      }
      if (st.dtau < 0.0) a = std::min(a, -tau / st.dtau);
      if (st.dkappa < 0.0) a = std::min(a, -kappa / st.dkappa);
      return a;
    };

    // Predictor.
    const Eigen::VectorXd ll = jprod(lam, lam);
    const Step aff = direction(0.0, -ll, -kappa * tau);
    const double a_aff = std::min(1.0, max_step(aff));
    const double sigma = std::clamp(std::pow(1.0 - a_aff, 3), 0.0, 1.0);

    // Corrector.
    const Eigen::VectorXd corr = jprod(Winv_mul(aff.ds), W_mul(aff.d.z));
    const Step cmb = direction(sigma, -ll - corr + sigma * mu * e, -kappa * tau - aff.dkappa * aff.dtau + sigma * mu);
    const double alpha = std::min(1.0, 0.99 * max_step(cmb));
    if (!(alpha > 1e-10) || !cmb.d.x.allFinite() || !std::isfinite(cmb.dtau)) return stalled(o, iter);

    const Eigen::VectorXd x_old = x, y_old = y, z_old = z, s_old = s;
    const double tau_old = tau, kappa_old = kappa;
    x += alpha * cmb.d.x;
    y += alpha * cmb.d.y;
    z += alpha * cmb.d.z;
    s += alpha * cmb.ds;
    tau += alpha * cmb.dtau;
    kappa += alpha * cmb.dkappa;
    if (!x.allFinite() || !z.allFinite() || !s.allFinite() || !(tau > 0.0) || !(kappa > 0.0)) {
      x = x_old, y = y_old, z = z_old, s = s_old, tau = tau_old, kappa = kappa_old;
      return stalled(o, iter + 1);
    }
  }
}

}  // namespace detail

// Reference backend.
inline SolverResult solve(const ConicProgram& program, const SolverSettings& settings = {}) {
  if (!(settings.abs_tol > 0.0) || !(settings.rel_tol > 0.0) || settings.max_ipm_iters < 1)
    throw std::invalid_argument("solve: tolerances must be positive");
  program.validate();
  const detail::StandardForm sf = detail::to_standard_form(program);
  if (sf.trivially_infeasible) {
    SolverResult r;
    r.status = SolverStatus::Infeasible;
    r.x = Eigen::VectorXd::Zero(program.n_vars);
    return r;
  }
  if (sf.m() == 0 && sf.A.empty()) {
    // Nothing constrains x.
    SolverResult r;
    r.x = Eigen::VectorXd::Zero(program.n_vars);
    r.status = program.objective.isZero() ? SolverStatus::Optimal : SolverStatus::Unbounded;
    r.obj = r.dual_obj = program.objective_constant;
    return r;
  }
  detail::Ipm ipm(sf, settings);
  return ipm.run();
}

}  // namespace fdgrouper
