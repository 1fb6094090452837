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

// Builds the per-iteration convex subproblems as ConicPrograms and maps solver
// output back to DesignPoints.
//
// Everything is assembled in normalized units: channels are rescaled so that
// noise powers, power budgets and the residual-SI factor are all 1. SINRs are
// unchanged by this, so rates, tau/kappa and the thresholds keep their values.
//
// The rate minorants are entered in completed-square form. With
// q = x0^2/phi0^2 the downlink bound phi_c + chi x - varpi theta equals
// ln(1+q) + 1 - e, where e = varpi theta - chi x + 1 + q satisfies
//   e >= (k x - sqrt(1+q))^2 + (k phi)^2,  k = x0 / (phi0^2 sqrt(1+q)),
// which is the same constraint as theta >= phi^2 + x^2. The uplink bound
// vartheta + psi p - theta_tilde is rewritten the same way around the
// p_l term of lambda. The solver then only sees O(1) coefficients instead of
// O(SINR) ones that cancel. The "theta" and "theta_tilde" blocks hold e and
// its uplink twin; extract_point converts back.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdgrouper/conic_program.hpp"
#include "fdgrouper/rate_engine.hpp"
#include "fdgrouper/sca_approx.hpp"
#include "fdgrouper/solver.hpp"

namespace fdgrouper {

enum class SubproblemKind { Alg1Main, Alg1Init, Alg2Main, Alg2Init };

inline const char* to_string(SubproblemKind k) {
  switch (k) {
    case SubproblemKind::Alg1Main: return "Alg1Main";
    case SubproblemKind::Alg1Init: return "Alg1Init";
    case SubproblemKind::Alg2Main: return "Alg2Main";
    case SubproblemKind::Alg2Init: return "Alg2Init";
  }
  return "?";
}
inline bool is_alg2(SubproblemKind k) { return k == SubproblemKind::Alg2Main || k == SubproblemKind::Alg2Init; }
inline bool is_init(SubproblemKind k) { return k == SubproblemKind::Alg1Init || k == SubproblemKind::Alg2Init; }

struct SubproblemOptions {
  SubproblemKind kind = SubproblemKind::Alg1Main;
  bool with_omega_constraints = false;  // Alg2 kinds only
  PowerConstraintMode power_mode = PowerConstraintMode::TimeWeighted;
  // Alg2 only: pin grouping/time variables to fixed values.
  std::optional<Eigen::MatrixXd> pin_alpha, pin_beta;
  std::optional<Eigen::VectorXd> pin_t;
};

struct Normalization {
  ChannelSet ch;
  SystemConfig cfg;
  double w_unit = 1.0, p_unit = 1.0, phi_unit = 1.0, theta_unit = 1.0, omega_unit = 1.0, p_hat_unit = 1.0;

  DesignPoint to_normalized(const DesignPoint& x) const { return rescale(x, false); }
  DesignPoint to_physical(const DesignPoint& x) const { return rescale(x, true); }

 private:
  DesignPoint rescale(DesignPoint x, bool up) const {
    auto f = [&](double u) { return up ? u : 1.0 / u; };
    for (auto& wg : x.w) wg *= f(w_unit);
    x.p *= f(p_unit);
    x.phi *= f(phi_unit);
    x.theta *= f(theta_unit);
    x.omega *= f(omega_unit);
    x.p_hat *= f(p_hat_unit);
    return x;
  }
};

inline Normalization make_normalization(const ChannelSet& ch, const SystemConfig& cfg) {
  Normalization n;
  n.w_unit = std::sqrt(cfg.P_bs);
  n.p_unit = std::sqrt(cfg.P_ul);
  n.phi_unit = std::sqrt(cfg.sigma_dl);
  n.theta_unit = cfg.sigma_dl;
  n.omega_unit = cfg.P_bs;
  n.p_hat_unit = cfg.P_ul;

  n.ch = ch;
  n.ch.h = ch.h * std::sqrt(cfg.P_bs / cfg.sigma_dl);
  n.ch.g = ch.g * std::sqrt(cfg.P_ul / cfg.sigma_ul);
  n.ch.g_hat = ch.g_hat * std::sqrt(cfg.P_ul / cfg.sigma_dl);
  n.ch.G_I = ch.G_I * std::sqrt(cfg.rho * cfg.P_bs / cfg.sigma_ul);

  n.cfg = cfg;
  n.cfg.P_bs = n.cfg.P_ul = 1.0;
  n.cfg.sigma_dl = n.cfg.sigma_ul = 1.0;
  n.cfg.rho = 1.0;
  n.cfg.eps_group.reset();
  return n;
}

// Index arithmetic for the variable blocks of one subproblem.
struct VarLayout {
  int K = 0, L = 0, G = 0, Ntx = 0;
  int w = -1, p = -1, phi = -1, theta = -1, theta_tilde = -1;
  int alpha = -1, beta = -1, t = -1, tau = -1, tau_hat = -1, tau_tilde = -1;
  int kappa = -1, kappa_hat = -1, kappa_tilde = -1, omega = -1, p_hat = -1;
  int s = -1;

  int kg(int base, int k, int g) const { return base + g * K + k; }
  int lg(int base, int l, int g) const { return base + g * L + l; }
  int w_re(int k, int g, int a) const { return w + (g * K + k) * 2 * Ntx + a; }
  int w_im(int k, int g, int a) const { return w_re(k, g, a) + Ntx; }
};

// Per-(k,g) downlink data in normalized units.
struct DlTerm {
  double x0 = 0.0, phi0 = 1.0, q = 0.0, k = 0.0, log1pq = 0.0;
};
// Per-(l,g) uplink data in normalized units.
struct UlTerm {
  double gamma = 0.0, a_self = 0.0, log1pg = 0.0;
  Eigen::VectorXd a_later;      // |u^H g_j| for j > l (zeros for j <= l)
  Eigen::VectorXcd si_row;      // conj(G_I u): Re/Im of si_row^T w_k is u^H G_I^H w_k
  double u_norm = 0.0;
  UlMinorantCoeffs coeffs;
};

struct Subproblem {
  ConicProgram program;
  SubproblemOptions opts;
  VarLayout layout;
  Normalization norm;
  DesignPoint expansion;       // physical units, as passed in
  DesignPoint expansion_unit;  // normalized
  std::vector<DlTerm> dl;      // index g * K + k
  std::vector<UlTerm> ul;      // index g * L + l
  Eigen::VectorXd units;       // normalized value = units .* raw solver value
  Eigen::MatrixXd alpha_fixed, beta_fixed;
  Eigen::VectorXd t_fixed;

  const DlTerm& dl_at(int k, int g) const { return dl[static_cast<size_t>(g * layout.K + k)]; }
  const UlTerm& ul_at(int l, int g) const { return ul[static_cast<size_t>(g * layout.L + l)]; }
};

class ExtractionError : public std::runtime_error {
 public:
  ExtractionError(SolverStatus s, const std::string& what) : std::runtime_error(what), status(s) {}
  SolverStatus status;
};

namespace detail {

// Re(c^T w_k^g) and Im(c^T w_k^g) as affine expressions of the stacked
// (Re, Im) embedding, scaled by `scale`.
inline AffineExpr re_cw(const VarLayout& lay, int k, int g, const Eigen::VectorXcd& c, double scale) {
  AffineExpr e;
  for (int a = 0; a < lay.Ntx; ++a) {
    e.add(lay.w_re(k, g, a), scale * c(a).real());
    e.add(lay.w_im(k, g, a), -scale * c(a).imag());
  }
  return e;
}
inline AffineExpr im_cw(const VarLayout& lay, int k, int g, const Eigen::VectorXcd& c, double scale) {
  AffineExpr e;
  for (int a = 0; a < lay.Ntx; ++a) {
    e.add(lay.w_re(k, g, a), scale * c(a).imag());
    e.add(lay.w_im(k, g, a), scale * c(a).real());
  }
  return e;
}

inline void require_finite(double v, const char* what, const char* user, int i, int g) {
  if (!std::isfinite(v))
    throw std::domain_error(std::string("build_subproblem: non-finite ") + what + " at (" + user + "=" +
                            std::to_string(i) + ", g=" + std::to_string(g) + ")");
}

inline std::string tag(const char* name, int i, int g) {
  return std::string(name) + "[" + std::to_string(i) + "," + std::to_string(g) + "]";
}

}  // namespace detail

inline Subproblem build_subproblem(const SubproblemOptions& opts, const DesignPoint& expansion, const ChannelSet& ch,
                                   const SystemConfig& cfg) {
  using detail::tag;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const SubproblemKind kind = opts.kind;
  const bool alg2 = is_alg2(kind);
  const bool init = is_init(kind);
  if (opts.with_omega_constraints && !alg2)
    throw std::invalid_argument("build_subproblem: omega constraints only apply to Algorithm 2 kinds");

  Subproblem sub;
  sub.opts = opts;
  sub.expansion = expansion;
  sub.norm = make_normalization(ch, cfg);
  const ChannelSet& nch = sub.norm.ch;
  const SystemConfig& ncfg = sub.norm.cfg;
  const DesignPoint ex = sub.norm.to_normalized(expansion);
  sub.expansion_unit = ex;

  const int K = ex.K(), L = ex.L(), G = ex.G(), Ntx = ch.Ntx();
  if (K != ch.K() || L != ch.L()) throw std::invalid_argument("build_subproblem: expansion/channel size mismatch");

  // Fixed grouping and time (Alg1) or pins (Alg2).
  sub.alpha_fixed = ex.alpha;
  sub.beta_fixed = ex.beta;
  sub.t_fixed = ex.t;

  // ---- coefficients ------------------------------------------------------
  sub.dl.resize(static_cast<size_t>(K * G));
  for (int g = 0; g < G; ++g)
    for (int k = 0; k < K; ++k) {
      DlTerm d;
      d.x0 = dl_real_gain(k, g, ex, nch);
      d.phi0 = ex.phi(k, g);
      if (!(d.phi0 > 0.0))
        throw std::domain_error("build_subproblem: phi must be positive at the expansion point (k=" +
                                std::to_string(k) + ", g=" + std::to_string(g) + ")");
      d.q = (d.x0 / d.phi0) * (d.x0 / d.phi0);
      d.k = d.x0 / (d.phi0 * d.phi0 * std::sqrt(1.0 + d.q));
      d.log1pq = std::log1p(d.q);
      detail::require_finite(d.q, "downlink coefficient", "k", k, g);
      detail::require_finite(d.k, "downlink coefficient", "k", k, g);
      sub.dl[static_cast<size_t>(g * K + k)] = d;
    }
  sub.ul.resize(static_cast<size_t>(L * G));
  for (int g = 0; g < G; ++g)
    for (int l = 0; l < L; ++l) {
      UlTerm u;
      u.coeffs = ul_minorant_coeffs(ex, nch, ncfg, l, g);
      u.gamma = u.coeffs.gamma;
      u.log1pg = std::log1p(u.gamma);
      u.a_self = std::abs(u.coeffs.factor.dot(nch.g.col(l)));
      u.a_later = Eigen::VectorXd::Zero(L);
      for (int j = l + 1; j < L; ++j) u.a_later(j) = std::abs(u.coeffs.factor.dot(nch.g.col(j)));
      u.si_row = (nch.G_I * u.coeffs.factor).conjugate();
      u.u_norm = u.coeffs.factor.norm();
      detail::require_finite(u.gamma, "uplink coefficient", "l", l, g);
      detail::require_finite(u.a_self, "uplink coefficient", "l", l, g);
      detail::require_finite(u.u_norm, "uplink coefficient", "l", l, g);
      if (!u.si_row.allFinite() || !u.a_later.allFinite())
        detail::require_finite(std::numeric_limits<double>::quiet_NaN(), "uplink coefficient", "l", l, g);
      sub.ul[static_cast<size_t>(g * L + l)] = std::move(u);
    }

  // ---- variables -----------------------------------------------------------
  ConicProgram& P = sub.program;
  VarLayout& lay = sub.layout;
  lay.K = K, lay.L = L, lay.G = G, lay.Ntx = Ntx;
  // theta is the epigraph helper of Algorithm 1 but a counted variable of Algorithm 2.
  lay.w = P.add_block("w", 2 * Ntx * K * G, false, true);
  lay.p = P.add_block("p", L * G);
  lay.phi = P.add_block("phi", K * G);
  lay.theta = P.add_block("theta", K * G, !alg2);
  lay.theta_tilde = P.add_block("theta_tilde", L * G);
  if (alg2) {
    lay.alpha = P.add_block("alpha", K * G);
    lay.beta = P.add_block("beta", L * G);
    lay.t = P.add_block("t", G);
    lay.tau = P.add_block("tau", K * G);
    lay.tau_hat = P.add_block("tau_hat", K * G);
    lay.tau_tilde = P.add_block("tau_tilde", K * G);
    lay.kappa = P.add_block("kappa", L * G);
    lay.kappa_hat = P.add_block("kappa_hat", L * G);
    lay.kappa_tilde = P.add_block("kappa_tilde", L * G);
    lay.omega = P.add_block("omega", G);
    lay.p_hat = P.add_block("p_hat", L * G);
  }
  if (init) lay.s = P.add_block("s", 1, true);

  sub.units = Eigen::VectorXd::Ones(P.n_vars);
  for (int g = 0; g < G; ++g)
    for (int k = 0; k < K; ++k) sub.units(lay.kg(lay.phi, k, g)) = sub.dl_at(k, g).phi0;
  auto var = [&](int j, double coef = 1.0) { return AffineExpr::var(j, coef * sub.units(j)); };

  // Minorant values as affine expressions: ln(1+q) + 1 - e.
  auto dl_minorant = [&](int k, int g) {
    AffineExpr f(sub.dl_at(k, g).log1pq + 1.0);
    f.add(var(lay.kg(lay.theta, k, g), -1.0));
    return f;
  };
  auto ul_minorant = [&](int l, int g) {
    AffineExpr f(sub.ul_at(l, g).log1pg + 1.0);
    f.add(var(lay.lg(lay.theta_tilde, l, g), -1.0));
    return f;
  };
  auto square_lin = [&](int j, double ref) {
    // ref^2 + 2 ref (x - ref)
    AffineExpr f(-ref * ref);
    f.add(var(j, 2.0 * ref));
    return f;
  };

  // ---- constraints shared by all kinds ---------------------------------------
  for (int g = 0; g < G; ++g) {
    for (int k = 0; k < K; ++k) {
      const DlTerm& d = sub.dl_at(k, g);
      const Eigen::VectorXcd hk = nch.h.col(k).conjugate();  // c with c^T w = h^H w
      // Interference cone.
      std::vector<AffineExpr> body;
      for (int i = 0; i < K; ++i) {
        if (i == k) continue;
        body.push_back(detail::re_cw(lay, i, g, hk, 1.0));
        body.push_back(detail::im_cw(lay, i, g, hk, 1.0));
      }
      for (int l = 0; l < L; ++l) {
        const double a = std::abs(nch.g_hat(l, k));
        if (a > 0.0) body.push_back(var(lay.lg(lay.p, l, g), a));
      }
      body.emplace_back(1.0);
      P.add_soc(var(lay.kg(lay.phi, k, g)), body, tag("interference", k, g));
      // Nonnegative real part of the useful signal.
      P.add_ineq(detail::re_cw(lay, k, g, hk, 1.0), 0.0, kInf, tag("signal_re", k, g));
      // Epigraph e >= (k x - sqrt(1+q))^2 + (k phi)^2.
      AffineExpr first = detail::re_cw(lay, k, g, hk, d.k);
      first.constant -= std::sqrt(1.0 + d.q);
      P.add_rsoc(var(lay.kg(lay.theta, k, g), 0.5), AffineExpr(1.0), {first, var(lay.kg(lay.phi, k, g), d.k)},
                 tag("dl_epigraph", k, g));
    }
    for (int l = 0; l < L; ++l) {
      const UlTerm& u = sub.ul_at(l, g);
      std::vector<AffineExpr> body;
      AffineExpr self = var(lay.lg(lay.p, l, g), u.a_self);
      self.constant -= std::sqrt(1.0 + u.gamma);
      body.push_back(self);
      for (int j = l + 1; j < L; ++j)
        if (u.a_later(j) > 0.0) body.push_back(var(lay.lg(lay.p, j, g), u.a_later(j)));
      if (u.u_norm > 0.0) {
        for (int k = 0; k < K; ++k) {
          body.push_back(detail::re_cw(lay, k, g, u.si_row, 1.0));
          body.push_back(detail::im_cw(lay, k, g, u.si_row, 1.0));
        }
        body.emplace_back(u.u_norm);
      }
      P.add_rsoc(var(lay.lg(lay.theta_tilde, l, g), 0.5), AffineExpr(1.0), body, tag("ul_epigraph", l, g));
      P.add_ineq(var(lay.lg(lay.p, l, g)), 0.0, kInf, tag("p_nonneg", l, g));
    }
  }

  // ---- rate expressions used by objective and thresholds ---------------------
  std::vector<AffineExpr> dl_rate(static_cast<size_t>(K)), ul_rate(static_cast<size_t>(L));
  AffineExpr objective;
  if (!alg2) {
    for (int g = 0; g < G; ++g) {
      for (int k = 0; k < K; ++k) {
        const double wgt = ex.t(g) * ex.alpha(k, g);
        if (wgt != 0.0) dl_rate[k].add(dl_minorant(k, g), wgt);
      }
      for (int l = 0; l < L; ++l) {
        const double wgt = ex.t(g) * ex.beta(l, g);
        if (wgt != 0.0) ul_rate[l].add(ul_minorant(l, g), wgt);
      }
    }
  } else {
    for (int g = 0; g < G; ++g) {
      for (int k = 0; k < K; ++k) dl_rate[k].add(square_lin(lay.kg(lay.tau_tilde, k, g), ex.tau_tilde(k, g)));
      for (int l = 0; l < L; ++l) ul_rate[l].add(square_lin(lay.lg(lay.kappa_tilde, l, g), ex.kappa_tilde(l, g)));
    }
  }
  for (auto& r : dl_rate) objective.add(r);
  for (auto& r : ul_rate) objective.add(r);

  if (!init) {
    objective.compress();
    for (const auto& t : objective.terms) P.objective(t.var) += t.coef;
    P.objective_constant = objective.constant;
    for (int k = 0; k < K; ++k) P.add_ineq(dl_rate[k], ncfg.Rbar_dl, kInf, "rate_dl[" + std::to_string(k) + "]");
    for (int l = 0; l < L; ++l) P.add_ineq(ul_rate[l], ncfg.Rbar_ul, kInf, "rate_ul[" + std::to_string(l) + "]");
  } else {
    P.objective(lay.s) = 1.0;
    int rows = 0;
    if (ncfg.Rbar_dl > 0.0)
      for (int k = 0; k < K; ++k, ++rows)
        P.add_ineq(AffineExpr(dl_rate[k]).add(lay.s, -ncfg.Rbar_dl), 0.0, kInf, "maximin_dl[" + std::to_string(k) + "]");
    if (ncfg.Rbar_ul > 0.0)
      for (int l = 0; l < L; ++l, ++rows)
        P.add_ineq(AffineExpr(ul_rate[l]).add(lay.s, -ncfg.Rbar_ul), 0.0, kInf, "maximin_ul[" + std::to_string(l) + "]");
    if (rows == 0) throw std::invalid_argument("build_subproblem: maximin needs at least one positive threshold");
  }

  // ---- power constraints -----------------------------------------------------
  if (!alg2) {
    // Zero-time groups keep a tiny weight so their beams stay bounded.
    auto weight = [&](int g) {
      return opts.power_mode == PowerConstraintMode::TimeWeighted ? std::sqrt(std::max(ex.t(g), 1e-6)) : 1.0;
    };
    if (K > 0) {
      std::vector<AffineExpr> body;
      for (int g = 0; g < G; ++g)
        for (int k = 0; k < K; ++k)
          for (int a = 0; a < 2 * Ntx; ++a) body.push_back(var(lay.w_re(k, g, a), weight(g)));
      P.add_soc(AffineExpr(1.0), body, "power_bs");
    }
    for (int l = 0; l < L; ++l) {
      std::vector<AffineExpr> body;
      for (int g = 0; g < G; ++g) body.push_back(var(lay.lg(lay.p, l, g), weight(g)));
      P.add_soc(AffineExpr(1.0), body, "power_ul[" + std::to_string(l) + "]");
    }
  } else {
    for (int g = 0; g < G; ++g) {
      // omega_g >= ||w^g||^2
      if (K > 0) {
        std::vector<AffineExpr> body;
        for (int k = 0; k < K; ++k)
          for (int a = 0; a < 2 * Ntx; ++a) body.push_back(var(lay.w_re(k, g, a)));
        P.add_rsoc(var(lay.omega + g, 0.5), AffineExpr(1.0), body, "omega[" + std::to_string(g) + "]");
      } else {
        P.add_ineq(var(lay.omega + g), 0.0, 0.0, "omega[" + std::to_string(g) + "]");
      }
      // p^2 <= p_hat
      for (int l = 0; l < L; ++l)
        P.add_rsoc(var(lay.lg(lay.p_hat, l, g), 0.5), AffineExpr(1.0), {var(lay.lg(lay.p, l, g))},
                   tag("p_hat", l, g));
    }
    if (opts.power_mode == PowerConstraintMode::TimeWeighted) {
      // sum_g t_g y_g <= 1 through the bilinear majorant with r = t0 / y0.
      auto chain = [&](auto yidx, auto yref, const std::string& name) {
        std::vector<AffineExpr> body;
        for (int g = 0; g < G; ++g) {
          const double t0 = std::max(ex.t(g), 1e-6);
          const double y0 = std::max(yref(g), 1e-9);
          const double r = t0 / y0;
          body.push_back(var(lay.t + g, 1.0 / std::sqrt(r)));
          body.push_back(var(yidx(g), std::sqrt(r)));
        }
        P.add_soc(AffineExpr(std::sqrt(2.0)), body, name);
      };
      if (K > 0)
        chain([&](int g) { return lay.omega + g; }, [&](int g) { return ex.omega(g); }, "power_bs");
      for (int l = 0; l < L; ++l)
        chain([&](int g) { return lay.lg(lay.p_hat, l, g); }, [&](int g) { return ex.p_hat(l, g); },
              "power_ul[" + std::to_string(l) + "]");
    } else {
      AffineExpr sum;
      for (int g = 0; g < G; ++g) sum.add(var(lay.omega + g));
      if (K > 0) P.add_ineq(sum, -kInf, 1.0, "power_bs");
      for (int l = 0; l < L; ++l) {
        AffineExpr s;
        for (int g = 0; g < G; ++g) s.add(var(lay.lg(lay.p_hat, l, g)));
        P.add_ineq(s, -kInf, 1.0, "power_ul[" + std::to_string(l) + "]");
      }
    }
  }

  // ---- grouping/time chains (Algorithm 2) ------------------------------------
  if (alg2) {
    const double omega_c = cfg.omega;
    for (int g = 0; g < G; ++g) {
      for (int k = 0; k < K; ++k) {
        const int a = lay.kg(lay.alpha, k, g);
        P.add_ineq(var(a), 0.0, 1.0, tag("alpha_box", k, g));
        // alpha * F >= tau^2
        P.add_rsoc(var(a, 0.5), dl_minorant(k, g), {var(lay.kg(lay.tau, k, g))}, tag("dl_product", k, g));
        // tau_hat <= tau0^2 + 2 tau0 (tau - tau0), tau_hat >= 0
        AffineExpr cap = square_lin(lay.kg(lay.tau, k, g), ex.tau(k, g));
        cap.add(var(lay.kg(lay.tau_hat, k, g), -1.0));
        P.add_ineq(cap, 0.0, kInf, tag("dl_tau_cap", k, g));
        P.add_ineq(var(lay.kg(lay.tau_hat, k, g)), 0.0, kInf, tag("tau_hat_nonneg", k, g));
        // t * tau_hat >= tau_tilde^2
        P.add_rsoc(var(lay.t + g, 0.5), var(lay.kg(lay.tau_hat, k, g)), {var(lay.kg(lay.tau_tilde, k, g))},
                   tag("dl_time", k, g));
        if (opts.with_omega_constraints) {
          AffineExpr e = var(a);
          e.add(dl_minorant(k, g), -omega_c);
          P.add_ineq(e, -kInf, 0.0, tag("dl_omega", k, g));
        }
        if (opts.pin_alpha) P.add_eq(var(a), (*opts.pin_alpha)(k, g), tag("alpha_pin", k, g));
      }
      for (int l = 0; l < L; ++l) {
        const int b = lay.lg(lay.beta, l, g);
        P.add_ineq(var(b), 0.0, 1.0, tag("beta_box", l, g));
        P.add_rsoc(var(b, 0.5), ul_minorant(l, g), {var(lay.lg(lay.kappa, l, g))}, tag("ul_product", l, g));
        AffineExpr cap = square_lin(lay.lg(lay.kappa, l, g), ex.kappa(l, g));
        cap.add(var(lay.lg(lay.kappa_hat, l, g), -1.0));
        P.add_ineq(cap, 0.0, kInf, tag("ul_kappa_cap", l, g));
        P.add_ineq(var(lay.lg(lay.kappa_hat, l, g)), 0.0, kInf, tag("kappa_hat_nonneg", l, g));
        P.add_rsoc(var(lay.t + g, 0.5), var(lay.lg(lay.kappa_hat, l, g)), {var(lay.lg(lay.kappa_tilde, l, g))},
                   tag("ul_time", l, g));
        if (opts.with_omega_constraints) {
          AffineExpr e = var(b);
          e.add(ul_minorant(l, g), -omega_c);
          P.add_ineq(e, -kInf, 0.0, tag("ul_omega", l, g));
        }
        if (opts.pin_beta) P.add_eq(var(b), (*opts.pin_beta)(l, g), tag("beta_pin", l, g));
      }
      P.add_ineq(var(lay.t + g), 0.0, kInf, "t_nonneg[" + std::to_string(g) + "]");
      if (opts.pin_t) P.add_eq(var(lay.t + g), (*opts.pin_t)(g), "t_pin[" + std::to_string(g) + "]");
    }
    AffineExpr tsum;
    for (int g = 0; g < G; ++g) tsum.add(var(lay.t + g));
    P.add_ineq(tsum, -kInf, 1.0, "time_simplex");
  }

  P.validate();
  return sub;
}

// Raw solver vector that extract_point maps back to `point` (physical units).
inline Eigen::VectorXd pack_point(const Subproblem& sub, const DesignPoint& point) {
  const VarLayout& lay = sub.layout;
  const DesignPoint x = sub.norm.to_normalized(point);
  const ChannelSet& nch = sub.norm.ch;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(sub.program.n_vars);
  for (int g = 0; g < lay.G; ++g) {
    for (int k = 0; k < lay.K; ++k) {
      for (int a = 0; a < lay.Ntx; ++a) {
        v(lay.w_re(k, g, a)) = x.w[g](a, k).real();
        v(lay.w_im(k, g, a)) = x.w[g](a, k).imag();
      }
      const DlTerm& d = sub.dl_at(k, g);
      v(lay.kg(lay.phi, k, g)) = x.phi(k, g);
      const double xr = dl_real_gain(k, g, x, nch);
      // e = varpi theta - chi x + 1 + q, with varpi = k^2, chi = 2 k sqrt(1+q)
      v(lay.kg(lay.theta, k, g)) = d.k * d.k * x.theta(k, g) - 2.0 * d.k * std::sqrt(1.0 + d.q) * xr + 1.0 + d.q;
    }
    for (int l = 0; l < lay.L; ++l) {
      const UlTerm& u = sub.ul_at(l, g);
      v(lay.lg(lay.p, l, g)) = x.p(l, g);
      v(lay.lg(lay.theta_tilde, l, g)) = x.theta_tilde(l, g) - u.coeffs.psi * x.p(l, g) + 1.0 + u.gamma;
    }
  }
  if (is_alg2(sub.opts.kind)) {
    for (int g = 0; g < lay.G; ++g) {
      for (int k = 0; k < lay.K; ++k) {
        v(lay.kg(lay.alpha, k, g)) = x.alpha(k, g);
        v(lay.kg(lay.tau, k, g)) = x.tau(k, g);
        v(lay.kg(lay.tau_hat, k, g)) = x.tau_hat(k, g);
        v(lay.kg(lay.tau_tilde, k, g)) = x.tau_tilde(k, g);
      }
      for (int l = 0; l < lay.L; ++l) {
        v(lay.lg(lay.beta, l, g)) = x.beta(l, g);
        v(lay.lg(lay.kappa, l, g)) = x.kappa(l, g);
        v(lay.lg(lay.kappa_hat, l, g)) = x.kappa_hat(l, g);
        v(lay.lg(lay.kappa_tilde, l, g)) = x.kappa_tilde(l, g);
        v(lay.lg(lay.p_hat, l, g)) = x.p_hat(l, g);
      }
      v(lay.t + g) = x.t(g);
      v(lay.omega + g) = x.omega(g);
    }
  }
  return v.cwiseQuotient(sub.units);
}

// Reads a raw solver vector back into a physical-unit DesignPoint.
inline DesignPoint extract_raw(const Subproblem& sub, const Eigen::VectorXd& raw) {
  const VarLayout& lay = sub.layout;
  if (raw.size() != sub.program.n_vars) throw std::invalid_argument("extract_point: solution length mismatch");
  const Eigen::VectorXd v = raw.cwiseProduct(sub.units);
  DesignPoint x = sub.expansion_unit;  // fixed values carried through
  const ChannelSet& nch = sub.norm.ch;
  for (int g = 0; g < lay.G; ++g) {
    for (int k = 0; k < lay.K; ++k) {
      for (int a = 0; a < lay.Ntx; ++a) x.w[g](a, k) = {v(lay.w_re(k, g, a)), v(lay.w_im(k, g, a))};
      x.phi(k, g) = v(lay.kg(lay.phi, k, g));
    }
    for (int l = 0; l < lay.L; ++l) x.p(l, g) = v(lay.lg(lay.p, l, g));
  }
  for (int g = 0; g < lay.G; ++g) {
    for (int k = 0; k < lay.K; ++k) {
      const DlTerm& d = sub.dl_at(k, g);
      const double xr = dl_real_gain(k, g, x, nch);
      const double e = v(lay.kg(lay.theta, k, g));
      const double varpi = d.k * d.k;
      x.theta(k, g) = varpi > 0.0 ? (e + 2.0 * d.k * std::sqrt(1.0 + d.q) * xr - 1.0 - d.q) / varpi
                                  : x.phi(k, g) * x.phi(k, g) + xr * xr;
    }
    for (int l = 0; l < lay.L; ++l) {
      const UlTerm& u = sub.ul_at(l, g);
      x.theta_tilde(l, g) = v(lay.lg(lay.theta_tilde, l, g)) + u.coeffs.psi * x.p(l, g) - 1.0 - u.gamma;
    }
  }
  if (is_alg2(sub.opts.kind)) {
    for (int g = 0; g < lay.G; ++g) {
      for (int k = 0; k < lay.K; ++k) {
        x.alpha(k, g) = v(lay.kg(lay.alpha, k, g));
        x.tau(k, g) = v(lay.kg(lay.tau, k, g));
        x.tau_hat(k, g) = v(lay.kg(lay.tau_hat, k, g));
        x.tau_tilde(k, g) = v(lay.kg(lay.tau_tilde, k, g));
      }
      for (int l = 0; l < lay.L; ++l) {
        x.beta(l, g) = v(lay.lg(lay.beta, l, g));
        x.kappa(l, g) = v(lay.lg(lay.kappa, l, g));
        x.kappa_hat(l, g) = v(lay.lg(lay.kappa_hat, l, g));
        x.kappa_tilde(l, g) = v(lay.lg(lay.kappa_tilde, l, g));
        x.p_hat(l, g) = v(lay.lg(lay.p_hat, l, g));
      }
      x.t(g) = v(lay.t + g);
      x.omega(g) = v(lay.omega + g);
    }
  }
  return sub.norm.to_physical(x);
}

inline DesignPoint extract_point(const Subproblem& sub, const SolverResult& res) {
  if (res.status == SolverStatus::Infeasible || res.status == SolverStatus::Unbounded)
    throw ExtractionError(res.status, std::string("extract_point: solver returned ") + to_string(res.status));
  if (!res.x.allFinite()) throw ExtractionError(res.status, "extract_point: non-finite solver output");
  return extract_raw(sub, res.x);
}

// Maximin value of an init subproblem at a raw solution.
inline double maximin_value(const Subproblem& sub, const Eigen::VectorXd& raw) {
  if (sub.layout.s < 0) throw std::invalid_argument("maximin_value: not an init subproblem");
  return raw(sub.layout.s);
}

// The subproblem objective evaluated at a physical point with the sca-approx
// formulas (paper variables theta, theta_tilde), independent of the conic
// encoding. For init kinds this is the smallest threshold-normalized rate.
inline double surrogate_objective(const Subproblem& sub, const DesignPoint& pt, const ChannelSet& ch,
                                  const SystemConfig& cfg) {
  const DesignPoint& ex = sub.expansion;
  const int K = ex.K(), L = ex.L(), G = ex.G();
  Eigen::VectorXd dl = Eigen::VectorXd::Zero(K), ul = Eigen::VectorXd::Zero(L);
  if (!is_alg2(sub.opts.kind)) {
    for (int g = 0; g < G; ++g) {
      for (int k = 0; k < K; ++k) {
        const double wgt = ex.t(g) * ex.alpha(k, g);
        if (wgt == 0.0) continue;
        const DlMinorantCoeffs c = dl_minorant_coeffs(ex, ch, k, g);
        dl(k) += wgt * dl_minorant_eval(c, ch.h.col(k), pt.w[g].col(k), pt.theta(k, g));
      }
      for (int l = 0; l < L; ++l) {
        const double wgt = ex.t(g) * ex.beta(l, g);
        if (wgt == 0.0) continue;
        const UlMinorantCoeffs c = ul_minorant_coeffs(ex, ch, cfg, l, g);
        ul(l) += wgt * (c.vartheta + c.psi * pt.p(l, g) - pt.theta_tilde(l, g));
      }
    }
  } else {
    for (int g = 0; g < G; ++g) {
      for (int k = 0; k < K; ++k) dl(k) += square_minorant(pt.tau_tilde(k, g), ex.tau_tilde(k, g));
      for (int l = 0; l < L; ++l) ul(l) += square_minorant(pt.kappa_tilde(l, g), ex.kappa_tilde(l, g));
    }
  }
  if (!is_init(sub.opts.kind)) return dl.sum() + ul.sum();
  double worst = std::numeric_limits<double>::infinity();
  if (cfg.Rbar_dl > 0.0)
    for (int k = 0; k < K; ++k) worst = std::min(worst, dl(k) / cfg.Rbar_dl);
  if (cfg.Rbar_ul > 0.0)
    for (int l = 0; l < L; ++l) worst = std::min(worst, ul(l) / cfg.Rbar_ul);
  return worst;
}

}  // namespace fdgrouper
