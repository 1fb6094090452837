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

// Exact SINR, rate, and constraint evaluation for a full design point.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fdgrouper/system_model.hpp"

namespace fdgrouper {

// One SCA iterate: primary variables plus every auxiliary the subproblems use.
// Per-group matrices are indexed (user, group).
struct DesignPoint {
  std::vector<Eigen::MatrixXcd> w;  // G entries of Ntx x K; column k is w_k^g
  Eigen::MatrixXd p;                // L x G uplink amplitudes
  Eigen::MatrixXd alpha;            // K x G
  Eigen::MatrixXd beta;             // L x G
  Eigen::VectorXd t;                // G time fractions

  Eigen::MatrixXd phi, theta;                     // K x G
  Eigen::MatrixXd theta_tilde;                    // L x G
  Eigen::MatrixXd tau, tau_hat, tau_tilde;        // K x G
  Eigen::MatrixXd kappa, kappa_hat, kappa_tilde;  // L x G
  Eigen::VectorXd omega;                          // G
  Eigen::MatrixXd p_hat;                          // L x G

  static DesignPoint zeros(int K, int L, int G, int Ntx) {
    DesignPoint d;
    d.w.assign(G, Eigen::MatrixXcd::Zero(Ntx, K));
    d.p = Eigen::MatrixXd::Zero(L, G);
    d.alpha = Eigen::MatrixXd::Ones(K, G);
    d.beta = Eigen::MatrixXd::Ones(L, G);
    d.t = Eigen::VectorXd::Constant(G, 1.0 / G);
    d.phi = d.theta = Eigen::MatrixXd::Zero(K, G);
    d.tau = d.tau_hat = d.tau_tilde = Eigen::MatrixXd::Zero(K, G);
    d.theta_tilde = Eigen::MatrixXd::Zero(L, G);
    d.kappa = d.kappa_hat = d.kappa_tilde = Eigen::MatrixXd::Zero(L, G);
    d.omega = Eigen::VectorXd::Zero(G);
    d.p_hat = Eigen::MatrixXd::Zero(L, G);
    return d;
  }

  int K() const { return static_cast<int>(alpha.rows()); }
  int L() const { return static_cast<int>(beta.rows()); }
  int G() const { return static_cast<int>(t.size()); }
  int Ntx() const { return w.empty() ? 0 : static_cast<int>(w.front().rows()); }
};

// Interference-plus-noise at DLU k in group g (the squared SOC head of the phi cone).
inline double dl_interference_plus_noise(int k, int g, const DesignPoint& pt, const ChannelSet& ch,
                                         const SystemConfig& cfg) {
  const auto& Wg = pt.w[g];
  double acc = cfg.sigma_dl;
  for (int i = 0; i < pt.K(); ++i)
    if (i != k) acc += std::norm(ch.h.col(k).dot(Wg.col(i)));
  for (int l = 0; l < pt.L(); ++l) acc += pt.p(l, g) * pt.p(l, g) * std::norm(ch.g_hat(l, k));
  return acc;
}

inline double dl_sinr(int k, int g, const DesignPoint& pt, const ChannelSet& ch, const SystemConfig& cfg) {
  // Eigen's dot conjugates the first argument: h.dot(w) = h^H w.
  const double signal = std::norm(ch.h.col(k).dot(pt.w[g].col(k)));
  return signal / dl_interference_plus_noise(k, g, pt, ch, cfg);
}

// Covariance seen when decoding ULU l in group g: later users, residual SI, noise.
inline Eigen::MatrixXcd ul_interference_covariance(int l, int g, const DesignPoint& pt,
                                                   const ChannelSet& ch, const SystemConfig& cfg) {
  const int Nrx = ch.Nrx();
  Eigen::MatrixXcd xi = cfg.sigma_ul * Eigen::MatrixXcd::Identity(Nrx, Nrx);
  for (int j = l + 1; j < pt.L(); ++j) {
    const double pj2 = pt.p(j, g) * pt.p(j, g);
    if (pj2 != 0.0) xi.noalias() += pj2 * ch.g.col(j) * ch.g.col(j).adjoint();
  }
  if (cfg.rho > 0.0 && pt.K() > 0) {
    const Eigen::MatrixXcd si = ch.G_I.adjoint() * pt.w[g];  // Nrx x K
    xi.noalias() += cfg.rho * si * si.adjoint();
  }
  return xi;
}

// Upper-triangular R with R^H R = Xi for user l in group g.
// Xi is never formed: with strong SI and tiny noise, sigma*I + A A^H drops most
// of sigma's digits. Triangularizing the stacked square root [sqrt(sigma) I; A^H]
// keeps them.
inline Eigen::MatrixXcd ul_covariance_factor(int l, int g, const DesignPoint& pt, const ChannelSet& ch,
                                             const SystemConfig& cfg) {
  const int Nrx = ch.Nrx();
  const int n_si = (cfg.rho > 0.0 && pt.K() > 0) ? pt.K() : 0;
  const int n_later = std::max(0, pt.L() - l - 1);
  Eigen::MatrixXcd stack(Nrx + n_si + n_later, Nrx);
  stack.topRows(Nrx) = std::sqrt(cfg.sigma_ul) * Eigen::MatrixXcd::Identity(Nrx, Nrx);
  if (n_si) stack.middleRows(Nrx, n_si) = std::sqrt(cfg.rho) * (ch.G_I.adjoint() * pt.w[g]).adjoint();
  for (int j = 0; j < n_later; ++j)
    stack.row(Nrx + n_si + j) = pt.p(l + 1 + j, g) * ch.g.col(l + 1 + j).adjoint();
  const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(stack);
  return qr.matrixQR().topRows(Nrx).triangularView<Eigen::Upper>();
}

// R^-H b, so that b^H Xi^-1 b = |R^-H b|^2.
inline Eigen::VectorXcd ul_whiten(const Eigen::MatrixXcd& R, const Eigen::VectorXcd& b) {
  return R.adjoint().triangularView<Eigen::Lower>().solve(b);
}

// MMSE-SIC SINR with ascending decoding order.
inline double ul_sinr_mmse_sic(int l, int g, const DesignPoint& pt, const ChannelSet& ch,
                               const SystemConfig& cfg) {
  const double pl2 = pt.p(l, g) * pt.p(l, g);
  if (pl2 == 0.0) return 0.0;
  return pl2 * ul_whiten(ul_covariance_factor(l, g, pt, ch, cfg), ch.g.col(l)).squaredNorm();
}

struct PerUserRates {
  Eigen::MatrixXd dl;  // K x G, t_g alpha ln(1 + gamma) in nats
  Eigen::MatrixXd ul;  // L x G

  double total() const { return dl.sum() + ul.sum(); }
};

inline PerUserRates per_user_rates(const DesignPoint& pt, const ChannelSet& ch, const SystemConfig& cfg) {
  const int K = pt.K(), L = pt.L(), G = pt.G();
  PerUserRates r{Eigen::MatrixXd::Zero(K, G), Eigen::MatrixXd::Zero(L, G)};
  for (int g = 0; g < G; ++g) {
    for (int k = 0; k < K; ++k)
      if (pt.t(g) * pt.alpha(k, g) != 0.0)
        r.dl(k, g) = pt.t(g) * pt.alpha(k, g) * std::log1p(dl_sinr(k, g, pt, ch, cfg));
    for (int l = 0; l < L; ++l)
      if (pt.t(g) * pt.beta(l, g) != 0.0)
        r.ul(l, g) = pt.t(g) * pt.beta(l, g) * std::log1p(ul_sinr_mmse_sic(l, g, pt, ch, cfg));
  }
  return r;
}

// Objective of the sum-rate problem, in nats.
inline double weighted_sum_rate(const DesignPoint& pt, const ChannelSet& ch, const SystemConfig& cfg) {
  return per_user_rates(pt, ch, cfg).total();
}

struct ConstraintResidual {
  std::string name;
  double value = 0.0;  // <= 0 means satisfied
  double scale = 1.0;  // violation is judged relative to this
};

struct FeasibilityReport {
  std::vector<ConstraintResidual> residuals;
  double worst_violation = 0.0;  // max over residuals of value / scale, clipped at 0
  std::string worst_name;
  bool feasible = true;
};

inline double bs_power_usage(const DesignPoint& pt, PowerConstraintMode mode) {
  double acc = 0.0;
  for (int g = 0; g < pt.G(); ++g) {
    const double weight = mode == PowerConstraintMode::TimeWeighted ? pt.t(g) : 1.0;
    acc += weight * pt.w[g].squaredNorm();
  }
  return acc;
}

inline double ul_power_usage(int l, const DesignPoint& pt, PowerConstraintMode mode) {
  double acc = 0.0;
  for (int g = 0; g < pt.G(); ++g) {
    const double weight = mode == PowerConstraintMode::TimeWeighted ? pt.t(g) : 1.0;
    acc += weight * pt.p(l, g) * pt.p(l, g);
  }
  return acc;
}

// Residuals for the rate thresholds, power budgets, nonnegativity, grouping
// boxes, and time simplex. `tol` is relative to each constraint's scale.
inline FeasibilityReport check_feasibility(const DesignPoint& pt, const ChannelSet& ch, const SystemConfig& cfg,
                                           double tol = 1e-6) {
  FeasibilityReport rep;
  const auto rates = per_user_rates(pt, ch, cfg);
  auto add = [&](std::string name, double value, double scale) {
    rep.residuals.push_back({std::move(name), value, scale});
  };
  for (int k = 0; k < pt.K(); ++k)
    add("rate_dl[" + std::to_string(k) + "]", cfg.Rbar_dl - rates.dl.row(k).sum(), std::max(1.0, cfg.Rbar_dl));
  for (int l = 0; l < pt.L(); ++l)
    add("rate_ul[" + std::to_string(l) + "]", cfg.Rbar_ul - rates.ul.row(l).sum(), std::max(1.0, cfg.Rbar_ul));
  add("power_bs", bs_power_usage(pt, cfg.power_mode) - cfg.P_bs, cfg.P_bs);
  for (int l = 0; l < pt.L(); ++l)
    add("power_ul[" + std::to_string(l) + "]", ul_power_usage(l, pt, cfg.power_mode) - cfg.P_ul, cfg.P_ul);
  add("p_nonneg", pt.p.size() ? -pt.p.minCoeff() : 0.0, std::sqrt(cfg.P_ul));
  if (pt.alpha.size()) {
    add("alpha_lower", -pt.alpha.minCoeff(), 1.0);
    add("alpha_upper", pt.alpha.maxCoeff() - 1.0, 1.0);
  }
  if (pt.beta.size()) {
    add("beta_lower", -pt.beta.minCoeff(), 1.0);
    add("beta_upper", pt.beta.maxCoeff() - 1.0, 1.0);
  }
  add("time_simplex", pt.t.sum() - 1.0, 1.0);
  add("t_nonneg", -pt.t.minCoeff(), 1.0);

  for (const auto& r : rep.residuals) {
    const double rel = r.value / r.scale;
    if (rel > rep.worst_violation) {
      rep.worst_violation = rel;
      rep.worst_name = r.name;
    }
  }
  rep.feasible = rep.worst_violation <= tol;
  return rep;
}

}  // namespace fdgrouper
