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

// Inner approximations used by the path-following iterations: concave
// minorants of the per-user log-rates, the tangent minorant of a square, and
// the convex majorant of a bilinear product.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdgrouper/rate_engine.hpp"

namespace fdgrouper {

struct DlMinorantCoeffs {
  double varphi = 0.0;
  double chi = 0.0;
  double varpi = 0.0;
};

struct UlMinorantCoeffs {
  double vartheta = 0.0;
  double psi = 0.0;
  double gamma = 0.0;       // SINR at the expansion point
  Eigen::MatrixXcd Theta;   // Nrx x Nrx, Hermitian PSD
  Eigen::VectorXcd factor;  // Theta = factor * factor^H (rank one)
};

inline double dl_real_gain(int k, int g, const DesignPoint& pt, const ChannelSet& ch) {
  return ch.h.col(k).dot(pt.w[g].col(k)).real();
}

// Coefficients of F(w, phi) = varphi + chi Re{h^H w} - varpi (phi^2 + Re{h^H w}^2)
// expanded at the point's (w, phi).
inline DlMinorantCoeffs dl_minorant_coeffs(const DesignPoint& expansion, const ChannelSet& ch, int k, int g) {
  const double phi = expansion.phi(k, g);
  if (!(phi > 0.0))
    throw std::domain_error("dl_minorant_coeffs: phi must be positive at the expansion point (k=" +
                            std::to_string(k) + ", g=" + std::to_string(g) + ")");
  const double x = dl_real_gain(k, g, expansion, ch);
  const double phi2 = phi * phi;
  const double q = x * x / phi2;
  DlMinorantCoeffs c;
  c.varphi = std::log1p(q) - q;
  c.chi = 2.0 * x / phi2;
  c.varpi = q / (phi2 + x * x);
  return c;
}

// The linear surrogate used inside the subproblems once phi^2 + x^2 is
// replaced by its epigraph variable theta.
inline double dl_minorant_eval(const DlMinorantCoeffs& c, const Eigen::VectorXcd& h_k,
                               const Eigen::VectorXcd& w_kg, double theta_kg) {
  return c.varphi + c.chi * h_k.dot(w_kg).real() - c.varpi * theta_kg;
}

// F(w, phi) itself.
inline double dl_minorant_value(const DlMinorantCoeffs& c, const Eigen::VectorXcd& h_k,
                                const Eigen::VectorXcd& w_kg, double phi_kg) {
  const double x = h_k.dot(w_kg).real();
  return c.varphi + c.chi * x - c.varpi * (phi_kg * phi_kg + x * x);
}

inline UlMinorantCoeffs ul_minorant_coeffs(const DesignPoint& expansion, const ChannelSet& ch,
                                           const SystemConfig& cfg, int l, int g) {
  const int Nrx = ch.Nrx();
  UlMinorantCoeffs c;
  c.Theta = Eigen::MatrixXcd::Zero(Nrx, Nrx);
  c.factor = Eigen::VectorXcd::Zero(Nrx);
  const double p = expansion.p(l, g);
  if (!std::isfinite(p)) throw std::domain_error("ul_minorant_coeffs: non-finite uplink amplitude");
  if (p == 0.0) return c;

  const Eigen::MatrixXcd R = ul_covariance_factor(l, g, expansion, ch, cfg);
  const Eigen::VectorXcd z = ul_whiten(R, ch.g.col(l));
  const Eigen::VectorXcd y = R.triangularView<Eigen::Upper>().solve(z);  // Xi^{-1} g_l
  const double gy = z.squaredNorm();
  const double gamma = p * p * gy;
  c.gamma = gamma;
  c.vartheta = std::log1p(gamma) - gamma;
  c.psi = 2.0 * p * gy;
  // Xi^{-1} - (Xi + p^2 g g^H)^{-1} = p^2 y y^H / (1 + gamma) by Sherman-Morrison.
  c.factor = (p / std::sqrt(1.0 + gamma)) * y;
  c.Theta = c.factor * c.factor.adjoint();
  return c;
}

// lambda(w, p): convex quadratic in (w, p) because Theta is PSD.
inline double lambda_eval(const UlMinorantCoeffs& c, const DesignPoint& pt, const ChannelSet& ch,
                          const SystemConfig& cfg, int l, int g) {
  double acc = 0.0;
  for (int j = l; j < pt.L(); ++j) {
    const double pj2 = pt.p(j, g) * pt.p(j, g);
    acc += pj2 * ch.g.col(j).dot(c.Theta * ch.g.col(j)).real();
  }
  if (pt.K() > 0) {
    const Eigen::MatrixXcd M = ch.G_I * c.Theta * ch.G_I.adjoint();  // Ntx x Ntx
    for (int k = 0; k < pt.K(); ++k) acc += cfg.rho * pt.w[g].col(k).dot(M * pt.w[g].col(k)).real();
  }
  acc += cfg.sigma_ul * c.Theta.trace().real();
  return acc;
}

// P(w, p) = vartheta + psi p_l - lambda(w, p).
inline double ul_minorant_value(const UlMinorantCoeffs& c, const DesignPoint& pt, const ChannelSet& ch,
                                const SystemConfig& cfg, int l, int g) {
  return c.vartheta + c.psi * pt.p(l, g) - lambda_eval(c, pt, ch, cfg, l, g);
}

// First-order minorant of x^2 at x_ref.
inline double square_minorant(double x, double x_ref) { return x_ref * x_ref + 2.0 * x_ref * (x - x_ref); }

// Convex majorant of x*y that is tight at (x_ref, y_ref).
inline double bilinear_majorant(double x, double y, double x_ref, double y_ref) {
  if (!(x_ref > 0.0) || !(y_ref > 0.0))
    throw std::domain_error("bilinear_majorant: reference point must be strictly positive");
  const double r = x_ref / y_ref;
  return 0.5 * x * x / r + 0.5 * y * y * r;
}

// Floors applied to degenerate bilinear references before forming r = t/y.
struct BilinearFloors {
  double time = 1e-6;
  double power_fraction = 1e-9;  // multiplied by the relevant budget
};

// All coefficients for one expansion point.
struct MinorantSet {
  int K = 0, L = 0, G = 0;
  std::vector<DlMinorantCoeffs> dl;  // index k * G + g
  std::vector<UlMinorantCoeffs> ul;  // index l * G + g

  const DlMinorantCoeffs& dl_at(int k, int g) const { return dl[static_cast<size_t>(k * G + g)]; }
  const UlMinorantCoeffs& ul_at(int l, int g) const { return ul[static_cast<size_t>(l * G + g)]; }
};

inline MinorantSet compute_minorants(const DesignPoint& expansion, const ChannelSet& ch, const SystemConfig& cfg) {
  MinorantSet s;
  s.K = expansion.K();
  s.L = expansion.L();
  s.G = expansion.G();
  s.dl.reserve(static_cast<size_t>(s.K * s.G));
  s.ul.reserve(static_cast<size_t>(s.L * s.G));
  for (int k = 0; k < s.K; ++k)
    for (int g = 0; g < s.G; ++g) s.dl.push_back(dl_minorant_coeffs(expansion, ch, k, g));
  for (int l = 0; l < s.L; ++l)
    for (int g = 0; g < s.G; ++g) s.ul.push_back(ul_minorant_coeffs(expansion, ch, cfg, l, g));
  return s;
}

// Rotates every w_k^g so that h_k^H w_k^g is real and nonnegative. Rates are
// unchanged.
inline void align_phases(DesignPoint& pt, const ChannelSet& ch) {
  for (int g = 0; g < pt.G(); ++g)
    for (int k = 0; k < pt.K(); ++k) {
      const std::complex<double> z = ch.h.col(k).dot(pt.w[g].col(k));
      const double mag = std::abs(z);
      if (mag > 0.0) pt.w[g].col(k) *= std::conj(z) / mag;
    }
}

// Sets every auxiliary to the value that makes its defining inequality tight
// at the current (w, p, alpha, beta, t), so each minorant equals the exact
// rate at this point.
inline void tighten_auxiliaries(DesignPoint& pt, const ChannelSet& ch, const SystemConfig& cfg) {
  const int K = pt.K(), L = pt.L(), G = pt.G();
  for (int g = 0; g < G; ++g) {
    for (int k = 0; k < K; ++k) {
      const double inr = dl_interference_plus_noise(k, g, pt, ch, cfg);
      const double x = dl_real_gain(k, g, pt, ch);
      pt.phi(k, g) = std::sqrt(inr);
      pt.theta(k, g) = inr + x * x;
      const double rate = std::log1p(x * x / inr);
      pt.tau(k, g) = std::sqrt(std::max(0.0, pt.alpha(k, g)) * rate);
      pt.tau_hat(k, g) = pt.tau(k, g) * pt.tau(k, g);
      pt.tau_tilde(k, g) = std::sqrt(std::max(0.0, pt.t(g)) * pt.tau_hat(k, g));
    }
    for (int l = 0; l < L; ++l) {
      const double gamma = ul_sinr_mmse_sic(l, g, pt, ch, cfg);
      pt.theta_tilde(l, g) = gamma;
      const double rate = std::log1p(gamma);
      pt.kappa(l, g) = std::sqrt(std::max(0.0, pt.beta(l, g)) * rate);
      pt.kappa_hat(l, g) = pt.kappa(l, g) * pt.kappa(l, g);
      pt.kappa_tilde(l, g) = std::sqrt(std::max(0.0, pt.t(g)) * pt.kappa_hat(l, g));
      pt.p_hat(l, g) = pt.p(l, g) * pt.p(l, g);
    }
    pt.omega(g) = pt.w[g].squaredNorm();
  }
}

inline void prepare_expansion(DesignPoint& pt, const ChannelSet& ch, const SystemConfig& cfg) {
  align_phases(pt, ch);
  tighten_auxiliaries(pt, ch, cfg);
}

}  // namespace fdgrouper
