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

// Independent reference computations used by the tests. Nothing here shares
// code with the library's evaluation paths.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace fdgrouper::oracle {

// Maximize c'x subject to A x <= b by enumerating every vertex. Assumes the
// feasible set is bounded. Returns nullopt if no vertex is feasible.
inline std::optional<double> lp_vertex_max(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                           const Eigen::VectorXd& c, double feas_tol = 1e-9) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  std::optional<double> best;
  std::vector<int> pick(n);
  for (int i = 0; i < n; ++i) pick[i] = i;
  while (true) {
    Eigen::MatrixXd M(n, n);
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) {
      M.row(i) = A.row(pick[i]);
      r(i) = b(pick[i]);
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (lu.isInvertible()) {
      const Eigen::VectorXd x = lu.solve(r);
      if (((A * x - b).array() <= feas_tol * (1.0 + b.cwiseAbs().maxCoeff())).all()) {
        const double v = c.dot(x);
        if (!best || v > *best) best = v;
      }
    }
    int i = n - 1;
    while (i >= 0 && pick[i] == m - n + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < n; ++j) pick[j] = pick[j - 1] + 1;
  }
  return best;
}

// Euclidean projection onto {x : ||x_1..|| <= x_0}.
inline Eigen::VectorXd soc_projection(const Eigen::VectorXd& a) {
  const double a0 = a(0);
  const double r = a.tail(a.size() - 1).norm();
  if (r <= a0) return a;
  if (r <= -a0) return Eigen::VectorXd::Zero(a.size());
  Eigen::VectorXd p(a.size());
  const double scale = 0.5 * (a0 + r);
  p(0) = scale;
  p.tail(a.size() - 1) = scale * a.tail(a.size() - 1) / r;
  return p;
}

// Downlink SINR written out scalar by scalar. h: Ntx x K, w: Ntx x K,
// p: L amplitudes, ghat: L x K.
inline double dl_sinr_scalar(int k, const Eigen::MatrixXcd& h, const Eigen::MatrixXcd& w, const Eigen::VectorXd& p,
                             const Eigen::MatrixXcd& ghat, double sigma2) {
  auto inner = [&](int user, int beam) {
    std::complex<double> acc = 0.0;
    for (int a = 0; a < h.rows(); ++a) acc += std::conj(h(a, user)) * w(a, beam);
    return acc;
  };
  const double sig = std::norm(inner(k, k));
  double den = sigma2;
  for (int i = 0; i < w.cols(); ++i)
    if (i != k) den += std::norm(inner(k, i));
  for (int l = 0; l < p.size(); ++l) den += p(l) * p(l) * std::norm(ghat(l, k));
  return sig / den;
}

// Uplink MMSE-SIC SINR with an explicit matrix inverse.
inline double ul_sinr_explicit(int l, const Eigen::MatrixXcd& g, const Eigen::VectorXd& p, const Eigen::MatrixXcd& GI,
                               const Eigen::MatrixXcd& w, double rho, double sigma2) {
  const int Nrx = static_cast<int>(g.rows());
  Eigen::MatrixXcd X = sigma2 * Eigen::MatrixXcd::Identity(Nrx, Nrx);
  for (int j = l + 1; j < g.cols(); ++j) X += p(j) * p(j) * g.col(j) * g.col(j).adjoint();
  for (int k = 0; k < w.cols(); ++k) {
    const Eigen::VectorXcd v = GI.adjoint() * w.col(k);
    X += rho * v * v.adjoint();
  }
  const Eigen::MatrixXcd Xi = X.inverse();
  return p(l) * p(l) * (g.col(l).adjoint() * Xi * g.col(l))(0, 0).real();
}

// ln det(I + sigma^-2 sum_l p_l^2 g_l g_l^H).
inline double ul_sum_capacity(const Eigen::MatrixXcd& g, const Eigen::VectorXd& p, double sigma2) {
  const int Nrx = static_cast<int>(g.rows());
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(Nrx, Nrx);
  for (int l = 0; l < g.cols(); ++l) M += (p(l) * p(l) / sigma2) * g.col(l) * g.col(l).adjoint();
  return std::log(M.determinant().real());
}

inline Eigen::MatrixXcd random_cmat(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5) * scale);
  Eigen::MatrixXcd m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = {nd(rng), nd(rng)};
  return m;
}

}  // namespace fdgrouper::oracle
