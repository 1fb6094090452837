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

// Small conic programs with known answers, shared by the solver tests and the
// acceptance binary.

#include <Eigen/Dense>

#include <limits>
#include <random>
#include <string>
#include <vector>

#include "fdgrouper/conic_program.hpp"

namespace fdgrouper::testing_problems {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Random bounded LP: box plus extra rows all satisfied at a random interior x0.
struct RandomLp {
  Eigen::MatrixXd A;
  Eigen::VectorXd b, c;
};

inline RandomLp random_lp(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nd(1, 6), md(0, 4);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.1, 1.0);
  const int n = nd(rng), extra = md(rng);
  RandomLp lp;
  lp.A = Eigen::MatrixXd::Zero(2 * n + extra, n);
  lp.b.resize(2 * n + extra);
  Eigen::VectorXd x0(n);
  for (int j = 0; j < n; ++j) x0(j) = 0.5 * u(rng);
  for (int j = 0; j < n; ++j) {
    lp.A(2 * j, j) = 1.0;
    lp.b(2 * j) = 1.0 + pos(rng);
    lp.A(2 * j + 1, j) = -1.0;
    lp.b(2 * j + 1) = 1.0 + pos(rng);
  }
  for (int i = 0; i < extra; ++i) {
    for (int j = 0; j < n; ++j) lp.A(2 * n + i, j) = u(rng);
    lp.b(2 * n + i) = lp.A.row(2 * n + i).dot(x0) + pos(rng);
  }
  lp.c.resize(n);
  for (int j = 0; j < n; ++j) lp.c(j) = u(rng);
  return lp;
}

inline ConicProgram lp_program(const RandomLp& lp) {
  ConicProgram p;
  const int n = static_cast<int>(lp.c.size());
  const int x = p.add_block("x", n);
  for (int j = 0; j < n; ++j) p.objective(x + j) = lp.c(j);
  for (int i = 0; i < lp.A.rows(); ++i) {
    AffineExpr e;
    for (int j = 0; j < n; ++j) e.add(x + j, lp.A(i, j));
    p.add_ineq(e, -kInf, lp.b(i), "row" + std::to_string(i));
  }
  return p;
}

// min ||x - a|| over the second-order cone.
inline ConicProgram projection_program(const Eigen::VectorXd& a) {
  ConicProgram p;
  const int m = static_cast<int>(a.size());
  const int x = p.add_block("x", m), t = p.add_block("t", 1);
  p.objective(t) = -1.0;
  std::vector<AffineExpr> diff, body;
  for (int i = 0; i < m; ++i) diff.push_back(AffineExpr::var(x + i).add(AffineExpr(-a(i))));
  p.add_soc(AffineExpr::var(t), diff, "dist");
  for (int i = 1; i < m; ++i) body.push_back(AffineExpr::var(x + i));
  p.add_soc(AffineExpr::var(x), body, "cone");
  return p;
}

}  // namespace fdgrouper::testing_problems
