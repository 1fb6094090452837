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


#include "fdgrouper/conic_model.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "fdgrouper/system_model.hpp"

namespace fdgrouper {
namespace {

struct Scene {
  SystemConfig cfg;
  ChannelSet ch;
  DesignPoint x;
};

// MRT beams and full uplink power, split evenly over groups.
Scene make_scene(int K, int L, int G, int Ntx, std::uint64_t seed, double rbar = 0.0) {
  Scene s;
  s.cfg.K = K, s.cfg.L = L, s.cfg.G = G, s.cfg.Ntx = Ntx, s.cfg.Nrx = Ntx;
  s.cfg.Rbar_dl = s.cfg.Rbar_ul = rbar;
  Rng rng(seed);
  const auto layout = generate_layout(s.cfg, rng);
  s.ch = generate_channels(layout, s.cfg, rng);
  s.x = DesignPoint::zeros(K, L, G, Ntx);
  for (int g = 0; g < G; ++g) {
    for (int k = 0; k < K; ++k) s.x.w[g].col(k) = s.ch.h.col(k).normalized() * std::sqrt(s.cfg.P_bs / K);
    for (int l = 0; l < L; ++l) s.x.p(l, g) = std::sqrt(s.cfg.P_ul);
  }
  prepare_expansion(s.x, s.ch, s.cfg);
  return s;
}

TEST(ConicModel, CensusSingleUserEachWay) {
  const Scene s = make_scene(1, 1, 1, 2, 3);
  const auto sub = build_subproblem({}, s.x, s.ch, s.cfg);
  const Census c = sub.program.census();
  EXPECT_EQ(c.real_vars, 2 * 2 * 1 + 4);  // w, p, phi, theta, theta_tilde
  EXPECT_EQ(c.aux_vars, 1);
  EXPECT_EQ(c.ineq_rows, 4);  // signal_re, p >= 0, two rate rows
  EXPECT_EQ(c.soc_cones, 3);  // interference, BS power, UL power
  EXPECT_EQ(c.rsoc_cones, 2);
  EXPECT_EQ(c.eq_rows, 0);
}

TEST(ConicModel, Alg2CensusMatchesFormula) {
  for (int K : {1, 3})
    for (int L : {2, 3})
      for (int G : {1, 2}) {
        const Scene s = make_scene(K, L, G, 2, 11 + K + L + G);
        SubproblemOptions o;
        o.kind = SubproblemKind::Alg2Main;
        const auto sub = build_subproblem(o, s.x, s.ch, s.cfg);
        const Census c = sub.program.census();
        EXPECT_EQ(c.paper_vars, (2 * K + 6 * K + 7 * L + 2) * G) << K << L << G;
        EXPECT_EQ(c.aux_vars, 0);
      }
}

TEST(ConicModel, PackExtractRoundTrip) {
  for (auto kind : {SubproblemKind::Alg1Main, SubproblemKind::Alg2Main}) {
    const Scene s = make_scene(3, 2, 2, 3, 5);
    SubproblemOptions o;
    o.kind = kind;
    const auto sub = build_subproblem(o, s.x, s.ch, s.cfg);
    const Eigen::VectorXd raw = pack_point(sub, s.x);
    const DesignPoint y = extract_raw(sub, raw);
    for (int g = 0; g < 2; ++g) EXPECT_LT((y.w[g] - s.x.w[g]).norm(), 1e-12 * s.x.w[g].norm());
    EXPECT_LT((y.p - s.x.p).norm(), 1e-12 * s.x.p.norm());
    EXPECT_LT((y.phi - s.x.phi).norm(), 1e-9 * s.x.phi.norm());
    EXPECT_LT((y.theta - s.x.theta).norm(), 1e-7 * s.x.theta.norm());
    EXPECT_LT((y.theta_tilde - s.x.theta_tilde).norm(), 1e-7 * (1.0 + s.x.theta_tilde.norm()));
    EXPECT_LT((y.tau_tilde - s.x.tau_tilde).norm(), 1e-12 + 1e-12 * s.x.tau_tilde.norm());
  }
}

// At a tightened expansion, the conic objective equals the exact sum rate.
TEST(ConicModel, ObjectiveTightAtExpansion) {
  for (auto kind : {SubproblemKind::Alg1Main, SubproblemKind::Alg2Main}) {
    const Scene s = make_scene(3, 3, 2, 3, 7);
    SubproblemOptions o;
    o.kind = kind;
    const auto sub = build_subproblem(o, s.x, s.ch, s.cfg);
    const double exact = weighted_sum_rate(s.x, s.ch, s.cfg);
    const double conic = sub.program.objective_value(pack_point(sub, s.x));
    EXPECT_NEAR(conic, exact, 1e-9 * (1.0 + exact)) << to_string(kind);
    EXPECT_NEAR(surrogate_objective(sub, s.x, s.ch, s.cfg), exact, 1e-8 * (1.0 + exact)) << to_string(kind);
  }
}

TEST(ConicModel, SolvedPointAgreesWithSurrogateAndAscends) {
  for (auto kind : {SubproblemKind::Alg1Main, SubproblemKind::Alg2Main}) {
    const Scene s = make_scene(2, 2, 2, 2, 9);
    SubproblemOptions o;
    o.kind = kind;
    const auto sub = build_subproblem(o, s.x, s.ch, s.cfg);
    const auto res = solve(sub.program);
    ASSERT_TRUE(is_usable(res.status)) << to_string(res.status);
    const DesignPoint y = extract_point(sub, res);
    const double sur = surrogate_objective(sub, y, s.ch, s.cfg);
    EXPECT_NEAR(sur, res.obj, 1e-5 * (1.0 + std::abs(res.obj))) << to_string(kind);
    const double before = weighted_sum_rate(s.x, s.ch, s.cfg);
    EXPECT_GE(res.obj, before - 1e-6);
    // Minorant property: the exact rate at the new point is at least the surrogate.
    EXPECT_GE(weighted_sum_rate(y, s.ch, s.cfg), sur - 1e-5 * (1.0 + sur)) << to_string(kind);
  }
}

TEST(ConicModel, InitNeedsPositiveThreshold) {
  const Scene s = make_scene(2, 2, 1, 2, 1, 0.0);
  SubproblemOptions o;
  o.kind = SubproblemKind::Alg1Init;
  EXPECT_THROW(build_subproblem(o, s.x, s.ch, s.cfg), std::invalid_argument);
}

TEST(ConicModel, InitMaximinSolves) {
  const Scene s = make_scene(2, 2, 1, 2, 4, 0.5);
  SubproblemOptions o;
  o.kind = SubproblemKind::Alg1Init;
  const auto sub = build_subproblem(o, s.x, s.ch, s.cfg);
  const auto res = solve(sub.program);
  ASSERT_TRUE(is_usable(res.status));
  const DesignPoint y = extract_point(sub, res);
  EXPECT_NEAR(maximin_value(sub, res.x), surrogate_objective(sub, y, s.ch, s.cfg), 1e-5);
}

TEST(ConicModel, RejectsZeroPhi) {
  Scene s = make_scene(2, 1, 1, 2, 2);
  s.x.phi(1, 0) = 0.0;
  try {
    build_subproblem({}, s.x, s.ch, s.cfg);
    FAIL();
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("k=1"), std::string::npos);
  }
}

TEST(ConicModel, ExtractRejectsInfeasible) {
  const Scene s = make_scene(1, 1, 1, 2, 2);
  const auto sub = build_subproblem({}, s.x, s.ch, s.cfg);
  SolverResult r;
  r.status = SolverStatus::Infeasible;
  EXPECT_THROW(extract_point(sub, r), ExtractionError);
}

TEST(ConicModel, ProgramSerializes) {
  const Scene s = make_scene(2, 2, 2, 2, 8);
  SubproblemOptions o;
  o.kind = SubproblemKind::Alg2Main;
  o.with_omega_constraints = true;
  const auto sub = build_subproblem(o, s.x, s.ch, s.cfg);
  std::stringstream ss;
  write_program(ss, sub.program);
  const ConicProgram back = read_program(ss);
  const Eigen::VectorXd raw = pack_point(sub, s.x);
  EXPECT_NEAR(back.objective_value(raw), sub.program.objective_value(raw), 1e-12);
  EXPECT_EQ(back.census().soc_cones, sub.program.census().soc_cones);
}

}  // namespace
}  // namespace fdgrouper
