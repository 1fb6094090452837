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

#include "fdgrouper/experiments.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "fdgrouper/config_io.hpp"

namespace fdgrouper {
namespace {

SystemConfig small_config() {
  SystemConfig c;
  c.K = c.L = 2;
  c.G = 2;
  c.Ntx = c.Nrx = 2;
  c.Rbar_dl = c.Rbar_ul = bps_to_nats(0.5);
  c.seed = 3;
  return c;
}

std::string csv_of(const Scenario& s, const SystemConfig& c) {
  std::ostringstream os;
  write_csv(run_scenario(s, c), os);
  return os.str();
}

TEST(Scenario, SameSeedByteIdenticalCsv) {
  Scenario s = Scenario::defaults(ScenarioKind::SweepRho);
  s.grid = {-75.0};
  s.trials = 1;
  s.methods = {Method::Alg1, Method::HD};
  const SystemConfig c = small_config();
  const std::string a = csv_of(s, c), b = csv_of(s, c);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.substr(0, a.find('\n')),
            "scenario,method,grid_param,grid_value,K,L,G,Ntx,Nrx,rho_db,rbar_dl_bps,rbar_ul_bps,trials,"
            "feasible,excluded,errors,mean_sr_bps,stderr_sr_bps,mean_iterations,min_user_rate_bps");
  EXPECT_NE(a.find("SweepRho,Alg1,rho_db,-75.000000,2,2,2,2,2,-75.000000,0.500000"), std::string::npos) << a;
}

TEST(Scenario, MoreTrialsExtendEarlierOnes) {
  Scenario s = Scenario::defaults(ScenarioKind::Convergence);
  s.methods = {Method::Alg1};
  s.trials = 1;
  const SystemConfig c = small_config();
  const std::string one = csv_of(s, c);
  s.trials = 2;
  const std::string two = csv_of(s, c);
  EXPECT_EQ(two.compare(0, one.size(), one), 0);
  EXPECT_GT(two.size(), one.size());
}

TEST(Scenario, ThreadCountDoesNotChangeOutput) {
  Scenario s = Scenario::defaults(ScenarioKind::SweepRbar);
  s.grid = {0.5, 1.0};
  s.trials = 2;
  s.methods = {Method::FD_G1};
  const SystemConfig c = small_config();
  setenv("FDGROUPER_THREADS", "1", 1);
  const std::string serial = csv_of(s, c);
  setenv("FDGROUPER_THREADS", "3", 1);
  const std::string parallel = csv_of(s, c);
  unsetenv("FDGROUPER_THREADS");
  EXPECT_EQ(serial, parallel);
}

TEST(Scenario, InfeasibleTrialsAreExcludedAndCounted) {
  Scenario s = Scenario::defaults(ScenarioKind::SweepRbar);
  s.grid = {1.0};
  s.trials = 2;
  s.methods = {Method::Alg1};
  SystemConfig c = small_config();
  c.P_bs = 1e-25;
  const ScenarioResult r = run_scenario(s, c);
  EXPECT_EQ(r.excluded, 2);
  EXPECT_EQ(r.errors, 0);
  EXPECT_EQ(exit_code(r), 2);
  const Summary sm = summarize(r.grid[0], 0);
  EXPECT_EQ(sm.feasible, 0);
  EXPECT_EQ(sm.excluded, 2);
  std::ostringstream os;
  write_csv(r, os);
  EXPECT_NE(os.str().find(",2,0,2,0,nan,nan,nan,nan"), std::string::npos) << os.str();
}

TEST(Scenario, ExitCodes) {
  ScenarioResult r;
  EXPECT_EQ(exit_code(r), 0);
  r.excluded = 1;
  EXPECT_EQ(exit_code(r), 2);
  r.errors = 1;
  EXPECT_EQ(exit_code(r), 1);
}

TEST(Scenario, GroupingTableRowsAreConsistent) {
  Scenario s = Scenario::defaults(ScenarioKind::GroupingTable);
  s.trials = 1;
  s.methods = {Method::Alg2};
  const SystemConfig c = small_config();
  const ScenarioResult r = run_scenario(s, c);
  ASSERT_EQ(r.errors, 0);
  const MethodOutcome& o = r.grid[0].trials[0][0];
  ASSERT_EQ(o.status, MethodOutcome::Status::Ok);
  EXPECT_NEAR(o.sum_rate, o.rates.dl.sum() + o.rates.ul.sum(), 1e-6);
  for (int k = 0; k < c.K; ++k) EXPECT_GE(nats_to_bps(o.rates.dl.row(k).sum()), 0.5 - 1e-3);
  for (int l = 0; l < c.L; ++l) EXPECT_GE(nats_to_bps(o.rates.ul.row(l).sum()), 0.5 - 1e-3);

  std::ostringstream os;
  write_csv(r, os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "scenario,method,trial,direction,user,group,rate_bps,active");
  double per_group = 0.0, total = -1.0;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
    if (f[3] == "all") total = std::stod(f[6]);
    else if (f[5] != "total") per_group += std::stod(f[6]);
  }
  EXPECT_EQ(rows, (c.K + c.L) * (c.G + 1) + 1);
  EXPECT_NEAR(per_group, total, 1e-5);
}

TEST(Scenario, ValidateAndParse) {
  Scenario s = Scenario::defaults(ScenarioKind::SweepUsers);
  EXPECT_NO_THROW(s.validate());
  s.trials = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  EXPECT_EQ(parse_scenario("GroupingTable"), ScenarioKind::GroupingTable);
  EXPECT_EQ(parse_method("FD_G1"), Method::FD_G1);
  EXPECT_THROW(parse_method("fd"), std::invalid_argument);
  EXPECT_THROW(apply_grid(ScenarioKind::SweepUsers, 2.5, SystemConfig{}), std::invalid_argument);
  EXPECT_EQ(apply_grid(ScenarioKind::SweepUsers, 6, SystemConfig{}).L, 6);
  EXPECT_NEAR(apply_grid(ScenarioKind::SweepRho, -60, SystemConfig{}).rho, 1e-6, 1e-18);
}

TEST(Trials, SeedDependsOnGridAndTrial) {
  const SystemConfig c = small_config();
  const auto a = draw_trial(c, 1, 0, 0), b = draw_trial(c, 1, 0, 1), d = draw_trial(c, 1, 1, 0);
  EXPECT_NE(a.seed, b.seed);
  EXPECT_NE(a.seed, d.seed);
  EXPECT_EQ(draw_trial(c, 1, 0, 1).ch.h, b.ch.h);
}

TEST(ConfigJson, AliasesAndUnits) {
  SystemConfig c;
  apply_config_json(json::parse(R"({"P_bs_dbm": 30, "P_ul_dbm": 0, "rho_db": -90, "Rbar_bps": 2,
                                    "noise_dbm_per_hz": -174, "bandwidth_hz": 1e6, "pathloss_unit": "m",
                                    "power_mode": "relaxed", "K": 3, "eps_group": 1e-4})"),
                    c);
  EXPECT_NEAR(c.P_bs, 1.0, 1e-12);
  EXPECT_NEAR(c.P_ul, 1e-3, 1e-15);
  EXPECT_NEAR(c.rho, 1e-9, 1e-21);
  EXPECT_NEAR(c.Rbar_dl, bps_to_nats(2.0), 1e-12);
  EXPECT_NEAR(c.sigma_ul, noise_power_watt(-174.0, 1e6), 1e-25);
  EXPECT_EQ(c.pathloss_unit, DistanceUnit::Meters);
  EXPECT_EQ(c.power_mode, PowerConstraintMode::Relaxed);
  EXPECT_EQ(c.K, 3);
  EXPECT_DOUBLE_EQ(c.grouping_threshold(), 1e-4);
}

TEST(ConfigJson, RejectsUnknownKeysAndBadValues) {
  SystemConfig c;
  EXPECT_THROW(apply_config_json(json::parse(R"({"Kay": 3})"), c), std::invalid_argument);
  EXPECT_THROW(apply_config_json(json::parse(R"({"power_mode": "both"})"), c), std::invalid_argument);
  EXPECT_THROW(apply_config_json(json::parse(R"([1, 2])"), c), std::invalid_argument);
  EXPECT_NO_THROW(apply_config_json(json::parse(R"({"scenario": {}})"), c, {"scenario"}));
}

TEST(ConfigJson, RoundTrip) {
  SystemConfig c = small_config();
  c.omega = 4.0;
  c.eps_group = 2e-4;
  SystemConfig d;
  apply_config_json(config_to_json(c), d);
  EXPECT_EQ(d.K, c.K);
  EXPECT_EQ(d.G, c.G);
  EXPECT_DOUBLE_EQ(d.P_bs, c.P_bs);
  EXPECT_DOUBLE_EQ(d.Rbar_ul, c.Rbar_ul);
  EXPECT_DOUBLE_EQ(d.omega, 4.0);
  EXPECT_DOUBLE_EQ(*d.eps_group, 2e-4);
  EXPECT_EQ(d.seed, c.seed);
}

}  // namespace
}  // namespace fdgrouper
