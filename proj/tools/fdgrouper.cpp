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


// fdgrouper run --scenario <name> [--config file.json] [--trials N] [--seed S] [--out path] ...
//
// Exit status: 0 on success, 2 if any trial was excluded as infeasible,
// 1 on errors.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fdgrouper/fdgrouper.hpp"

using namespace fdgrouper;

namespace {

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

// Writes the first main subproblem a run of `m` would solve on trial 0.
void dump_program(Method m, const SystemConfig& cfg0, const ChannelSet& ch, const std::string& path) {
  SystemConfig cfg = cfg0;
  if (m == Method::FD_G1) cfg.G = 1;
  if (m == Method::HD) throw std::invalid_argument("--dump-program: HD has no single subproblem; pick another method");
  const AlgorithmKind kind = m == Method::Alg2 ? AlgorithmKind::Alg2 : AlgorithmKind::Alg1;
  const DesignPoint x = initialize(kind, ch, cfg);
  SubproblemOptions so;
  so.kind = kind == AlgorithmKind::Alg2 ? SubproblemKind::Alg2Main : SubproblemKind::Alg1Main;
  so.power_mode = cfg.power_mode;
  so.with_omega_constraints = kind == AlgorithmKind::Alg2 && cfg.omega > 0.0;
  const Subproblem sub = build_subproblem(so, x, ch, cfg);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_program(out, sub.program);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Full-duplex user grouping and time allocation: sum-rate experiments"};
  app.require_subcommand(1);
  CLI::App* run = app.add_subcommand("run", "Run a Monte-Carlo scenario and write CSV");

  std::string scenario_name, config_path, out_path, grid_arg, methods_arg, power_mode, dump_path;
  std::optional<int> trials, K, L, G, Ntx, Nrx, max_iters;
  std::optional<std::uint64_t> seed;
  std::optional<double> rho_db, rbar_bps, omega, eps_err;
  bool print_config = false;

  run->add_option("--scenario", scenario_name, "Convergence | SweepRho | SweepRbar | SweepUsers | GroupingTable")
      ->required();
  run->add_option("--config", config_path, "JSON file with SystemConfig fields and an optional \"scenario\" object")
      ->check(CLI::ExistingFile);
  run->add_option("--trials", trials, "Monte-Carlo trials per grid point (default 20)")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Base seed");
  run->add_option("--out", out_path, "CSV output path (default stdout)");
  run->add_option("--grid", grid_arg, "Comma-separated sweep values");
  run->add_option("--methods", methods_arg, "Comma-separated subset of Alg1,Alg2,FD_G1,HD");
  run->add_option("--K", K);
  run->add_option("--L", L);
  run->add_option("--G", G);
  run->add_option("--Ntx", Ntx);
  run->add_option("--Nrx", Nrx);
  run->add_option("--rho-db", rho_db);
  run->add_option("--rbar-bps", rbar_bps, "Rate threshold for every user, bps/Hz");
  run->add_option("--omega", omega);
  run->add_option("--eps-err", eps_err);
  run->add_option("--max-iters", max_iters);
  run->add_option("--power-mode", power_mode, "time_weighted | relaxed");
  run->add_option("--dump-program", dump_path, "Write the first subproblem of trial 0 and exit");
  run->add_flag("--print-config", print_config, "Print the effective configuration as JSON to stderr");

  CLI11_PARSE(app, argc, argv);

  try {
    Scenario sc = Scenario::defaults(parse_scenario(scenario_name));
    SystemConfig cfg;
    if (!config_path.empty()) {
      const json j = read_json_file(config_path);
      apply_config_json(j, cfg, {"scenario"});
      if (j.contains("scenario")) {
        const json& s = j.at("scenario");
        for (const auto& [key, v] : s.items()) {
          if (key == "grid") sc.grid = v.get<std::vector<double>>();
          else if (key == "trials") sc.trials = v.get<int>();
          else if (key == "methods") {
            sc.methods.clear();
            for (const auto& m : v) sc.methods.push_back(parse_method(m.get<std::string>()));
          } else {
            throw std::invalid_argument("config: unknown scenario key '" + key + "'");
          }
        }
      }
    }
    if (K) cfg.K = *K;
    if (L) cfg.L = *L;
    if (G) cfg.G = *G;
    if (Ntx) cfg.Ntx = *Ntx;
    if (Nrx) cfg.Nrx = *Nrx;
    if (rho_db) cfg.rho = db_to_linear(*rho_db);
    if (rbar_bps) cfg.Rbar_dl = cfg.Rbar_ul = bps_to_nats(*rbar_bps);
    if (omega) cfg.omega = *omega;
    if (eps_err) cfg.eps_err = *eps_err;
    if (max_iters) cfg.max_iters = *max_iters;
    if (!power_mode.empty()) cfg.power_mode = parse_power_mode(power_mode);
    if (seed) cfg.seed = *seed;
    if (trials) sc.trials = *trials;
    if (!grid_arg.empty()) {
      sc.grid.clear();
      for (const auto& v : split(grid_arg)) sc.grid.push_back(std::stod(v));
    }
    if (!methods_arg.empty()) {
      sc.methods.clear();
      for (const auto& m : split(methods_arg)) sc.methods.push_back(parse_method(m));
    }
    cfg.validate();
    sc.validate();
    if (print_config) std::cerr << config_to_json(cfg).dump(2) << '\n';

    if (!dump_path.empty()) {
      const SystemConfig c = apply_grid(sc.kind, sc.grid.front(), cfg);
      const TrialChannels tc = draw_trial(c, cfg.seed, 0, 0);
      dump_program(sc.methods.front(), c, tc.ch, dump_path);
      return 0;
    }

    const ScenarioResult res = run_scenario(sc, cfg);
    if (out_path.empty()) {
      write_csv(res, std::cout);
    } else {
      std::ofstream out(out_path);
      if (!out) throw std::runtime_error("cannot write " + out_path);
      write_csv(res, out);
    }
    for (const auto& m : res.error_messages) std::cerr << "error: " << m << '\n';
    if (res.excluded > 0) std::cerr << res.excluded << " method run(s) excluded as infeasible\n";
    return exit_code(res);
  } catch (const std::exception& e) {
    std::cerr << "fdgrouper: " << e.what() << '\n';
    return 1;
  }
}
