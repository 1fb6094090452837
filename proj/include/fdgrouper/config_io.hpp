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

// JSON scenario configuration. Keys mirror SystemConfig field names (SI units,
// rates in nats); a few unit-suffixed aliases are accepted for convenience:
//   P_bs_dbm, P_ul_dbm, rho_db, noise_dbm_per_hz + bandwidth_hz, Rbar_bps
//   (sets both thresholds), Rbar_dl_bps, Rbar_ul_bps.
// Unknown keys are an error so typos do not silently fall back to defaults.

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include "fdgrouper/system_model.hpp"
#include "fdgrouper/units.hpp"
#include "json.hpp"

namespace fdgrouper {

using json = nlohmann::json;

inline PowerConstraintMode parse_power_mode(const std::string& s) {
  if (s == "time_weighted" || s == "TimeWeighted") return PowerConstraintMode::TimeWeighted;
  if (s == "relaxed" || s == "Relaxed") return PowerConstraintMode::Relaxed;
  throw std::invalid_argument("unknown power_mode '" + s + "'");
}
inline const char* to_string(PowerConstraintMode m) {
  return m == PowerConstraintMode::TimeWeighted ? "time_weighted" : "relaxed";
}

inline DistanceUnit parse_distance_unit(const std::string& s) {
  if (s == "km") return DistanceUnit::Kilometers;
  if (s == "m") return DistanceUnit::Meters;
  throw std::invalid_argument("unknown pathloss_unit '" + s + "' (expected \"km\" or \"m\")");
}

// Applies the recognised keys of `j` on top of `cfg`. Keys listed in `skip`
// are left to the caller.
inline void apply_config_json(const json& j, SystemConfig& cfg, const std::set<std::string>& skip = {}) {
  if (!j.is_object()) throw std::invalid_argument("config: top level must be a JSON object");
  double noise_density = std::numeric_limits<double>::quiet_NaN(), bandwidth = 10e6;
  for (const auto& [key, v] : j.items()) {
    if (skip.count(key)) continue;
    if (key == "K") cfg.K = v.get<int>();
    else if (key == "L") cfg.L = v.get<int>();
    else if (key == "G") cfg.G = v.get<int>();
    else if (key == "Ntx") cfg.Ntx = v.get<int>();
    else if (key == "Nrx") cfg.Nrx = v.get<int>();
    else if (key == "P_bs") cfg.P_bs = v.get<double>();
    else if (key == "P_bs_dbm") cfg.P_bs = dbm_to_watt(v.get<double>());
    else if (key == "P_ul") cfg.P_ul = v.get<double>();
    else if (key == "P_ul_dbm") cfg.P_ul = dbm_to_watt(v.get<double>());
    else if (key == "rho") cfg.rho = v.get<double>();
    else if (key == "rho_db") cfg.rho = db_to_linear(v.get<double>());
    else if (key == "sigma_dl") cfg.sigma_dl = v.get<double>();
    else if (key == "sigma_ul") cfg.sigma_ul = v.get<double>();
    else if (key == "noise_dbm_per_hz") noise_density = v.get<double>();
    else if (key == "bandwidth_hz") bandwidth = v.get<double>();
    else if (key == "Rbar_dl") cfg.Rbar_dl = v.get<double>();
    else if (key == "Rbar_ul") cfg.Rbar_ul = v.get<double>();
    else if (key == "Rbar_dl_bps") cfg.Rbar_dl = bps_to_nats(v.get<double>());
    else if (key == "Rbar_ul_bps") cfg.Rbar_ul = bps_to_nats(v.get<double>());
    else if (key == "Rbar_bps") cfg.Rbar_dl = cfg.Rbar_ul = bps_to_nats(v.get<double>());
    else if (key == "cell_radius") cfg.cell_radius = v.get<double>();
    else if (key == "min_bs_distance") cfg.min_bs_distance = v.get<double>();
    else if (key == "pathloss_unit") cfg.pathloss_unit = parse_distance_unit(v.get<std::string>());
    else if (key == "eps_group") {
      if (v.is_null()) cfg.eps_group.reset();
      else cfg.eps_group = v.get<double>();
    }
    else if (key == "eps_err") cfg.eps_err = v.get<double>();
    else if (key == "omega") cfg.omega = v.get<double>();
    else if (key == "power_mode") cfg.power_mode = parse_power_mode(v.get<std::string>());
    else if (key == "max_iters") cfg.max_iters = v.get<int>();
    else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  if (!std::isnan(noise_density)) cfg.sigma_dl = cfg.sigma_ul = noise_power_watt(noise_density, bandwidth);
}

inline json config_to_json(const SystemConfig& cfg) {
  json j;
  j["K"] = cfg.K;
  j["L"] = cfg.L;
  j["G"] = cfg.G;
  j["Ntx"] = cfg.Ntx;
  j["Nrx"] = cfg.Nrx;
  j["P_bs"] = cfg.P_bs;
  j["P_ul"] = cfg.P_ul;
  j["rho"] = cfg.rho;
  j["sigma_dl"] = cfg.sigma_dl;
  j["sigma_ul"] = cfg.sigma_ul;
  j["Rbar_dl"] = cfg.Rbar_dl;
  j["Rbar_ul"] = cfg.Rbar_ul;
  j["cell_radius"] = cfg.cell_radius;
  j["min_bs_distance"] = cfg.min_bs_distance;
  j["pathloss_unit"] = cfg.pathloss_unit == DistanceUnit::Kilometers ? "km" : "m";
  j["eps_group"] = cfg.eps_group ? json(*cfg.eps_group) : json(nullptr);
  j["eps_err"] = cfg.eps_err;
  j["omega"] = cfg.omega;
  j["power_mode"] = to_string(cfg.power_mode);
  j["max_iters"] = cfg.max_iters;
  j["seed"] = cfg.seed;
  return j;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  try {
    return json::parse(in, nullptr, true, true);  // comments allowed
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config " + path + ": " + e.what());
  }
}

}  // namespace fdgrouper
