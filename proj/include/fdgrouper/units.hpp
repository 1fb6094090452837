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

#include <cmath>
#include <numbers>

namespace fdgrouper {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

// Thermal noise power over a bandwidth, from a spectral density in dBm/Hz.
inline double noise_power_watt(double density_dbm_per_hz, double bandwidth_hz) {
  return dbm_to_watt(density_dbm_per_hz + 10.0 * std::log10(bandwidth_hz));
}

inline double nats_to_bps(double nats) { return nats / std::numbers::ln2; }
inline double bps_to_nats(double bps) { return bps * std::numbers::ln2; }

}  // namespace fdgrouper
