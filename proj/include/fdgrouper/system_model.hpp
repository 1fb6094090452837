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

// Scenario configuration, user placement, path loss, and Rayleigh channel draws.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdgrouper/units.hpp"

namespace fdgrouper {

using Rng = std::mt19937_64;

enum class PowerConstraintMode { TimeWeighted, Relaxed };

// Unit in which the distance enters the log-distance path-loss formulas.
enum class DistanceUnit { Meters, Kilometers };

struct SystemConfig {
  int K = 4;  // downlink users
  int L = 4;  // uplink users
  int G = 2;  // groups (time slots)
  int Ntx = 4;
  int Nrx = 4;

  double P_bs = dbm_to_watt(26.0);  // W
  double P_ul = dbm_to_watt(10.0);  // W, per uplink user
  double rho = db_to_linear(-75.0); // residual self-interference, linear

  // Noise *powers* in W (-174 dBm/Hz over 10 MHz).
  double sigma_dl = noise_power_watt(-174.0, 10e6);
  double sigma_ul = noise_power_watt(-174.0, 10e6);

  // Per-user rate thresholds in nats per channel use.
  double Rbar_dl = bps_to_nats(1.0);
  double Rbar_ul = bps_to_nats(1.0);

  double cell_radius = 100.0;     // m
  double min_bs_distance = 10.0;  // m
  DistanceUnit pathloss_unit = DistanceUnit::Kilometers;

  // Grouping extraction threshold; unset selects 1e-3 * sqrt(P_bs / K).
  std::optional<double> eps_group;
  double eps_err = 1e-3;
  // Grouping-assignment constant for Algorithm 2; 0 disables those rows.
  double omega = 10.0;
  PowerConstraintMode power_mode = PowerConstraintMode::TimeWeighted;
  int max_iters = 100;
  std::uint64_t seed = 1;

  double grouping_threshold() const {
    if (eps_group) return *eps_group;
    return 1e-3 * std::sqrt(P_bs / std::max(K, 1));
  }

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw std::invalid_argument(std::string("SystemConfig: ") + what);
    };
    require(K >= 0 && L >= 0 && K + L >= 1, "need K, L >= 0 and at least one user");
    require(G >= 1, "G must be >= 1");
    require(Ntx >= 1 && Nrx >= 1, "antenna counts must be >= 1");
    require(P_bs > 0 && P_ul > 0, "power budgets must be positive");
    require(rho >= 0 && rho <= 1, "rho must lie in [0, 1]");
    require(sigma_dl > 0 && sigma_ul > 0, "noise powers must be positive");
    require(Rbar_dl >= 0 && Rbar_ul >= 0, "rate thresholds must be nonnegative");
    require(cell_radius > 0 && min_bs_distance > 0, "radii must be positive");
    require(min_bs_distance < cell_radius, "min_bs_distance must be below cell_radius");
    require(!eps_group || *eps_group > 0, "eps_group must be positive");
    require(eps_err > 0, "eps_err must be positive");
    require(omega >= 0, "omega must be nonnegative");
    require(max_iters >= 1, "max_iters must be >= 1");
  }
};

struct Position {
  double x = 0.0;
  double y = 0.0;
  double norm() const { return std::hypot(x, y); }
};

inline double distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct UserLayout {
  std::vector<Position> dl_positions;
  std::vector<Position> ul_positions;
  Position bs_position{};
};

struct ChannelSet {
  Eigen::MatrixXcd h;       // Ntx x K, column k is h_k
  Eigen::MatrixXcd g;       // Nrx x L, column l is g_l
  Eigen::MatrixXcd g_hat;   // L x K cross channels
  Eigen::MatrixXcd G_I;     // Ntx x Nrx loop channel (unscaled by rho)
  Eigen::VectorXd pl_dl;    // K linear gains
  Eigen::VectorXd pl_ul;    // L
  Eigen::MatrixXd pl_cross; // L x K

  int K() const { return static_cast<int>(h.cols()); }
  int L() const { return static_cast<int>(g.cols()); }
  int Ntx() const { return static_cast<int>(G_I.rows()); }
  int Nrx() const { return static_cast<int>(G_I.cols()); }
};

enum class PathLossKind { LOS, NLOS };

// Log-distance loss in dB; `d` is in the unit the formula is stated in.
inline double path_loss_db(PathLossKind kind, double d) {
  if (!(d > 0.0)) throw std::domain_error("path_loss_db: distance must be positive");
  switch (kind) {
    case PathLossKind::LOS:
      return 103.8 + 20.9 * std::log10(d);
    case PathLossKind::NLOS:
      return 145.4 + 37.5 * std::log10(d);
  }
  return 0.0;
}

inline double path_loss_db(PathLossKind kind, double meters, DistanceUnit unit) {
  return path_loss_db(kind, unit == DistanceUnit::Kilometers ? meters / 1000.0 : meters);
}

inline double path_loss_gain(PathLossKind kind, double meters, DistanceUnit unit) {
  return db_to_linear(-path_loss_db(kind, meters, unit));
}

namespace detail {

inline Position sample_in_annulus(double radius, double min_radius, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr int kMaxResamples = 1'000'000;
  for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
    // Uniform over the disk: r = R sqrt(u).
    const double r = radius * std::sqrt(unit(rng));
    const double a = 2.0 * std::numbers::pi * unit(rng);
    if (r >= min_radius) return {r * std::cos(a), r * std::sin(a)};
  }
  throw std::runtime_error("generate_layout: rejection sampling exceeded 1e6 resamples");
}

// CN(0, 1) entries.
inline Eigen::MatrixXcd cscg(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  Eigen::MatrixXcd m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) {
      const double re = n(rng);
      const double im = n(rng);
      m(r, c) = {re, im};
    }
  return m;
}

}  // namespace detail

inline UserLayout generate_layout(const SystemConfig& cfg, Rng& rng) {
  cfg.validate();
  UserLayout layout;
  layout.dl_positions.reserve(cfg.K);
  layout.ul_positions.reserve(cfg.L);
  for (int k = 0; k < cfg.K; ++k)
    layout.dl_positions.push_back(detail::sample_in_annulus(cfg.cell_radius, cfg.min_bs_distance, rng));
  for (int l = 0; l < cfg.L; ++l)
    layout.ul_positions.push_back(detail::sample_in_annulus(cfg.cell_radius, cfg.min_bs_distance, rng));
  return layout;
}

// Draws small-scale fading for given path losses. Order of draws: h, g, g_hat, G_I.
inline ChannelSet draw_fading(const Eigen::VectorXd& pl_dl, const Eigen::VectorXd& pl_ul,
                              const Eigen::MatrixXd& pl_cross, int Ntx, int Nrx, Rng& rng) {
  const int K = static_cast<int>(pl_dl.size());
  const int L = static_cast<int>(pl_ul.size());
  ChannelSet ch;
  ch.pl_dl = pl_dl;
  ch.pl_ul = pl_ul;
  ch.pl_cross = pl_cross;
  ch.h = detail::cscg(Ntx, K, rng);
  for (int k = 0; k < K; ++k) ch.h.col(k) *= std::sqrt(pl_dl(k));
  ch.g = detail::cscg(Nrx, L, rng);
  for (int l = 0; l < L; ++l) ch.g.col(l) *= std::sqrt(pl_ul(l));
  ch.g_hat = detail::cscg(L, K, rng);
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k) ch.g_hat(l, k) *= std::sqrt(pl_cross(l, k));
  ch.G_I = detail::cscg(Ntx, Nrx, rng);
  return ch;
}

inline ChannelSet generate_channels(const UserLayout& layout, const SystemConfig& cfg, Rng& rng) {
  const int K = static_cast<int>(layout.dl_positions.size());
  const int L = static_cast<int>(layout.ul_positions.size());
  if (K != cfg.K || L != cfg.L)
    throw std::invalid_argument("generate_channels: layout does not match config user counts");
  Eigen::VectorXd pl_dl(K), pl_ul(L);
  Eigen::MatrixXd pl_cross(L, K);
  for (int k = 0; k < K; ++k)
    pl_dl(k) = path_loss_gain(PathLossKind::LOS, distance(layout.dl_positions[k], layout.bs_position),
                              cfg.pathloss_unit);
  for (int l = 0; l < L; ++l)
    pl_ul(l) = path_loss_gain(PathLossKind::LOS, distance(layout.ul_positions[l], layout.bs_position),
                              cfg.pathloss_unit);
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k)
      pl_cross(l, k) = path_loss_gain(PathLossKind::NLOS,
                                      distance(layout.ul_positions[l], layout.dl_positions[k]),
                                      cfg.pathloss_unit);
  return draw_fading(pl_dl, pl_ul, pl_cross, cfg.Ntx, cfg.Nrx, rng);
}

// Mixes (seed, a, b) into an independent stream seed (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

}  // namespace fdgrouper
