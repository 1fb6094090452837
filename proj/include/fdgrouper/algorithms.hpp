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

// Outer SCA loops, initial-point search, grouping extraction and baselines.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fdgrouper/conic_model.hpp"
#include "fdgrouper/rate_engine.hpp"
#include "fdgrouper/sca_approx.hpp"
#include "fdgrouper/solver.hpp"
#include "fdgrouper/system_model.hpp"

namespace fdgrouper {

class InfeasibleScenario : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AlgorithmKind { Alg1, Alg2 };

struct IterationRecord {
  double surrogate = 0.0;  // subproblem optimum, nats
  double exact = 0.0;      // weighted sum rate at the accepted point, nats
  SolverStatus status = SolverStatus::Optimal;
  double max_residual = 0.0;
  double wall_ms = 0.0;
  bool damped = false;  // accepted after the halving fallback
};

struct RunTrace {
  std::vector<IterationRecord> iterations;
  double initial_exact = 0.0;
  bool converged = false;
  bool aborted = false;      // solver failure ended the run early
  int rejected_steps = 0;    // candidate points that would have lowered the exact objective
  int init_solves = 0;
  DesignPoint point;         // last accepted iterate (soft alpha/beta for Algorithm 2)
  Eigen::MatrixXd alpha_hard, beta_hard;
  PerUserRates rates;        // at the hardened point, nats

  int iterations_used() const { return static_cast<int>(iterations.size()); }
  double final_exact() const { return iterations.empty() ? initial_exact : iterations.back().exact; }
  double sum_rate() const { return rates.total(); }
};

// Fixed grouping and time for Algorithm 1.
struct Allocation {
  Eigen::MatrixXd alpha, beta;
  Eigen::VectorXd t;

  static Allocation full(int K, int L, int G) {
    return {Eigen::MatrixXd::Ones(K, G), Eigen::MatrixXd::Ones(L, G), Eigen::VectorXd::Constant(G, 1.0 / G)};
  }
};

struct RunOptions {
  std::optional<Allocation> allocation;  // Algorithm 1 only; default is everyone in every group
  std::optional<DesignPoint> start;      // skip initialization
  // Algorithm 2 only: pins for the reduction check.
  std::optional<Eigen::MatrixXd> pin_alpha, pin_beta;
  std::optional<Eigen::VectorXd> pin_t;
  std::optional<bool> omega_constraints;  // default: cfg.omega > 0
  SolverSettings solver;
  SolveFn solve_fn;  // defaults to the built-in solver
  int init_cap = 30;
};

namespace detail {

inline SolverResult run_solver(const RunOptions& o, const ConicProgram& p) {
  return o.solve_fn ? o.solve_fn(p, o.solver) : solve(p, o.solver);
}

inline double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// Smallest ratio of exact per-user rate to its (positive) threshold.
inline double exact_maximin(const DesignPoint& x, const ChannelSet& ch, const SystemConfig& cfg) {
  const auto r = per_user_rates(x, ch, cfg);
  double worst = std::numeric_limits<double>::infinity();
  if (cfg.Rbar_dl > 0.0)
    for (int k = 0; k < x.K(); ++k) worst = std::min(worst, r.dl.row(k).sum() / cfg.Rbar_dl);
  if (cfg.Rbar_ul > 0.0)
    for (int l = 0; l < x.L(); ++l) worst = std::min(worst, r.ul.row(l).sum() / cfg.Rbar_ul);
  return worst;
}

inline bool has_thresholds(const SystemConfig& cfg, int K, int L) {
  return (cfg.Rbar_dl > 0.0 && K > 0) || (cfg.Rbar_ul > 0.0 && L > 0);
}

// Removes solver round-off from a fresh iterate: p >= 0, grouping in [0, 1],
// time on the simplex, and power budgets met exactly.
inline void clean_point(DesignPoint& x, const SystemConfig& cfg, bool free_allocation) {
  x.p = x.p.cwiseMax(0.0);
  if (free_allocation) {
    x.alpha = x.alpha.cwiseMax(0.0).cwiseMin(1.0);
    x.beta = x.beta.cwiseMax(0.0).cwiseMin(1.0);
    x.t = x.t.cwiseMax(0.0);
    const double ts = x.t.sum();
    if (ts > 1.0) x.t /= ts;
  }
  const double bs = bs_power_usage(x, cfg.power_mode);
  if (bs > cfg.P_bs)
    for (auto& wg : x.w) wg *= std::sqrt(cfg.P_bs / bs);
  for (int l = 0; l < x.L(); ++l) {
    const double u = ul_power_usage(l, x, cfg.power_mode);
    if (u > cfg.P_ul) x.p.row(l) *= std::sqrt(cfg.P_ul / u);
  }
}

// Convex combination of the primary variables; auxiliaries are re-tightened.
inline DesignPoint midpoint(const DesignPoint& a, const DesignPoint& b, const ChannelSet& ch, const SystemConfig& cfg) {
  DesignPoint m = a;
  for (size_t g = 0; g < m.w.size(); ++g) m.w[g] = 0.5 * (a.w[g] + b.w[g]);
  m.p = 0.5 * (a.p + b.p);
  m.alpha = 0.5 * (a.alpha + b.alpha);
  m.beta = 0.5 * (a.beta + b.beta);
  m.t = 0.5 * (a.t + b.t);
  prepare_expansion(m, ch, cfg);
  return m;
}

inline bool residuals_ok(const DesignPoint& x, const ChannelSet& ch, const SystemConfig& cfg) {
  SystemConfig c = cfg;
  c.Rbar_dl = c.Rbar_ul = 0.0;  // thresholds are judged at convergence, not per step
  return check_feasibility(x, ch, c).feasible;
}

}  // namespace detail

// With identical groups the seed sits on a symmetric saddle that SCA only
// leaves through round-off. User i gets a slightly larger power share in group
// i mod G; the per-user power over groups is unchanged.
inline double kSeedTiltAmount = 0.2;
inline double seed_tilt(int i, int g, int G) {
  if (G < 2) return 1.0;
  const double e = kSeedTiltAmount;
  return std::sqrt(g == i % G ? 1.0 + e : 1.0 - e / (G - 1));
}

// Maximum-ratio beams sharing P_bs evenly over (k, g), uplink at sqrt(P_ul / G).
inline DesignPoint heuristic_seed(AlgorithmKind kind, const ChannelSet& ch, const SystemConfig& cfg,
                                  const std::optional<Allocation>& alloc = std::nullopt) {
  const int K = ch.K(), L = ch.L(), G = cfg.G, Ntx = ch.Ntx();
  DesignPoint x = DesignPoint::zeros(K, L, G, Ntx);
  const double share = K > 0 ? std::sqrt(cfg.P_bs / (static_cast<double>(K) * G)) : 0.0;
  for (int g = 0; g < G; ++g) {
    for (int k = 0; k < K; ++k) {
      const double n = ch.h.col(k).norm();
      if (n > 0.0) x.w[g].col(k) = ch.h.col(k) * (share * seed_tilt(k, g, G) / n);
    }
    for (int l = 0; l < L; ++l) x.p(l, g) = std::sqrt(cfg.P_ul / G) * seed_tilt(l, g, G);
  }
  if (kind == AlgorithmKind::Alg2) {
    x.alpha.setConstant(0.5);
    x.beta.setConstant(0.5);
  } else if (alloc) {
    x.alpha = alloc->alpha;
    x.beta = alloc->beta;
    x.t = alloc->t;
  }
  prepare_expansion(x, ch, cfg);
  return x;
}

// Maximin search for a point meeting every rate threshold. `solves` receives
// the number of subproblems solved.
inline DesignPoint initialize(AlgorithmKind kind, const ChannelSet& ch, const SystemConfig& cfg,
                              const RunOptions& opts = {}, int* solves = nullptr) {
  cfg.validate();
  DesignPoint x = heuristic_seed(kind, ch, cfg, opts.allocation);
  if (solves) *solves = 0;
  if (!detail::has_thresholds(cfg, ch.K(), ch.L())) return x;
  double value = detail::exact_maximin(x, ch, cfg);
  if (value >= 1.0) return x;

  SubproblemOptions so;
  so.kind = kind == AlgorithmKind::Alg1 ? SubproblemKind::Alg1Init : SubproblemKind::Alg2Init;
  so.power_mode = cfg.power_mode;
  so.pin_alpha = opts.pin_alpha;
  so.pin_beta = opts.pin_beta;
  so.pin_t = opts.pin_t;
  int stalled = 0;
  for (int it = 0; it < opts.init_cap; ++it) {
    const Subproblem sub = build_subproblem(so, x, ch, cfg);
    const SolverResult res = detail::run_solver(opts, sub.program);
    if (solves) ++*solves;
    if (!is_usable(res.status) || !res.x.allFinite()) break;
    DesignPoint y = extract_point(sub, res);
    detail::clean_point(y, cfg, kind == AlgorithmKind::Alg2);
    prepare_expansion(y, ch, cfg);
    const double next = detail::exact_maximin(y, ch, cfg);
    if (!(next > value)) break;  // the maximin value cannot decrease in exact arithmetic
    stalled = next - value < 1e-6 * std::max(1.0, std::abs(value)) ? stalled + 1 : 0;
    x = std::move(y);
    value = next;
    if (value >= 1.0) return x;
    if (stalled >= 3) break;
  }
  throw InfeasibleScenario("initialize: rate thresholds unattainable (best maximin " + std::to_string(value) + ")");
}

inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> extract_grouping(const DesignPoint& x, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("extract_grouping: eps must be positive");
  const int K = x.K(), L = x.L(), G = x.G();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(K, G), b = Eigen::MatrixXd::Zero(L, G);
  for (int g = 0; g < G; ++g) {
    for (int k = 0; k < K; ++k) a(k, g) = x.w[g].col(k).norm() > eps ? 1.0 : 0.0;
    for (int l = 0; l < L; ++l) b(l, g) = std::abs(x.p(l, g)) > eps ? 1.0 : 0.0;
  }
  return {a, b};
}

namespace detail {

inline constexpr double kInactiveWeight = 1e-6;

inline RunTrace sca_loop(AlgorithmKind kind, const ChannelSet& ch, const SystemConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  if (ch.K() != cfg.K || ch.L() != cfg.L) throw std::invalid_argument("run: channel and config user counts differ");
  RunTrace trace;
  DesignPoint x;
  if (opts.start) {
    x = *opts.start;
    prepare_expansion(x, ch, cfg);
  } else {
    x = initialize(kind, ch, cfg, opts, &trace.init_solves);
  }

  SubproblemOptions so;
  so.kind = kind == AlgorithmKind::Alg1 ? SubproblemKind::Alg1Main : SubproblemKind::Alg2Main;
  so.power_mode = cfg.power_mode;
  if (kind == AlgorithmKind::Alg2) {
    so.with_omega_constraints = opts.omega_constraints.value_or(cfg.omega > 0.0);
    so.pin_alpha = opts.pin_alpha;
    so.pin_beta = opts.pin_beta;
    so.pin_t = opts.pin_t;
  }
  const bool free_alloc = kind == AlgorithmKind::Alg2;

  double current = weighted_sum_rate(x, ch, cfg);
  trace.initial_exact = current;
  bool damping_used = false;
  for (int it = 0; it < cfg.max_iters; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    IterationRecord rec;
    const Subproblem sub = build_subproblem(so, x, ch, cfg);
    const SolverResult res = run_solver(opts, sub.program);
    rec.status = res.status;
    rec.surrogate = res.obj;

    std::optional<DesignPoint> cand;
    if (is_usable(res.status)) {
      DesignPoint y = extract_point(sub, res);
      clean_point(y, cfg, free_alloc);
      prepare_expansion(y, ch, cfg);
      cand = std::move(y);
    } else if (!damping_used && res.x.size() == sub.program.n_vars && res.x.allFinite()) {
      // Halve the step toward the previous iterate once.
      damping_used = true;
      DesignPoint y = extract_raw(sub, res.x);
      clean_point(y, cfg, free_alloc);
      DesignPoint m = midpoint(x, y, ch, cfg);
      clean_point(m, cfg, free_alloc);
      prepare_expansion(m, ch, cfg);
      if (residuals_ok(m, ch, cfg)) {
        cand = std::move(m);
        rec.damped = true;
      }
    }
    if (!cand) {
      trace.aborted = true;
      rec.exact = current;
      rec.max_residual = check_feasibility(x, ch, cfg).worst_violation;
      rec.wall_ms = ms_since(t0);
      trace.iterations.push_back(rec);
      break;
    }

    const double next = weighted_sum_rate(*cand, ch, cfg);
    if (!(next >= current)) {
      // Inexact subproblem solution would lower the objective; keep the current
      // point and stop.
      ++trace.rejected_steps;
      trace.converged = true;
      break;
    }
    rec.exact = next;
    rec.max_residual = check_feasibility(*cand, ch, cfg).worst_violation;
    rec.wall_ms = ms_since(t0);
    trace.iterations.push_back(rec);
    const double prev = current;
    x = std::move(*cand);
    current = next;
    if (std::abs(current - prev) <= cfg.eps_err * std::max(std::abs(prev), 1e-300)) {
      trace.converged = true;
      break;
    }
  }

  trace.point = x;
  DesignPoint hard = x;
  if (kind == AlgorithmKind::Alg2) {
    // Beams and powers of users with (numerically) zero grouping weight only
    // add interference; the solver leaves them at barrier-sized magnitudes.
    for (int g = 0; g < x.G(); ++g) {
      for (int k = 0; k < x.K(); ++k)
        if (x.alpha(k, g) <= kInactiveWeight) hard.w[g].col(k).setZero();
      for (int l = 0; l < x.L(); ++l)
        if (x.beta(l, g) <= kInactiveWeight) hard.p(l, g) = 0.0;
    }
  }
  const auto [a, b] = extract_grouping(hard, cfg.grouping_threshold());
  trace.alpha_hard = a;
  trace.beta_hard = b;
  if (kind == AlgorithmKind::Alg2) {
    hard.alpha = a;
    hard.beta = b;
  }
  trace.rates = per_user_rates(hard, ch, cfg);
  return trace;
}

}  // namespace detail

inline RunTrace run_algorithm1(const ChannelSet& ch, const SystemConfig& cfg, const RunOptions& opts = {}) {
  RunOptions o = opts;
  if (o.allocation) {
    const Allocation& a = *o.allocation;
    if (a.alpha.rows() != cfg.K || a.alpha.cols() != cfg.G || a.beta.rows() != cfg.L || a.beta.cols() != cfg.G ||
        a.t.size() != cfg.G)
      throw std::invalid_argument("run_algorithm1: allocation shape mismatch");
  }
  if (o.start && o.allocation) {
    o.start->alpha = o.allocation->alpha;
    o.start->beta = o.allocation->beta;
    o.start->t = o.allocation->t;
  }
  return detail::sca_loop(AlgorithmKind::Alg1, ch, cfg, o);
}

inline RunTrace run_algorithm2(const ChannelSet& ch, const SystemConfig& cfg, const RunOptions& opts = {}) {
  return detail::sca_loop(AlgorithmKind::Alg2, ch, cfg, opts);
}

// Half-duplex reference: the BS uses Ntx + Nrx antennas in each direction, one
// direction at a time. Fading is redrawn from `seed` for the larger arrays.
// Each direction is on air half the time, so its sub-run gets twice the rate
// threshold; the halved per-user rates then meet the original one.
struct HdResult {
  double dl = 0.0, ul = 0.0;  // nats
  double rate() const { return 0.5 * (dl + ul); }
  RunTrace dl_trace, ul_trace;
};

inline HdResult hd_baseline(const ChannelSet& ch, const SystemConfig& cfg, std::uint64_t seed,
                            const RunOptions& opts = {}) {
  const int N = ch.Ntx() + ch.Nrx();
  Rng rng(derive_seed(seed, 0x4844));  // "HD"
  const ChannelSet big = draw_fading(ch.pl_dl, ch.pl_ul, ch.pl_cross, N, N, rng);
  HdResult out;
  SystemConfig base = cfg;
  base.G = 1;
  base.Rbar_dl *= 2.0;
  base.Rbar_ul *= 2.0;
  base.Ntx = base.Nrx = N;
  RunOptions o = opts;
  o.allocation.reset();
  o.start.reset();
  if (ch.K() > 0) {
    SystemConfig c = base;
    c.L = 0;
    ChannelSet d = big;
    d.g = Eigen::MatrixXcd(N, 0);
    d.g_hat = Eigen::MatrixXcd(0, ch.K());
    d.pl_ul = Eigen::VectorXd(0);
    d.pl_cross = Eigen::MatrixXd(0, ch.K());
    out.dl_trace = run_algorithm1(d, c, o);
    out.dl = out.dl_trace.sum_rate();
  }
  if (ch.L() > 0) {
    SystemConfig c = base;
    c.K = 0;
    ChannelSet u = big;
    u.h = Eigen::MatrixXcd(N, 0);
    u.g_hat = Eigen::MatrixXcd(ch.L(), 0);
    u.pl_dl = Eigen::VectorXd(0);
    u.pl_cross = Eigen::MatrixXd(ch.L(), 0);
    out.ul_trace = run_algorithm1(u, c, o);
    out.ul = out.ul_trace.sum_rate();
  }
  return out;
}

}  // namespace fdgrouper
