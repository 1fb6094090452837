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

// Monte-Carlo scenario runner and CSV output.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <locale>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fdgrouper/algorithms.hpp"
#include "fdgrouper/units.hpp"

namespace fdgrouper {

enum class ScenarioKind { Convergence, SweepRho, SweepRbar, SweepUsers, GroupingTable };
enum class Method { Alg1, Alg2, FD_G1, HD };

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Convergence: return "Convergence";
    case ScenarioKind::SweepRho: return "SweepRho";
    case ScenarioKind::SweepRbar: return "SweepRbar";
    case ScenarioKind::SweepUsers: return "SweepUsers";
    case ScenarioKind::GroupingTable: return "GroupingTable";
  }
  return "?";
}
inline const char* to_string(Method m) {
  switch (m) {
    case Method::Alg1: return "Alg1";
    case Method::Alg2: return "Alg2";
    case Method::FD_G1: return "FD_G1";
    case Method::HD: return "HD";
  }
  return "?";
}
inline ScenarioKind parse_scenario(const std::string& s) {
  for (auto k : {ScenarioKind::Convergence, ScenarioKind::SweepRho, ScenarioKind::SweepRbar, ScenarioKind::SweepUsers,
                 ScenarioKind::GroupingTable})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown scenario '" + s + "'");
}
inline Method parse_method(const std::string& s) {
  for (auto m : {Method::Alg1, Method::Alg2, Method::FD_G1, Method::HD})
    if (s == to_string(m)) return m;
  throw std::invalid_argument("unknown method '" + s + "'");
}

// Grid values: rho in dB (SweepRho), R-bar in bps/Hz (SweepRbar), K = L
// (SweepUsers). Convergence and GroupingTable run at the configured point.
struct Scenario {
  ScenarioKind kind = ScenarioKind::SweepRho;
  std::vector<double> grid;
  int trials = 20;
  std::vector<Method> methods;

  static Scenario defaults(ScenarioKind k) {
    Scenario s;
    s.kind = k;
    switch (k) {
      case ScenarioKind::Convergence:
        s.grid = {0.0};
        s.methods = {Method::Alg1, Method::Alg2};
        break;
      case ScenarioKind::SweepRho:
        s.grid = {-90.0, -75.0, -60.0, -45.0, -35.0};
        s.methods = {Method::Alg2, Method::Alg1, Method::FD_G1, Method::HD};
        break;
      case ScenarioKind::SweepRbar:
        s.grid = {0.5, 1.0, 1.5, 2.0};
        s.methods = {Method::Alg2, Method::Alg1, Method::FD_G1, Method::HD};
        break;
      case ScenarioKind::SweepUsers:
        s.grid = {2.0, 4.0, 6.0, 8.0};
        s.methods = {Method::Alg2, Method::Alg1, Method::FD_G1, Method::HD};
        break;
      case ScenarioKind::GroupingTable:
        s.grid = {0.0};
        s.methods = {Method::Alg2, Method::FD_G1};
        break;
    }
    return s;
  }

  void validate() const {
    if (trials < 1) throw std::invalid_argument("Scenario: trials must be >= 1");
    if (grid.empty()) throw std::invalid_argument("Scenario: grid must be nonempty");
    if (methods.empty()) throw std::invalid_argument("Scenario: no methods selected");
  }
};

inline const char* grid_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::SweepRho: return "rho_db";
    case ScenarioKind::SweepRbar: return "rbar_bps";
    case ScenarioKind::SweepUsers: return "users";
    default: return "none";
  }
}

inline SystemConfig apply_grid(ScenarioKind k, double value, SystemConfig cfg) {
  switch (k) {
    case ScenarioKind::SweepRho: cfg.rho = db_to_linear(value); break;
    case ScenarioKind::SweepRbar: cfg.Rbar_dl = cfg.Rbar_ul = bps_to_nats(value); break;
    case ScenarioKind::SweepUsers:
      if (value < 0 || value != std::floor(value)) throw std::invalid_argument("SweepUsers grid needs integer counts");
      cfg.K = cfg.L = static_cast<int>(value);
      break;
    default: break;
  }
  return cfg;
}

struct MethodOutcome {
  enum class Status { Ok, Infeasible, Error };
  Method method = Method::Alg1;
  Status status = Status::Ok;
  std::string message;
  double sum_rate = 0.0;  // nats
  PerUserRates rates;     // nats
  Eigen::MatrixXd alpha_hard, beta_hard;
  int iterations = 0;
  bool converged = false;
  RunTrace trace;  // Alg1 / Alg2 / FD_G1
};

struct TrialChannels {
  std::uint64_t seed = 0;
  ChannelSet ch;
};

inline TrialChannels draw_trial(const SystemConfig& cfg, std::uint64_t base_seed, int grid_index, int trial) {
  TrialChannels t;
  t.seed = derive_seed(base_seed, static_cast<std::uint64_t>(grid_index), static_cast<std::uint64_t>(trial));
  Rng rng(t.seed);
  const UserLayout layout = generate_layout(cfg, rng);
  t.ch = generate_channels(layout, cfg, rng);
  return t;
}

inline MethodOutcome run_method(Method m, const ChannelSet& ch, const SystemConfig& cfg, std::uint64_t trial_seed,
                                const RunOptions& opts = {}) {
  MethodOutcome out;
  out.method = m;
  try {
    switch (m) {
      case Method::Alg1: out.trace = run_algorithm1(ch, cfg, opts); break;
      case Method::Alg2: out.trace = run_algorithm2(ch, cfg, opts); break;
      case Method::FD_G1: {
        SystemConfig c = cfg;
        c.G = 1;
        out.trace = run_algorithm1(ch, c, opts);
        break;
      }
      case Method::HD: {
        const HdResult hd = hd_baseline(ch, cfg, trial_seed, opts);
        out.rates.dl = Eigen::MatrixXd::Zero(ch.K(), 1);
        out.rates.ul = Eigen::MatrixXd::Zero(ch.L(), 1);
        if (ch.K() > 0) out.rates.dl = 0.5 * hd.dl_trace.rates.dl;
        if (ch.L() > 0) out.rates.ul = 0.5 * hd.ul_trace.rates.ul;
        out.sum_rate = out.rates.total();
        out.iterations = hd.dl_trace.iterations_used() + hd.ul_trace.iterations_used();
        out.converged = (ch.K() == 0 || hd.dl_trace.converged) && (ch.L() == 0 || hd.ul_trace.converged);
        out.alpha_hard = Eigen::MatrixXd::Ones(ch.K(), 1);
        out.beta_hard = Eigen::MatrixXd::Ones(ch.L(), 1);
        return out;
      }
    }
    out.rates = out.trace.rates;
    out.sum_rate = out.rates.total();
    out.iterations = out.trace.iterations_used();
    out.converged = out.trace.converged;
    out.alpha_hard = out.trace.alpha_hard;
    out.beta_hard = out.trace.beta_hard;
  } catch (const InfeasibleScenario& e) {
    out.status = MethodOutcome::Status::Infeasible;
    out.message = e.what();
  } catch (const std::exception& e) {
    out.status = MethodOutcome::Status::Error;
    out.message = e.what();
  }
  return out;
}

struct GridResult {
  double value = 0.0;
  SystemConfig cfg;
  std::vector<std::vector<MethodOutcome>> trials;  // [trial][method index]
};

struct ScenarioResult {
  Scenario scenario;
  std::vector<GridResult> grid;
  int excluded = 0;
  int errors = 0;
  std::vector<std::string> error_messages;
};

inline int worker_count(int tasks) {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("FDGROUPER_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return std::max(1, std::min(n, tasks));
}

inline ScenarioResult run_scenario(const Scenario& s, const SystemConfig& cfg, const RunOptions& opts = {}) {
  s.validate();
  ScenarioResult res;
  res.scenario = s;
  for (double v : s.grid) {
    GridResult g;
    g.value = v;
    g.cfg = apply_grid(s.kind, v, cfg);
    g.cfg.validate();
    g.trials.resize(static_cast<size_t>(s.trials));
    res.grid.push_back(std::move(g));
  }

  const int tasks = static_cast<int>(s.grid.size()) * s.trials;
  std::atomic<int> next{0};
  auto work = [&] {
    for (int t = next++; t < tasks; t = next++) {
      const int gi = t / s.trials, trial = t % s.trials;
      GridResult& g = res.grid[static_cast<size_t>(gi)];
      const TrialChannels tc = draw_trial(g.cfg, cfg.seed, gi, trial);
      std::vector<MethodOutcome> row;
      for (Method m : s.methods) row.push_back(run_method(m, tc.ch, g.cfg, tc.seed, opts));
      g.trials[static_cast<size_t>(trial)] = std::move(row);
    }
  };
  const int workers = worker_count(tasks);
  std::vector<std::thread> pool;
  for (int i = 1; i < workers; ++i) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  for (const auto& g : res.grid)
    for (const auto& row : g.trials)
      for (const auto& o : row) {
        if (o.status == MethodOutcome::Status::Infeasible) ++res.excluded;
        if (o.status == MethodOutcome::Status::Error) {
          ++res.errors;
          res.error_messages.push_back(std::string(to_string(o.method)) + ": " + o.message);
        }
      }
  return res;
}

// Process exit status for a finished scenario: 1 if any run errored, 2 if any
// was excluded as infeasible, else 0.
inline int exit_code(const ScenarioResult& r) {
  if (r.errors > 0) return 1;
  return r.excluded > 0 ? 2 : 0;
}

struct Summary {
  int feasible = 0, excluded = 0, errors = 0;
  // NaN when there are no feasible trials (stderr_: fewer than two).
  double mean = std::numeric_limits<double>::quiet_NaN(), stderr_ = std::numeric_limits<double>::quiet_NaN();  // bps/Hz
  double mean_iterations = std::numeric_limits<double>::quiet_NaN();
  double min_user_rate = std::numeric_limits<double>::quiet_NaN();  // bps/Hz
};

inline Summary summarize(const GridResult& g, size_t method_index) {
  Summary s;
  std::vector<double> v;
  double iters = 0.0;
  for (const auto& row : g.trials) {
    const MethodOutcome& o = row[method_index];
    if (o.status == MethodOutcome::Status::Infeasible) ++s.excluded;
    if (o.status == MethodOutcome::Status::Error) ++s.errors;
    if (o.status != MethodOutcome::Status::Ok) continue;
    v.push_back(nats_to_bps(o.sum_rate));
    iters += o.iterations;
    for (int k = 0; k < o.rates.dl.rows(); ++k) {
      const double r = nats_to_bps(o.rates.dl.row(k).sum());
      s.min_user_rate = std::isnan(s.min_user_rate) ? r : std::min(s.min_user_rate, r);
    }
    for (int l = 0; l < o.rates.ul.rows(); ++l) {
      const double r = nats_to_bps(o.rates.ul.row(l).sum());
      s.min_user_rate = std::isnan(s.min_user_rate) ? r : std::min(s.min_user_rate, r);
    }
  }
  s.feasible = static_cast<int>(v.size());
  if (!v.empty()) {
    s.mean = 0.0;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    s.mean_iterations = iters / static_cast<double>(v.size());
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - s.mean) * (x - s.mean);
      s.stderr_ = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    }
  }
  return s;
}

namespace detail {

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

}  // namespace detail

// Sweep scenarios: one row per (grid point, method).
// Convergence: one row per (method, trial, iteration); iteration 0 is the
// initial point.
// GroupingTable: one row per (method, trial, user, group) plus per-user
// totals (group "total") and the trial sum (direction "all").
inline void write_csv(const ScenarioResult& r, std::ostream& os) {
  using detail::fmt;
  const Scenario& s = r.scenario;
  const char* name = to_string(s.kind);
  switch (s.kind) {
    case ScenarioKind::Convergence: {
      os << "scenario,method,trial,iteration,exact_sr_bps,surrogate_sr_bps,solver_status,max_residual\n";
      const GridResult& g = r.grid.front();
      for (size_t mi = 0; mi < s.methods.size(); ++mi)
        for (size_t t = 0; t < g.trials.size(); ++t) {
          const MethodOutcome& o = g.trials[t][mi];
          if (o.status != MethodOutcome::Status::Ok) continue;
          os << name << ',' << to_string(o.method) << ',' << t << ",0," << fmt(nats_to_bps(o.trace.initial_exact))
             << ",nan,,nan\n";
          for (size_t i = 0; i < o.trace.iterations.size(); ++i) {
            const IterationRecord& it = o.trace.iterations[i];
            os << name << ',' << to_string(o.method) << ',' << t << ',' << i + 1 << ',' << fmt(nats_to_bps(it.exact))
               << ',' << fmt(nats_to_bps(it.surrogate)) << ',' << to_string(it.status) << ','
               << fmt(it.max_residual) << '\n';
          }
        }
      break;
    }
    case ScenarioKind::GroupingTable: {
      os << "scenario,method,trial,direction,user,group,rate_bps,active\n";
      const GridResult& g = r.grid.front();
      for (size_t mi = 0; mi < s.methods.size(); ++mi)
        for (size_t t = 0; t < g.trials.size(); ++t) {
          const MethodOutcome& o = g.trials[t][mi];
          if (o.status != MethodOutcome::Status::Ok) continue;
          auto emit = [&](const char* dir, const Eigen::MatrixXd& rates, const Eigen::MatrixXd& active) {
            for (int u = 0; u < rates.rows(); ++u) {
              for (int c = 0; c < rates.cols(); ++c)
                os << name << ',' << to_string(o.method) << ',' << t << ',' << dir << ',' << u << ',' << c << ','
                   << fmt(nats_to_bps(rates(u, c))) << ',' << static_cast<int>(active(u, c)) << '\n';
              os << name << ',' << to_string(o.method) << ',' << t << ',' << dir << ',' << u << ",total,"
                 << fmt(nats_to_bps(rates.row(u).sum())) << ",\n";
            }
          };
          emit("DL", o.rates.dl, o.alpha_hard);
          emit("UL", o.rates.ul, o.beta_hard);
          os << name << ',' << to_string(o.method) << ',' << t << ",all,all,total," << fmt(nats_to_bps(o.sum_rate))
             << ",\n";
        }
      break;
    }
    default: {
      os << "scenario,method," << "grid_param,grid_value,K,L,G,Ntx,Nrx,rho_db,rbar_dl_bps,rbar_ul_bps,trials,"
         << "feasible,excluded,errors,mean_sr_bps,stderr_sr_bps,mean_iterations,min_user_rate_bps\n";
      for (const GridResult& g : r.grid)
        for (size_t mi = 0; mi < s.methods.size(); ++mi) {
          const Summary sm = summarize(g, mi);
          const SystemConfig& c = g.cfg;
          os << name << ',' << to_string(s.methods[mi]) << ',' << grid_name(s.kind) << ',' << fmt(g.value) << ','
             << c.K << ',' << c.L << ',' << c.G << ',' << c.Ntx << ',' << c.Nrx << ',' << fmt(linear_to_db(c.rho))
             << ',' << fmt(nats_to_bps(c.Rbar_dl)) << ',' << fmt(nats_to_bps(c.Rbar_ul)) << ',' << g.trials.size()
             << ',' << sm.feasible << ',' << sm.excluded << ',' << sm.errors << ',' << fmt(sm.mean) << ','
             << fmt(sm.stderr_) << ',' << fmt(sm.mean_iterations) << ',' << fmt(sm.min_user_rate) << '\n';
        }
      break;
    }
  }
}

}  // namespace fdgrouper
