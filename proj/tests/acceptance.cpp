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

// Acceptance run: one PASS/FAIL line per criterion on stdout, progress on
// stderr. Exit status is the number of failed criteria.
//
//   acceptance            all criteria
//   acceptance 3 8 9      a subset

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "check_suites.hpp"
#include "fdgrouper/fdgrouper.hpp"

using namespace fdgrouper;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double bps(double nats) { return nats_to_bps(nats); }

// Every method on one trial of the default cell; trials whose seed is
// infeasible for any method are skipped and counted.
struct Paired {
  std::vector<std::vector<MethodOutcome>> rows;
  int skipped = 0;
};

Paired run_paired(const SystemConfig& cfg, const std::vector<Method>& methods, int trials, std::uint64_t base,
                  const char* label) {
  Paired p;
  for (int t = 0; static_cast<int>(p.rows.size()) < trials && t < 4 * trials; ++t) {
    const TrialChannels tc = draw_trial(cfg, base, 0, t);
    std::vector<MethodOutcome> row;
    bool ok = true;
    for (Method m : methods) {
      row.push_back(run_method(m, tc.ch, cfg, tc.seed));
      if (row.back().status != MethodOutcome::Status::Ok) ok = false;
    }
    if (ok) p.rows.push_back(std::move(row));
    else ++p.skipped;
    std::fprintf(stderr, "  %s trial %d done\n", label, t);
  }
  return p;
}

double mean_of(const Paired& p, size_t mi) {
  if (p.rows.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& r : p.rows) acc += bps(r[mi].sum_rate);
  return acc / static_cast<double>(p.rows.size());
}

// Criteria 1 and 2 share their runs.
struct AscentRuns {
  int runs = 0, excluded = 0, errors = 0, monotone = 0, converged = 0, rejected = 0;
  double worst_drop = 0.0;
  bool done = false;
};

AscentRuns& ascent_runs() {
  static AscentRuns a;
  if (a.done) return a;
  a.done = true;
  const SystemConfig cfg;  // K = L = 4, G = 2
  auto one = [&](AlgorithmKind kind, int want, std::uint64_t base) {
    int got = 0;
    for (int t = 0; got < want && t < 4 * want; ++t) {
      const TrialChannels tc = draw_trial(cfg, base, 0, t);
      try {
        const RunTrace tr = kind == AlgorithmKind::Alg1 ? run_algorithm1(tc.ch, cfg) : run_algorithm2(tc.ch, cfg);
        ++got;
        ++a.runs;
        double prev = tr.initial_exact, drop = 0.0;
        for (const auto& it : tr.iterations) {
          drop = std::max(drop, prev - it.exact);
          prev = it.exact;
        }
        a.worst_drop = std::max(a.worst_drop, drop);
        if (drop <= 1e-9) ++a.monotone;
        if (tr.converged && !tr.aborted && tr.iterations_used() <= 100) ++a.converged;
        a.rejected += tr.rejected_steps;
      } catch (const InfeasibleScenario&) {
        ++a.excluded;
      } catch (const std::exception& e) {
        ++a.errors;
        std::fprintf(stderr, "  run error: %s\n", e.what());
      }
    }
  };
  one(AlgorithmKind::Alg1, 50, 1001);
  std::fprintf(stderr, "  50 Alg1 runs done\n");
  one(AlgorithmKind::Alg2, 20, 1002);
  std::fprintf(stderr, "  20 Alg2 runs done\n");
  return a;
}

Verdict c1_ascent() {
  const AscentRuns& a = ascent_runs();
  return {a.runs == 70 && a.errors == 0 && a.monotone == a.runs,
          fmt("%d/%d runs nondecreasing, worst drop %.2e (tol 1e-9); %d refused steps; %d seeds excluded, %d errors",
              a.monotone, a.runs, a.worst_drop, a.rejected, a.excluded, a.errors)};
}

Verdict c2_convergence() {
  const AscentRuns& a = ascent_runs();
  const double frac = a.runs ? static_cast<double>(a.converged) / a.runs : 0.0;
  return {a.runs == 70 && frac >= 0.9,
          fmt("%d/%d runs (%.1f%%) met eps_err=1e-3 within 100 iterations (need >= 90%%)", a.converged, a.runs,
              100.0 * frac)};
}

Verdict c3_minorants() {
  const auto st = checks::minorant_suite(1000, 31);
  const bool ok = st.violations == 0 && st.worst_tightness <= 1e-9 && st.worst_gradient <= 1e-4;
  return {ok, fmt("%d points, %d bound checks, %d violations; tightness %.2e (tol 1e-9); gradient %.2e (tol 1e-4)",
                  st.points, st.evaluations, st.violations, st.worst_tightness, st.worst_gradient)};
}

Verdict c4_ordering() {
  SystemConfig cfg;
  cfg.rho = db_to_linear(-75.0);
  const Paired p = run_paired(cfg, {Method::Alg2, Method::Alg1, Method::FD_G1, Method::HD}, 20, 1004, "ordering");
  const double a2 = mean_of(p, 0), a1 = mean_of(p, 1), fd = mean_of(p, 2), hd = mean_of(p, 3);
  const bool order = a2 >= a1 && a1 >= fd;
  const bool hd_gain = a2 >= 1.15 * hd;
  return {p.rows.size() >= 20 && order && hd_gain,
          fmt("%zu trials: Alg2 %.3f, Alg1 %.3f, FD(G=1) %.3f, HD %.3f bps/Hz; order %s; Alg2/HD = %.3f (need >= 1.15)",
              p.rows.size(), a2, a1, fd, hd, order ? "holds" : "broken", hd > 0 ? a2 / hd : 0.0)};
}

Verdict c5_power_modes() {
  SystemConfig tw, rx;
  rx.power_mode = PowerConstraintMode::Relaxed;
  double sum_tw = 0.0, sum_rx = 0.0;
  int n = 0, skipped = 0;
  for (int t = 0; n < 20 && t < 80; ++t) {
    const TrialChannels tc = draw_trial(tw, 1005, 0, t);
    const MethodOutcome a = run_method(Method::Alg2, tc.ch, tw, tc.seed);
    const MethodOutcome b = run_method(Method::Alg2, tc.ch, rx, tc.seed);
    if (a.status != MethodOutcome::Status::Ok || b.status != MethodOutcome::Status::Ok) {
      ++skipped;
      continue;
    }
    ++n;
    sum_tw += bps(a.sum_rate);
    sum_rx += bps(b.sum_rate);
  }
  const double mtw = n ? sum_tw / n : 0.0, mrx = n ? sum_rx / n : 0.0;
  return {n == 20 && mtw >= mrx,
          fmt("%d paired seeds (Alg2): time-weighted %.3f vs relaxed %.3f bps/Hz; %d seeds skipped", n, mtw, mrx,
              skipped)};
}

Verdict c6_thresholds() {
  int runs = 0, bad = 0, skipped = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (double rbar : {0.5, 1.0, 2.0}) {
    SystemConfig cfg;
    cfg.Rbar_dl = cfg.Rbar_ul = bps_to_nats(rbar);
    for (int t = 0; t < 8; ++t) {
      const TrialChannels tc = draw_trial(cfg, 1006, static_cast<int>(rbar * 10), t);
      for (Method m : {Method::Alg1, Method::Alg2, Method::FD_G1, Method::HD}) {
        const MethodOutcome o = run_method(m, tc.ch, cfg, tc.seed);
        if (o.status != MethodOutcome::Status::Ok) {
          ++skipped;
          continue;
        }
        ++runs;
        double lo = std::numeric_limits<double>::infinity();
        for (int k = 0; k < o.rates.dl.rows(); ++k) lo = std::min(lo, bps(o.rates.dl.row(k).sum()));
        for (int l = 0; l < o.rates.ul.rows(); ++l) lo = std::min(lo, bps(o.rates.ul.row(l).sum()));
        worst = std::min(worst, lo - rbar);
        if (lo < rbar - 1e-3) ++bad;
      }
      std::fprintf(stderr, "  thresholds rbar %.1f trial %d done\n", rbar, t);
    }
  }
  return {runs > 0 && bad == 0,
          fmt("%d feasible runs over Rbar {0.5,1,2} x 4 methods; %d below Rbar-1e-3; worst margin %+.2e bps/Hz; %d "
              "infeasible",
              runs, bad, worst, skipped)};
}

Verdict c7_grouping_table() {
  SystemConfig cfg;
  cfg.K = cfg.L = 10;
  cfg.G = 3;
  cfg.Ntx = cfg.Nrx = 4;
  cfg.Rbar_dl = cfg.Rbar_ul = bps_to_nats(0.5);
  const Paired p = run_paired(cfg, {Method::Alg2, Method::FD_G1}, 10, 1007, "grouping");
  const double a2 = mean_of(p, 0), fd = mean_of(p, 1);
  int one_group = 0, cases = 0;
  for (const auto& r : p.rows) {
    const Eigen::MatrixXd& a = r[0].alpha_hard;
    for (int k = 0; k < a.rows(); ++k, ++cases)
      if (a.row(k).sum() == 1.0) ++one_group;
  }
  const double frac = cases ? static_cast<double>(one_group) / cases : 0.0;
  return {p.rows.size() >= 10 && a2 >= 1.10 * fd && frac >= 0.7,
          fmt("%zu trials: Alg2 %.3f vs FD(G=1) %.3f bps/Hz (ratio %.3f, need >= 1.10); DLU in exactly one group "
              "%d/%d = %.1f%% (need >= 70%%); %d seeds skipped",
              p.rows.size(), a2, fd, fd > 0 ? a2 / fd : 0.0, one_group, cases, 100.0 * frac, p.skipped)};
}

Verdict c8_solver() {
  const auto st = checks::solver_oracle_suite(100, 100, 38);
  return {st.instances == 200 && st.failures == 0 && st.worst_lp <= 1e-6 && st.worst_soc <= 1e-6,
          fmt("%d instances, %d failures; LP gap %.2e, SOC projection gap %.2e (tol 1e-6)", st.instances, st.failures,
              st.worst_lp, st.worst_soc)};
}

Verdict c9_telescoping() {
  const auto st = checks::telescoping_suite(100, 39);
  return {st.instances == 100 && st.worst_relative <= 1e-9,
          fmt("%d instances, worst relative gap %.2e (tol 1e-9)", st.instances, st.worst_relative)};
}

Verdict c10_census() {
  const auto cases = checks::census_grid();
  int bad = 0;
  for (const auto& c : cases)
    if (c.alg1_paper != c.alg1_expected || c.alg1_aux != c.alg1_aux_expected || c.alg2_paper != c.alg2_expected ||
        c.alg2_aux != 0)
      ++bad;
  return {cases.size() == 36 && bad == 0,
          fmt("%zu (K,L,G,Ntx) cases; %d mismatches against (NtxK+K+2L)G and (NtxK+6K+7L+2)G", cases.size(), bad)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"ascent", c1_ascent},
      {"convergence speed", c2_convergence},
      {"minorant suite", c3_minorants},
      {"method ordering", c4_ordering},
      {"power-constraint modes", c5_power_modes},
      {"threshold satisfaction", c6_thresholds},
      {"grouping table", c7_grouping_table},
      {"solver oracles", c8_solver},
      {"telescoping", c9_telescoping},
      {"census", c10_census},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %s: %s [%.0fs]\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first, v.detail.c_str(), sec);
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  return failed;
}
