// Copyright 2026 The PCCA Lane-Swap Authors
//
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


// Acceptance suite: one PASS/FAIL line per criterion.
//
//   pcca_acceptance                      run everything, exit 1 on any FAIL
//   pcca_acceptance --only 2,3           run a subset
//   pcca_acceptance --results FILE       run everything, record verdicts, exit 0
//   pcca_acceptance --check N --results FILE
//                                        replay the verdict of criterion N

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "oracles.hpp"
#include "pcca/metrics.hpp"
#include "pcca/pcca_filter.hpp"
#include "pcca/qp_solver.hpp"
#include "pcca/scenario.hpp"
#include "pcca/stability_analysis.hpp"

namespace pcca::acceptance {
namespace {

using Json = nlohmann::ordered_json;

constexpr int kMcRuns = 100;
constexpr int kNraRuns = 30;
constexpr std::uint64_t kBaseSeed = 1;

struct Verdict {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

std::string Line(const Verdict& v) {
  return std::string(v.pass ? "PASS" : "FAIL") + "  criterion " + std::to_string(v.id) + " (" +
         v.name + "): " + v.detail;
}

std::string Fmt(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

void Progress(const std::string& what) { std::cerr << "[acceptance] " << what << std::endl; }

int Jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// Monte Carlo runs, cached by label so criteria can share them.
class McCache {
 public:
  const std::vector<RunMetrics>& Get(const std::string& label, const ScenarioConfig& config,
                                     int runs) {
    if (const auto it = cache_.find(label); it != cache_.end()) return it->second;
    Progress("monte carlo: " + label + ", " + std::to_string(runs) + " runs");
    const auto t0 = std::chrono::steady_clock::now();
    auto& runs_out = cache_[label] = RunMonteCarlo(config, runs, kBaseSeed, Jobs());
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Progress(Fmt("  done in %.1f s", s));
    return runs_out;
  }

 private:
  std::map<std::string, std::vector<RunMetrics>> cache_;  // stable references
};

ScenarioConfig Nominal(Variant variant) { return MakeVariant(ScenarioConfig{}, variant); }

Verdict EigenvalueCrossCheck() {
  Verdict v{1, "eigenvalue cross-check", true, ""};
  const ScenarioConfig scenario = Nominal(Variant::kIdaFast);
  PccaConfig filter = scenario.FilterConfig();
  const double period = 0.01;
  filter.tau = period;
  const SwapModel model{scenario.filter.pure_pursuit.kappa, filter.params, filter.spec};
  const double delta0 = 0.015;
  for (double mph : {10.0, 20.0, 30.0}) {
    const double v0 = MphToMps(mph);
    const double closed = UnstableEigenvalue(v0, Sensitivity(v0, filter.sensitivity), delta0, model);
    try {
      const LinearizationResult r =
          NumericalLinearization(TwoAgentLoop(filter, v0, delta0, model.kappa, period, period));
      const double rel = std::abs(r.dominant - closed) / closed;
      v.pass = v.pass && rel <= 0.15;
      v.detail += Fmt("%s%.0f mph numerical %.4f vs closed form %.4f (%.1f%%)",
                      v.detail.empty() ? "" : "; ", mph, r.dominant, closed, 100.0 * rel);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail += Fmt("%s%.0f mph linearisation failed: %s", v.detail.empty() ? "" : "; ", mph,
                      e.what());
    }
  }
  v.detail += "; tolerance 15%";
  return v;
}

Verdict CalibrationRoundTrip() {
  Verdict v{2, "calibration round trip", true, ""};
  const SwapModel model{};
  double worst = 0.0;
  auto check = [&](const InstabilityTargets& targets, const SensitivityCoeffs& c) {
    for (const auto& [speed, rate] : targets.points) {
      worst = std::max(worst, std::abs(UnstableEigenvalue(speed, Sensitivity(speed, c),
                                                          targets.delta0, model) - rate));
    }
  };
  try {
    const auto fast = InstabilityTargets::IdaFast();
    const auto slow = InstabilityTargets::IdaSlow();
    const auto vgr = InstabilityTargets::Vgr();
    const SensitivityCoeffs cf = CalibrateSensitivity(fast, model);
    check(fast, cf);
    check(slow, CalibrateSensitivity(slow, model));
    check(vgr, CalibrateSingleTarget(vgr, cf.c0, model));
    const bool targets_ok = fast.points.size() == 3 && std::abs(fast.points[0].second - 2.6) < 1e-12 &&
                            std::abs(fast.points[1].second - 3.1) < 1e-12 &&
                            std::abs(fast.points[2].second - 3.5) < 1e-12 &&
                            std::abs(slow.points[1].second - 1.55) < 1e-12 &&
                            std::abs(vgr.points[0].second - 0.13) < 1e-12 &&
                            std::abs(vgr.points[0].first - MphToMps(20.0)) < 1e-12;
    v.pass = targets_ok && worst <= 1e-9;
    v.detail = Fmt("worst |eigenvalue - target| %.2e over 7 targets (IDA-fast 2.6/3.1/3.5, "
                   "IDA-slow halves, VGR 0.13 at 20 mph); tolerance 1e-9", worst);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail = std::string("calibration failed: ") + e.what();
  }
  return v;
}

// Per-agent rejection for the road rows, then a joint check of all pairs.
std::vector<AgentState> SampleAdmissible(std::mt19937_64& rng, int n, const PccaConfig& config,
                                         const EgoRails& rails) {
  const double lo = rails.right.Value(0.0);
  const double hi = rails.left.Value(0.0);
  std::uniform_real_distribution<double> x(0.0, 15.0 * n);
  std::uniform_real_distribution<double> y(lo, hi);
  std::uniform_real_distribution<double> th(-0.3, 0.3);
  std::uniform_real_distribution<double> sp(0.0, 30.0);
  const double l1 = config.gains.lambda1();
  for (;;) {
    std::vector<AgentState> s;
    while (static_cast<int>(s.size()) < n) {
      const AgentState a{x(rng), y(rng), th(rng), sp(rng)};
      const double yd = a.v * std::sin(a.theta);
      if (l1 * (a.y - lo) + yd >= 0.0 && l1 * (hi - a.y) - yd >= 0.0) s.push_back(a);
    }
    if (testing::Admissible(s, config, rails)) return s;
  }
}

Verdict FallbackFeasibility() {
  Verdict v{3, "fallback feasibility", false, ""};
  const PccaConfig config = Nominal(Variant::kIdaFast).FilterConfig();
  const EgoRails rails = StraightRails(config);
  std::mt19937_64 rng(20260301);
  std::uniform_int_distribution<int> count(2, 6);
  std::uniform_real_distribution<double> wd(-0.8, 0.8);
  std::uniform_real_distribution<double> wa(-15.0, 15.0);
  double worst = std::numeric_limits<double>::infinity();
  long rows = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto states = SampleAdmissible(rng, count(rng), config, rails);
    const int n = static_cast<int>(states.size());
    std::vector<ControlInput> w(n);
    for (auto& wk : w) wk = {wd(rng), wa(rng)};
    for (int ego = 0; ego < n; ++ego) {
      std::vector<BsmMessage> msgs;
      for (int k = 0; k < n; ++k) {
        if (k == ego) continue;
        BsmMessage m;
        m.sender = k;
        m.x = states[k].x;
        m.y = states[k].y;
        m.theta = states[k].theta;
        m.v = states[k].v;
        msgs.push_back(m);
      }
      auto w_of = [&](int id) { return id == ego ? ControlInput{} : w[id]; };
      auto u_of = [&](int id) {
        return FeasibleFallback(states[id].v, config.gains.lambda1(), w_of(id));
      };
      for (const CbfRow& row : AllRows(ego, states[ego], msgs, config, rails)) {
        worst = std::min(worst, testing::RowValue(row, u_of, w_of));
        ++rows;
      }
    }
  }
  v.pass = worst >= -1e-9;
  v.detail = Fmt("10000 admissible snapshots, %ld rows, minimum row value %.3e; tolerance "
                 ">= -1e-9", rows, worst);
  return v;
}

Verdict DerivativeConsistency() {
  Verdict v{4, "derivative consistency", false, ""};
  const EllipseSpec spec = DefaultCbfEllipse();
  const CbfGains gains;
  const VehicleParams params;
  std::mt19937_64 rng(20260302);
  std::uniform_real_distribution<double> pos(-15.0, 15.0);
  std::uniform_real_distribution<double> ang(-0.5, 0.5);
  std::uniform_real_distribution<double> speed(5.0, 30.0);
  std::uniform_real_distribution<double> steer(-0.4, 0.4);
  std::uniform_real_distribution<double> accel(-8.0, 4.0);
  double worst_hd = 0.0;
  double worst_hdd = 0.0;
  int done = 0;
  while (done < 1000) {
    const AgentState i{0, 0, ang(rng), speed(rng)};
    const AgentState j{pos(rng), pos(rng), ang(rng), speed(rng)};
    const Vec2 off = spec.rho() * Heading(i.theta);
    if ((Position(i) + off - Position(j)).norm() < 1.0) continue;
    if ((Position(i) - off - Position(j)).norm() < 1.0) continue;
    const ControlInput ui{steer(rng), accel(rng)};
    const ControlInput uj{steer(rng), accel(rng)};
    const double eps = 1e-3;
    const auto fd = testing::FocalApproxDerivatives(i, ui, j, uj, spec, params, eps);
    const auto ti = testing::Trajectory(i, ui, params, eps);
    const auto tj = testing::Trajectory(j, uj, params, eps);
    const double h = EllipseH(ti[2], tj[2], spec);
    const double hd = EllipseHDot(ti[2], tj[2], spec);
    const CbfRow row = EllipseRow(0, ti[2], 1, tj[2], spec, gains, params);
    const double value = testing::RowValue(
        row, [&](int id) { return id == 0 ? ui : uj; }, [](int) { return ControlInput{}; });
    const double hdd = value - gains.l1() * hd - gains.l0() * h;
    worst_hd = std::max(worst_hd, std::abs(hd - fd.d1));
    worst_hdd = std::max(worst_hdd, std::abs(hdd - fd.d2));
    ++done;
  }
  v.pass = worst_hd <= 1e-6 && worst_hdd <= 1e-4;
  v.detail = Fmt("1000 trajectories, max |hdot - FD| %.2e (tol 1e-6), max |hddot - FD| %.2e "
                 "(tol 1e-4)", worst_hd, worst_hdd);
  return v;
}

Verdict NominalSafety(McCache& mc) {
  Verdict v{5, "nominal Monte Carlo safety", false, ""};
  const auto& runs = mc.Get("ida-fast", Nominal(Variant::kIdaFast), kMcRuns);
  const RunMetrics agg = Aggregate(runs);
  const int complete_runs = static_cast<int>(
      std::count_if(runs.begin(), runs.end(), [](const RunMetrics& m) { return m.incomplete_ls_count == 0; }));
  const int overlap_runs = static_cast<int>(
      std::count_if(runs.begin(), runs.end(), [](const RunMetrics& m) { return m.collision_count > 0; }));
  const double ratio = agg.avg_speed / agg.mean_desired_speed;
  const bool collisions_ok = agg.collision_count == 0;
  const bool complete_ok = complete_runs >= 95;
  const bool speed_ok = std::abs(ratio - 1.0) <= 0.05;
  v.pass = collisions_ok && complete_ok && speed_ok;
  v.detail = Fmt("rectangle overlaps %d pairs in %d/%d runs (need 0) [%s]; runs with all lane "
                 "changes complete %d/%d (need >= 95) [%s]; mean speed %.3f vs desired %.3f m/s, "
                 "ratio %.4f (need within 5%%) [%s]",
                 agg.collision_count, overlap_runs, kMcRuns, collisions_ok ? "ok" : "miss",
                 complete_runs, kMcRuns, complete_ok ? "ok" : "miss", agg.avg_speed,
                 agg.mean_desired_speed, ratio, speed_ok ? "ok" : "miss");
  return v;
}

Verdict VariantOrdering(McCache& mc) {
  Verdict v{6, "variant ordering", false, ""};
  const auto& fast_runs = mc.Get("ida-fast", Nominal(Variant::kIdaFast), kMcRuns);
  const auto& slow_runs = mc.Get("ida-slow", Nominal(Variant::kIdaSlow), kMcRuns);
  const auto& vgr_runs = mc.Get("vgr", Nominal(Variant::kVgr), kMcRuns);
  const RunMetrics fast = Aggregate(fast_runs);
  const RunMetrics slow = Aggregate(slow_runs);
  const RunMetrics vgr = Aggregate(vgr_runs);
  const int vgr_oob_runs = static_cast<int>(
      std::count_if(vgr_runs.begin(), vgr_runs.end(), [](const RunMetrics& m) { return m.oob_max > 0.0; }));
  const bool order_ok = slow.max_delta_ac < fast.max_delta_ac && fast.max_delta_ac < vgr.max_delta_ac;
  const bool vgr_events_ok = vgr.incomplete_ls_count + vgr_oob_runs >= 1;
  const bool fast_oob_ok = fast.oob_max == 0.0;
  auto in_band = [](double b) { return b >= 4.8 && b <= 620.0; };
  const bool brake_ok = in_band(fast.brake_loss) && in_band(slow.brake_loss) && in_band(vgr.brake_loss);
  v.pass = order_ok && vgr_events_ok && fast_oob_ok && brake_ok;
  v.detail = Fmt("max dac IDA-slow %.2f < IDA-fast %.2f < VGR %.2f [%s]; VGR incomplete %d + OOB "
                 "runs %d (need >= 1) [%s]; IDA-fast OOB %.3f m (need 0) [%s]; brake loss "
                 "%.1f / %.1f / %.1f Wh/km (need 4.8..620) [%s]",
                 slow.max_delta_ac, fast.max_delta_ac, vgr.max_delta_ac, order_ok ? "ok" : "miss",
                 vgr.incomplete_ls_count, vgr_oob_runs, vgr_events_ok ? "ok" : "miss",
                 fast.oob_max, fast_oob_ok ? "ok" : "miss", fast.brake_loss, slow.brake_loss,
                 vgr.brake_loss, brake_ok ? "ok" : "miss");
  return v;
}

Verdict NraRobustness(McCache& mc) {
  Verdict v{7, "non-responder robustness", false, ""};
  ScenarioConfig config = Nominal(Variant::kIdaFast);
  config.nra_enabled = true;
  const RunMetrics agg = Aggregate(mc.Get("ida-fast nra", config, kNraRuns));
  const bool collisions_ok = agg.collision_count == 0;
  const bool incomplete_ok = agg.incomplete_ls_count <= 2;
  v.pass = collisions_ok && incomplete_ok;
  v.detail = Fmt("%d runs: rectangle overlaps %d pairs (need 0) [%s]; incomplete lane swaps %d "
                 "(need <= 2) [%s]",
                 kNraRuns, agg.collision_count, collisions_ok ? "ok" : "miss",
                 agg.incomplete_ls_count, incomplete_ok ? "ok" : "miss");
  return v;
}

Verdict V2vDegradation(McCache& mc) {
  Verdict v{8, "V2V degradation trends", false, ""};
  ScenarioConfig r80 = Nominal(Variant::kIdaFast);
  r80.v2v_range = 80.0;
  ScenarioConfig r50 = r80;
  r50.v2v_range = 50.0;
  ScenarioConfig slow_fast = Nominal(Variant::kIdaFast);
  slow_fast.ctrl_period = 0.2;
  ScenarioConfig slow_vgr = Nominal(Variant::kVgr);
  slow_vgr.ctrl_period = 0.2;

  const RunMetrics base = Aggregate(mc.Get("ida-fast", Nominal(Variant::kIdaFast), kMcRuns));
  const RunMetrics a80 = Aggregate(mc.Get("ida-fast 80 m", r80, kMcRuns));
  const RunMetrics a50 = Aggregate(mc.Get("ida-fast 50 m", r50, kMcRuns));
  const RunMetrics f02 = Aggregate(mc.Get("ida-fast 0.2 s", slow_fast, kMcRuns));
  const RunMetrics v02 = Aggregate(mc.Get("vgr 0.2 s", slow_vgr, kMcRuns));

  const bool r80_ok = a80.incomplete_ls_count == 0;
  const bool r50_ok = a50.incomplete_ls_count >= 1;
  const bool rate_ok = f02.count_delta_ac_gt2 >= 3.0 * base.count_delta_ac_gt2;
  const bool h0_ok = v02.min_h0 < f02.min_h0;
  v.pass = r80_ok && r50_ok && rate_ok && h0_ok;
  v.detail = Fmt("80 m incomplete %d (need 0) [%s]; 50 m incomplete %d (need >= 1) [%s]; "
                 "dac>2 per run %.2f at 0.2 s vs %.2f at 0.1 s, x%.2f (need >= 3) [%s]; "
                 "min h0 at 0.2 s VGR %.3f vs IDA-fast %.3f (need VGR lower) [%s]",
                 a80.incomplete_ls_count, r80_ok ? "ok" : "miss", a50.incomplete_ls_count,
                 r50_ok ? "ok" : "miss", f02.count_delta_ac_gt2, base.count_delta_ac_gt2,
                 base.count_delta_ac_gt2 > 0.0 ? f02.count_delta_ac_gt2 / base.count_delta_ac_gt2
                                                : std::numeric_limits<double>::infinity(),
                 rate_ok ? "ok" : "miss", v02.min_h0, f02.min_h0, h0_ok ? "ok" : "miss");
  return v;
}

Verdict SolverCorrectness() {
  Verdict v{9, "QP solver correctness", false, ""};
  std::mt19937_64 rng(20260309);
  std::uniform_int_distribution<int> n_dist(1, 40);
  QpSolver solver;
  double worst_kkt = 0.0;
  double worst_obj = 0.0;
  int not_optimal = 0;
  int polished = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = n_dist(rng);
    const int m = std::uniform_int_distribution<int>(0, 2 * n)(rng);
    const QpProblem p = testing::RandomQp(rng, n, m);
    const QpSolution s = solver.Solve(p);
    if (s.status != QpStatus::kOptimal) {
      ++not_optimal;
      continue;
    }
    const KktResiduals r = ComputeKkt(p, s);
    worst_kkt = std::max({worst_kkt, r.stationarity, r.primal, r.dual, r.complementarity});
    const testing::DualReference ref = testing::SolveDualFista(p);
    polished += ref.polished ? 1 : 0;
    worst_obj = std::max(worst_obj, std::abs(s.objective - ref.objective) /
                                        std::max(1.0, std::abs(ref.objective)));
  }
  v.pass = not_optimal == 0 && worst_kkt <= 1e-8 && worst_obj <= 1e-6;
  v.detail = Fmt("1000 problems (n <= 40): non-optimal %d, worst KKT residual %.2e (tol 1e-8), "
                 "worst relative objective gap to the dual first-order reference %.2e (tol 1e-6, %d of "
                 "%d references polished on their support)",
                 not_optimal, worst_kkt, worst_obj, polished, 1000 - not_optimal);
  return v;
}

Verdict Performance(McCache& mc) {
  Verdict v{10, "filter step time", false, ""};
  const RunMetrics agg = Aggregate(mc.Get("ida-fast", Nominal(Variant::kIdaFast), kMcRuns));
  v.pass = agg.mean_loop_time <= 20.0;
  v.detail = Fmt("16-vehicle IDA-fast runs: mean %.3f ms per agent step, max %.2f ms (need mean "
                 "<= 20 ms)", agg.mean_loop_time, agg.max_loop_time);
  return v;
}

Json ToJson(const Verdict& v) {
  return {{"id", v.id}, {"name", v.name}, {"pass", v.pass}, {"detail", v.detail}};
}

int Check(int id, const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cout << "FAIL  criterion " << id << ": no results file " << path << '\n';
    return 1;
  }
  const auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.contains("criteria")) {
    std::cout << "FAIL  criterion " << id << ": unreadable results file " << path << '\n';
    return 1;
  }
  for (const auto& c : doc["criteria"]) {
    if (c.at("id").get<int>() != id) continue;
    const Verdict v{id, c.at("name").get<std::string>(), c.at("pass").get<bool>(),
                    c.at("detail").get<std::string>()};
    std::cout << Line(v) << '\n';
    return v.pass ? 0 : 1;
  }
  std::cout << "FAIL  criterion " << id << ": not measured\n";
  return 1;
}

}  // namespace
}  // namespace pcca::acceptance

int main(int argc, char** argv) {
  using namespace pcca::acceptance;
  CLI::App app{"Acceptance criteria"};
  std::string results_path;
  std::vector<int> only;
  int check = 0;
  app.add_option("--results", results_path, "Verdict file to write, or to read with --check");
  app.add_option("--only", only, "Criteria to run")->delimiter(',');
  app.add_option("--check", check, "Report the recorded verdict of one criterion");
  CLI11_PARSE(app, argc, argv);

  if (check != 0) {
    if (results_path.empty()) {
      std::cerr << "--check needs --results\n";
      return 2;
    }
    return Check(check, results_path);
  }

  McCache mc;
  const std::vector<std::pair<int, std::function<Verdict()>>> criteria{
      {1, EigenvalueCrossCheck},
      {2, CalibrationRoundTrip},
      {3, FallbackFeasibility},
      {4, DerivativeConsistency},
      {9, SolverCorrectness},
      {5, [&] { return NominalSafety(mc); }},
      {10, [&] { return Performance(mc); }},
      {6, [&] { return VariantOrdering(mc); }},
      {7, [&] { return NraRobustness(mc); }},
      {8, [&] { return V2vDegradation(mc); }},
  };

  std::vector<Verdict> verdicts;
  for (const auto& [id, run] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Progress("criterion " + std::to_string(id));
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {id, "criterion " + std::to_string(id), false, std::string("error: ") + e.what()};
    }
    verdicts.push_back(v);
  }
  std::sort(verdicts.begin(), verdicts.end(),
            [](const Verdict& a, const Verdict& b) { return a.id < b.id; });

  int failures = 0;
  Json out = {{"criteria", Json::array()}};
  for (const Verdict& v : verdicts) {
    std::cout << Line(v) << '\n';
    failures += !v.pass;
    out["criteria"].push_back(ToJson(v));
  }
  std::cout << verdicts.size() - failures << " of " << verdicts.size() << " criteria passed\n";

  if (!results_path.empty()) {
    std::ofstream(results_path) << out.dump(2) << '\n';
    return 0;
  }
  return failures == 0 ? 0 : 1;
}
