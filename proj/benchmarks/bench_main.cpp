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


#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "oracles.hpp"
#include "pcca/pcca_filter.hpp"
#include "pcca/qp_solver.hpp"
#include "pcca/scenario.hpp"

namespace pcca {
namespace {

void BM_QpSolveRandom(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  std::vector<QpProblem> problems;
  for (int k = 0; k < 16; ++k) problems.push_back(testing::RandomQp(rng, n, 2 * n));
  QpSolver solver;
  size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solver.Solve(problems[k++ % problems.size()]));
  }
}
BENCHMARK(BM_QpSolveRandom)->Arg(4)->Arg(16)->Arg(40);

// A 16-vehicle snapshot taken a few seconds into an episode, when the swap
// zone is busy.
struct Snapshot {
  std::vector<AgentState> states;
  std::vector<VehicleInfo> info;
};

Snapshot BusySnapshot() {
  ScenarioConfig config;
  config.seed = 3;
  config.max_duration = 4.0;
  const EpisodeResult r = RunEpisode(config);
  Snapshot s;
  const auto ranges = TickRanges(r.log);
  const auto [begin, end] = ranges.back();
  for (size_t k = begin; k < end; ++k) {
    s.states.push_back(r.log.samples[k].state);
    s.info.push_back(r.log.vehicles[static_cast<size_t>(r.log.samples[k].id)]);
  }
  return s;
}

void BM_FilterStep16(benchmark::State& state) {
  const ScenarioConfig config;
  const PccaConfig filter = config.FilterConfig();
  const Snapshot snap = BusySnapshot();
  const int ego = static_cast<int>(state.range(0)) % static_cast<int>(snap.states.size());
  std::vector<BsmMessage> msgs;
  for (size_t k = 0; k < snap.states.size(); ++k) {
    if (static_cast<int>(k) == ego) continue;
    BsmMessage m;
    m.sender = snap.info[k].id;
    m.x = snap.states[k].x;
    m.y = snap.states[k].y;
    m.theta = snap.states[k].theta;
    m.v = snap.states[k].v;
    msgs.push_back(m);
  }
  const VehicleInfo& info = snap.info[static_cast<size_t>(ego)];
  const DrivingIntent intent = IntentAt(info, snap.states[static_cast<size_t>(ego)], config);
  const EgoRails rails = RailsFor(info, config);
  QpSolver solver;
  PccaState memory;
  for (auto _ : state) {
    const FilterResult r = FilterStep(info.id, snap.states[static_cast<size_t>(ego)], msgs, intent,
                                      memory, filter, rails, 0.1, 0.0, solver);
    memory = r.state;  // steady state: warm start from the previous tick
    benchmark::DoNotOptimize(r.applied);
  }
}
BENCHMARK(BM_FilterStep16)->Arg(0)->Arg(5)->Arg(11);

void BM_EllipseRow(benchmark::State& state) {
  const EllipseSpec spec = DefaultCbfEllipse();
  const CbfGains gains;
  const VehicleParams params;
  const AgentState i{0, 0, 0.05, 22};
  const AgentState j{9, 2.5, -0.02, 21};
  for (auto _ : state) benchmark::DoNotOptimize(EllipseRow(0, i, 1, j, spec, gains, params));
}
BENCHMARK(BM_EllipseRow);

void BM_Episode16(benchmark::State& state) {
  ScenarioConfig config;
  config.seed = 7;
  for (auto _ : state) benchmark::DoNotOptimize(RunEpisode(config).metrics);
}
BENCHMARK(BM_Episode16)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace
}  // namespace pcca

BENCHMARK_MAIN();
