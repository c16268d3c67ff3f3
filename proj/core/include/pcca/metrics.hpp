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

// Episode logs and the safety / agility / efficiency metrics derived from
// them. Everything here is a pure function of the log plus scenario geometry.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pcca/baseline_control.hpp"
#include "pcca/geometry_cbf.hpp"
#include "pcca/vehicle_dynamics.hpp"

namespace pcca {

enum SampleFlag : std::uint32_t {
  kFlagFallback = 1u << 0,
  kFlagFallbackClamped = 1u << 1,
  kFlagSlackActive = 1u << 2,
  kFlagIntervened = 1u << 3,
  kFlagNra = 1u << 4,
  kFlagRails = 1u << 5,
  kFlagStraight = 1u << 6,
  kFlagChanging = 1u << 7,  // lane-change intent active this tick
};

/// One agent at one controller tick: the state at `t` and the control held
/// over [t, t + ctrl_period).
struct TickSample {
  double t = 0.0;
  int id = -1;
  AgentState state;
  ControlInput applied;
  std::uint32_t flags = 0;
};

/// Per-tick summary over all ordered pairs.
struct TickSummary {
  double t = 0.0;
  double min_h = 0.0;   // CBF ellipse
  double min_h0 = 0.0;  // reporting ellipse
  int bsm_delivered = 0;
};

struct VehicleInfo {
  int id = -1;
  Lane start_lane = Lane::kRight;
  Lane target_lane = Lane::kRight;
  bool straight = false;
  bool nra = false;
  double desired_speed = 0.0;

  bool ChangesLane() const { return start_lane != target_lane; }
};

/// Scenario geometry the metrics depend on.
struct MetricsContext {
  double zone_start = 0.0;
  double zone_end = 120.0;
  LaneGeometry lanes;
  VehicleParams params;
  EllipseSpec h0_spec{kDefaultReportingR0, 2.2};
};

/// Append-only record of one episode. Samples are grouped by tick, ticks are
/// `ctrl_period` apart.
struct EpisodeLog {
  double ctrl_period = 0.1;
  std::vector<VehicleInfo> vehicles;
  std::vector<TickSample> samples;
  std::vector<TickSummary> ticks;
  std::vector<std::string> events;
  std::vector<double> loop_ms;  // wall time of every filter step
  bool completed = false;       // all vehicles passed the exit before timeout
};

struct RunMetrics {
  double avg_speed = 0.0;            // [m/s], inside the zone
  double mean_desired_speed = 0.0;   // [m/s]
  double brake_loss = 0.0;           // [Wh/km]
  double min_h0 = 0.0;               // [m]
  double oob_max = 0.0;              // [m]
  int incomplete_ls_count = 0;
  int lane_changers = 0;
  double max_delta_ac = 0.0;         // [m/s^2]
  double count_delta_ac_gt2 = 0.0;   // events per run, mean when aggregated
  int collision_count = 0;           // distinct colliding pairs
  double mean_loop_time = 0.0;       // [ms]
  double max_loop_time = 0.0;        // [ms]
  int fallback_count = 0;
  int fallback_clamped_count = 0;
};

inline constexpr double kMphPerMps = 1.0 / 0.44704;
inline constexpr double kDeltaAcThreshold = 2.0;  // [m/s^2]

/// Samples grouped by tick, in log order.
std::vector<std::pair<size_t, size_t>> TickRanges(const EpisodeLog& log);

RunMetrics ComputeMetrics(const EpisodeLog& log, const MetricsContext& ctx);

/// Energy dissipated by braking per distance driven, [Wh/km]. Uses the
/// trapezoidal distance over each tick, exact for constant deceleration.
double BrakeLoss(const EpisodeLog& log, double mass);

/// Aggregation across runs: mean for speeds, brake loss, the Delta a_c
/// count and loop time; min for min_h0; max for OOB, max Delta a_c and max
/// loop time; sums for the event counts.
RunMetrics Aggregate(const std::vector<RunMetrics>& runs);

struct TableRow {
  std::string label;
  RunMetrics metrics;
  int runs = 1;
};

std::string RenderText(const std::vector<TableRow>& rows);
std::string RenderCsv(const std::vector<TableRow>& rows);
std::string RenderJson(const std::vector<TableRow>& rows);

}  // namespace pcca
