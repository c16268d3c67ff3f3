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

#pragma once

#include "pcca/vehicle_dynamics.hpp"

namespace pcca {

enum class Lane { kRight, kLeft };

inline Lane Other(Lane lane) { return lane == Lane::kRight ? Lane::kLeft : Lane::kRight; }

/// Two straight parallel lanes; the right lane centreline is y = 0.
struct LaneGeometry {
  double lane_width = 3.5;

  double Center(Lane lane) const { return lane == Lane::kRight ? 0.0 : lane_width; }
  double RightEdge() const { return -0.5 * lane_width; }
  double LeftEdge() const { return 1.5 * lane_width; }
};

/// What the ego vehicle alone knows about its own plan.
struct DrivingIntent {
  Lane target_lane = Lane::kRight;
  bool change_lane = false;
  double desired_speed = 22.5;  // [m/s]
};

struct PurePursuitParams {
  double kappa = 0.7;             // speed-hold gain [1/s]
  double lookahead_time = 1.0;    // [s]
  double lookahead_offset = 5.0;  // [m]
};

/// Look-ahead distance v * lookahead_time + lookahead_offset.
double LookaheadDistance(double v, const PurePursuitParams& pp);

/// Pure-pursuit steering toward the target-lane centreline plus proportional
/// speed hold, saturated to `box`.
ControlInput PurePursuit(const AgentState& state, const DrivingIntent& intent,
                         const VehicleParams& params, const LaneGeometry& lanes,
                         const PurePursuitParams& pp, const ControlBox& box);

}  // namespace pcca
