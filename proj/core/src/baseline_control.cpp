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

#include "pcca/baseline_control.hpp"

#include <cmath>

namespace pcca {

double LookaheadDistance(double v, const PurePursuitParams& pp) {
  return v * pp.lookahead_time + pp.lookahead_offset;
}

ControlInput PurePursuit(const AgentState& state, const DrivingIntent& intent,
                         const VehicleParams& params, const LaneGeometry& lanes,
                         const PurePursuitParams& pp, const ControlBox& box) {
  // Lanes are straight, so the look-ahead point sits L_d ahead along x.
  const double lookahead = LookaheadDistance(state.v, pp);
  const double lateral = lanes.Center(intent.target_lane) - state.y;
  const double eta = std::atan2(lateral, lookahead) - state.theta;
  const double delta = 2.0 * params.wheelbase * std::sin(eta) / lookahead;
  const double accel = -pp.kappa * (state.v - intent.desired_speed);
  return ClampControl({delta, accel}, box);
}

}  // namespace pcca
