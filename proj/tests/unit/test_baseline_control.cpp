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


#include <cmath>
#include <random>

#include <doctest.h>

#include "pcca/baseline_control.hpp"

namespace pcca {
namespace {

const VehicleParams kParams{};
const LaneGeometry kLanes{};
const PurePursuitParams kPp{};
const ControlBox kBox{};

// Steering from the look-ahead triangle: target point in the body frame,
// curvature 2 sin(eta) / L_d.
double TriangleSteer(const AgentState& s, double target_y) {
  const double ld = s.v * kPp.lookahead_time + kPp.lookahead_offset;
  const double dx = ld;
  const double dy = target_y - s.y;
  const double body_y = -std::sin(s.theta) * dx + std::cos(s.theta) * dy;
  const double sin_eta = body_y / std::hypot(dx, dy);
  return 2.0 * kParams.wheelbase * sin_eta / ld;
}

TEST_CASE("look-ahead distance") {
  CHECK(LookaheadDistance(22.5, kPp) == doctest::Approx(27.5));
  CHECK(LookaheadDistance(0.0, kPp) == doctest::Approx(5.0));
}

TEST_CASE("on the centreline at the desired speed nothing is commanded") {
  const DrivingIntent intent{Lane::kRight, false, 22.5};
  const ControlInput u = PurePursuit({10, 0, 0, 22.5}, intent, kParams, kLanes, kPp, kBox);
  CHECK(u.delta == doctest::Approx(0.0));
  CHECK(u.accel == doctest::Approx(0.0));
}

TEST_CASE("speed law") {
  const DrivingIntent intent{Lane::kRight, false, 22.0};
  CHECK(PurePursuit({0, 0, 0, 20}, intent, kParams, kLanes, kPp, kBox).accel ==
        doctest::Approx(1.4));
  CHECK(PurePursuit({0, 0, 0, 0}, intent, kParams, kLanes, kPp, kBox).accel == 4.0);
  CHECK(PurePursuit({0, 0, 0, 40}, intent, kParams, kLanes, kPp, kBox).accel == -8.0);
}

TEST_CASE("lane change steering matches the look-ahead triangle") {
  const DrivingIntent intent{Lane::kLeft, true, 22.5};
  const AgentState s{0, 0, 0, 22.5};
  const ControlInput u = PurePursuit(s, intent, kParams, kLanes, kPp, kBox);
  CHECK(u.delta == doctest::Approx(TriangleSteer(s, 3.5)).epsilon(1e-12));
  CHECK(u.delta == doctest::Approx(0.02663).epsilon(1e-3));
  CHECK(u.delta > 0.0);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> y(-1.0, 4.5);
  std::uniform_real_distribution<double> th(-0.3, 0.3);
  std::uniform_real_distribution<double> v(5.0, 30.0);
  for (int n = 0; n < 500; ++n) {
    const AgentState r{0, y(rng), th(rng), v(rng)};
    const ControlInput c = PurePursuit(r, intent, kParams, kLanes, kPp, kBox);
    CHECK(c.delta == doctest::Approx(kBox.delta.Clamp(TriangleSteer(r, 3.5))).epsilon(1e-10));
  }
}

TEST_CASE("steering points back to the lane from either side") {
  const DrivingIntent right{Lane::kRight, false, 22.5};
  CHECK(PurePursuit({0, 1.0, 0, 22.5}, right, kParams, kLanes, kPp, kBox).delta < 0.0);
  CHECK(PurePursuit({0, -1.0, 0, 22.5}, right, kParams, kLanes, kPp, kBox).delta > 0.0);
  // Heading already towards the lane reduces the command.
  const double level = PurePursuit({0, 1.0, 0, 22.5}, right, kParams, kLanes, kPp, kBox).delta;
  const double turned = PurePursuit({0, 1.0, -0.02, 22.5}, right, kParams, kLanes, kPp, kBox).delta;
  CHECK(turned > level);
}

TEST_CASE("lane geometry") {
  CHECK(kLanes.Center(Lane::kRight) == 0.0);
  CHECK(kLanes.Center(Lane::kLeft) == 3.5);
  CHECK(kLanes.RightEdge() == -1.75);
  CHECK(kLanes.LeftEdge() == 5.25);
  CHECK(Other(Lane::kLeft) == Lane::kRight);
}

}  // namespace
}  // namespace pcca
