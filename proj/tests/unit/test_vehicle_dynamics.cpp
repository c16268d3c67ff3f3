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
#include <limits>
#include <numbers>
#include <stdexcept>

#include <doctest.h>

#include "pcca/vehicle_dynamics.hpp"

namespace pcca {
namespace {

// Dense forward Euler, an independent reference for the RK4 step.
AgentState Euler(AgentState s, const ControlInput& u, const VehicleParams& p, double duration,
                 int steps) {
  const double h = duration / steps;
  for (int k = 0; k < steps; ++k) {
    const AgentState d = BicycleDerivative(s, u, p);
    s = {s.x + h * d.x, s.y + h * d.y, s.theta + h * d.theta, s.v + h * d.v};
  }
  return s;
}

double Distance(const AgentState& a, const AgentState& b) {
  return std::hypot(std::hypot(a.x - b.x, a.y - b.y), std::hypot(a.theta - b.theta, a.v - b.v));
}

const VehicleParams kParams{};

TEST_CASE("straight cruise advances x only") {
  const AgentState s = Step({0, 0, 0, 20}, {0, 0}, kParams, 0.1);
  CHECK(s.x == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(s.y == 0.0);
  CHECK(s.theta == 0.0);
  CHECK(s.v == 20.0);
}

TEST_CASE("constant acceleration is integrated exactly") {
  const AgentState s = Step({0, 0, 0, 20}, {0, 2}, kParams, 0.1);
  CHECK(s.v == doctest::Approx(20.2).epsilon(1e-14));
  CHECK(s.x == doctest::Approx(2.01).epsilon(1e-14));
  CHECK(s.y == 0.0);
}

TEST_CASE("steering turns left and matches a dense Euler reference") {
  const ControlInput u{0.02, 0.0};
  const AgentState s = Step({0, 0, 0, 20}, u, kParams, 0.1);
  CHECK(s.theta == doctest::Approx(20.0 * 0.02 / 2.9 * 0.1).epsilon(1e-12));
  CHECK(s.y > 0.0);
  const AgentState ref = Euler({0, 0, 0, 20}, u, kParams, 0.1, 100000);
  CHECK(Distance(s, ref) < 1e-6);
}

TEST_CASE("RK4 local error shrinks with the fifth power of the step") {
  const AgentState s0{0, 0, 0.1, 20};
  const ControlInput u{0.3, 2.0};
  double errors[3];
  const double steps[3] = {0.1, 0.05, 0.025};
  for (int k = 0; k < 3; ++k) {
    const AgentState coarse = Step(s0, u, kParams, steps[k]);
    const AgentState fine = Integrate(s0, u, kParams, steps[k], steps[k] / 64.0);
    errors[k] = Distance(coarse, fine);
  }
  for (int k = 0; k < 2; ++k) {
    const double ratio = errors[k] / errors[k + 1];
    CHECK(ratio > 24.0);
    CHECK(ratio < 40.0);
  }
}

TEST_CASE("zero input keeps heading and speed") {
  const AgentState s0{3.0, -1.0, 0.4, 17.0};
  const AgentState s = Integrate(s0, {0, 0}, kParams, 1.0);
  CHECK(s.theta == s0.theta);
  CHECK(s.v == s0.v);
  CHECK(s.x == doctest::Approx(3.0 + 17.0 * std::cos(0.4)).epsilon(1e-12));
  CHECK(s.y == doctest::Approx(-1.0 + 17.0 * std::sin(0.4)).epsilon(1e-12));
}

TEST_CASE("speed is floored at zero") {
  const AgentState s = Step({0, 0, 0, 0.2}, {0, -8}, kParams, 0.1);
  CHECK(s.v == 0.0);
  CHECK(s.v >= 0.0);
}

TEST_CASE("Integrate equals repeated inner steps") {
  const AgentState s0{0, 0, 0, 22};
  const ControlInput u{-0.05, 1.0};
  AgentState manual = s0;
  for (int k = 0; k < 10; ++k) manual = Step(manual, u, kParams, 0.01);
  CHECK(Integrate(s0, u, kParams, 0.1, 0.01) == manual);
}

TEST_CASE("stepping is deterministic") {
  const AgentState s0{1.5, 2.5, -0.2, 21.0};
  const ControlInput u{0.1, -3.0};
  CHECK(Step(s0, u, kParams, 0.1) == Step(s0, u, kParams, 0.1));
}

TEST_CASE("invalid inputs are rejected") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(Step({nan, 0, 0, 20}, {0, 0}, kParams, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(Step({0, 0, 0, 20}, {nan, 0}, kParams, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(Step({0, 0, 0, 20}, {0, 0}, kParams, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(Integrate({0, 0, 0, 20}, {0, 0}, kParams, -1.0), std::invalid_argument);
  VehicleParams bad;
  bad.wheelbase = 0.0;
  CHECK_THROWS_AS(bad.Validate(), std::invalid_argument);
  CHECK_NOTHROW(kParams.Validate());
}

TEST_CASE("control clamping") {
  const ControlBox box;
  const ControlInput a = ClampControl({0.8, 6.0}, box);
  CHECK(a.delta == doctest::Approx(std::numbers::pi / 7.0));
  CHECK(a.delta == doctest::Approx(0.4488).epsilon(1e-4));
  CHECK(a.accel == 4.0);
  const ControlInput b = ClampControl({-1.0, -9.0}, box);
  CHECK(b.delta == doctest::Approx(-std::numbers::pi / 7.0));
  CHECK(b.accel == -8.0);
  const ControlInput inside{0.1, -2.0};
  CHECK(ClampControl(inside, box) == inside);
}

TEST_CASE("scaled box widens about zero") {
  const ControlBox wide = ControlBox{}.Scaled(1.8);
  CHECK(wide.delta.hi == doctest::Approx(1.8 * std::numbers::pi / 7.0));
  CHECK(wide.accel.lo == doctest::Approx(-14.4));
  CHECK(wide.accel.hi == doctest::Approx(7.2));
}

}  // namespace
}  // namespace pcca
