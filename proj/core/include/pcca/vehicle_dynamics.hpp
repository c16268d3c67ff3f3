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

#include <numbers>

namespace pcca {

/// Pose and speed of one vehicle. `theta` is measured from the road axis.
struct AgentState {
  double x = 0.0;      // [m]
  double y = 0.0;      // [m]
  double theta = 0.0;  // [rad]
  double v = 0.0;      // [m/s]

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

/// Wheel steering angle and longitudinal acceleration.
struct ControlInput {
  double delta = 0.0;  // [rad]
  double accel = 0.0;  // [m/s^2]

  friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double Clamp(double value) const;
  double Width() const { return hi - lo; }
};

/// Actuator box for one vehicle: steering and acceleration ranges.
struct ControlBox {
  Interval delta{-std::numbers::pi / 7.0, std::numbers::pi / 7.0};
  Interval accel{-8.0, 4.0};

  /// Box scaled about zero, e.g. the wider box used for local copies of
  /// other agents' controls.
  ControlBox Scaled(double factor) const;
};

struct VehicleParams {
  double wheelbase = 2.9;     // [m]
  double body_length = 4.7;   // [m]
  double body_width = 1.85;   // [m]
  double mass = 2000.0;       // [kg]

  /// Throws std::invalid_argument unless every field is finite and positive.
  void Validate() const;
};

/// State derivative of the kinematic bicycle model.
AgentState BicycleDerivative(const AgentState& s, const ControlInput& u,
                             const VehicleParams& params);

/// Advances `state` by `dt` with a single classical RK4 step, control held
/// constant. Speed is floored at zero. Throws on non-finite input or dt <= 0.
AgentState Step(const AgentState& state, const ControlInput& u,
                const VehicleParams& params, double dt);

/// Integrates over `duration` with RK4 sub-steps of at most `inner_dt`.
AgentState Integrate(const AgentState& state, const ControlInput& u,
                     const VehicleParams& params, double duration,
                     double inner_dt = 0.01);

ControlInput ClampControl(const ControlInput& u, const ControlBox& box);

}  // namespace pcca
