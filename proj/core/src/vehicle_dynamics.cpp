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

#include "pcca/vehicle_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pcca {
namespace {

bool Finite(const AgentState& s) {
  return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.theta) &&
         std::isfinite(s.v);
}

AgentState Axpy(const AgentState& s, double h, const AgentState& d) {
  return {s.x + h * d.x, s.y + h * d.y, s.theta + h * d.theta, s.v + h * d.v};
}

}  // namespace

double Interval::Clamp(double value) const {
  return std::clamp(value, lo, hi);
}

ControlBox ControlBox::Scaled(double factor) const {
  return {{delta.lo * factor, delta.hi * factor},
          {accel.lo * factor, accel.hi * factor}};
}

void VehicleParams::Validate() const {
  for (double p : {wheelbase, body_length, body_width, mass}) {
    if (!std::isfinite(p) || p <= 0.0) {
      throw std::invalid_argument("vehicle parameters must be positive");
    }
  }
}

AgentState BicycleDerivative(const AgentState& s, const ControlInput& u,
                             const VehicleParams& params) {
  return {s.v * std::cos(s.theta), s.v * std::sin(s.theta),
          s.v / params.wheelbase * u.delta, u.accel};
}

AgentState Step(const AgentState& state, const ControlInput& u,
                const VehicleParams& params, double dt) {
  if (!Finite(state) || !std::isfinite(u.delta) || !std::isfinite(u.accel) ||
      !std::isfinite(dt)) {
    throw std::invalid_argument("Step: non-finite input");
  }
  if (dt <= 0.0) throw std::invalid_argument("Step: dt must be positive");

  const AgentState k1 = BicycleDerivative(state, u, params);
  const AgentState k2 = BicycleDerivative(Axpy(state, 0.5 * dt, k1), u, params);
  const AgentState k3 = BicycleDerivative(Axpy(state, 0.5 * dt, k2), u, params);
  const AgentState k4 = BicycleDerivative(Axpy(state, dt, k3), u, params);

  const double w = dt / 6.0;
  AgentState next{
      state.x + w * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
      state.y + w * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
      state.theta + w * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta),
      state.v + w * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)};
  next.v = std::max(next.v, 0.0);
  return next;
}

AgentState Integrate(const AgentState& state, const ControlInput& u,
                     const VehicleParams& params, double duration,
                     double inner_dt) {
  if (!(duration > 0.0) || !(inner_dt > 0.0)) {
    throw std::invalid_argument("Integrate: durations must be positive");
  }
  const int steps = std::max(1, static_cast<int>(std::ceil(duration / inner_dt - 1e-9)));
  const double h = duration / steps;
  AgentState s = state;
  for (int k = 0; k < steps; ++k) s = Step(s, u, params, h);
  return s;
}

ControlInput ClampControl(const ControlInput& u, const ControlBox& box) {
  return {box.delta.Clamp(u.delta), box.accel.Clamp(u.accel)};
}

}  // namespace pcca
