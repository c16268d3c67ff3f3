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

// Two-agent lane-swap instability: the closed-form unstable eigenvalue of the
// coupled (lateral-sum, longitudinal-difference) subsystem, calibration of the
// s_a(v) tuning polynomial against eigenvalue targets, and a numerical
// linearisation of the implemented closed loop as an independent check.

#pragma once

#include <array>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pcca/pcca_filter.hpp"

namespace pcca {

inline constexpr double kMetersPerSecondPerMph = 0.44704;
inline double MphToMps(double mph) { return mph * kMetersPerSecondPerMph; }

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// (speed [m/s], unstable eigenvalue [1/s]) pairs and the baseline steering
/// magnitude the eigenvalues refer to.
struct InstabilityTargets {
  std::vector<std::pair<double, double>> points;
  double delta0 = 0.015;

  /// 2.6, 3.1 and 3.5 1/s at 10, 20 and 30 mph.
  static InstabilityTargets IdaFast();
  /// Half of IdaFast.
  static InstabilityTargets IdaSlow();
  /// 0.13 1/s at 20 mph.
  static InstabilityTargets Vgr();

  InstabilityTargets Scaled(double factor) const;
  void Validate() const;
};

/// Parameters of the symmetric two-agent swap the eigenvalues refer to.
struct SwapModel {
  double kappa = 0.7;
  VehicleParams params;
  EllipseSpec spec = DefaultCbfEllipse();
};

/// Positive root -kappa/2 + sqrt(kappa^2/4 + 4 * 2 delta0 / (s_a r v0^2) *
/// (delta0 v0 / L_w + L_w / alpha^2)).
double UnstableEigenvalue(double v0, double s_a, double delta0, const SwapModel& model);

/// {0, 0, unstable, stable} for the coupled subsystem.
std::array<double, 4> CoupledSpectrum(double v0, double s_a, double delta0,
                                      const SwapModel& model);

/// Coupled-mode rate of the filter as implemented here, from linearising the
/// QP solution directly (both inter-agent rows active, w at its quasi-steady
/// state): -kappa/2 + sqrt(kappa^2/4 + 2 delta0 (L_w + r delta0) /
/// (s_a r v0^2 alpha^2)). Differs from UnstableEigenvalue by roughly a factor
/// of four under the root.
double LoopModelEigenvalue(double v0, double s_a, double delta0, const SwapModel& model);

/// 1 / s_a that places the unstable eigenvalue at `eigenvalue` for speed v0.
double RequiredInverseSensitivity(double v0, double eigenvalue, double delta0,
                                  const SwapModel& model);

/// Fits c0 + c2 v^2 + c3 v^3 = 1/s_a through three targets exactly. Throws
/// CalibrationError if the system is singular or the fitted denominator is
/// not positive and increasing over `check_range`.
SensitivityCoeffs CalibrateSensitivity(const InstabilityTargets& targets,
                                       const SwapModel& model,
                                       std::pair<double, double> check_range = {4.0, 30.0});

/// Single-target fit with c3 = 0 and c0 held at `c0`.
SensitivityCoeffs CalibrateSingleTarget(const InstabilityTargets& targets, double c0,
                                        const SwapModel& model);

/// The symmetric two-agent closed loop as a discrete map over one control
/// period. State layout: (x, y, theta, v) for agents 0 and 1, then
/// w_01 (delta, accel) and w_10 (delta, accel).
class TwoAgentLoop {
 public:
  using State = Eigen::Matrix<double, 12, 1>;

  TwoAgentLoop(PccaConfig config, double v0, double delta0, double kappa,
               double ctrl_period, double plant_dt = 0.01);

  State Initial() const;
  State Step(const State& s) const;
  /// Mirror image of agent 0 onto agent 1 about the road centreline.
  State Symmetrize(const State& s) const;
  /// Runs the symmetric loop until lateral motion settles.
  State Equilibrium(int max_steps = 20000, double tol = 1e-11) const;

  double ctrl_period() const { return ctrl_period_; }
  double v0() const { return v0_; }
  double delta0() const { return delta0_; }
  double kappa() const { return kappa_; }
  const PccaConfig& config() const { return config_; }

 private:
  PccaConfig config_;
  double v0_;
  double delta0_;
  double kappa_;
  double ctrl_period_;
  double plant_dt_;
};

struct LinearizationResult {
  Eigen::MatrixXd jacobian;  // discrete, one control period
  std::vector<std::complex<double>> discrete;
  std::vector<std::complex<double>> continuous;  // log(mu) / period
  double dominant = 0.0;      // largest real continuous rate among real modes
  double closed_form = 0.0;   // UnstableEigenvalue at the same operating point
  double loop_model = 0.0;    // LoopModelEigenvalue at the same operating point
  TwoAgentLoop::State equilibrium;

  /// True if some continuous eigenvalue is within rel_tol of `target`.
  bool HasRate(double target, double rel_tol, double abs_tol = 1e-3) const;
};

/// Central-difference Jacobian of the loop map at its symmetric equilibrium.
/// Throws std::runtime_error if a perturbed step leaves the admissible set.
LinearizationResult NumericalLinearization(const TwoAgentLoop& loop);

}  // namespace pcca
