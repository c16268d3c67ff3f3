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

#include "pcca/stability_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace pcca {
namespace {

// Coupling term 4 * 2 delta0 / (r v0^2) * (delta0 v0 / L_w + L_w / alpha^2),
// i.e. the product under the root without the 1/s_a factor.
double Coupling(double v0, double delta0, const SwapModel& model) {
  const double lw = model.params.wheelbase;
  const double alpha = model.spec.alpha();
  return 8.0 * delta0 / (model.spec.r() * v0 * v0) *
         (delta0 * v0 / lw + lw / (alpha * alpha));
}

void CheckPositive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(what) + " must be positive and finite");
  }
}

constexpr int kAgentDim = 4;
constexpr int kW01 = 8;
constexpr int kW10 = 10;

AgentState AgentAt(const TwoAgentLoop::State& s, int k) {
  const int o = kAgentDim * k;
  return {s[o], s[o + 1], s[o + 2], s[o + 3]};
}

void PutAgent(TwoAgentLoop::State& s, int k, const AgentState& a) {
  const int o = kAgentDim * k;
  s[o] = a.x;
  s[o + 1] = a.y;
  s[o + 2] = a.theta;
  s[o + 3] = a.v;
}

}  // namespace

InstabilityTargets InstabilityTargets::IdaFast() {
  return {{{MphToMps(10.0), 2.6}, {MphToMps(20.0), 3.1}, {MphToMps(30.0), 3.5}}, 0.015};
}

InstabilityTargets InstabilityTargets::IdaSlow() { return IdaFast().Scaled(0.5); }

InstabilityTargets InstabilityTargets::Vgr() { return {{{MphToMps(20.0), 0.13}}, 0.015}; }

InstabilityTargets InstabilityTargets::Scaled(double factor) const {
  InstabilityTargets out = *this;
  for (auto& [v, lambda] : out.points) lambda *= factor;
  return out;
}

void InstabilityTargets::Validate() const {
  if (points.empty()) throw CalibrationError("no eigenvalue targets given");
  CheckPositive(delta0, "delta0");
  for (size_t k = 0; k < points.size(); ++k) {
    if (!(points[k].first > 0.0) || !(points[k].second > 0.0) ||
        !std::isfinite(points[k].first) || !std::isfinite(points[k].second)) {
      throw CalibrationError("target speeds and eigenvalues must be positive");
    }
    if (k > 0 && !(points[k].first > points[k - 1].first)) {
      throw CalibrationError("target speeds must be strictly increasing");
    }
  }
}

double UnstableEigenvalue(double v0, double s_a, double delta0, const SwapModel& model) {
  return CoupledSpectrum(v0, s_a, delta0, model)[2];
}

std::array<double, 4> CoupledSpectrum(double v0, double s_a, double delta0,
                                      const SwapModel& model) {
  CheckPositive(v0, "v0");
  CheckPositive(s_a, "s_a");
  CheckPositive(delta0, "delta0");
  if (!(model.kappa >= 0.0)) throw std::invalid_argument("kappa must be non-negative");
  const double half = 0.5 * model.kappa;
  const double root = std::sqrt(half * half + Coupling(v0, delta0, model) / s_a);
  return {0.0, 0.0, -half + root, -half - root};
}

double LoopModelEigenvalue(double v0, double s_a, double delta0, const SwapModel& model) {
  CheckPositive(v0, "v0");
  CheckPositive(s_a, "s_a");
  CheckPositive(delta0, "delta0");
  const double lw = model.params.wheelbase;
  const double r = model.spec.r();
  const double alpha = model.spec.alpha();
  const double half = 0.5 * model.kappa;
  const double k = 2.0 * delta0 * (lw + r * delta0) / (s_a * r * v0 * v0 * alpha * alpha);
  return -half + std::sqrt(half * half + k);
}

double RequiredInverseSensitivity(double v0, double eigenvalue, double delta0,
                                  const SwapModel& model) {
  CheckPositive(v0, "v0");
  CheckPositive(eigenvalue, "eigenvalue");
  CheckPositive(delta0, "delta0");
  // (lambda + kappa/2)^2 = kappa^2/4 + K / s_a  =>  1/s_a = (lambda^2 + kappa lambda) / K
  return (eigenvalue * eigenvalue + model.kappa * eigenvalue) / Coupling(v0, delta0, model);
}

SensitivityCoeffs CalibrateSensitivity(const InstabilityTargets& targets,
                                       const SwapModel& model,
                                       std::pair<double, double> check_range) {
  targets.Validate();
  if (targets.points.size() != 3) {
    throw CalibrationError("three-coefficient fit needs exactly three targets");
  }
  Eigen::Matrix3d m;
  Eigen::Vector3d y;
  for (int k = 0; k < 3; ++k) {
    const auto [v, lambda] = targets.points[k];
    m.row(k) << 1.0, v * v, v * v * v;
    y[k] = RequiredInverseSensitivity(v, lambda, targets.delta0, model);
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(m);
  if (lu.rank() < 3) throw CalibrationError("calibration system is singular");
  Eigen::Vector3d c = lu.solve(y);
  // One Newton refinement; the Vandermonde-like system spans six decades.
  c += lu.solve(y - m * c);

  SensitivityCoeffs out;
  out.c0 = c[0];
  out.c2 = c[1];
  out.c3 = c[2];

  const auto [lo, hi] = check_range;
  constexpr int kSamples = 261;
  double prev = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < kSamples; ++k) {
    const double v = lo + (hi - lo) * k / (kSamples - 1);
    const double d = out.Denominator(v);
    if (!(d > 0.0)) {
      std::ostringstream msg;
      msg << "calibrated 1/s_a is not positive at v = " << v << " m/s";
      throw CalibrationError(msg.str());
    }
    if (!(d > prev)) {
      std::ostringstream msg;
      msg << "calibrated 1/s_a is not increasing at v = " << v << " m/s";
      throw CalibrationError(msg.str());
    }
    prev = d;
  }
  return out;
}

SensitivityCoeffs CalibrateSingleTarget(const InstabilityTargets& targets, double c0,
                                        const SwapModel& model) {
  targets.Validate();
  if (targets.points.size() != 1) {
    throw CalibrationError("single-target fit needs exactly one target");
  }
  const auto [v, lambda] = targets.points.front();
  SensitivityCoeffs out;
  out.c0 = c0;
  out.c2 = (RequiredInverseSensitivity(v, lambda, targets.delta0, model) - c0) / (v * v);
  out.c3 = 0.0;
  if (!(out.c2 > 0.0)) throw CalibrationError("single-target fit gives c2 <= 0");
  return out;
}

TwoAgentLoop::TwoAgentLoop(PccaConfig config, double v0, double delta0, double kappa,
                           double ctrl_period, double plant_dt)
    : config_(std::move(config)),
      v0_(v0),
      delta0_(delta0),
      kappa_(kappa),
      ctrl_period_(ctrl_period),
      plant_dt_(plant_dt) {
  config_.Validate();
  CheckPositive(v0_, "v0");
  CheckPositive(delta0_, "delta0");
  CheckPositive(ctrl_period_, "ctrl_period");
  CheckPositive(plant_dt_, "plant_dt");
}

TwoAgentLoop::State TwoAgentLoop::Initial() const {
  // Side by side, agent 1 exactly on the semi-minor boundary of agent 0's
  // CBF ellipse, both centred about the lane divider.
  const double mid = 0.5 * (config_.lanes.Center(Lane::kRight) + config_.lanes.Center(Lane::kLeft));
  const double half_gap = 0.5 * config_.spec.r();
  State s = State::Zero();
  PutAgent(s, 0, {0.0, mid - half_gap, 0.0, v0_});
  PutAgent(s, 1, {0.0, mid + half_gap, 0.0, v0_});
  s[kW01] = -delta0_;
  s[kW10] = delta0_;
  return s;
}

TwoAgentLoop::State TwoAgentLoop::Step(const State& s) const {
  const std::array<AgentState, 2> agents{AgentAt(s, 0), AgentAt(s, 1)};
  const std::array<ControlInput, 2> w{ControlInput{s[kW01], s[kW01 + 1]},
                                      ControlInput{s[kW10], s[kW10 + 1]}};
  const EgoRails straight = StraightRails(config_);

  std::array<ControlInput, 2> applied;
  std::array<ControlInput, 2> copy;  // copy[i] = agent i's plan for the other
  QpSolver solver;
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    BsmMessage msg;
    msg.sender = j;
    msg.x = agents[j].x;
    msg.y = agents[j].y;
    msg.theta = agents[j].theta;
    msg.v = agents[j].v;
    PccaState memory;
    memory.w[j] = w[i];
    // Agent 0 sits in the right lane and steers left; agent 1 mirrors it.
    const ControlInput baseline{i == 0 ? delta0_ : -delta0_,
                                -kappa_ * (agents[i].v - v0_)};
    const QpLayout layout = BuildQpWithBaseline(
        i, agents[i], std::span<const BsmMessage>(&msg, 1), baseline, memory, config_, straight);
    const QpSolution sol = solver.Solve(layout.problem);
    if (sol.status != QpStatus::kOptimal) {
      throw std::runtime_error("two-agent loop: QP not solved to optimality");
    }
    const int ci = layout.Column(i);
    const int cj = layout.Column(j);
    applied[i] = ClampControl({sol.z[ci], sol.z[ci + 1]}, config_.ego_box);
    copy[i] = {sol.z[cj], sol.z[cj + 1]};
  }

  State next;
  for (int i = 0; i < 2; ++i) {
    PutAgent(next, i, Integrate(agents[i], applied[i], config_.params, ctrl_period_, plant_dt_));
    const ControlInput wn =
        UpdateDisturbance(w[i], applied[1 - i], copy[i], ctrl_period_, config_.tau);
    const int o = i == 0 ? kW01 : kW10;
    next[o] = wn.delta;
    next[o + 1] = wn.accel;
  }
  return next;
}

TwoAgentLoop::State TwoAgentLoop::Symmetrize(const State& s) const {
  const double mid = 0.5 * (config_.lanes.Center(Lane::kRight) + config_.lanes.Center(Lane::kLeft));
  State out = s;
  const AgentState a = AgentAt(s, 0);
  PutAgent(out, 1, {a.x, 2.0 * mid - a.y, -a.theta, a.v});
  out[kW10] = -s[kW01];
  out[kW10 + 1] = s[kW01 + 1];
  return out;
}

TwoAgentLoop::State TwoAgentLoop::Equilibrium(int max_steps, double tol) const {
  State s = Symmetrize(Initial());
  for (int k = 0; k < max_steps; ++k) {
    State next = Symmetrize(Step(s));
    // The equilibrium moves along x; pin it at the origin.
    next[0] = 0.0;
    next[kAgentDim] = 0.0;
    const double change = (next - s).cwiseAbs().maxCoeff();
    s = next;
    if (change < tol) return s;
  }
  throw std::runtime_error("two-agent loop: symmetric equilibrium not reached");
}

bool LinearizationResult::HasRate(double target, double rel_tol, double abs_tol) const {
  return std::any_of(continuous.begin(), continuous.end(), [&](const auto& c) {
    return std::abs(c - std::complex<double>(target, 0.0)) <=
           std::max(rel_tol * std::abs(target), abs_tol);
  });
}

LinearizationResult NumericalLinearization(const TwoAgentLoop& loop) {
  LinearizationResult out;
  const TwoAgentLoop::State eq = loop.Equilibrium();
  out.equilibrium = eq;

  TwoAgentLoop::State scale;
  scale << 1.0, 1.0, 0.1, 1.0, 1.0, 1.0, 0.1, 1.0, loop.delta0(), 1.0, loop.delta0(), 1.0;
  constexpr double kRelStep = 1e-5;

  const PccaConfig& config = loop.config();
  const EgoRails straight = StraightRails(config);
  auto admissible = [&](const TwoAgentLoop::State& s) {
    // The loop is only meaningful inside the road and with both vehicles
    // moving forward.
    for (int k = 0; k < 2; ++k) {
      const AgentState a = AgentAt(s, k);
      if (!(a.v > 0.0) || std::abs(a.theta) >= 0.5 * std::numbers::pi) return false;
      if (a.y <= straight.right.Value(a.x) || a.y >= straight.left.Value(a.x)) return false;
    }
    return true;
  };

  out.jacobian.resize(12, 12);
  for (int c = 0; c < 12; ++c) {
    const double h = kRelStep * scale[c];
    TwoAgentLoop::State plus = eq;
    TwoAgentLoop::State minus = eq;
    plus[c] += h;
    minus[c] -= h;
    if (!admissible(plus) || !admissible(minus)) {
      throw std::runtime_error("numerical linearisation: perturbation leaves the admissible set");
    }
    out.jacobian.col(c) = (loop.Step(plus) - loop.Step(minus)) / (2.0 * h);
  }

  Eigen::EigenSolver<Eigen::MatrixXd> eig(out.jacobian, false);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("numerical linearisation: eigen decomposition failed");
  }
  out.dominant = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 12; ++k) {
    const std::complex<double> mu = eig.eigenvalues()[k];
    out.discrete.push_back(mu);
    const std::complex<double> rate = std::log(mu) / loop.ctrl_period();
    out.continuous.push_back(rate);
    if (std::abs(rate.imag()) < 1e-9 && rate.real() > out.dominant) out.dominant = rate.real();
  }

  SwapModel model;
  model.kappa = loop.kappa();
  model.params = config.params;
  model.spec = config.spec;
  const double s_a = Sensitivity(loop.v0(), config.sensitivity);
  out.closed_form = UnstableEigenvalue(loop.v0(), s_a, loop.delta0(), model);
  out.loop_model = LoopModelEigenvalue(loop.v0(), s_a, loop.delta0(), model);
  return out;
}

}  // namespace pcca
