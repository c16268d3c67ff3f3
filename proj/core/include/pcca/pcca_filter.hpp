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

// Predictor-corrector CBF safety filter.
//
// Every agent solves one quasi-centralised QP over the controls of all agents
// it hears from, applies its own entry and keeps the rest as local copies.
// The mismatch between what a neighbour actually did (as reported in its
// BSM) and the local copy is low-pass filtered into a disturbance estimate w
// that enters the next QP.

#pragma once

#include <map>
#include <span>
#include <tuple>
#include <vector>

#include "pcca/baseline_control.hpp"
#include "pcca/geometry_cbf.hpp"
#include "pcca/qp_solver.hpp"
#include "pcca/vehicle_dynamics.hpp"

namespace pcca {

/// s_a(v) = 1 / (c0 + c2 v^2 + c3 v^3). The denominator is floored at
/// `min_denominator` so the QP stays strictly convex at any speed.
struct SensitivityCoeffs {
  double c0 = 1.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double min_denominator = 1.0;

  double Denominator(double v) const { return c0 + c2 * v * v + c3 * v * v * v; }
};

double Sensitivity(double v, const SensitivityCoeffs& coeffs);

struct PccaConfig {
  CbfGains gains;
  EllipseSpec spec = DefaultCbfEllipse();
  SensitivityCoeffs sensitivity;
  double tau = 0.1;  // w-filter time constant [s]
  ControlBox ego_box;
  double other_box_scale = 1.8;
  double slack_weight_agent = 20000.0;
  double slack_weight_road = 1000.0;
  bool soft = true;
  /// Drop rows that no box-feasible control can violate. Exact: the optimum
  /// is unchanged.
  bool prune_redundant_rows = true;
  /// Observed actions older than this are taken as zero.
  double stale_after = 1.0;  // [s]
  /// Inset of the centre rails from the road edges [m]. Negative means half
  /// the body width, which keeps an aligned body on the road.
  double road_margin = -1.0;

  VehicleParams params;
  PurePursuitParams pure_pursuit;
  LaneGeometry lanes;

  ControlBox other_box() const { return ego_box.Scaled(other_box_scale); }
  double RoadMargin() const { return road_margin >= 0.0 ? road_margin : 0.5 * params.body_width; }
  void Validate() const;
};

/// Fields carried by a basic safety message.
struct BsmMessage {
  int sender = -1;
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
  double theta = 0.0;
  double delta = 0.0;  // last applied steering
  double accel = 0.0;  // last applied acceleration
  double length = 4.7;
  double width = 1.85;
  double timestamp = 0.0;

  AgentState State() const { return {x, y, theta, v}; }
  ControlInput Action() const { return {delta, accel}; }
};

/// Identifies a constraint across ticks, independent of its QP row index.
using ConstraintKey = std::tuple<int, int, int>;

/// Per-agent filter memory.
struct PccaState {
  std::map<int, ControlInput> w;              // j -> w_ij, never holds the ego
  std::map<int, ControlInput> last_solution;  // j -> u*_ij local copies
  std::vector<ConstraintKey> last_active;

  ControlInput W(int j) const;
};

/// Road boundaries applied to the ego's own road rows.
struct EgoRails {
  RailFn left;
  RailFn right;
};

/// Constant rails at the road edges, inset by `margin`.
EgoRails StraightRails(const LaneGeometry& lanes, double margin = 0.0);
EgoRails StraightRails(const PccaConfig& config);

struct QpLayout {
  QpProblem problem;
  std::vector<int> agents;          // sorted ids; agent k owns columns 2k, 2k+1
  int ego_index = -1;
  std::vector<CbfRow> rows;         // kept rows, same order as problem rows
  std::vector<ConstraintKey> keys;  // row keys, same order
  int slack_offset = 0;             // first slack column (soft mode)
  ControlInput baseline;            // ego performance control u_i0
  int pruned_rows = 0;

  int Column(int agent_id) const;
};

/// Assembles the PCCA QP for `ego_id`. `messages` are the latest BSMs from
/// other agents in range. Only the ego's own intent is consulted.
QpLayout BuildQp(int ego_id, const AgentState& ego_state,
                 std::span<const BsmMessage> messages, const DrivingIntent& intent,
                 const PccaState& state, const PccaConfig& config,
                 const EgoRails& rails);

/// Same as BuildQp with an explicit ego performance control.
QpLayout BuildQpWithBaseline(int ego_id, const AgentState& ego_state,
                             std::span<const BsmMessage> messages,
                             const ControlInput& baseline, const PccaState& state,
                             const PccaConfig& config, const EgoRails& rails);

/// All constraint rows of the PCCA QP (no pruning), in BuildQp order.
std::vector<CbfRow> AllRows(int ego_id, const AgentState& ego_state,
                            std::span<const BsmMessage> messages,
                            const PccaConfig& config, const EgoRails& rails);

/// Feasible action for agent j from agent i's view: [0, -lambda1 v] - w_ij.
ControlInput FeasibleFallback(double v, double lambda1, const ControlInput& w);

struct FilterResult {
  ControlInput applied;
  ControlInput baseline;
  PccaState state;
  QpStatus status = QpStatus::kOptimal;
  bool fallback = false;
  bool fallback_clamped = false;  // fallback exceeded the ego box
  bool slack_active = false;
  bool intervened = false;        // applied differs from baseline
  int iterations = 0;
  int qp_vars = 0;
  int qp_rows = 0;
};

/// One control period of the filter: updates w from the observed actions,
/// solves the QP and returns the ego action plus the new filter memory.
FilterResult FilterStep(int ego_id, const AgentState& ego_state,
                        std::span<const BsmMessage> messages,
                        const DrivingIntent& intent, const PccaState& state,
                        const PccaConfig& config, const EgoRails& rails,
                        double dt_ctrl, double now, QpSolver& solver);

/// The w update in isolation: one forward-Euler step of
/// tau * dw/dt = -w + observed - local_copy.
ControlInput UpdateDisturbance(const ControlInput& w, const ControlInput& observed,
                               const ControlInput& local_copy, double dt, double tau);

}  // namespace pcca
