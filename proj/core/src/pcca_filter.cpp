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

#include "pcca/pcca_filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pcca {
namespace {

constexpr int kBoundKeyBase = 10;

ConstraintKey RowKey(const CbfRow& row) {
  return {static_cast<int>(row.kind), row.pair.first, row.pair.second};
}

double MinOverInterval(double coeff, const Interval& range) {
  return coeff >= 0.0 ? coeff * range.lo : coeff * range.hi;
}

struct Participants {
  std::vector<int> ids;
  std::vector<AgentState> states;
};

Participants Collect(int ego_id, const AgentState& ego_state,
                     std::span<const BsmMessage> messages) {
  std::vector<std::pair<int, AgentState>> all{{ego_id, ego_state}};
  for (const BsmMessage& m : messages) {
    if (m.sender != ego_id) all.emplace_back(m.sender, m.State());
  }
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  Participants out;
  for (const auto& [id, s] : all) {
    if (!out.ids.empty() && out.ids.back() == id) {
      throw std::invalid_argument("BuildQp: duplicate agent id in snapshot");
    }
    out.ids.push_back(id);
    out.states.push_back(s);
  }
  return out;
}

std::vector<CbfRow> RowsFor(int ego_id, const Participants& agents,
                            const PccaConfig& config, const EgoRails& rails) {
  const EgoRails straight = StraightRails(config);
  const size_t n = agents.ids.size();
  std::vector<CbfRow> rows;
  rows.reserve(n * (n - 1) + 2 * n);
  for (size_t j = 0; j < n; ++j) {
    for (size_t k = 0; k < n; ++k) {
      if (j == k) continue;
      rows.push_back(EllipseRow(agents.ids[j], agents.states[j], agents.ids[k],
                                agents.states[k], config.spec, config.gains,
                                config.params));
    }
  }
  for (size_t k = 0; k < n; ++k) {
    const EgoRails& r = agents.ids[k] == ego_id ? rails : straight;
    auto [right, left] = RoadRows(agents.ids[k], agents.states[k], r.left, r.right,
                                  config.gains, config.params);
    rows.push_back(right);
    rows.push_back(left);
  }
  return rows;
}

}  // namespace

double Sensitivity(double v, const SensitivityCoeffs& coeffs) {
  return 1.0 / std::max(coeffs.Denominator(v), coeffs.min_denominator);
}

void PccaConfig::Validate() const {
  params.Validate();
  if (!(tau > 0.0)) throw std::invalid_argument("PccaConfig: tau must be positive");
  if (!(slack_weight_agent > 0.0) || !(slack_weight_road > 0.0)) {
    throw std::invalid_argument("PccaConfig: slack weights must be positive");
  }
  if (!(sensitivity.min_denominator > 0.0)) {
    throw std::invalid_argument("PccaConfig: sensitivity floor must be positive");
  }
  if (!(other_box_scale >= 1.0)) {
    throw std::invalid_argument("PccaConfig: other-agent box must contain the ego box");
  }
  if (!(ego_box.delta.lo <= 0.0 && ego_box.delta.hi >= 0.0 && ego_box.accel.lo <= 0.0 &&
        ego_box.accel.hi >= 0.0)) {
    throw std::invalid_argument("PccaConfig: ego box must contain zero");
  }
  if (!(RoadMargin() < 0.5 * lanes.lane_width)) {
    throw std::invalid_argument("PccaConfig: road margin must leave the lane centres admissible");
  }
}

ControlInput PccaState::W(int j) const {
  const auto it = w.find(j);
  return it == w.end() ? ControlInput{} : it->second;
}

EgoRails StraightRails(const LaneGeometry& lanes, double margin) {
  return {RailFn::Constant(lanes.LeftEdge() - margin), RailFn::Constant(lanes.RightEdge() + margin)};
}

EgoRails StraightRails(const PccaConfig& config) {
  return StraightRails(config.lanes, config.RoadMargin());
}

int QpLayout::Column(int agent_id) const {
  const auto it = std::lower_bound(agents.begin(), agents.end(), agent_id);
  if (it == agents.end() || *it != agent_id) return -1;
  return 2 * static_cast<int>(it - agents.begin());
}

std::vector<CbfRow> AllRows(int ego_id, const AgentState& ego_state,
                            std::span<const BsmMessage> messages,
                            const PccaConfig& config, const EgoRails& rails) {
  return RowsFor(ego_id, Collect(ego_id, ego_state, messages), config, rails);
}

QpLayout BuildQp(int ego_id, const AgentState& ego_state,
                 std::span<const BsmMessage> messages, const DrivingIntent& intent,
                 const PccaState& state, const PccaConfig& config,
                 const EgoRails& rails) {
  const ControlInput baseline = PurePursuit(ego_state, intent, config.params, config.lanes,
                                            config.pure_pursuit, config.ego_box);
  return BuildQpWithBaseline(ego_id, ego_state, messages, baseline, state, config, rails);
}

QpLayout BuildQpWithBaseline(int ego_id, const AgentState& ego_state,
                             std::span<const BsmMessage> messages,
                             const ControlInput& baseline, const PccaState& state,
                             const PccaConfig& config, const EgoRails& rails) {
  const Participants agents = Collect(ego_id, ego_state, messages);
  const int n_agents = static_cast<int>(agents.ids.size());
  const ControlBox other_box = config.other_box();

  QpLayout layout;
  layout.agents = agents.ids;
  layout.ego_index = static_cast<int>(
      std::find(agents.ids.begin(), agents.ids.end(), ego_id) - agents.ids.begin());
  layout.baseline = baseline;

  auto box_of = [&](int agent_id) -> const ControlBox& {
    return agent_id == ego_id ? config.ego_box : other_box;
  };

  // Constant part of every row: a + b . w. The ego's own w is zero.
  std::vector<CbfRow> candidates = RowsFor(ego_id, agents, config, rails);
  std::vector<double> offsets;
  for (const CbfRow& row : candidates) {
    double offset = row.a;
    double lower = 0.0;
    for (int t = 0; t < row.term_count; ++t) {
      const RowTerm& term = row.b[t];
      const ControlInput w = term.agent == ego_id ? ControlInput{} : state.W(term.agent);
      offset += row.bw[t].coeff[0] * w.delta + row.bw[t].coeff[1] * w.accel;
      const ControlBox& box = box_of(term.agent);
      lower += MinOverInterval(term.coeff[0], box.delta) +
               MinOverInterval(term.coeff[1], box.accel);
    }
    if (config.prune_redundant_rows && offset + lower >= 0.0) {
      ++layout.pruned_rows;
      continue;
    }
    layout.rows.push_back(row);
    layout.keys.push_back(RowKey(row));
    offsets.push_back(offset);
  }

  const int n_rows = static_cast<int>(layout.rows.size());
  const int n_vars = 2 * n_agents + (config.soft ? n_rows : 0);
  layout.slack_offset = 2 * n_agents;
  QpProblem& p = layout.problem;
  p = QpProblem::Zeros(n_vars, n_rows);

  for (int k = 0; k < n_agents; ++k) {
    const double s_a = Sensitivity(agents.states[k].v, config.sensitivity);
    p.H(2 * k, 2 * k) = 2.0;
    p.H(2 * k + 1, 2 * k + 1) = 2.0 * s_a;
    const ControlBox& box = box_of(agents.ids[k]);
    p.lb[2 * k] = box.delta.lo;
    p.ub[2 * k] = box.delta.hi;
    p.lb[2 * k + 1] = box.accel.lo;
    p.ub[2 * k + 1] = box.accel.hi;
    if (k == layout.ego_index) {
      p.f[2 * k] = -2.0 * layout.baseline.delta;
      p.f[2 * k + 1] = -2.0 * s_a * layout.baseline.accel;
    }
  }

  for (int r = 0; r < n_rows; ++r) {
    const CbfRow& row = layout.rows[r];
    for (int t = 0; t < row.term_count; ++t) {
      const int col = layout.Column(row.b[t].agent);
      p.A(r, col) += row.b[t].coeff[0];
      p.A(r, col + 1) += row.b[t].coeff[1];
    }
    p.b[r] = offsets[r];
    if (config.soft) {
      const int s = layout.slack_offset + r;
      const double weight = row.kind == RowKind::kInterAgent ? config.slack_weight_agent
                                                             : config.slack_weight_road;
      p.A(r, s) = 1.0;
      p.H(s, s) = 2.0 * weight;
      p.lb[s] = 0.0;
    }
  }
  return layout;
}

ControlInput FeasibleFallback(double v, double lambda1, const ControlInput& w) {
  return {0.0 - w.delta, -lambda1 * v - w.accel};
}

ControlInput UpdateDisturbance(const ControlInput& w, const ControlInput& observed,
                               const ControlInput& local_copy, double dt, double tau) {
  const double k = dt / tau;
  return {w.delta + k * (-w.delta + observed.delta - local_copy.delta),
          w.accel + k * (-w.accel + observed.accel - local_copy.accel)};
}

FilterResult FilterStep(int ego_id, const AgentState& ego_state,
                        std::span<const BsmMessage> messages,
                        const DrivingIntent& intent, const PccaState& state,
                        const PccaConfig& config, const EgoRails& rails,
                        double dt_ctrl, double now, QpSolver& solver) {
  FilterResult out;
  PccaState& next = out.state;

  // Corrector: compare what each neighbour reported doing last period with
  // the local copy computed for it last period.
  for (const BsmMessage& m : messages) {
    if (m.sender == ego_id) continue;
    const auto last = state.last_solution.find(m.sender);
    if (last == state.last_solution.end()) {
      next.w[m.sender] = ControlInput{};
      continue;
    }
    const ControlInput observed =
        now - m.timestamp > config.stale_after ? ControlInput{} : m.Action();
    next.w[m.sender] =
        UpdateDisturbance(state.W(m.sender), observed, last->second, dt_ctrl, config.tau);
  }

  auto use_fallback = [&](std::span<const int> agent_ids,
                          std::span<const AgentState> states) {
    out.fallback = true;
    const ControlInput raw = FeasibleFallback(ego_state.v, config.gains.lambda1(), {});
    out.applied = ClampControl(raw, config.ego_box);
    out.fallback_clamped = !(out.applied == raw);
    for (size_t k = 0; k < agent_ids.size(); ++k) {
      if (agent_ids[k] == ego_id) continue;
      next.last_solution[agent_ids[k]] =
          FeasibleFallback(states[k].v, config.gains.lambda1(), next.W(agent_ids[k]));
    }
  };

  QpLayout layout;
  try {
    layout = BuildQp(ego_id, ego_state, messages, intent, next, config, rails);
  } catch (const DegenerateGeometry&) {
    out.baseline = PurePursuit(ego_state, intent, config.params, config.lanes,
                               config.pure_pursuit, config.ego_box);
    std::vector<int> ids;
    std::vector<AgentState> states;
    for (const BsmMessage& m : messages) {
      ids.push_back(m.sender);
      states.push_back(m.State());
    }
    out.status = QpStatus::kInfeasible;
    use_fallback(ids, states);
    out.intervened = true;
    return out;
  }
  out.baseline = layout.baseline;
  const QpProblem& p = layout.problem;
  out.qp_vars = p.num_vars();
  out.qp_rows = p.num_rows();

  // Translate last period's active keys into this problem's constraint ids.
  std::vector<int> warm;
  if (!state.last_active.empty()) {
    std::map<ConstraintKey, int> row_index;
    for (int r = 0; r < static_cast<int>(layout.keys.size()); ++r) row_index[layout.keys[r]] = r;
    const int m = p.num_rows();
    const int n = p.num_vars();
    for (const ConstraintKey& key : state.last_active) {
      const auto [type, a, b] = key;
      if (type < kBoundKeyBase) {
        if (auto it = row_index.find(key); it != row_index.end()) warm.push_back(it->second);
      } else {
        const int col = layout.Column(a);
        if (col < 0) continue;
        const int comp = (type - kBoundKeyBase) / 2;
        const int side = (type - kBoundKeyBase) % 2;
        warm.push_back(m + side * n + col + comp);
      }
    }
  }

  const QpSolution sol = solver.Solve(p, warm);
  out.status = sol.status;
  out.iterations = sol.iterations;

  if (sol.status != QpStatus::kOptimal) {
    std::vector<AgentState> states;
    for (int id : layout.agents) {
      if (id == ego_id) {
        states.push_back(ego_state);
      } else {
        const auto it = std::find_if(messages.begin(), messages.end(),
                                     [id](const BsmMessage& m) { return m.sender == id; });
        states.push_back(it->State());
      }
    }
    use_fallback(layout.agents, states);
  } else {
    const int ego_col = 2 * layout.ego_index;
    out.applied = ClampControl({sol.z[ego_col], sol.z[ego_col + 1]}, config.ego_box);
    for (int k = 0; k < static_cast<int>(layout.agents.size()); ++k) {
      if (k == layout.ego_index) continue;
      next.last_solution[layout.agents[k]] = {sol.z[2 * k], sol.z[2 * k + 1]};
    }
    const int m = p.num_rows();
    const int n = p.num_vars();
    for (int id : sol.active_set) {
      if (id < m) {
        next.last_active.push_back(layout.keys[id]);
        continue;
      }
      const int side = id < m + n ? 0 : 1;
      const int col = id - m - side * n;
      if (col >= layout.slack_offset) continue;
      next.last_active.emplace_back(kBoundKeyBase + 2 * (col % 2) + side,
                                    layout.agents[col / 2], 0);
    }
    if (config.soft) {
      for (int s = layout.slack_offset; s < n; ++s) {
        if (sol.z[s] > 1e-9) {
          out.slack_active = true;
          break;
        }
      }
    }
  }
  out.intervened = std::abs(out.applied.delta - out.baseline.delta) > 1e-9 ||
                   std::abs(out.applied.accel - out.baseline.accel) > 1e-9;
  return out;
}

}  // namespace pcca
