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

#include "pcca/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace pcca {
namespace {

constexpr double kJoulePerMeterToWhPerKm = 1.0 / 3.6;

// Per-agent sample indices in tick order.
std::map<int, std::vector<size_t>> ByAgent(const EpisodeLog& log) {
  std::map<int, std::vector<size_t>> out;
  for (size_t k = 0; k < log.samples.size(); ++k) out[log.samples[k].id].push_back(k);
  return out;
}

bool Consecutive(const TickSample& a, const TickSample& b, double period) {
  return std::abs(b.t - a.t - period) < 1e-6 * std::max(1.0, period);
}

std::string Fixed(double value, int digits) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

}  // namespace

std::vector<std::pair<size_t, size_t>> TickRanges(const EpisodeLog& log) {
  std::vector<std::pair<size_t, size_t>> out;
  size_t begin = 0;
  for (size_t k = 1; k <= log.samples.size(); ++k) {
    if (k == log.samples.size() || log.samples[k].t != log.samples[begin].t) {
      out.emplace_back(begin, k);
      begin = k;
    }
  }
  if (log.samples.empty()) out.clear();
  return out;
}

double BrakeLoss(const EpisodeLog& log, double mass) {
  double energy = 0.0;    // [J]
  double distance = 0.0;  // [m]
  for (const auto& [id, idx] : ByAgent(log)) {
    for (size_t k = 0; k + 1 < idx.size(); ++k) {
      const TickSample& a = log.samples[idx[k]];
      const TickSample& b = log.samples[idx[k + 1]];
      if (!Consecutive(a, b, log.ctrl_period)) continue;
      const double d = 0.5 * (a.state.v + b.state.v) * log.ctrl_period;
      energy += mass * std::max(0.0, -a.applied.accel) * d;
      distance += d;
    }
  }
  return distance > 0.0 ? energy / distance * kJoulePerMeterToWhPerKm : 0.0;
}

RunMetrics ComputeMetrics(const EpisodeLog& log, const MetricsContext& ctx) {
  RunMetrics m;
  m.brake_loss = BrakeLoss(log, ctx.params.mass);

  double speed_sum = 0.0;
  size_t speed_n = 0;
  for (const TickSample& s : log.samples) {
    if (s.state.x >= ctx.zone_start && s.state.x <= ctx.zone_end) {
      speed_sum += s.state.v;
      ++speed_n;
    }
    if (s.flags & kFlagFallback) ++m.fallback_count;
    if (s.flags & kFlagFallbackClamped) ++m.fallback_clamped_count;
    for (const Vec2& c : BodyCorners(s.state, ctx.params)) {
      m.oob_max = std::max({m.oob_max, ctx.lanes.RightEdge() - c.y(), c.y() - ctx.lanes.LeftEdge()});
    }
  }
  m.avg_speed = speed_n > 0 ? speed_sum / static_cast<double>(speed_n) : 0.0;

  double desired = 0.0;
  for (const VehicleInfo& v : log.vehicles) desired += v.desired_speed;
  m.mean_desired_speed = log.vehicles.empty() ? 0.0 : desired / log.vehicles.size();

  m.min_h0 = std::numeric_limits<double>::infinity();
  std::set<std::pair<int, int>> collided;
  for (const auto& [begin, end] : TickRanges(log)) {
    for (size_t a = begin; a < end; ++a) {
      for (size_t b = a + 1; b < end; ++b) {
        const TickSample& i = log.samples[a];
        const TickSample& j = log.samples[b];
        m.min_h0 = std::min({m.min_h0, H0Metric(i.state, j.state, ctx.h0_spec),
                             H0Metric(j.state, i.state, ctx.h0_spec)});
        if (CollisionCheck(i.state, j.state, ctx.params).overlap) {
          collided.emplace(std::min(i.id, j.id), std::max(i.id, j.id));
        }
      }
    }
  }
  m.collision_count = static_cast<int>(collided.size());

  const auto by_agent = ByAgent(log);
  for (const auto& [id, idx] : by_agent) {
    for (size_t k = 1; k < idx.size(); ++k) {
      const TickSample& prev = log.samples[idx[k - 1]];
      const TickSample& cur = log.samples[idx[k]];
      if (!Consecutive(prev, cur, log.ctrl_period)) continue;
      const double jump = std::abs(cur.applied.accel - prev.applied.accel);
      m.max_delta_ac = std::max(m.max_delta_ac, jump);
      if (jump > kDeltaAcThreshold) m.count_delta_ac_gt2 += 1.0;
    }
  }

  for (const VehicleInfo& v : log.vehicles) {
    if (!v.ChangesLane()) continue;
    ++m.lane_changers;
    const auto it = by_agent.find(v.id);
    bool complete = false;
    if (it != by_agent.end()) {
      const auto& idx = it->second;
      for (size_t k = 1; k < idx.size(); ++k) {
        const AgentState& p = log.samples[idx[k - 1]].state;
        const AgentState& q = log.samples[idx[k]].state;
        if (p.x <= ctx.zone_end && q.x >= ctx.zone_end) {
          const double s = q.x > p.x ? (ctx.zone_end - p.x) / (q.x - p.x) : 1.0;
          const double y = p.y + s * (q.y - p.y);
          complete = std::abs(y - ctx.lanes.Center(v.target_lane)) <= 0.5 * ctx.params.body_width;
          break;
        }
      }
    }
    if (!complete) ++m.incomplete_ls_count;
  }

  if (!log.loop_ms.empty()) {
    double sum = 0.0;
    for (double t : log.loop_ms) {
      sum += t;
      m.max_loop_time = std::max(m.max_loop_time, t);
    }
    m.mean_loop_time = sum / static_cast<double>(log.loop_ms.size());
  }
  return m;
}

RunMetrics Aggregate(const std::vector<RunMetrics>& runs) {
  RunMetrics out;
  if (runs.empty()) return out;
  const double n = static_cast<double>(runs.size());
  out.min_h0 = std::numeric_limits<double>::infinity();
  for (const RunMetrics& r : runs) {
    out.avg_speed += r.avg_speed / n;
    out.mean_desired_speed += r.mean_desired_speed / n;
    out.brake_loss += r.brake_loss / n;
    out.count_delta_ac_gt2 += r.count_delta_ac_gt2 / n;
    out.mean_loop_time += r.mean_loop_time / n;
    out.min_h0 = std::min(out.min_h0, r.min_h0);
    out.oob_max = std::max(out.oob_max, r.oob_max);
    out.max_delta_ac = std::max(out.max_delta_ac, r.max_delta_ac);
    out.max_loop_time = std::max(out.max_loop_time, r.max_loop_time);
    out.incomplete_ls_count += r.incomplete_ls_count;
    out.lane_changers += r.lane_changers;
    out.collision_count += r.collision_count;
    out.fallback_count += r.fallback_count;
    out.fallback_clamped_count += r.fallback_clamped_count;
  }
  return out;
}

std::string RenderText(const std::vector<TableRow>& rows) {
  static const std::vector<std::string> kHeader{
      "variant", "runs",   "speed[m/s]", "speed[mph]", "brake[Wh/km]", "min_h0[m]",
      "incompl", "OOB[m]", "max_dac",    "dac>2",      "collisions",   "loop_ms",
      "max_ms"};
  std::vector<std::vector<std::string>> cells{kHeader};
  for (const TableRow& r : rows) {
    const RunMetrics& m = r.metrics;
    cells.push_back({r.label, std::to_string(r.runs), Fixed(m.avg_speed, 2),
                     Fixed(m.avg_speed * kMphPerMps, 1), Fixed(m.brake_loss, 1),
                     Fixed(m.min_h0, 3), std::to_string(m.incomplete_ls_count),
                     m.oob_max > 0.0 ? Fixed(m.oob_max, 2) : "N/A", Fixed(m.max_delta_ac, 2),
                     Fixed(m.count_delta_ac_gt2, 1), std::to_string(m.collision_count),
                     Fixed(m.mean_loop_time, 3), Fixed(m.max_loop_time, 2)});
  }
  std::vector<size_t> width(kHeader.size(), 0);
  for (const auto& row : cells) {
    for (size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (size_t r = 0; r < cells.size(); ++r) {
    for (size_t c = 0; c < cells[r].size(); ++c) {
      if (c > 0) out << "  ";
      const std::string& cell = cells[r][c];
      if (c == 0) {
        out << cell << std::string(width[c] - cell.size(), ' ');
      } else {
        out << std::string(width[c] - cell.size(), ' ') << cell;
      }
    }
    out << '\n';
    if (r == 0) {
      size_t total = 0;
      for (size_t w : width) total += w + 2;
      out << std::string(total - 2, '-') << '\n';
    }
  }
  return out.str();
}

std::string RenderCsv(const std::vector<TableRow>& rows) {
  std::ostringstream out;
  out << "variant,runs,avg_speed_mps,avg_speed_mph,mean_desired_speed_mps,brake_loss_wh_per_km,"
         "min_h0_m,incomplete_ls,lane_changers,oob_max_m,max_delta_ac,count_delta_ac_gt2,"
         "collisions,fallbacks,fallbacks_clamped,mean_loop_ms,max_loop_ms\n";
  out.precision(10);
  for (const TableRow& r : rows) {
    const RunMetrics& m = r.metrics;
    out << r.label << ',' << r.runs << ',' << m.avg_speed << ',' << m.avg_speed * kMphPerMps
        << ',' << m.mean_desired_speed << ',' << m.brake_loss << ',' << m.min_h0 << ','
        << m.incomplete_ls_count << ',' << m.lane_changers << ',' << m.oob_max << ','
        << m.max_delta_ac << ',' << m.count_delta_ac_gt2 << ',' << m.collision_count << ','
        << m.fallback_count << ',' << m.fallback_clamped_count << ',' << m.mean_loop_time << ','
        << m.max_loop_time << '\n';
  }
  return out.str();
}

std::string RenderJson(const std::vector<TableRow>& rows) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const TableRow& r : rows) {
    const RunMetrics& m = r.metrics;
    out.push_back({{"variant", r.label},
                   {"runs", r.runs},
                   {"avg_speed_mps", m.avg_speed},
                   {"avg_speed_mph", m.avg_speed * kMphPerMps},
                   {"mean_desired_speed_mps", m.mean_desired_speed},
                   {"brake_loss_wh_per_km", m.brake_loss},
                   {"min_h0_m", m.min_h0},
                   {"incomplete_ls", m.incomplete_ls_count},
                   {"lane_changers", m.lane_changers},
                   {"oob_max_m", m.oob_max},
                   {"max_delta_ac", m.max_delta_ac},
                   {"count_delta_ac_gt2", m.count_delta_ac_gt2},
                   {"collisions", m.collision_count},
                   {"fallbacks", m.fallback_count},
                   {"fallbacks_clamped", m.fallback_clamped_count},
                   {"mean_loop_ms", m.mean_loop_time},
                   {"max_loop_ms", m.max_loop_time}});
  }
  return out.dump(2) + "\n";
}

}  // namespace pcca
