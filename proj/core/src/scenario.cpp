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

#include "pcca/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace pcca {
namespace {

// Independent stream for the non-responder draw, so NRA worlds keep the
// nominal spawn of the same seed.
constexpr std::uint64_t kNraStream = 0x9e3779b97f4a7c15ULL;

void Require(bool ok, const char* field, const char* what) {
  if (!ok) throw std::invalid_argument(std::string(field) + ": " + what);
}

bool Admissible(const std::vector<VehicleSpec>& vehicles, const PccaConfig& filter) {
  const double lambda1 = filter.gains.lambda1();
  for (size_t a = 0; a < vehicles.size(); ++a) {
    const AgentState& s = vehicles[a].initial;
    const double right = s.y - filter.lanes.RightEdge() - filter.RoadMargin();
    const double left = filter.lanes.LeftEdge() - filter.RoadMargin() - s.y;
    if (!(right > 0.0 && left > 0.0)) return false;
    for (size_t b = 0; b < vehicles.size(); ++b) {
      if (a == b) continue;
      const AgentState& o = vehicles[b].initial;
      const double h = EllipseH(s, o, filter.spec);
      if (!(h > 0.0)) return false;
      if (lambda1 * h + EllipseHDot(s, o, filter.spec) < 0.0) return false;
    }
  }
  return true;
}

BsmMessage Broadcast(int id, const AgentState& s, const ControlInput& last,
                     const VehicleParams& params, double now) {
  BsmMessage m;
  m.sender = id;
  m.x = s.x;
  m.y = s.y;
  m.theta = s.theta;
  m.v = s.v;
  m.delta = last.delta;
  m.accel = last.accel;
  m.length = params.body_length;
  m.width = params.body_width;
  m.timestamp = now;
  return m;
}

}  // namespace

std::string ToString(Variant variant) {
  switch (variant) {
    case Variant::kIdaFast:
      return "ida-fast";
    case Variant::kIdaSlow:
      return "ida-slow";
    case Variant::kVgr:
      return "vgr";
  }
  return "unknown";
}

Variant ParseVariant(std::string_view name) {
  if (name == "ida-fast") return Variant::kIdaFast;
  if (name == "ida-slow") return Variant::kIdaSlow;
  if (name == "vgr") return Variant::kVgr;
  throw std::invalid_argument("unknown variant '" + std::string(name) +
                              "' (expected ida-fast, ida-slow or vgr)");
}

Tunings Tunings::Calibrated(const SwapModel& model) {
  Tunings t;
  t.ida_fast = CalibrateSensitivity(InstabilityTargets::IdaFast(), model);
  t.ida_slow = CalibrateSensitivity(InstabilityTargets::IdaSlow(), model);
  t.vgr = CalibrateSingleTarget(InstabilityTargets::Vgr(), t.ida_fast.c0, model);
  return t;
}

const SensitivityCoeffs& Tunings::For(Variant variant) const {
  switch (variant) {
    case Variant::kIdaFast:
      return ida_fast;
    case Variant::kIdaSlow:
      return ida_slow;
    case Variant::kVgr:
      return vgr;
  }
  return ida_fast;
}

PccaConfig ScenarioConfig::FilterConfig() const {
  PccaConfig out = filter;
  out.sensitivity = tunings.For(variant);
  out.tau = std::max(out.tau, ctrl_period);
  return out;
}

MetricsContext ScenarioConfig::Metrics() const {
  MetricsContext ctx;
  ctx.zone_start = zone_start;
  ctx.zone_end = zone_end();
  ctx.lanes = filter.lanes;
  ctx.params = filter.params;
  ctx.h0_spec = H0Spec();
  return ctx;
}

void ScenarioConfig::Validate() const {
  Require(n_vehicles >= 1, "scenario.n_vehicles", "must be at least 1");
  Require(speed_range.lo > 0.0 && speed_range.hi >= speed_range.lo, "scenario.speed_range",
          "must satisfy 0 < lo <= hi");
  Require(straight_fraction >= 0.0 && straight_fraction <= 1.0, "scenario.straight_fraction",
          "must lie in [0, 1]");
  Require(zone_length > 0.0, "scenario.zone_length", "must be positive");
  Require(exit_margin >= 0.0, "scenario.exit_margin", "must be non-negative");
  Require(lead_in >= 0.0, "scenario.lead_in", "must be non-negative");
  Require(headway > 0.0, "scenario.headway", "must be positive");
  Require(headway_jitter >= 0.0 && headway_jitter < 1.0, "scenario.headway_jitter",
          "must lie in [0, 1)");
  Require(spawn_attempts >= 1, "scenario.spawn_attempts", "must be at least 1");
  Require(v2v_range > 0.0, "scenario.v2v_range", "must be positive");
  Require(ctrl_period > 0.0 && std::isfinite(ctrl_period), "scenario.ctrl_period",
          "must be positive");
  Require(bsm_period >= 0.0, "scenario.bsm_period", "must be non-negative");
  Require(plant_dt > 0.0 && plant_dt <= ctrl_period, "scenario.plant_dt",
          "must lie in (0, ctrl_period]");
  Require(max_duration > 0.0, "scenario.max_duration", "must be positive");
  Require(vgr.d3 > 0.0, "vgr.d3", "must be positive");
  Require(h0_r > 0.0 && h0_alpha > 1.0, "reporting", "needs r > 0 and alpha > 1");
  filter.Validate();
}

ScenarioConfig MakeVariant(const ScenarioConfig& base, Variant variant) {
  ScenarioConfig out = base;
  out.variant = variant;
  return out;
}

World SpawnScenario(const ScenarioConfig& config, std::mt19937_64& rng) {
  config.Validate();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n_right = config.n_vehicles / 2 + config.n_vehicles % 2;
  const double v_mean = 0.5 * (config.speed_range.lo + config.speed_range.hi);
  const double gap_mean = config.headway * v_mean;
  const LaneGeometry& lanes = config.filter.lanes;

  World world;
  for (int k = 0; k < config.n_vehicles; ++k) {
    VehicleSpec v;
    v.id = k;
    v.info.id = k;
    v.info.start_lane = k < n_right ? Lane::kRight : Lane::kLeft;
    v.info.straight = unit(rng) < config.straight_fraction;
    v.info.target_lane = v.info.straight ? v.info.start_lane : Other(v.info.start_lane);
    v.info.desired_speed =
        config.speed_range.lo + (config.speed_range.hi - config.speed_range.lo) * unit(rng);
    v.initial = {0.0, lanes.Center(v.info.start_lane), 0.0, v.info.desired_speed};
    world.vehicles.push_back(v);
  }

  for (int attempt = 0; attempt < config.spawn_attempts; ++attempt) {
    for (Lane lane : {Lane::kRight, Lane::kLeft}) {
      double x = config.zone_start - config.lead_in - gap_mean * unit(rng);
      for (VehicleSpec& v : world.vehicles) {
        if (v.info.start_lane != lane) continue;
        v.initial.x = x;
        x -= gap_mean * (1.0 + config.headway_jitter * (2.0 * unit(rng) - 1.0));
      }
    }
    if (Admissible(world.vehicles, config.filter)) return world;
  }
  std::ostringstream msg;
  msg << "no admissible spawn after " << config.spawn_attempts << " attempts";
  throw SpawnError(msg.str());
}

void MakeNra(World& world, std::mt19937_64& rng) {
  if (world.vehicles.empty()) return;
  std::uniform_int_distribution<size_t> pick(0, world.vehicles.size() - 1);
  world.vehicles[pick(rng)].info.nra = true;
}

DrivingIntent IntentAt(const VehicleInfo& info, const AgentState& state,
                       const ScenarioConfig& config) {
  DrivingIntent intent;
  intent.change_lane = info.ChangesLane() && state.x >= config.zone_start;
  intent.target_lane = intent.change_lane ? info.target_lane : info.start_lane;
  intent.desired_speed = info.desired_speed;
  return intent;
}

EgoRails RailsFor(const VehicleInfo& info, const ScenarioConfig& config) {
  const LaneGeometry& lanes = config.filter.lanes;
  EgoRails rails = StraightRails(config.filter);
  const double margin = config.filter.RoadMargin();
  if (!config.RailsActive() || !info.ChangesLane()) return rails;

  const double tol = config.vgr.target_tolerance >= 0.0 ? config.vgr.target_tolerance
                                                        : 0.5 * config.filter.params.body_width;
  const double d4 = config.zone_start + config.vgr.center_offset;
  auto funnel = [&](double upstream, double downstream) {
    return RailFn::Arctan(0.5 * (upstream + downstream),
                          (downstream - upstream) / std::numbers::pi, config.vgr.d3, d4);
  };
  if (info.target_lane == Lane::kLeft) {
    rails.right = funnel(lanes.RightEdge() + margin, lanes.Center(Lane::kLeft) - tol);
  } else {
    rails.left = funnel(lanes.LeftEdge() - margin, lanes.Center(Lane::kRight) + tol);
  }
  return rails;
}

V2vChannel::V2vChannel(double range, double period) : range_(range), period_(period) {
  if (!(range > 0.0) || !(period > 0.0)) {
    throw std::invalid_argument("V2vChannel: range and period must be positive");
  }
}

bool V2vChannel::Broadcast(double now, const std::vector<BsmMessage>& messages) {
  if (now + 1e-9 < next_due_) return false;
  latest_.clear();
  for (const BsmMessage& m : messages) latest_[m.sender] = m;
  // Stay on the k * period grid regardless of when the call happens.
  next_due_ = (std::floor(now / period_ + 1e-9) + 1.0) * period_;
  return true;
}

std::vector<BsmMessage> V2vChannel::Perceive(int ego_id) const {
  std::vector<BsmMessage> out;
  const auto self = latest_.find(ego_id);
  for (const auto& [id, m] : latest_) {
    if (id == ego_id) continue;
    if (std::isfinite(range_)) {
      if (self == latest_.end()) continue;
      if (std::hypot(m.x - self->second.x, m.y - self->second.y) > range_) continue;
    }
    out.push_back(m);
  }
  return out;
}

EpisodeResult RunWorld(const ScenarioConfig& config, const World& world) {
  config.Validate();
  const PccaConfig filter = config.FilterConfig();
  const double dt = config.ctrl_period;

  struct Agent {
    VehicleSpec spec;
    AgentState state;
    ControlInput last;
    PccaState memory;
    QpSolver solver;
    EgoRails rails;
    bool active = true;
  };
  std::vector<Agent> agents;
  agents.reserve(world.vehicles.size());
  for (const VehicleSpec& v : world.vehicles) {
    agents.push_back({v, v.initial, {}, {}, QpSolver{}, RailsFor(v.info, config), true});
  }

  EpisodeResult result;
  EpisodeLog& log = result.log;
  log.ctrl_period = dt;
  for (const VehicleSpec& v : world.vehicles) log.vehicles.push_back(v.info);

  V2vChannel channel(config.v2v_range, config.EffectiveBsmPeriod());
  const EllipseSpec h0_spec = config.H0Spec();
  std::vector<FilterResult> step(agents.size());

  for (long k = 0;; ++k) {
    const double now = static_cast<double>(k) * dt;
    if (std::none_of(agents.begin(), agents.end(), [](const Agent& a) { return a.active; })) {
      log.completed = true;
      break;
    }
    if (now > config.max_duration + 1e-9) {
      log.events.push_back("timeout at t=" + std::to_string(now));
      break;
    }

    std::vector<BsmMessage> outgoing;
    for (const Agent& a : agents) {
      if (a.active) outgoing.push_back(Broadcast(a.spec.id, a.state, a.last, filter.params, now));
    }
    channel.Broadcast(now, outgoing);

    TickSummary summary;
    summary.t = now;
    for (size_t i = 0; i < agents.size(); ++i) {
      Agent& a = agents[i];
      if (!a.active) continue;
      std::vector<BsmMessage> snapshot;
      if (!a.spec.info.nra) snapshot = channel.Perceive(a.spec.id);
      summary.bsm_delivered += static_cast<int>(snapshot.size());
      const DrivingIntent intent = IntentAt(a.spec.info, a.state, config);

      const auto t0 = std::chrono::steady_clock::now();
      step[i] = FilterStep(a.spec.id, a.state, snapshot, intent, a.memory, filter, a.rails, dt,
                           now, a.solver);
      const auto t1 = std::chrono::steady_clock::now();
      log.loop_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());

      std::uint32_t flags = 0;
      if (step[i].fallback) flags |= kFlagFallback;
      if (step[i].fallback_clamped) flags |= kFlagFallbackClamped;
      if (step[i].slack_active) flags |= kFlagSlackActive;
      if (step[i].intervened) flags |= kFlagIntervened;
      if (a.spec.info.nra) flags |= kFlagNra;
      if (a.rails.right.kind == RailFn::Kind::kArctan || a.rails.left.kind == RailFn::Kind::kArctan) {
        flags |= kFlagRails;
      }
      if (a.spec.info.straight) flags |= kFlagStraight;
      if (intent.change_lane) flags |= kFlagChanging;
      log.samples.push_back({now, a.spec.id, a.state, step[i].applied, flags});
    }

    summary.min_h = std::numeric_limits<double>::infinity();
    summary.min_h0 = std::numeric_limits<double>::infinity();
    for (const Agent& a : agents) {
      if (!a.active) continue;
      for (const Agent& b : agents) {
        if (!b.active || &a == &b) continue;
        summary.min_h = std::min(summary.min_h, EllipseH(a.state, b.state, filter.spec));
        summary.min_h0 = std::min(summary.min_h0, H0Metric(a.state, b.state, h0_spec));
      }
    }
    log.ticks.push_back(summary);

    for (size_t i = 0; i < agents.size(); ++i) {
      Agent& a = agents[i];
      if (!a.active) continue;
      a.state = Integrate(a.state, step[i].applied, filter.params, dt, config.plant_dt);
      a.last = step[i].applied;
      a.memory = std::move(step[i].state);
      if (a.state.x > config.exit_x()) {
        a.active = false;
        std::ostringstream msg;
        msg << "agent " << a.spec.id << " exited at t=" << now + dt;
        log.events.push_back(msg.str());
      }
    }
  }

  result.metrics = ComputeMetrics(log, config.Metrics());
  return result;
}

EpisodeResult RunEpisode(const ScenarioConfig& config) {
  std::mt19937_64 rng(config.seed);
  World world = SpawnScenario(config, rng);
  if (config.nra_enabled) {
    std::mt19937_64 nra_rng(config.seed ^ kNraStream);
    MakeNra(world, nra_rng);
  }
  return RunWorld(config, world);
}

std::vector<RunMetrics> RunMonteCarlo(const ScenarioConfig& config, int n_runs,
                                      std::uint64_t base_seed, int jobs) {
  if (n_runs < 0) throw std::invalid_argument("RunMonteCarlo: n_runs must be non-negative");
  std::vector<RunMetrics> out(static_cast<size_t>(n_runs));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (int k = next++; k < n_runs; k = next++) {
      try {
        ScenarioConfig c = config;
        c.seed = base_seed + static_cast<std::uint64_t>(k);
        out[static_cast<size_t>(k)] = RunEpisode(c).metrics;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n_runs;
      }
    }
  };

  const int threads = std::clamp(jobs, 1, std::max(1, n_runs));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace pcca
