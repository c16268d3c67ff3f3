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

// Interchange lane-swap world: two straight lanes, a 120 m swap zone,
// randomised arrivals, a range/rate-limited V2V channel and the episode and
// Monte Carlo drivers.

#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pcca/metrics.hpp"
#include "pcca/pcca_filter.hpp"
#include "pcca/stability_analysis.hpp"

namespace pcca {

enum class Variant { kIdaFast, kIdaSlow, kVgr };

std::string ToString(Variant variant);
/// Accepts "ida-fast", "ida-slow" and "vgr"; throws std::invalid_argument.
Variant ParseVariant(std::string_view name);

/// s_a coefficients of the three tunings.
struct Tunings {
  SensitivityCoeffs ida_fast;
  SensitivityCoeffs ida_slow;
  SensitivityCoeffs vgr;

  /// Calibrated against the IDA-fast, IDA-slow and VGR eigenvalue targets.
  static Tunings Calibrated(const SwapModel& model = {});
  const SensitivityCoeffs& For(Variant variant) const;
};

/// Arctan guard rails for lane-changers in the VGR variant.
struct VgrRailParams {
  double d3 = 0.05;               // [1/m]
  double center_offset = 60.0;    // d4 relative to the zone start [m]
  /// Downstream asymptote: centre within this distance of the target-lane
  /// centreline. Negative means half the body width.
  double target_tolerance = -1.0;
};

class SpawnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScenarioConfig {
  int n_vehicles = 16;
  Interval speed_range{20.0, 25.0};    // [m/s]
  double straight_fraction = 0.15;
  double zone_start = 0.0;             // [m]
  double zone_length = 120.0;          // [m]
  double exit_margin = 50.0;           // past the zone end [m]
  double lead_in = 10.0;               // first arrival ahead of the zone [m]
  double headway = 3600.0 / 3500.0;    // mean arrival spacing [s]
  double headway_jitter = 0.25;        // relative, uniform
  int spawn_attempts = 1000;
  double v2v_range = std::numeric_limits<double>::infinity();  // [m]
  double ctrl_period = 0.1;            // [s]
  double bsm_period = 0.0;             // [s], 0 means ctrl_period
  double plant_dt = 0.01;              // [s]
  double max_duration = 60.0;          // [s]
  Variant variant = Variant::kIdaFast;
  bool nra_enabled = false;
  std::uint64_t seed = 1;

  VgrRailParams vgr;
  Tunings tunings = Tunings::Calibrated();
  PccaConfig filter;                   // sensitivity is taken from `tunings`
  double h0_r = kDefaultReportingR0;   // reporting ellipse semi-minor [m]
  double h0_alpha = 2.2;

  double zone_end() const { return zone_start + zone_length; }
  double exit_x() const { return zone_end() + exit_margin; }
  double EffectiveBsmPeriod() const { return bsm_period > 0.0 ? bsm_period : ctrl_period; }
  /// Filter configuration of the active variant. The w-filter time constant
  /// is raised to the control period if shorter (forward-Euler stability).
  PccaConfig FilterConfig() const;
  EllipseSpec H0Spec() const { return {h0_r, h0_alpha}; }
  MetricsContext Metrics() const;
  bool RailsActive() const { return variant == Variant::kVgr; }

  /// Throws std::invalid_argument naming the offending field.
  void Validate() const;
};

/// `base` with the variant switched. Variants differ only in the s_a tuning
/// and, for VGR, the rails.
ScenarioConfig MakeVariant(const ScenarioConfig& base, Variant variant);

struct VehicleSpec {
  int id = -1;
  AgentState initial;
  VehicleInfo info;
};

struct World {
  std::vector<VehicleSpec> vehicles;
};

/// 8/8 lane split, per-lane spacing headway * mean speed with uniform
/// jitter, re-drawn until every pair starts inside the admissible set.
World SpawnScenario(const ScenarioConfig& config, std::mt19937_64& rng);

/// Flags one uniformly chosen vehicle as non-responding.
void MakeNra(World& world, std::mt19937_64& rng);

/// The ego's own intent at its current position: the target lane switches
/// when the vehicle enters the zone.
DrivingIntent IntentAt(const VehicleInfo& info, const AgentState& state,
                       const ScenarioConfig& config);

/// Rails a vehicle uses for its own road rows.
EgoRails RailsFor(const VehicleInfo& info, const ScenarioConfig& config);

/// Latest broadcast of every agent, refreshed every `period`.
class V2vChannel {
 public:
  V2vChannel(double range, double period);

  /// Replaces the stored messages if a refresh is due at `now`. Returns
  /// true when it did.
  bool Broadcast(double now, const std::vector<BsmMessage>& messages);

  /// Messages of other agents within range of `ego_id`, measured between the
  /// positions both agents broadcast in the same refresh.
  std::vector<BsmMessage> Perceive(int ego_id) const;

  void Remove(int id) { latest_.erase(id); }

 private:
  double range_;
  double period_;
  double next_due_ = 0.0;
  std::map<int, BsmMessage> latest_;
};

struct EpisodeResult {
  EpisodeLog log;
  RunMetrics metrics;
};

/// Runs one episode with `config.seed`. Deterministic apart from the
/// measured loop times.
EpisodeResult RunEpisode(const ScenarioConfig& config);

/// Runs a prepared world (used by tests and the showcase runs).
EpisodeResult RunWorld(const ScenarioConfig& config, const World& world);

/// Seeds base_seed .. base_seed + n_runs - 1, spread over `jobs` threads.
/// Results are in seed order.
std::vector<RunMetrics> RunMonteCarlo(const ScenarioConfig& config, int n_runs,
                                      std::uint64_t base_seed, int jobs = 1);

}  // namespace pcca
