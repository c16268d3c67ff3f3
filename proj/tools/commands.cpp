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

#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "pcca/config_io.hpp"
#include "pcca/episode_io.hpp"
#include "pcca/metrics.hpp"
#include "pcca/stability_analysis.hpp"

namespace pcca::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;
using OJson = nlohmann::ordered_json;

fs::path PrepareOutDir(const std::string& dir) {
  const fs::path path = dir.empty() ? fs::path(".") : fs::path(dir);
  fs::create_directories(path);
  return path;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << text;
}

std::string Label(const ScenarioConfig& c) {
  std::string label = ToString(c.variant);
  if (c.nra_enabled) label += "+nra";
  return label;
}

int StrictVerdict(bool strict, int collisions) {
  if (strict && collisions > 0) {
    std::cerr << "strict: " << collisions << " colliding vehicle pair(s)\n";
    return kExitSafety;
  }
  return kExitOk;
}

SwapModel ModelFor(const ScenarioConfig& config) {
  return {config.filter.pure_pursuit.kappa, config.filter.params, config.filter.spec};
}

std::string Num(double x, const char* fmt = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

}  // namespace

ScenarioConfig ResolveConfig(const CommonOptions& common) {
  ScenarioConfig config;
  std::string path = common.config_path;
  if (path.empty()) {
    if (auto env = ConfigPathFromEnv()) path = *env;
  }
  if (!path.empty()) config = LoadConfigFile(path, config);
  for (const std::string& s : common.sets) ApplyOverride(config, s);

  Json flags = Json::object();
  if (common.variant) flags["scenario"]["variant"] = *common.variant;
  if (common.v2v_range) flags["scenario"]["v2v_range"] = *common.v2v_range;
  if (common.ctrl_period) flags["scenario"]["ctrl_period"] = *common.ctrl_period;
  if (common.bsm_period) flags["scenario"]["bsm_period"] = *common.bsm_period;
  if (common.seed) flags["scenario"]["seed"] = *common.seed;
  if (common.nra) flags["scenario"]["nra_enabled"] = true;
  return ConfigFromJson(flags, config);
}

int CmdRun(const CommonOptions& common) {
  const ScenarioConfig config = ResolveConfig(common);
  const EpisodeResult result = RunEpisode(config);
  const fs::path dir = PrepareOutDir(common.out_dir);
  const fs::path stem = dir / ("episode_" + ToString(config.variant) + "_seed" +
                               std::to_string(config.seed));
  SaveEpisode(stem.string(), result.log, config, result.metrics);

  std::cout << RenderText({{Label(config), result.metrics, 1}});
  std::cout << "fallbacks: " << result.metrics.fallback_count
            << "  lane changers: " << result.metrics.lane_changers
            << "  completed: " << (result.log.completed ? "yes" : "no") << '\n';
  std::cout << "wrote " << stem.string() << ".csv and " << stem.string() << ".json\n";
  return StrictVerdict(common.strict, result.metrics.collision_count);
}

int CmdMc(const CommonOptions& common, const McOptions& mc) {
  const ScenarioConfig base = ResolveConfig(common);
  if (mc.runs < 1) throw ConfigError("--runs: must be at least 1");

  std::vector<Variant> variants;
  for (const std::string& name : mc.variants) {
    if (name == "all") {
      variants = {Variant::kIdaFast, Variant::kIdaSlow, Variant::kVgr};
      break;
    }
    try {
      variants.push_back(ParseVariant(name));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--variants: ") + e.what());
    }
  }
  if (variants.empty()) variants.push_back(base.variant);

  const fs::path dir = PrepareOutDir(common.out_dir);
  std::vector<TableRow> rows;
  int collisions = 0;
  for (Variant v : variants) {
    const ScenarioConfig config = MakeVariant(base, v);
    const std::vector<RunMetrics> runs = RunMonteCarlo(config, mc.runs, config.seed, mc.jobs);

    // Per-run rows in seed order.
    std::vector<TableRow> per_run;
    for (const RunMetrics& m : runs) per_run.push_back({Label(config), m, 1});
    std::istringstream csv(RenderCsv(per_run));
    std::ostringstream merged;
    std::string line;
    std::getline(csv, line);
    merged << "seed," << line << '\n';
    for (size_t k = 0; std::getline(csv, line); ++k) merged << config.seed + k << ',' << line << '\n';
    WriteText(dir / ("runs_" + ToString(v) + ".csv"), merged.str());

    const RunMetrics total = Aggregate(runs);
    collisions += total.collision_count;
    rows.push_back({Label(config), total, mc.runs});
  }

  WriteText(dir / "table.txt", RenderText(rows));
  WriteText(dir / "table.csv", RenderCsv(rows));
  OJson summary = {{"config", ConfigToJson(base)},
                   {"runs", mc.runs},
                   {"base_seed", base.seed},
                   {"table", OJson::parse(RenderJson(rows))}};
  WriteText(dir / "summary.json", summary.dump(2) + "\n");

  std::cout << RenderText(rows);
  std::cout << "wrote " << (dir / "table.txt").string() << ", table.csv, summary.json\n";
  return StrictVerdict(common.strict, collisions);
}

int CmdCalibrate(const CommonOptions& common, const CalibrateOptions& opts) {
  const ScenarioConfig config = ResolveConfig(common);
  const SwapModel model = ModelFor(config);

  struct Job {
    std::string key;  // tunings section key
    InstabilityTargets targets;
    SensitivityCoeffs coeffs;
  };
  std::vector<Job> jobs;
  try {
    if (!opts.targets.empty()) {
      InstabilityTargets t;
      t.delta0 = opts.delta0;
      for (const std::string& spec : opts.targets) {
        const size_t colon = spec.find(':');
        if (colon == std::string::npos) throw ConfigError(spec + ": expected mph:rate");
        try {
          t.points.emplace_back(MphToMps(std::stod(spec.substr(0, colon))),
                                std::stod(spec.substr(colon + 1)));
        } catch (const std::logic_error&) {
          throw ConfigError(spec + ": expected mph:rate");
        }
      }
      SensitivityCoeffs k;
      if (t.points.size() == 3) {
        k = CalibrateSensitivity(t, model);
      } else if (t.points.size() == 1) {
        k = CalibrateSingleTarget(t, config.tunings.ida_fast.c0, model);
      } else {
        throw ConfigError("--target: give one or three targets");
      }
      jobs.push_back({"custom", t, k});
    } else {
      const std::string preset = opts.preset.empty() ? "all" : opts.preset;
      auto scaled = [&](InstabilityTargets t) {
        t.delta0 = opts.delta0;
        return t;
      };
      const bool all = preset == "all";
      SensitivityCoeffs fast;
      if (all || preset == "ida-fast" || preset == "vgr") {
        fast = CalibrateSensitivity(scaled(InstabilityTargets::IdaFast()), model);
      }
      if (all || preset == "ida-fast") {
        jobs.push_back({"ida_fast", scaled(InstabilityTargets::IdaFast()), fast});
      }
      if (all || preset == "ida-slow") {
        const auto t = scaled(InstabilityTargets::IdaSlow());
        jobs.push_back({"ida_slow", t, CalibrateSensitivity(t, model)});
      }
      if (all || preset == "vgr") {
        const auto t = scaled(InstabilityTargets::Vgr());
        jobs.push_back({"vgr", t, CalibrateSingleTarget(t, fast.c0, model)});
      }
      if (jobs.empty()) throw ConfigError("--preset: expected ida-fast, ida-slow, vgr or all");
    }
  } catch (const CalibrationError& e) {
    throw ConfigError(std::string("calibration: ") + e.what());
  }

  OJson fragment = {{"tunings", OJson::object()}};
  for (const Job& job : jobs) {
    const SensitivityCoeffs& k = job.coeffs;
    std::cout << job.key << ": c0 = " << Num(k.c0, "%.10g") << "  c2 = " << Num(k.c2, "%.10g")
              << "  c3 = " << Num(k.c3, "%.10g") << '\n';
    std::cout << "  speed[mph]  target[1/s]  achieved[1/s]   rel.err\n";
    for (const auto& [v, target] : job.targets.points) {
      const double got = UnstableEigenvalue(v, Sensitivity(v, k), job.targets.delta0, model);
      char line[128];
      std::snprintf(line, sizeof line, "  %10.2f  %11.4f  %13.10f  %8.1e\n", v / MphToMps(1.0),
                    target, got, std::abs(got - target) / target);
      std::cout << line;
    }
    fragment["tunings"][job.key == "custom" ? "ida_fast" : job.key] = {
        {"c0", k.c0}, {"c2", k.c2}, {"c3", k.c3}, {"min_denominator", k.min_denominator}};
  }
  std::cout << "config fragment:\n" << fragment.dump(2) << '\n';
  if (!common.out_dir.empty()) {
    const fs::path dir = PrepareOutDir(common.out_dir);
    WriteText(dir / "calibration.json", fragment.dump(2) + "\n");
  }
  return kExitOk;
}

int CmdAnalyze(const CommonOptions& common, const AnalyzeOptions& opts) {
  const ScenarioConfig config = ResolveConfig(common);
  if (!(opts.period > 0.0)) throw ConfigError("--period: must be positive");
  PccaConfig filter = config.FilterConfig();
  filter.tau = opts.tau > 0.0 ? opts.tau : opts.period;
  const SwapModel model = ModelFor(config);
  const double plant_dt = std::min(config.plant_dt, opts.period);

  std::cout << "variant " << ToString(config.variant) << ", tau " << filter.tau << " s, period "
            << opts.period << " s, delta0 " << opts.delta0 << " rad\n";
  std::cout << "speed[mph]     s_a  closed_form  loop_model  numerical  numerical/closed\n";
  for (double mph : opts.speeds_mph) {
    const double v0 = MphToMps(mph);
    const double s_a = Sensitivity(v0, filter.sensitivity);
    const double closed = UnstableEigenvalue(v0, s_a, opts.delta0, model);
    const double loop_model = LoopModelEigenvalue(v0, s_a, opts.delta0, model);
    char line[160];
    try {
      const TwoAgentLoop loop(filter, v0, opts.delta0, model.kappa, opts.period, plant_dt);
      const LinearizationResult r = NumericalLinearization(loop);
      std::snprintf(line, sizeof line, "%10.2f  %.2e  %11.4f  %10.4f  %9.4f  %16.3f\n", mph, s_a,
                    closed, loop_model, r.dominant, r.dominant / closed);
      std::cout << line;
      if (opts.spectrum) {
        std::cout << "    continuous spectrum:";
        for (const auto& z : r.continuous) {
          std::cout << ' ' << Num(z.real(), "%.4g");
          if (std::abs(z.imag()) > 1e-9) std::cout << Num(z.imag(), "%+.4gi");
        }
        std::cout << '\n';
      }
    } catch (const std::runtime_error& e) {
      std::snprintf(line, sizeof line, "%10.2f  %.2e  %11.4f  %10.4f  %9s  (%s)\n", mph, s_a,
                    closed, loop_model, "n/a", e.what());
      std::cout << line;
    }
  }
  return kExitOk;
}

int CmdReplay(const CommonOptions& common, const ReplayOptions& opts) {
  std::string sidecar = opts.sidecar_path;
  if (sidecar.empty()) sidecar = fs::path(opts.csv_path).replace_extension(".json").string();
  const StoredEpisode stored = LoadEpisode(opts.csv_path, sidecar);
  const RunMetrics replayed = ComputeMetrics(stored.log, stored.config.Metrics());

  std::cout << RenderText({{"recorded", stored.metrics, 1}, {"replayed", replayed, 1}});
  const RunMetrics& a = stored.metrics;
  const bool same = a.avg_speed == replayed.avg_speed && a.brake_loss == replayed.brake_loss &&
                    a.min_h0 == replayed.min_h0 && a.oob_max == replayed.oob_max &&
                    a.incomplete_ls_count == replayed.incomplete_ls_count &&
                    a.max_delta_ac == replayed.max_delta_ac &&
                    a.count_delta_ac_gt2 == replayed.count_delta_ac_gt2 &&
                    a.collision_count == replayed.collision_count;
  if (!same) {
    std::cerr << "replay: metrics differ from the recorded ones\n";
    return kExitFailure;
  }
  std::cout << "replay: metrics match the recording\n";
  return StrictVerdict(common.strict, replayed.collision_count);
}

}  // namespace pcca::cli
