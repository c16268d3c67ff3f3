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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcca/scenario.hpp"

namespace pcca::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitSafety = 3,
};

/// Flags shared by every subcommand. Precedence: defaults < config file
/// (--config or PCCA_CONFIG) < --set < dedicated flags.
struct CommonOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::string> variant;
  std::optional<double> v2v_range;
  std::optional<double> ctrl_period;
  std::optional<double> bsm_period;
  std::optional<std::uint64_t> seed;
  bool nra = false;
  bool strict = false;
  std::string out_dir;
};

ScenarioConfig ResolveConfig(const CommonOptions& common);

int CmdRun(const CommonOptions& common);

struct McOptions {
  int runs = 100;
  int jobs = 1;
  std::vector<std::string> variants;  // empty: the configured variant
};
int CmdMc(const CommonOptions& common, const McOptions& mc);

struct CalibrateOptions {
  std::string preset;                // ida-fast | ida-slow | vgr | all
  std::vector<std::string> targets;  // "mph:rate"
  double delta0 = 0.015;
};
int CmdCalibrate(const CommonOptions& common, const CalibrateOptions& opts);

struct AnalyzeOptions {
  std::vector<double> speeds_mph{10.0, 20.0, 30.0};
  double period = 0.01;
  double tau = 0.0;  // 0: same as period
  double delta0 = 0.015;
  bool spectrum = false;
};
int CmdAnalyze(const CommonOptions& common, const AnalyzeOptions& opts);

struct ReplayOptions {
  std::string csv_path;
  std::string sidecar_path;  // empty: csv path with .json
};
int CmdReplay(const CommonOptions& common, const ReplayOptions& opts);

}  // namespace pcca::cli
