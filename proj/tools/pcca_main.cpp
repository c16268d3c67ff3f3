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

// pcca: run episodes, Monte Carlo tables, calibration and the stability
// report from the command line.

#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "pcca/config_io.hpp"
#include "pcca/episode_io.hpp"

namespace {

void AddCommon(CLI::App& app, pcca::cli::CommonOptions& o) {
  app.add_option("-c,--config", o.config_path,
                 "JSON config file (default: $PCCA_CONFIG if set)");
  app.add_option("--set", o.sets, "Override a config key, section.key=value (repeatable)");
  app.add_option("--variant", o.variant, "ida-fast, ida-slow or vgr");
  app.add_option("--v2v-range", o.v2v_range, "V2V range [m]");
  app.add_option("--ctrl-period", o.ctrl_period, "Controller period [s]");
  app.add_option("--bsm-period", o.bsm_period, "BSM refresh period [s] (0: controller period)");
  app.add_option("--seed", o.seed, "Episode seed, or the first seed for mc");
  app.add_flag("--nra", o.nra, "Make one random vehicle non-responding");
  app.add_flag("--strict", o.strict, "Exit with status 3 if any vehicle bodies overlap");
  app.add_option("-o,--out", o.out_dir, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace pcca::cli;

  CLI::App app{"Decentralized predictor-corrector CBF safety filter for lane swaps"};
  app.require_subcommand(1);

  CommonOptions common;

  auto* run = app.add_subcommand("run", "Simulate one episode and export its log");
  AddCommon(*run, common);

  McOptions mc;
  auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo runs on a shared seed set");
  AddCommon(*mc_cmd, common);
  mc_cmd->add_option("-n,--runs", mc.runs, "Episodes per variant")->capture_default_str();
  mc_cmd->add_option("-j,--jobs", mc.jobs, "Worker threads")->capture_default_str();
  mc_cmd->add_option("--variants", mc.variants, "Variants to compare, or 'all'")->delimiter(',');

  CalibrateOptions cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "Fit s_a(v) to unstable-eigenvalue targets");
  AddCommon(*cal_cmd, common);
  cal_cmd->add_option("--preset", cal.preset, "ida-fast, ida-slow, vgr or all");
  cal_cmd->add_option("--target", cal.targets, "Custom target mph:rate (one or three)");
  cal_cmd->add_option("--delta0", cal.delta0, "Nominal steering offset [rad]")->capture_default_str();
  cal_cmd->get_option("--preset")->excludes("--target");

  AnalyzeOptions an;
  auto* an_cmd = app.add_subcommand("analyze", "Closed-form vs numerical loop eigenvalues");
  AddCommon(*an_cmd, common);
  an_cmd->add_option("--speeds", an.speeds_mph, "Speeds [mph]")->delimiter(',');
  an_cmd->add_option("--period", an.period, "Loop period for the linearisation [s]")
      ->capture_default_str();
  an_cmd->add_option("--tau", an.tau, "w-filter time constant [s] (default: period)");
  an_cmd->add_option("--delta0", an.delta0, "Nominal steering offset [rad]")->capture_default_str();
  an_cmd->add_flag("--spectrum", an.spectrum, "Print the full continuous spectrum");

  ReplayOptions rp;
  auto* rp_cmd = app.add_subcommand("replay", "Recompute metrics from a stored episode");
  AddCommon(*rp_cmd, common);
  rp_cmd->add_option("csv", rp.csv_path, "Episode CSV")->required();
  rp_cmd->add_option("--sidecar", rp.sidecar_path, "JSON sidecar (default: CSV path with .json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return CmdRun(common);
    if (*mc_cmd) return CmdMc(common, mc);
    if (*cal_cmd) return CmdCalibrate(common, cal);
    if (*an_cmd) return CmdAnalyze(common, an);
    if (*rp_cmd) return CmdReplay(common, rp);
  } catch (const pcca::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const pcca::EpisodeFormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
