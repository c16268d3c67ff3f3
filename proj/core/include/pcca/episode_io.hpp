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

// Episode export: one CSV row per agent and tick, plus a JSON sidecar with
// the effective configuration, vehicle roster, tick summaries, loop times
// and metrics. The CSV is a pure function of (config, seed); wall-clock
// data only goes to the sidecar.

#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "pcca/metrics.hpp"
#include "pcca/scenario.hpp"

namespace pcca {

class EpisodeFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kEpisodeCsvHeader = "t,id,x,y,theta,v,delta,a_c,flags";

/// Doubles are written with 17 significant digits, so reading back is exact.
void WriteEpisodeCsv(const EpisodeLog& log, std::ostream& out);
/// Fills `log.samples`. Throws EpisodeFormatError with the line number.
void ReadEpisodeCsv(std::istream& in, EpisodeLog& log);

nlohmann::ordered_json MetricsToJson(const RunMetrics& m);
RunMetrics MetricsFromJson(const nlohmann::json& j);

nlohmann::ordered_json EpisodeSidecar(const EpisodeLog& log, const ScenarioConfig& config,
                                      const RunMetrics& metrics);

struct StoredEpisode {
  ScenarioConfig config;
  EpisodeLog log;
  RunMetrics metrics;  // as recorded at run time
};

/// Writes `<stem>.csv` and `<stem>.json`.
void SaveEpisode(const std::string& stem, const EpisodeLog& log, const ScenarioConfig& config,
                 const RunMetrics& metrics);
StoredEpisode LoadEpisode(const std::string& csv_path, const std::string& json_path);

}  // namespace pcca
