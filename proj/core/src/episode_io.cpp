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

#include "pcca/episode_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include "pcca/config_io.hpp"

namespace pcca {
namespace {

using Json = nlohmann::json;
using OJson = nlohmann::ordered_json;

const char* LaneName(Lane lane) { return lane == Lane::kRight ? "right" : "left"; }

Lane ParseLane(const std::string& name) {
  if (name == "right") return Lane::kRight;
  if (name == "left") return Lane::kLeft;
  throw EpisodeFormatError("unknown lane '" + name + "'");
}

// JSON has no infinities; they travel as null.
OJson Finite(double x) { return std::isfinite(x) ? OJson(x) : OJson(nullptr); }

double OrInf(const Json& j, const char* key) {
  const Json& v = j.at(key);
  return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
}

void Append(std::string& line, double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x + 0.0);  // no "-0"
  line += buf;
}

}  // namespace

void WriteEpisodeCsv(const EpisodeLog& log, std::ostream& out) {
  out << kEpisodeCsvHeader << '\n';
  std::string line;
  for (const TickSample& s : log.samples) {
    line.clear();
    Append(line, s.t);
    line += ',' + std::to_string(s.id) + ',';
    for (double x : {s.state.x, s.state.y, s.state.theta, s.state.v, s.applied.delta,
                     s.applied.accel}) {
      Append(line, x);
      line += ',';
    }
    line += std::to_string(s.flags);
    out << line << '\n';
  }
}

void ReadEpisodeCsv(std::istream& in, EpisodeLog& log) {
  std::string line;
  if (!std::getline(in, line) || line != kEpisodeCsvHeader) {
    throw EpisodeFormatError("episode csv: missing or unexpected header");
  }
  log.samples.clear();
  for (int number = 2; std::getline(in, line); ++number) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 9) {
      throw EpisodeFormatError("episode csv line " + std::to_string(number) + ": expected 9 fields");
    }
    try {
      TickSample s;
      s.t = std::stod(cells[0]);
      s.id = std::stoi(cells[1]);
      s.state = {std::stod(cells[2]), std::stod(cells[3]), std::stod(cells[4]),
                 std::stod(cells[5])};
      s.applied = {std::stod(cells[6]), std::stod(cells[7])};
      s.flags = static_cast<std::uint32_t>(std::stoul(cells[8]));
      log.samples.push_back(s);
    } catch (const std::logic_error&) {
      throw EpisodeFormatError("episode csv line " + std::to_string(number) + ": bad number");
    }
  }
}

OJson MetricsToJson(const RunMetrics& m) {
  return {{"avg_speed_mps", m.avg_speed},
          {"avg_speed_mph", m.avg_speed * kMphPerMps},
          {"mean_desired_speed_mps", m.mean_desired_speed},
          {"brake_loss_wh_per_km", m.brake_loss},
          {"min_h0_m", Finite(m.min_h0)},
          {"oob_max_m", m.oob_max},
          {"incomplete_ls", m.incomplete_ls_count},
          {"lane_changers", m.lane_changers},
          {"max_delta_ac", m.max_delta_ac},
          {"count_delta_ac_gt2", m.count_delta_ac_gt2},
          {"collisions", m.collision_count},
          {"mean_loop_ms", m.mean_loop_time},
          {"max_loop_ms", m.max_loop_time},
          {"fallbacks", m.fallback_count},
          {"fallbacks_clamped", m.fallback_clamped_count}};
}

RunMetrics MetricsFromJson(const Json& j) {
  RunMetrics m;
  m.avg_speed = j.at("avg_speed_mps").get<double>();
  m.mean_desired_speed = j.at("mean_desired_speed_mps").get<double>();
  m.brake_loss = j.at("brake_loss_wh_per_km").get<double>();
  m.min_h0 = OrInf(j, "min_h0_m");
  m.oob_max = j.at("oob_max_m").get<double>();
  m.incomplete_ls_count = j.at("incomplete_ls").get<int>();
  m.lane_changers = j.at("lane_changers").get<int>();
  m.max_delta_ac = j.at("max_delta_ac").get<double>();
  m.count_delta_ac_gt2 = j.at("count_delta_ac_gt2").get<double>();
  m.collision_count = j.at("collisions").get<int>();
  m.mean_loop_time = j.at("mean_loop_ms").get<double>();
  m.max_loop_time = j.at("max_loop_ms").get<double>();
  m.fallback_count = j.at("fallbacks").get<int>();
  m.fallback_clamped_count = j.at("fallbacks_clamped").get<int>();
  return m;
}

OJson EpisodeSidecar(const EpisodeLog& log, const ScenarioConfig& config,
                     const RunMetrics& metrics) {
  OJson vehicles = OJson::array();
  for (const VehicleInfo& v : log.vehicles) {
    vehicles.push_back({{"id", v.id},
                        {"start_lane", LaneName(v.start_lane)},
                        {"target_lane", LaneName(v.target_lane)},
                        {"straight", v.straight},
                        {"nra", v.nra},
                        {"desired_speed", v.desired_speed}});
  }
  OJson ticks = {{"t", OJson::array()},
                 {"min_h", OJson::array()},
                 {"min_h0", OJson::array()},
                 {"bsm_delivered", OJson::array()}};
  for (const TickSummary& s : log.ticks) {
    ticks["t"].push_back(s.t);
    ticks["min_h"].push_back(Finite(s.min_h));
    ticks["min_h0"].push_back(Finite(s.min_h0));
    ticks["bsm_delivered"].push_back(s.bsm_delivered);
  }
  return {{"config", ConfigToJson(config)},
          {"ctrl_period", log.ctrl_period},
          {"completed", log.completed},
          {"vehicles", vehicles},
          {"events", log.events},
          {"ticks", ticks},
          {"loop_ms", log.loop_ms},
          {"metrics", MetricsToJson(metrics)}};
}

void SaveEpisode(const std::string& stem, const EpisodeLog& log, const ScenarioConfig& config,
                 const RunMetrics& metrics) {
  std::ofstream csv(stem + ".csv");
  if (!csv) throw EpisodeFormatError(stem + ".csv: cannot open for writing");
  WriteEpisodeCsv(log, csv);
  std::ofstream json(stem + ".json");
  if (!json) throw EpisodeFormatError(stem + ".json: cannot open for writing");
  json << EpisodeSidecar(log, config, metrics).dump(2) << '\n';
}

StoredEpisode LoadEpisode(const std::string& csv_path, const std::string& json_path) {
  StoredEpisode out;
  std::ifstream csv(csv_path);
  if (!csv) throw EpisodeFormatError(csv_path + ": cannot open");
  ReadEpisodeCsv(csv, out.log);

  std::ifstream in(json_path);
  if (!in) throw EpisodeFormatError(json_path + ": cannot open");
  try {
    const Json doc = Json::parse(in);
    out.config = ConfigFromJson(doc.at("config"));
    out.log.ctrl_period = doc.at("ctrl_period").get<double>();
    out.log.completed = doc.at("completed").get<bool>();
    for (const Json& v : doc.at("vehicles")) {
      VehicleInfo info;
      info.id = v.at("id").get<int>();
      info.start_lane = ParseLane(v.at("start_lane").get<std::string>());
      info.target_lane = ParseLane(v.at("target_lane").get<std::string>());
      info.straight = v.at("straight").get<bool>();
      info.nra = v.at("nra").get<bool>();
      info.desired_speed = v.at("desired_speed").get<double>();
      out.log.vehicles.push_back(info);
    }
    out.log.events = doc.at("events").get<std::vector<std::string>>();
    const Json& ticks = doc.at("ticks");
    for (size_t k = 0; k < ticks.at("t").size(); ++k) {
      TickSummary s;
      s.t = ticks["t"][k].get<double>();
      s.min_h = ticks["min_h"][k].is_null() ? std::numeric_limits<double>::infinity()
                                            : ticks["min_h"][k].get<double>();
      s.min_h0 = ticks["min_h0"][k].is_null() ? std::numeric_limits<double>::infinity()
                                              : ticks["min_h0"][k].get<double>();
      s.bsm_delivered = ticks["bsm_delivered"][k].get<int>();
      out.log.ticks.push_back(s);
    }
    out.log.loop_ms = doc.at("loop_ms").get<std::vector<double>>();
    out.metrics = MetricsFromJson(doc.at("metrics"));
  } catch (const Json::exception& e) {
    throw EpisodeFormatError(json_path + ": " + e.what());
  } catch (const ConfigError& e) {
    throw EpisodeFormatError(json_path + ": " + e.what());
  }
  return out;
}

}  // namespace pcca
