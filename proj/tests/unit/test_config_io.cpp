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


#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "pcca/config_io.hpp"

namespace pcca {
namespace {

using Json = nlohmann::json;

std::string Message(auto&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::filesystem::path TempFile(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path;
}

TEST_CASE("default configuration round-trips through JSON") {
  const ScenarioConfig a;
  const auto j = ConfigToJson(a);
  CHECK(j["scenario"]["v2v_range"].is_null());
  CHECK(j["scenario"]["variant"] == "ida-fast");
  const ScenarioConfig b = ConfigFromJson(Json::parse(j.dump()));
  CHECK(ConfigToJson(b).dump() == j.dump());
}

TEST_CASE("every field survives a round trip") {
  ScenarioConfig a;
  a.n_vehicles = 10;
  a.v2v_range = 80.0;
  a.ctrl_period = 0.2;
  a.bsm_period = 0.4;
  a.variant = Variant::kVgr;
  a.nra_enabled = true;
  a.seed = 123456789012345ULL;
  a.filter.soft = false;
  a.filter.tau = 0.3;
  a.filter.road_margin = 0.5;
  a.filter.pure_pursuit.kappa = 0.9;
  a.filter.lanes.lane_width = 3.7;
  a.vgr.d3 = 0.08;
  a.tunings.ida_slow.c2 = 42.0;
  a.h0_r = 1.2;
  const ScenarioConfig b = ConfigFromJson(Json::parse(ConfigToJson(a).dump()));
  CHECK(ConfigToJson(b).dump() == ConfigToJson(a).dump());
  CHECK(b.seed == 123456789012345ULL);
  CHECK(b.tunings.ida_slow.c2 == 42.0);
  CHECK(b.filter.lanes.lane_width == 3.7);
}

TEST_CASE("partial documents patch the base") {
  ScenarioConfig base;
  base.n_vehicles = 8;
  const ScenarioConfig c = ConfigFromJson(Json{{"filter", {{"lambda1", 0.5}}}}, base);
  CHECK(c.n_vehicles == 8);
  CHECK(c.filter.gains.lambda1() == 0.5);
  CHECK(c.filter.gains.lambda2() == 4.0);
}

TEST_CASE("unlimited range spellings") {
  for (const Json& v : {Json(nullptr), Json("inf"), Json("unlimited")}) {
    const ScenarioConfig c = ConfigFromJson(Json{{"scenario", {{"v2v_range", v}}}});
    CHECK(std::isinf(c.v2v_range));
  }
}

TEST_CASE("errors name the offending location") {
  CHECK(Message([] { ConfigFromJson(Json{{"scenario", {{"bogus", 1}}}}); })
            .find("/scenario/bogus: unknown key") != std::string::npos);
  CHECK(Message([] { ConfigFromJson(Json{{"nope", Json::object()}}); }).find("/nope") !=
        std::string::npos);
  CHECK(Message([] { ConfigFromJson(Json{{"scenario", {{"n_vehicles", "many"}}}}); })
            .find("/scenario/n_vehicles") != std::string::npos);
  CHECK(Message([] { ConfigFromJson(Json{{"scenario", {{"variant", "fast"}}}}); }) != "");
  CHECK(Message([] { ConfigFromJson(Json{{"scenario", {{"n_vehicles", 0}}}}); })
            .find("n_vehicles") != std::string::npos);
  CHECK(Message([] { ConfigFromJson(Json{{"filter", {{"lambda1", 5.0}}}}); }) != "");
  CHECK(Message([] { ConfigFromJson(Json::array()); }) != "");
}

TEST_CASE("command-line overrides") {
  ScenarioConfig c;
  ApplyOverride(c, "scenario.v2v_range=80");
  CHECK(c.v2v_range == 80.0);
  ApplyOverride(c, "scenario.variant=vgr");
  CHECK(c.variant == Variant::kVgr);
  ApplyOverride(c, "filter.soft=false");
  CHECK_FALSE(c.filter.soft);
  ApplyOverride(c, "tunings.ida_fast.c2=5.5");
  CHECK(c.tunings.ida_fast.c2 == 5.5);
  ApplyOverride(c, "scenario.speed_range=[18, 22]");
  CHECK(c.speed_range.lo == 18.0);
  ApplyOverride(c, "scenario.v2v_range=unlimited");
  CHECK(std::isinf(c.v2v_range));
  CHECK_THROWS_AS(ApplyOverride(c, "scenario.n_vehicles"), ConfigError);
  CHECK_THROWS_AS(ApplyOverride(c, "n_vehicles=3"), ConfigError);
  CHECK_THROWS_AS(ApplyOverride(c, "scenario.n_vehicles=-3"), ConfigError);
}

TEST_CASE("config files") {
  const auto good = TempFile("pcca_cfg_good.json", R"({"scenario": {"seed": 7, "ctrl_period": 0.2}})");
  const ScenarioConfig c = LoadConfigFile(good.string());
  CHECK(c.seed == 7);
  CHECK(c.ctrl_period == 0.2);
  const auto bad = TempFile("pcca_cfg_bad.json", "{ not json");
  CHECK_THROWS_AS(LoadConfigFile(bad.string()), ConfigError);
  CHECK_THROWS_AS(LoadConfigFile("/nonexistent/pcca.json"), ConfigError);
  std::filesystem::remove(good);
  std::filesystem::remove(bad);
}

TEST_CASE("config path from the environment") {
  ::setenv(kConfigEnvVar, "/tmp/some.json", 1);
  CHECK(ConfigPathFromEnv() == std::optional<std::string>("/tmp/some.json"));
  ::setenv(kConfigEnvVar, "", 1);
  CHECK_FALSE(ConfigPathFromEnv().has_value());
  ::unsetenv(kConfigEnvVar);
  CHECK_FALSE(ConfigPathFromEnv().has_value());
}

}  // namespace
}  // namespace pcca
