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

#include "pcca/config_io.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

namespace pcca {
namespace {

using Json = nlohmann::json;
using OJson = nlohmann::ordered_json;

[[noreturn]] void Fail(const std::string& at, const std::string& what) {
  throw ConfigError(at + ": " + what);
}

double ReadDouble(const Json& v, const std::string& at) {
  if (!v.is_number()) Fail(at, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) Fail(at, "expected a finite number");
  return x;
}

int ReadInt(const Json& v, const std::string& at) {
  if (!v.is_number_integer()) Fail(at, "expected an integer");
  const auto x = v.get<long long>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    Fail(at, "integer out of range");
  }
  return static_cast<int>(x);
}

std::uint64_t ReadU64(const Json& v, const std::string& at) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) {
    return static_cast<std::uint64_t>(v.get<long long>());
  }
  Fail(at, "expected a non-negative integer");
}

bool ReadBool(const Json& v, const std::string& at) {
  if (!v.is_boolean()) Fail(at, "expected true or false");
  return v.get<bool>();
}

Interval ReadInterval(const Json& v, const std::string& at) {
  if (!v.is_array() || v.size() != 2) Fail(at, "expected [lo, hi]");
  return {ReadDouble(v[0], at + "/0"), ReadDouble(v[1], at + "/1")};
}

struct Field {
  std::string name;
  std::function<OJson(const ScenarioConfig&)> get;
  std::function<void(ScenarioConfig&, const Json&, const std::string&)> set;
};

struct Section {
  std::string name;
  std::vector<Field> fields;
};

// `ref` is a generic lambda returning a reference into the config, so the
// same accessor serves reads and writes.
template <typename Ref>
Field Number(std::string name, Ref ref) {
  return {std::move(name), [ref](const ScenarioConfig& c) { return OJson(ref(c)); },
          [ref](ScenarioConfig& c, const Json& v, const std::string& at) {
            ref(c) = ReadDouble(v, at);
          }};
}

template <typename Ref>
Field Integer(std::string name, Ref ref) {
  return {std::move(name), [ref](const ScenarioConfig& c) { return OJson(ref(c)); },
          [ref](ScenarioConfig& c, const Json& v, const std::string& at) {
            ref(c) = ReadInt(v, at);
          }};
}

template <typename Ref>
Field Boolean(std::string name, Ref ref) {
  return {std::move(name), [ref](const ScenarioConfig& c) { return OJson(ref(c)); },
          [ref](ScenarioConfig& c, const Json& v, const std::string& at) {
            ref(c) = ReadBool(v, at);
          }};
}

template <typename Ref>
Field Range(std::string name, Ref ref) {
  return {std::move(name),
          [ref](const ScenarioConfig& c) {
            const Interval& i = ref(c);
            return OJson::array({i.lo, i.hi});
          },
          [ref](ScenarioConfig& c, const Json& v, const std::string& at) {
            ref(c) = ReadInterval(v, at);
          }};
}

#define PCCA_REF(member) [](auto& c) -> auto& { return c.member; }

OJson CoeffsToJson(const SensitivityCoeffs& k) {
  return {{"c0", k.c0}, {"c2", k.c2}, {"c3", k.c3}, {"min_denominator", k.min_denominator}};
}

void ReadCoeffs(const Json& v, const std::string& at, SensitivityCoeffs& k) {
  if (!v.is_object()) Fail(at, "expected an object");
  for (const auto& [key, value] : v.items()) {
    const std::string where = at + "/" + key;
    if (key == "c0") {
      k.c0 = ReadDouble(value, where);
    } else if (key == "c2") {
      k.c2 = ReadDouble(value, where);
    } else if (key == "c3") {
      k.c3 = ReadDouble(value, where);
    } else if (key == "min_denominator") {
      k.min_denominator = ReadDouble(value, where);
    } else {
      Fail(where, "unknown key");
    }
  }
}

template <typename Ref>
Field Coeffs(std::string name, Ref ref) {
  return {std::move(name), [ref](const ScenarioConfig& c) { return CoeffsToJson(ref(c)); },
          [ref](ScenarioConfig& c, const Json& v, const std::string& at) {
            ReadCoeffs(v, at, ref(c));
          }};
}

// Wraps constructor validation of the small value classes.
template <typename Fn>
void Guard(const std::string& at, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    Fail(at, e.what());
  }
}

const std::vector<Section>& Schema() {
  static const std::vector<Section> kSchema = [] {
    std::vector<Section> s;
    s.push_back({"scenario",
                 {Integer("n_vehicles", PCCA_REF(n_vehicles)),
                  Range("speed_range", PCCA_REF(speed_range)),
                  Number("straight_fraction", PCCA_REF(straight_fraction)),
                  Number("zone_start", PCCA_REF(zone_start)),
                  Number("zone_length", PCCA_REF(zone_length)),
                  Number("exit_margin", PCCA_REF(exit_margin)),
                  Number("lead_in", PCCA_REF(lead_in)),
                  Number("headway", PCCA_REF(headway)),
                  Number("headway_jitter", PCCA_REF(headway_jitter)),
                  Integer("spawn_attempts", PCCA_REF(spawn_attempts)),
                  {"v2v_range",
                   [](const ScenarioConfig& c) {
                     return std::isfinite(c.v2v_range) ? OJson(c.v2v_range) : OJson(nullptr);
                   },
                   [](ScenarioConfig& c, const Json& v, const std::string& at) {
                     if (v.is_null() || (v.is_string() && (v == "inf" || v == "unlimited"))) {
                       c.v2v_range = std::numeric_limits<double>::infinity();
                     } else {
                       c.v2v_range = ReadDouble(v, at);
                     }
                   }},
                  Number("ctrl_period", PCCA_REF(ctrl_period)),
                  Number("bsm_period", PCCA_REF(bsm_period)),
                  Number("plant_dt", PCCA_REF(plant_dt)),
                  Number("max_duration", PCCA_REF(max_duration)),
                  {"variant", [](const ScenarioConfig& c) { return OJson(ToString(c.variant)); },
                   [](ScenarioConfig& c, const Json& v, const std::string& at) {
                     if (!v.is_string()) Fail(at, "expected a variant name");
                     Guard(at, [&] { c.variant = ParseVariant(v.get<std::string>()); });
                   }},
                  Boolean("nra_enabled", PCCA_REF(nra_enabled)),
                  {"seed", [](const ScenarioConfig& c) { return OJson(c.seed); },
                   [](ScenarioConfig& c, const Json& v, const std::string& at) {
                     c.seed = ReadU64(v, at);
                   }}}});

    s.push_back(
        {"filter",
         {{"lambda1", [](const ScenarioConfig& c) { return OJson(c.filter.gains.lambda1()); },
           [](ScenarioConfig& c, const Json& v, const std::string& at) {
             const double x = ReadDouble(v, at);
             Guard(at, [&] { c.filter.gains = CbfGains(x, c.filter.gains.lambda2()); });
           }},
          {"lambda2", [](const ScenarioConfig& c) { return OJson(c.filter.gains.lambda2()); },
           [](ScenarioConfig& c, const Json& v, const std::string& at) {
             const double x = ReadDouble(v, at);
             Guard(at, [&] { c.filter.gains = CbfGains(c.filter.gains.lambda1(), x); });
           }},
          {"ellipse_r", [](const ScenarioConfig& c) { return OJson(c.filter.spec.r()); },
           [](ScenarioConfig& c, const Json& v, const std::string& at) {
             const double x = ReadDouble(v, at);
             Guard(at, [&] { c.filter.spec = EllipseSpec(x, c.filter.spec.alpha()); });
           }},
          {"ellipse_alpha", [](const ScenarioConfig& c) { return OJson(c.filter.spec.alpha()); },
           [](ScenarioConfig& c, const Json& v, const std::string& at) {
             const double x = ReadDouble(v, at);
             Guard(at, [&] { c.filter.spec = EllipseSpec(c.filter.spec.r(), x); });
           }},
          Number("tau", PCCA_REF(filter.tau)),
          Range("ego_delta", PCCA_REF(filter.ego_box.delta)),
          Range("ego_accel", PCCA_REF(filter.ego_box.accel)),
          Number("other_box_scale", PCCA_REF(filter.other_box_scale)),
          Number("slack_weight_agent", PCCA_REF(filter.slack_weight_agent)),
          Number("slack_weight_road", PCCA_REF(filter.slack_weight_road)),
          Boolean("soft", PCCA_REF(filter.soft)),
          Boolean("prune_redundant_rows", PCCA_REF(filter.prune_redundant_rows)),
          Number("stale_after", PCCA_REF(filter.stale_after)),
          Number("road_margin", PCCA_REF(filter.road_margin))}});

    s.push_back({"baseline",
                 {Number("kappa", PCCA_REF(filter.pure_pursuit.kappa)),
                  Number("lookahead_time", PCCA_REF(filter.pure_pursuit.lookahead_time)),
                  Number("lookahead_offset", PCCA_REF(filter.pure_pursuit.lookahead_offset))}});

    s.push_back({"vehicle",
                 {Number("wheelbase", PCCA_REF(filter.params.wheelbase)),
                  Number("body_length", PCCA_REF(filter.params.body_length)),
                  Number("body_width", PCCA_REF(filter.params.body_width)),
                  Number("mass", PCCA_REF(filter.params.mass))}});

    s.push_back({"road", {Number("lane_width", PCCA_REF(filter.lanes.lane_width))}});

    s.push_back({"vgr",
                 {Number("d3", PCCA_REF(vgr.d3)),
                  Number("center_offset", PCCA_REF(vgr.center_offset)),
                  Number("target_tolerance", PCCA_REF(vgr.target_tolerance))}});

    s.push_back({"tunings",
                 {Coeffs("ida_fast", PCCA_REF(tunings.ida_fast)),
                  Coeffs("ida_slow", PCCA_REF(tunings.ida_slow)),
                  Coeffs("vgr", PCCA_REF(tunings.vgr))}});

    s.push_back({"reporting",
                 {Number("h0_r", PCCA_REF(h0_r)), Number("h0_alpha", PCCA_REF(h0_alpha))}});
    return s;
  }();
  return kSchema;
}

#undef PCCA_REF

}  // namespace

OJson ConfigToJson(const ScenarioConfig& config) {
  OJson out = OJson::object();
  for (const Section& section : Schema()) {
    OJson body = OJson::object();
    for (const Field& f : section.fields) body[f.name] = f.get(config);
    out[section.name] = std::move(body);
  }
  return out;
}

ScenarioConfig ConfigFromJson(const Json& doc, ScenarioConfig base) {
  if (!doc.is_object()) Fail("/", "expected an object of sections");
  for (const auto& [name, body] : doc.items()) {
    const std::string at = "/" + name;
    const Section* section = nullptr;
    for (const Section& s : Schema()) {
      if (s.name == name) section = &s;
    }
    if (section == nullptr) Fail(at, "unknown section");
    if (!body.is_object()) Fail(at, "expected an object");
    for (const auto& [key, value] : body.items()) {
      const std::string where = at + "/" + key;
      const Field* field = nullptr;
      for (const Field& f : section->fields) {
        if (f.name == key) field = &f;
      }
      if (field == nullptr) Fail(where, "unknown key");
      field->set(base, value, where);
    }
  }
  try {
    base.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return base;
}

ScenarioConfig LoadConfigFile(const std::string& path, ScenarioConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  try {
    return ConfigFromJson(doc, std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void ApplyOverride(ScenarioConfig& config, std::string_view assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError(std::string(assignment) + ": expected section.key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));

  Json value = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;

  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
  if (parts.size() < 2) throw ConfigError(key + ": expected section.key");

  Json patch = value;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    Json level = Json::object();
    level[*it] = std::move(patch);
    patch = std::move(level);
  }
  config = ConfigFromJson(patch, config);
}

std::optional<std::string> ConfigPathFromEnv() {
  const char* value = std::getenv(kConfigEnvVar);
  if (value == nullptr || *value == '\0') return std::nullopt;
  return std::string(value);
}

}  // namespace pcca
