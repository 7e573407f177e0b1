// Copyright 2026 The SCOM Authors
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

// Run configuration (JSON). Relative paths resolve against the directory of
// the config file.

#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scom/error.hpp"
#include "scom/hash.hpp"
#include "scom/intervention.hpp"
#include "scom/nn.hpp"
#include "scom/output_model.hpp"
#include "scom/selection.hpp"

namespace scom {

namespace fs = std::filesystem;

struct SelectionDefaults {
  Method method = Method::backward;
  Level level = Level::dataset;
  std::optional<std::size_t> k;
  std::vector<std::string> locked_in;  // group names or indices
  std::vector<std::string> excluded;
  std::optional<std::string> instance;  // row id, for instance level
};

struct ReportSettings {
  fs::path output_dir;
  std::vector<std::size_t> ks;  // empty: every size
  std::vector<Method> methods{Method::forward, Method::backward, Method::random};
  Level level = Level::dataset;
  std::size_t random_seeds = 5;
  std::vector<fs::path> traces;
  std::vector<fs::path> selection_files;
};

struct InterventionSettings {
  OracleKind oracle = OracleKind::class_level;
  InterventionOrder order = InterventionOrder::random;
  std::vector<std::string> indices;  // user order
  std::size_t seeds = 10;
  std::size_t max_interventions = 0;
  std::vector<std::size_t> ks;  // empty: every size
  Method method = Method::backward;
  std::optional<fs::path> trace;
};

struct ServiceSettings {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string cors_origin = "*";
  std::optional<fs::path> static_dir;
};

struct RunConfig {
  fs::path source;  // config file, empty when built in code
  std::string hash;  // fingerprint of the config text
  std::uint64_t seed = 0;
  bool seed_from_env = false;
  fs::path schema_file;
  fs::path data_file;
  std::uint64_t split_seed = 0;
  fs::path checkpoint;
  fs::path output_dir;
  TrainConfig train;
  SelectionDefaults selection;
  ReportSettings report;
  InterventionSettings intervention;
  ServiceSettings service;

  fs::path trace_path(Method m, Level l) const {
    return output_dir / ("trace_" + std::string(to_string(m)) + "_" + std::string(to_string(l)) + ".json");
  }
};

/// SCOM_SEED, when set, overrides the config seed.
inline std::optional<std::uint64_t> seed_from_env() {
  const char* v = std::getenv("SCOM_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  char* end = nullptr;
  const auto parsed = std::strtoull(v, &end, 10);
  if (end == nullptr || *end != '\0') fail(ErrorCode::invalid_input, "SCOM_SEED is not an unsigned integer", v);
  return parsed;
}

namespace detail {

inline fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

}  // namespace detail

/// Parses a config document. `base` anchors relative paths. With
/// `require_inputs`, the schema and data files must exist.
inline RunConfig parse_config(const json& j, const fs::path& base, bool require_inputs = true) {
  RunConfig c;
  try {
    c.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
    const json data = j.value("data", json::object());
    c.schema_file = detail::resolve(base, detail::get_or<std::string>(data, "schema", "schema.json"));
    c.data_file = detail::resolve(base, detail::get_or<std::string>(data, "data", "data.csv"));
    c.split_seed = detail::get_or<std::uint64_t>(data, "split_seed", 0);
    c.output_dir = detail::resolve(base, detail::get_or<std::string>(j, "output_dir", "out"));
    c.checkpoint = j.contains("checkpoint") ? detail::resolve(base, j.at("checkpoint").get<std::string>())
                                            : c.output_dir / "model.json";

    c.train = train_config_from_json(j.value("train", json::object()));

    const json sel = j.value("selection", json::object());
    c.selection.method = method_from_string(detail::get_or<std::string>(sel, "method", "backward"));
    c.selection.level = level_from_string(detail::get_or<std::string>(sel, "level", "dataset"));
    if (sel.contains("k") && !sel.at("k").is_null()) c.selection.k = sel.at("k").get<std::size_t>();
    c.selection.locked_in = detail::get_or<std::vector<std::string>>(sel, "locked_in", {});
    c.selection.excluded = detail::get_or<std::vector<std::string>>(sel, "excluded", {});
    if (sel.contains("instance") && !sel.at("instance").is_null())
      c.selection.instance = sel.at("instance").is_string() ? sel.at("instance").get<std::string>()
                                                            : std::to_string(sel.at("instance").get<std::size_t>());

    const json rep = j.value("report", json::object());
    c.report.output_dir = rep.contains("output_dir") ? detail::resolve(base, rep.at("output_dir").get<std::string>())
                                                     : c.output_dir / "report";
    c.report.ks = detail::get_or<std::vector<std::size_t>>(rep, "ks", {});
    if (rep.contains("methods")) {
      c.report.methods.clear();
      for (const auto& m : rep.at("methods")) c.report.methods.push_back(method_from_string(m.get<std::string>()));
    }
    c.report.level = level_from_string(detail::get_or<std::string>(rep, "level", "dataset"));
    c.report.random_seeds = detail::get_or<std::size_t>(rep, "random_seeds", 5);
    for (const auto& p : detail::get_or<std::vector<std::string>>(rep, "traces", {}))
      c.report.traces.push_back(detail::resolve(base, p));
    for (const auto& p : detail::get_or<std::vector<std::string>>(rep, "selection_files", {}))
      c.report.selection_files.push_back(detail::resolve(base, p));

    const json iv = j.value("intervention", json::object());
    c.intervention.oracle = oracle_kind_from_string(detail::get_or<std::string>(iv, "oracle", "class_level"));
    const auto order = detail::get_or<std::string>(iv, "order", "random");
    if (order != "random" && order != "user") fail(ErrorCode::invalid_input, "unknown intervention order '" + order + "'");
    c.intervention.order = order == "user" ? InterventionOrder::user : InterventionOrder::random;
    c.intervention.indices = detail::get_or<std::vector<std::string>>(iv, "indices", {});
    c.intervention.seeds = detail::get_or<std::size_t>(iv, "seeds", 10);
    c.intervention.max_interventions = detail::get_or<std::size_t>(iv, "max_interventions", 0);
    c.intervention.ks = detail::get_or<std::vector<std::size_t>>(iv, "ks", {});
    c.intervention.method = method_from_string(detail::get_or<std::string>(iv, "method", "backward"));
    if (iv.contains("trace") && !iv.at("trace").is_null())
      c.intervention.trace = detail::resolve(base, iv.at("trace").get<std::string>());

    const json svc = j.value("service", json::object());
    c.service.host = detail::get_or<std::string>(svc, "host", "127.0.0.1");
    c.service.port = detail::get_or<int>(svc, "port", 8080);
    c.service.cors_origin = detail::get_or<std::string>(svc, "cors_origin", "*");
    if (svc.contains("static_dir") && !svc.at("static_dir").is_null())
      c.service.static_dir = detail::resolve(base, svc.at("static_dir").get<std::string>());
  } catch (const json::exception& e) {
    fail(ErrorCode::invalid_input, std::string("malformed config: ") + e.what());
  }

  if (c.service.port < 1 || c.service.port > 65535)
    fail(ErrorCode::invalid_input, "service port " + std::to_string(c.service.port) + " is outside 1..65535");
  if (auto env = seed_from_env()) {
    c.seed = *env;
    c.seed_from_env = true;
  }
  c.train.seed = c.seed;
  c.train.validate();
  if (require_inputs)
    for (const auto& p : {c.schema_file, c.data_file})
      if (!fs::exists(p)) fail(ErrorCode::io, "input file not found: " + p.string(), p.string());
  c.hash = fingerprint(j.dump());
  return c;
}

inline RunConfig load_config(const fs::path& path, bool require_inputs = true) {
  if (!fs::exists(path)) fail(ErrorCode::io, "config file not found: " + path.string(), path.string());
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::invalid_input, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  RunConfig c = parse_config(j, fs::absolute(path).parent_path(), require_inputs);
  c.source = path;
  return c;
}

}  // namespace scom
