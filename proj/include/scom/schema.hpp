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

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scom/error.hpp"
#include "scom/hash.hpp"

namespace scom {

using json = nlohmann::json;

inline constexpr int kSchemaFormatVersion = 1;

enum class ConceptKind { binary, logit, continuous };

inline std::string_view to_string(ConceptKind k) {
  switch (k) {
    case ConceptKind::binary: return "binary";
    case ConceptKind::logit: return "logit";
    case ConceptKind::continuous: return "continuous";
  }
  return "continuous";
}

inline ConceptKind concept_kind_from_string(std::string_view s) {
  if (s == "binary") return ConceptKind::binary;
  if (s == "logit") return ConceptKind::logit;
  if (s == "continuous") return ConceptKind::continuous;
  fail(ErrorCode::invalid_input, "unknown concept kind '" + std::string(s) + "'");
}

/// A named concept; masks act on whole groups, a group may span several
/// input dimensions (e.g. one colour concept with one dimension per colour).
struct ConceptGroup {
  std::string name;
  std::size_t dims = 1;
  ConceptKind kind = ConceptKind::binary;

  friend bool operator==(const ConceptGroup&, const ConceptGroup&) = default;
};

struct ConceptSchema {
  std::vector<ConceptGroup> groups;
  std::size_t num_classes = 2;
  std::vector<std::string> class_names;  // empty, or one name per class

  std::size_t num_groups() const { return groups.size(); }

  std::size_t total_dims() const {
    std::size_t d = 0;
    for (const auto& g : groups) d += g.dims;
    return d;
  }

  /// Start column of each group, plus a final entry equal to total_dims().
  std::vector<std::size_t> offsets() const {
    std::vector<std::size_t> off;
    off.reserve(groups.size() + 1);
    std::size_t d = 0;
    for (const auto& g : groups) {
      off.push_back(d);
      d += g.dims;
    }
    off.push_back(d);
    return off;
  }

  std::optional<std::size_t> find_group(std::string_view name) const {
    for (std::size_t i = 0; i < groups.size(); ++i)
      if (groups[i].name == name) return i;
    return std::nullopt;
  }

  /// Accepts a group name or a decimal group index.
  std::size_t resolve_group(std::string_view token) const {
    if (auto g = find_group(token)) return *g;
    std::size_t idx = 0;
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, idx);
    if (ec == std::errc() && ptr == end && !token.empty() && idx < groups.size()) return idx;
    fail(ErrorCode::invalid_input, "unknown concept group '" + std::string(token) + "'",
         std::string(token));
  }

  std::vector<std::string> column_names() const {
    std::vector<std::string> cols;
    for (const auto& g : groups)
      for (std::size_t j = 0; j < g.dims; ++j) cols.push_back(g.name + "." + std::to_string(j));
    return cols;
  }

  void validate() const {
    require(!groups.empty(), "schema has no concept groups");
    require(num_classes >= 2, "schema needs num_classes >= 2");
    std::set<std::string> seen;
    for (const auto& g : groups) {
      require(!g.name.empty(), "concept group with empty name");
      require(g.name.find_first_of(",;\"\n\r") == std::string::npos,
              "concept group name '" + g.name + "' contains a reserved character");
      require(g.dims >= 1, "concept group '" + g.name + "' has dims < 1");
      require(seen.insert(g.name).second, "duplicate concept group name '" + g.name + "'");
    }
    require(class_names.empty() || class_names.size() == num_classes,
            "class_names must list exactly num_classes names");
  }

  json to_json() const {
    json j;
    j["format_version"] = kSchemaFormatVersion;
    j["num_classes"] = num_classes;
    json gs = json::array();
    for (const auto& g : groups)
      gs.push_back({{"name", g.name}, {"dims", g.dims}, {"kind", std::string(to_string(g.kind))}});
    j["groups"] = std::move(gs);
    if (!class_names.empty()) j["class_names"] = class_names;
    return j;
  }

  /// Stable hash of the canonical JSON form.
  std::string fingerprint() const { return scom::fingerprint(to_json().dump()); }

  static ConceptSchema from_json(const json& j) {
    try {
      if (j.contains("format_version") && j.at("format_version").get<int>() != kSchemaFormatVersion)
        fail(ErrorCode::ingestion, "unsupported schema format_version " + j.at("format_version").dump());
      ConceptSchema s;
      s.num_classes = j.at("num_classes").get<std::size_t>();
      for (const auto& g : j.at("groups")) {
        ConceptGroup group;
        group.name = g.at("name").get<std::string>();
        group.dims = g.value("dims", std::size_t{1});
        group.kind = concept_kind_from_string(g.value("kind", std::string("binary")));
        s.groups.push_back(std::move(group));
      }
      if (j.contains("class_names")) s.class_names = j.at("class_names").get<std::vector<std::string>>();
      s.validate();
      return s;
    } catch (const json::exception& e) {
      fail(ErrorCode::ingestion, std::string("malformed schema: ") + e.what());
    }
  }

  friend bool operator==(const ConceptSchema&, const ConceptSchema&) = default;
};

inline ConceptSchema load_schema(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    fail(ErrorCode::io, "schema file not found: " + path.string(), path.string());
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::ingestion, "schema file " + path.string() + " is not valid JSON: " + e.what(),
         path.string());
  }
  return ConceptSchema::from_json(j);
}

inline void save_schema(const ConceptSchema& schema, const std::filesystem::path& path) {
  write_file(path, schema.to_json().dump(2) + "\n");
}

}  // namespace scom
