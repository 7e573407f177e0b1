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

// Oracle tables used for interventions. Values are in ground-truth space.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scom/dataset.hpp"
#include "scom/error.hpp"

namespace scom {

enum class OracleKind { class_level, soft };

inline std::string_view to_string(OracleKind k) {
  return k == OracleKind::class_level ? "class_level" : "soft";
}

inline OracleKind oracle_kind_from_string(std::string_view s) {
  if (s == "class_level" || s == "class") return OracleKind::class_level;
  if (s == "soft") return OracleKind::soft;
  fail(ErrorCode::invalid_input, "unknown oracle '" + std::string(s) + "'");
}

struct OracleTable {
  OracleKind kind = OracleKind::class_level;
  std::vector<std::string> keys;  // class index (as text) or identity
  Matrix values;                  // one row per key

  std::optional<std::size_t> find(std::string_view key) const {
    for (std::size_t i = 0; i < keys.size(); ++i)
      if (keys[i] == key) return i;
    return std::nullopt;
  }

  std::span<const double> at(std::string_view key) const {
    auto i = find(key);
    if (!i) fail(ErrorCode::oracle, "oracle has no entry for '" + std::string(key) + "'", std::string(key));
    return values.row(*i);
  }

  /// Oracle row for dataset row `r`: looked up by label or by identity.
  std::span<const double> for_row(const ConceptDataset& ds, std::size_t r) const {
    if (kind == OracleKind::class_level) return at(std::to_string(ds.labels[r]));
    if (!ds.identity) fail(ErrorCode::oracle, "dataset has no identity column");
    return at((*ds.identity)[r]);
  }
};

/// Per-class ground-truth concept vector. Requires every row of a class to
/// carry the same ground truth.
inline OracleTable class_level_oracle(const ConceptDataset& ds) {
  if (!ds.true_concepts) fail(ErrorCode::oracle, "dataset has no ground-truth concepts");
  const Matrix& truth = *ds.true_concepts;
  const std::size_t classes = ds.schema.num_classes;
  std::vector<std::optional<std::size_t>> first(classes);
  std::vector<std::size_t> offending;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    auto& f = first[ds.labels[r]];
    if (!f) {
      f = r;
      continue;
    }
    if (std::equal(truth.row(r).begin(), truth.row(r).end(), truth.row(*f).begin())) continue;
    if (std::find(offending.begin(), offending.end(), ds.labels[r]) == offending.end())
      offending.push_back(ds.labels[r]);
  }
  if (!offending.empty()) {
    std::sort(offending.begin(), offending.end());
    std::string list;
    for (auto c : offending) list += (list.empty() ? "" : ",") + std::to_string(c);
    fail(ErrorCode::oracle, "ground-truth concepts differ within class(es) " + list, list);
  }
  OracleTable table;
  table.kind = OracleKind::class_level;
  std::size_t present = 0;
  for (const auto& f : first) present += f.has_value();
  table.values = Matrix(present, truth.cols);
  std::size_t i = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (!first[c]) continue;
    table.keys.push_back(std::to_string(c));
    std::copy(truth.row(*first[c]).begin(), truth.row(*first[c]).end(), table.values.row(i).begin());
    ++i;
  }
  return table;
}

/// Per-identity arithmetic mean of the ground-truth concepts. Keys are in
/// lexicographic order.
inline OracleTable soft_oracle(const ConceptDataset& ds) {
  if (!ds.identity) fail(ErrorCode::oracle, "dataset has no identity column");
  if (!ds.true_concepts) fail(ErrorCode::oracle, "dataset has no ground-truth concepts");
  const Matrix& truth = *ds.true_concepts;
  std::map<std::string, std::pair<std::vector<double>, std::size_t>> acc;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    auto& [sum, count] = acc[(*ds.identity)[r]];
    if (sum.empty()) sum.assign(truth.cols, 0.0);
    for (std::size_t c = 0; c < truth.cols; ++c) sum[c] += truth(r, c);
    ++count;
  }
  OracleTable table;
  table.kind = OracleKind::soft;
  table.values = Matrix(acc.size(), truth.cols);
  std::size_t i = 0;
  for (const auto& [key, entry] : acc) {
    table.keys.push_back(key);
    for (std::size_t c = 0; c < truth.cols; ++c)
      table.values(i, c) = entry.first[c] / static_cast<double>(entry.second);
    ++i;
  }
  return table;
}

inline OracleTable build_oracle(const ConceptDataset& ds, OracleKind kind) {
  return kind == OracleKind::class_level ? class_level_oracle(ds) : soft_oracle(ds);
}

}  // namespace scom
