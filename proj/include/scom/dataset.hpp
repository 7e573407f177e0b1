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

// Concept datasets and their CSV form.
//
// Data file: UTF-8 CSV with a header row. Columns, in any order:
//   <group>.<j>        one per concept dimension (required)
//   label              class index, or a class name when the schema has names
//   true.<group>.<j>   ground-truth concept values (all or none)
//   identity           grouping key for the per-identity oracle (optional)
//   id                 instance identifier (optional; defaults to row number)
//   split              train | val | test (optional)
// Without a split column rows are split 60/20/20 by a seeded shuffle.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scom/error.hpp"
#include "scom/hash.hpp"
#include "scom/nn.hpp"
#include "scom/random.hpp"
#include "scom/schema.hpp"

namespace scom {

enum class Split : std::uint8_t { train, val, test };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

inline std::optional<Split> split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val" || s == "valid" || s == "validation") return Split::val;
  if (s == "test") return Split::test;
  return std::nullopt;
}

struct ConceptDataset {
  ConceptSchema schema;
  Matrix concepts;                         // N x D
  std::vector<std::size_t> labels;         // N
  std::optional<Matrix> true_concepts;     // N x D, ground-truth value space
  std::optional<std::vector<std::string>> identity;
  std::vector<std::string> ids;            // empty: the row number is the id
  std::vector<Split> split;                // N

  std::size_t size() const { return labels.size(); }

  std::vector<std::size_t> rows_in(Split s) const {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < split.size(); ++r)
      if (split[r] == s) rows.push_back(r);
    return rows;
  }

  std::string row_id(std::size_t r) const { return ids.empty() ? std::to_string(r) : ids[r]; }

  std::optional<std::size_t> find_row(std::string_view id) const {
    if (ids.empty()) {
      std::size_t r = 0;
      const auto* end = id.data() + id.size();
      auto [p, ec] = std::from_chars(id.data(), end, r);
      if (ec == std::errc() && p == end && !id.empty() && r < size()) return r;
      return std::nullopt;
    }
    for (std::size_t r = 0; r < ids.size(); ++r)
      if (ids[r] == id) return r;
    return std::nullopt;
  }

  void validate() const {
    schema.validate();
    const std::size_t n = labels.size();
    const std::size_t d = schema.total_dims();
    require(concepts.rows == n && concepts.cols == d && concepts.values.size() == n * d,
            "concept matrix shape does not match labels/schema");
    require(split.size() == n, "split column length mismatch");
    require(concepts.all_finite(), "concept matrix contains non-finite values");
    for (std::size_t r = 0; r < n; ++r)
      if (labels[r] >= schema.num_classes)
        fail(ErrorCode::invalid_input, "row " + std::to_string(r) + ": label out of range");
    if (true_concepts) {
      require(true_concepts->rows == n && true_concepts->cols == d,
              "true_concepts shape does not match concepts");
      const auto off = schema.offsets();
      for (std::size_t g = 0; g < schema.num_groups(); ++g) {
        if (schema.groups[g].kind != ConceptKind::binary) continue;
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t c = off[g]; c < off[g + 1]; ++c) {
            const double v = (*true_concepts)(r, c);
            if (v != 0.0 && v != 1.0)
              fail(ErrorCode::invalid_input, "row " + std::to_string(r) + ": binary ground truth for '" +
                                                 schema.groups[g].name + "' is not 0/1");
          }
      }
    }
    if (identity) require(identity->size() == n, "identity column length mismatch");
    require(ids.empty() || ids.size() == n, "id column length mismatch");
  }

  friend bool operator==(const ConceptDataset&, const ConceptDataset&) = default;
};

/// Seeded 60/20/20 train/val/test assignment.
inline std::vector<Split> default_split(std::size_t n, std::uint64_t seed) {
  auto order = iota_indices(n);
  Rng rng = make_rng(seed, 0x73706c6974ULL);
  shuffle(std::span<std::size_t>(order), rng);
  const std::size_t n_train = n * 6 / 10;
  const std::size_t n_val = n * 2 / 10;
  std::vector<Split> split(n, Split::test);
  for (std::size_t i = 0; i < n; ++i)
    split[order[i]] = i < n_train ? Split::train : (i < n_train + n_val ? Split::val : Split::test);
  return split;
}

// ---------------------------------------------------------------------------
// CSV

namespace csv {

/// Splits one record. Handles double-quoted fields with "" escapes.
inline std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string s = "\"";
  for (char c : field) {
    if (c == '"') s.push_back('"');
    s.push_back(c);
  }
  s.push_back('"');
  return s;
}

/// Lines of a text blob, without terminators; trailing blank lines dropped.
inline std::vector<std::string_view> lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = end + 1;
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty() || !std::isfinite(v)) return std::nullopt;
  return v;
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace csv

inline ConceptDataset parse_dataset(const ConceptSchema& schema, std::string_view text,
                                    std::uint64_t split_seed = 0) {
  schema.validate();
  const auto lines = csv::lines(text);
  if (lines.empty()) fail(ErrorCode::ingestion, "data file is empty (no header row)");
  const auto header = csv::split_record(lines[0]);

  std::unordered_map<std::string, std::size_t> col_of;
  for (std::size_t c = 0; c < header.size(); ++c) {
    std::string name(csv::trim(header[c]));
    if (!col_of.emplace(name, c).second)
      fail(ErrorCode::ingestion, "duplicate column '" + name + "' in header", "line=1;column=" + name);
  }

  const auto concept_cols = schema.column_names();
  std::vector<std::size_t> concept_idx, true_idx;
  std::size_t known = 0;
  for (const auto& name : concept_cols) {
    auto it = col_of.find(name);
    if (it == col_of.end()) fail(ErrorCode::ingestion, "missing column '" + name + "'", "column=" + name);
    concept_idx.push_back(it->second);
    ++known;
  }
  auto optional_col = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = col_of.find(name);
    if (it == col_of.end()) return std::nullopt;
    ++known;
    return it->second;
  };
  const auto label_col = optional_col("label");
  if (!label_col) fail(ErrorCode::ingestion, "missing column 'label'", "column=label");
  const auto identity_col = optional_col("identity");
  const auto id_col = optional_col("id");
  const auto split_col = optional_col("split");
  std::size_t n_true = 0;
  for (const auto& name : concept_cols)
    if (auto c = optional_col("true." + name)) {
      true_idx.push_back(*c);
      ++n_true;
    }
  if (n_true != 0 && n_true != concept_cols.size()) {
    for (const auto& name : concept_cols)
      if (!col_of.count("true." + name))
        fail(ErrorCode::ingestion, "missing column 'true." + name + "' (ground truth must be complete)",
             "column=true." + name);
  }
  if (known != header.size()) {
    for (const auto& [name, c] : col_of) {
      (void)c;
      const bool ok = name == "label" || name == "identity" || name == "id" || name == "split" ||
                      std::find(concept_cols.begin(), concept_cols.end(), name) != concept_cols.end() ||
                      (name.rfind("true.", 0) == 0 &&
                       std::find(concept_cols.begin(), concept_cols.end(), name.substr(5)) != concept_cols.end());
      if (!ok) fail(ErrorCode::ingestion, "unexpected column '" + name + "'", "column=" + name);
    }
  }

  ConceptDataset ds;
  ds.schema = schema;
  const std::size_t d = schema.total_dims();
  std::vector<double> values, truth;
  std::vector<std::string> identity, ids;
  bool any_split = false;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (csv::trim(lines[li]).empty()) continue;
    const std::string line_no = std::to_string(li + 1);
    const auto cells = csv::split_record(lines[li]);
    if (cells.size() != header.size())
      fail(ErrorCode::ingestion,
           "line " + line_no + ": expected " + std::to_string(header.size()) + " cells, found " +
               std::to_string(cells.size()),
           "line=" + line_no);
    auto numeric = [&](std::size_t col) {
      auto v = csv::parse_double(cells[col]);
      if (!v)
        fail(ErrorCode::ingestion,
             "line " + line_no + ", column '" + header[col] + "': non-numeric cell '" + cells[col] + "'",
             "line=" + line_no + ";column=" + header[col]);
      return *v;
    };
    for (std::size_t j = 0; j < d; ++j) values.push_back(numeric(concept_idx[j]));
    for (std::size_t j = 0; j < true_idx.size(); ++j) truth.push_back(numeric(true_idx[j]));

    const std::string_view label_cell = csv::trim(cells[*label_col]);
    std::size_t label = 0;
    {
      const auto* end = label_cell.data() + label_cell.size();
      auto [p, ec] = std::from_chars(label_cell.data(), end, label);
      if (ec != std::errc() || p != end || label_cell.empty()) {
        auto it = std::find(schema.class_names.begin(), schema.class_names.end(), label_cell);
        if (it == schema.class_names.end())
          fail(ErrorCode::ingestion,
               "line " + line_no + ", column 'label': not a class index '" + std::string(label_cell) + "'",
               "line=" + line_no + ";column=label");
        label = static_cast<std::size_t>(it - schema.class_names.begin());
      }
    }
    if (label >= schema.num_classes)
      fail(ErrorCode::ingestion,
           "line " + line_no + ", column 'label': label " + std::to_string(label) + " out of range [0, " +
               std::to_string(schema.num_classes) + ")",
           "line=" + line_no + ";column=label");
    ds.labels.push_back(label);

    if (identity_col) identity.emplace_back(csv::trim(cells[*identity_col]));
    if (id_col) ids.emplace_back(csv::trim(cells[*id_col]));
    if (split_col) {
      auto s = split_from_string(csv::trim(cells[*split_col]));
      if (!s)
        fail(ErrorCode::ingestion, "line " + line_no + ", column 'split': unknown split '" + cells[*split_col] + "'",
             "line=" + line_no + ";column=split");
      ds.split.push_back(*s);
      any_split = true;
    }
  }

  const std::size_t n = ds.labels.size();
  ds.concepts.rows = n;
  ds.concepts.cols = d;
  ds.concepts.values = std::move(values);
  if (!true_idx.empty()) {
    Matrix t;
    t.rows = n;
    t.cols = d;
    t.values = std::move(truth);
    ds.true_concepts = std::move(t);
  }
  if (identity_col) ds.identity = std::move(identity);
  if (id_col) ds.ids = std::move(ids);
  if (!any_split) ds.split = default_split(n, split_seed);
  try {
    ds.validate();
  } catch (const Error& e) {
    fail(ErrorCode::ingestion, e.what(), e.detail());
  }
  return ds;
}

inline ConceptDataset load_dataset(const std::filesystem::path& schema_file,
                                   const std::filesystem::path& data_file,
                                   std::uint64_t split_seed = 0) {
  auto schema = load_schema(schema_file);
  if (!std::filesystem::exists(data_file))
    fail(ErrorCode::io, "data file not found: " + data_file.string(), data_file.string());
  return parse_dataset(schema, read_file(data_file), split_seed);
}

inline std::string dataset_to_csv(const ConceptDataset& ds) {
  const auto cols = ds.schema.column_names();
  std::ostringstream out;
  bool first = true;
  auto emit = [&](std::string_view s) {
    if (!first) out << ',';
    out << s;
    first = false;
  };
  if (!ds.ids.empty()) emit("id");
  for (const auto& c : cols) emit(c);
  if (ds.true_concepts)
    for (const auto& c : cols) emit("true." + c);
  emit("label");
  if (ds.identity) emit("identity");
  emit("split");
  out << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    first = true;
    if (!ds.ids.empty()) emit(csv::quote(ds.ids[r]));
    for (double v : ds.concepts.row(r)) emit(csv::format_double(v));
    if (ds.true_concepts)
      for (double v : ds.true_concepts->row(r)) emit(csv::format_double(v));
    emit(std::to_string(ds.labels[r]));
    if (ds.identity) emit(csv::quote((*ds.identity)[r]));
    emit(to_string(ds.split[r]));
    out << '\n';
  }
  return out.str();
}

inline void save_dataset(const ConceptDataset& ds, const std::filesystem::path& schema_file,
                         const std::filesystem::path& data_file) {
  save_schema(ds.schema, schema_file);
  write_file(data_file, dataset_to_csv(ds));
}

}  // namespace scom
