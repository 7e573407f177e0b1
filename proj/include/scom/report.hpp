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

// Accuracy-vs-k tables from selection traces and from external selection
// files.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scom/dataset.hpp"
#include "scom/error.hpp"
#include "scom/intervention.hpp"
#include "scom/masking.hpp"
#include "scom/output_model.hpp"
#include "scom/selection.hpp"

namespace scom {

// ---------------------------------------------------------------------------
// Selection files: CSV with columns instance_id, selected ("a;b;c").

struct SelectionFileRow {
  std::string instance_id;
  std::vector<std::string> selected;
};

struct ResolvedSelections {
  std::vector<std::size_t> rows;                // dataset row per file row
  std::vector<std::vector<std::size_t>> sets;   // ascending group indices
};

inline std::vector<SelectionFileRow> parse_selection_file(std::string_view text) {
  const auto lines = csv::lines(text);
  if (lines.empty()) fail(ErrorCode::ingestion, "selection file is empty");
  const auto header = csv::split_record(lines[0]);
  std::optional<std::size_t> id_col, sel_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = csv::trim(header[c]);
    if (name == "instance_id") id_col = c;
    if (name == "selected") sel_col = c;
  }
  if (!id_col || !sel_col)
    fail(ErrorCode::ingestion, "selection file needs columns instance_id and selected");
  std::vector<SelectionFileRow> out;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (csv::trim(lines[li]).empty()) continue;
    const auto fields = csv::split_record(lines[li]);
    if (fields.size() != header.size())
      fail(ErrorCode::ingestion, "selection file line " + std::to_string(li + 1) + ": expected " +
                                     std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    SelectionFileRow row;
    row.instance_id = std::string(csv::trim(fields[*id_col]));
    std::string_view rest = fields[*sel_col];
    while (!rest.empty()) {
      const auto semi = rest.find(';');
      const auto token = csv::trim(rest.substr(0, semi));
      if (!token.empty()) row.selected.emplace_back(token);
      if (semi == std::string_view::npos) break;
      rest.remove_prefix(semi + 1);
    }
    out.push_back(std::move(row));
  }
  return out;
}

inline ResolvedSelections resolve_selections(const std::vector<SelectionFileRow>& file, const ConceptDataset& ds) {
  ResolvedSelections out;
  for (std::size_t i = 0; i < file.size(); ++i) {
    const std::string where = "selection file row " + std::to_string(i + 1);
    const auto r = ds.find_row(file[i].instance_id);
    if (!r) fail(ErrorCode::invalid_input, where + ": unknown instance '" + file[i].instance_id + "'", file[i].instance_id);
    std::vector<std::size_t> set;
    for (const auto& name : file[i].selected) {
      const auto g = ds.schema.find_group(name);
      if (!g) fail(ErrorCode::invalid_input, where + ": unknown concept group '" + name + "'", name);
      set.push_back(*g);
    }
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    out.rows.push_back(*r);
    out.sets.push_back(std::move(set));
  }
  return out;
}

inline std::string selection_file_csv(const ResolvedSelections& sel, const ConceptDataset& ds) {
  std::ostringstream out;
  out << "instance_id,selected\n";
  for (std::size_t i = 0; i < sel.rows.size(); ++i) {
    std::string names;
    for (auto g : sel.sets[i]) names += (names.empty() ? "" : ";") + ds.schema.groups[g].name;
    out << csv::quote(ds.row_id(sel.rows[i])) << ',' << csv::quote(names) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Accuracy tables

struct ReportRow {
  std::string method;                 // forward, backward, random, external
  std::string level;                  // dataset or instance
  std::optional<std::size_t> k;       // empty: mixed set sizes
  std::vector<std::size_t> set;       // shared set, when there is exactly one
  double accuracy = 0.0;
  double stderr_ = 0.0;
  double entropy_nats = 0.0;
  std::size_t rows = 0;
  std::size_t seeds = 1;

  double entropy_bits() const { return entropy_nats / std::log(2.0); }
};

struct Provenance {
  std::string config_hash;
  std::string checkpoint_hash;
  std::string schema_fingerprint;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;

  json to_json() const {
    return {{"config_hash", config_hash},
            {"checkpoint_hash", checkpoint_hash},
            {"schema_fingerprint", schema_fingerprint},
            {"seed", seed},
            {"seeds", seeds}};
  }
};

struct AccuracyReport {
  std::string split = "test";
  std::vector<ReportRow> rows;
  Provenance provenance;

  const ReportRow* find(std::string_view method, std::optional<std::size_t> k) const {
    for (const auto& r : rows)
      if (r.method == method && r.k == k) return &r;
    return nullptr;
  }

  std::string to_csv(const ConceptSchema& schema) const {
    std::ostringstream out;
    out << "method,level,k,accuracy,stderr,entropy_nats,entropy_bits,rows,seeds,set\n";
    for (const auto& r : rows) {
      std::string names;
      for (auto g : r.set) names += (names.empty() ? "" : ";") + schema.groups[g].name;
      out << r.method << ',' << r.level << ',' << (r.k ? std::to_string(*r.k) : "mixed") << ','
          << csv::format_double(r.accuracy) << ',' << csv::format_double(r.stderr_) << ','
          << csv::format_double(r.entropy_nats) << ',' << csv::format_double(r.entropy_bits()) << ',' << r.rows
          << ',' << r.seeds << ',' << csv::quote(names) << '\n';
    }
    return out.str();
  }

  json to_json() const {
    json rows_json = json::array();
    for (const auto& r : rows)
      rows_json.push_back({{"method", r.method},
                           {"level", r.level},
                           {"k", r.k ? json(*r.k) : json("mixed")},
                           {"set", r.set},
                           {"accuracy", r.accuracy},
                           {"stderr", r.stderr_},
                           {"entropy_nats", r.entropy_nats},
                           {"entropy_bits", r.entropy_bits()},
                           {"rows", r.rows},
                           {"seeds", r.seeds}});
    return {{"split", split}, {"rows", std::move(rows_json)}, {"provenance", provenance.to_json()}};
  }
};

/// Traces evaluated together. Dataset-level traces are alternatives (one
/// per seed) averaged per k; instance-level traces each cover one row.
struct TraceGroup {
  Method method = Method::forward;
  Level level = Level::dataset;
  std::vector<SelectionTrace> traces;
};

/// Groups traces by (method, level) in first-seen order.
inline std::vector<TraceGroup> group_traces(const std::vector<SelectionTrace>& traces) {
  std::vector<TraceGroup> groups;
  for (const auto& t : traces) {
    const Level level = t.method == Method::random ? Level::dataset : t.level;
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const TraceGroup& g) { return g.method == t.method && g.level == level; });
    if (it == groups.end()) {
      groups.push_back({t.method, level, {}});
      it = groups.end() - 1;
    }
    it->traces.push_back(t);
  }
  return groups;
}

/// One report row for `group` at size k, or nothing if some trace does not
/// reach k.
inline std::optional<ReportRow> evaluate_trace_group(const OutputModel& model, const ConceptDataset& ds,
                                                     const TraceGroup& group, std::size_t k, Split split) {
  if (group.traces.empty()) return std::nullopt;
  for (const auto& t : group.traces)
    if (!t.covers(k)) return std::nullopt;
  ReportRow row;
  row.method = std::string(to_string(group.method));
  row.level = std::string(to_string(group.level));
  row.k = k;
  if (group.level == Level::dataset) {
    const auto rows = ds.rows_in(split);
    std::vector<double> acc;
    double h = 0.0;
    for (const auto& t : group.traces) {
      const auto set = t.set_at(k);
      const auto r = evaluate_rows(model, ds, rows, mask_from_set(set, model.num_groups()));
      acc.push_back(r.accuracy);
      h += r.mean_entropy_nats;
      row.rows = r.rows;
    }
    const auto [mean, se] = mean_and_stderr(acc);
    row.accuracy = mean;
    row.stderr_ = se;
    row.entropy_nats = h / static_cast<double>(group.traces.size());
    row.seeds = group.traces.size();
    if (group.traces.size() == 1) row.set = group.traces.front().set_at(k);
    return row;
  }
  std::vector<Mask> masks(ds.size(), Mask::empty(model.num_groups()));
  std::vector<std::size_t> rows;
  for (const auto& t : group.traces) {
    if (!t.instance_index) fail(ErrorCode::invalid_input, "instance-level trace has no instance");
    rows.push_back(*t.instance_index);
    masks[*t.instance_index] = mask_from_set(t.set_at(k), model.num_groups());
  }
  const auto r = evaluate_rows(model, ds, rows, MaskAssignment(std::move(masks)));
  row.accuracy = r.accuracy;
  row.entropy_nats = r.mean_entropy_nats;
  row.rows = r.rows;
  return row;
}

/// Rows for every (group, k) pair reachable by all traces of the group.
inline std::vector<ReportRow> report_traces(const OutputModel& model, const ConceptDataset& ds,
                                            const std::vector<TraceGroup>& groups, std::span<const std::size_t> ks,
                                            Split split = Split::test) {
  std::vector<ReportRow> out;
  for (const auto& g : groups)
    for (auto k : ks)
      if (auto row = evaluate_trace_group(model, ds, g, k, split)) out.push_back(std::move(*row));
  return out;
}

/// External selections: each row uses its own set. One row per set size
/// plus a "mixed" row over all entries.
inline std::vector<ReportRow> report_external(const OutputModel& model, const ConceptDataset& ds,
                                              const ResolvedSelections& sel) {
  if (sel.rows.empty()) fail(ErrorCode::invalid_input, "selection file has no rows");
  std::map<std::size_t, std::vector<std::size_t>> by_size;  // size -> entry indices
  for (std::size_t i = 0; i < sel.rows.size(); ++i) by_size[sel.sets[i].size()].push_back(i);
  auto evaluate_entries = [&](const std::vector<std::size_t>& entries, std::optional<std::size_t> k) {
    // A row may appear more than once with different sets; score entries
    // one by one.
    std::size_t correct = 0;
    double h = 0.0;
    for (auto i : entries) {
      const auto p = model.predict(ds.concepts.row(sel.rows[i]), mask_from_set(sel.sets[i], model.num_groups()));
      if (p.predicted_class() == ds.labels[sel.rows[i]]) ++correct;
      h += p.entropy_nats;
    }
    ReportRow row;
    row.method = "external";
    row.level = "instance";
    row.k = k;
    row.rows = entries.size();
    row.accuracy = static_cast<double>(correct) / static_cast<double>(entries.size());
    row.entropy_nats = h / static_cast<double>(entries.size());
    return row;
  };
  std::vector<ReportRow> out;
  for (const auto& [size, entries] : by_size) out.push_back(evaluate_entries(entries, size));
  out.push_back(evaluate_entries(iota_indices(sel.rows.size()), std::nullopt));
  return out;
}

}  // namespace scom
