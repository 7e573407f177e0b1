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

// File-level commands behind the `scom` CLI. Each reads its inputs from a
// RunConfig, writes its outputs, and returns what it wrote.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scom/config.hpp"
#include "scom/dataset.hpp"
#include "scom/error.hpp"
#include "scom/hash.hpp"
#include "scom/intervention.hpp"
#include "scom/output_model.hpp"
#include "scom/report.hpp"
#include "scom/schema.hpp"
#include "scom/selection.hpp"
#include "scom/synthetic.hpp"

namespace scom {

/// Dataset and checkpoint named by a config, checked against each other.
struct LoadedRun {
  ConceptDataset dataset;
  OutputModel model;
  std::string checkpoint_hash;
};

inline ConceptDataset load_config_dataset(const RunConfig& cfg) {
  return load_dataset(cfg.schema_file, cfg.data_file, cfg.split_seed);
}

inline LoadedRun load_run(const RunConfig& cfg) {
  ConceptDataset ds = load_config_dataset(cfg);
  OutputModel model(load_checkpoint(cfg.checkpoint), ds.schema);
  return {std::move(ds), std::move(model), file_fingerprint(cfg.checkpoint)};
}

inline std::vector<std::size_t> resolve_groups(const ConceptSchema& schema, const std::vector<std::string>& tokens) {
  std::vector<std::size_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(schema.resolve_group(t));
  return out;
}

inline std::size_t resolve_instance(const ConceptDataset& ds, const std::string& id) {
  const auto r = ds.find_row(id);
  if (!r) fail(ErrorCode::invalid_input, "unknown instance '" + id + "'", id);
  return *r;
}

inline json group_names(const ConceptSchema& schema, const std::vector<std::size_t>& set) {
  json names = json::array();
  for (auto g : set) names.push_back(schema.groups.at(g).name);
  return names;
}

// ---------------------------------------------------------------------------
// train

struct TrainResult {
  fs::path checkpoint;
  fs::path log;
  std::string checkpoint_hash;
};

inline TrainResult cmd_train(const RunConfig& cfg) {
  const ConceptDataset ds = load_config_dataset(cfg);
  TrainingLog log;
  const auto ckpt = train_output_model(ds, cfg.train, &log);
  save_checkpoint(ckpt, cfg.checkpoint);
  std::ostringstream out;
  out << "epoch,loss\n";
  for (std::size_t e = 0; e < log.epoch_loss.size(); ++e)
    out << e + 1 << ',' << csv::format_double(log.epoch_loss[e]) << '\n';
  fs::path log_path = cfg.checkpoint;
  log_path += ".log.csv";
  write_file(log_path, out.str());
  return {cfg.checkpoint, log_path, file_fingerprint(cfg.checkpoint)};
}

// ---------------------------------------------------------------------------
// select

struct SelectResult {
  SelectionTrace trace;
  fs::path path;
  std::optional<std::vector<std::size_t>> set;  // when k was given
};

inline SelectionRequest make_request(const ConceptDataset& ds, const SelectionDefaults& opts, std::uint64_t seed) {
  SelectionRequest req;
  req.method = opts.method;
  req.level = opts.method == Method::random ? Level::dataset : opts.level;
  req.locked_in = resolve_groups(ds.schema, opts.locked_in);
  req.excluded = resolve_groups(ds.schema, opts.excluded);
  req.seed = seed;
  if (req.level == Level::instance) {
    if (!opts.instance) fail(ErrorCode::infeasible_constraints, "instance-level selection needs an instance");
    req.instance_index = resolve_instance(ds, *opts.instance);
  }
  return req;
}

/// Full trace for `req`, plus the size-k set when k is given.
inline std::pair<SelectionTrace, std::optional<std::vector<std::size_t>>> run_selection(
    const OutputModel& model, const ConceptDataset& ds, SelectionRequest req, std::optional<std::size_t> k) {
  if (k) {
    req.k = *k;
    req.validate(model.num_groups(), ds.size());
  }
  const auto full = full_trace_request(req, model.num_groups());
  full.validate(model.num_groups(), ds.size());
  SelectionTrace trace = select(model, ds, full);
  std::optional<std::vector<std::size_t>> set;
  if (k) set = trace.set_at(*k);
  return {std::move(trace), std::move(set)};
}

inline json selection_document(const SelectionTrace& trace, const ConceptSchema& schema,
                               const std::optional<std::size_t>& k, const std::optional<std::vector<std::size_t>>& set) {
  json j = trace.to_json(&schema);
  if (k && set) j["selected"] = {{"k", *k}, {"set", *set}, {"names", group_names(schema, *set)}};
  return j;
}

inline SelectResult cmd_select(const RunConfig& cfg, const SelectionDefaults& opts,
                               std::optional<fs::path> output = std::nullopt) {
  const LoadedRun run = load_run(cfg);
  const auto req = make_request(run.dataset, opts, cfg.seed);
  auto [trace, set] = run_selection(run.model, run.dataset, req, opts.k);
  fs::path path = output ? *output : cfg.trace_path(req.method, req.level);
  if (!output && req.level == Level::instance) {
    path = cfg.output_dir / ("trace_" + std::string(to_string(req.method)) + "_instance_" +
                             run.dataset.row_id(*req.instance_index) + ".json");
  }
  write_file(path, selection_document(trace, run.dataset.schema, opts.k, set).dump(2) + "\n");
  return {std::move(trace), path, std::move(set)};
}

inline SelectionTrace load_trace(const fs::path& path, const ConceptSchema& schema) {
  if (!fs::exists(path)) fail(ErrorCode::io, "trace file not found: " + path.string(), path.string());
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::invalid_input, "trace " + path.string() + " is not valid JSON");
  }
  SelectionTrace t = SelectionTrace::from_json(j);
  if (!t.schema_fingerprint.empty() && t.schema_fingerprint != schema.fingerprint())
    fail(ErrorCode::incompatible_checkpoint, "trace " + path.string() + " was made for a different schema",
         path.string());
  for (auto g : t.start_set)
    if (g >= schema.num_groups()) fail(ErrorCode::invalid_input, "trace " + path.string() + " names unknown groups");
  for (const auto& s : t.steps)
    if (s.group >= schema.num_groups()) fail(ErrorCode::invalid_input, "trace " + path.string() + " names unknown groups");
  return t;
}

// ---------------------------------------------------------------------------
// report

inline std::vector<std::size_t> default_ks(std::size_t n) {
  std::vector<std::size_t> ks;
  for (std::size_t k = 1; k <= n; ++k) ks.push_back(k);
  return ks;
}

inline Provenance make_provenance(const RunConfig& cfg, const LoadedRun& run) {
  Provenance p;
  p.config_hash = cfg.hash;
  p.checkpoint_hash = run.checkpoint_hash;
  p.schema_fingerprint = run.dataset.schema.fingerprint();
  p.seed = cfg.seed;
  return p;
}

/// Traces the report evaluates when none are supplied: one dataset-level
/// trace per method (random: one per seed), or one trace per test row at
/// instance level.
inline std::vector<SelectionTrace> report_traces_for(const RunConfig& cfg, const ReportSettings& opts,
                                                     const LoadedRun& run, Provenance& prov) {
  std::vector<SelectionTrace> traces;
  for (auto method : opts.methods) {
    SelectionDefaults sel = cfg.selection;
    sel.method = method;
    sel.level = method == Method::random ? Level::dataset : opts.level;
    sel.instance.reset();
    if (method == Method::random) {
      for (std::size_t s = 0; s < opts.random_seeds; ++s) {
        const std::uint64_t seed = mix_seed(cfg.seed, s);
        prov.seeds.push_back(seed);
        traces.push_back(run_selection(run.model, run.dataset, make_request(run.dataset, sel, seed), {}).first);
      }
    } else if (sel.level == Level::dataset) {
      traces.push_back(run_selection(run.model, run.dataset, make_request(run.dataset, sel, cfg.seed), {}).first);
    } else {
      for (auto r : run.dataset.rows_in(Split::test)) {
        sel.instance = run.dataset.row_id(r);
        traces.push_back(run_selection(run.model, run.dataset, make_request(run.dataset, sel, cfg.seed), {}).first);
      }
    }
  }
  return traces;
}

inline void write_report(const AccuracyReport& report, const ConceptSchema& schema, const fs::path& dir,
                         const std::string& stem) {
  write_file(dir / (stem + ".csv"), report.to_csv(schema));
  write_file(dir / (stem + ".json"), report.to_json().dump(2) + "\n");
}

inline AccuracyReport cmd_report(const RunConfig& cfg, const ReportSettings& opts) {
  const LoadedRun run = load_run(cfg);
  AccuracyReport report;
  report.provenance = make_provenance(cfg, run);
  const auto ks = opts.ks.empty() ? default_ks(run.model.num_groups()) : opts.ks;

  std::vector<SelectionTrace> traces;
  if (!opts.traces.empty()) {
    for (const auto& p : opts.traces) traces.push_back(load_trace(p, run.dataset.schema));
  } else if (opts.selection_files.empty()) {
    traces = report_traces_for(cfg, opts, run, report.provenance);
  }
  report.rows = report_traces(run.model, run.dataset, group_traces(traces), ks);
  for (const auto& f : opts.selection_files) {
    if (!fs::exists(f)) fail(ErrorCode::io, "selection file not found: " + f.string(), f.string());
    const auto sel = resolve_selections(parse_selection_file(read_file(f)), run.dataset);
    for (auto& row : report_external(run.model, run.dataset, sel)) report.rows.push_back(std::move(row));
  }
  write_report(report, run.dataset.schema, opts.output_dir, "report");
  return report;
}

inline AccuracyReport cmd_eval_selections(const RunConfig& cfg, const std::vector<fs::path>& files) {
  if (files.empty()) fail(ErrorCode::invalid_input, "no selection files given");
  const LoadedRun run = load_run(cfg);
  AccuracyReport report;
  report.provenance = make_provenance(cfg, run);
  for (const auto& f : files) {
    if (!fs::exists(f)) fail(ErrorCode::io, "selection file not found: " + f.string(), f.string());
    const auto sel = resolve_selections(parse_selection_file(read_file(f)), run.dataset);
    for (auto& row : report_external(run.model, run.dataset, sel)) report.rows.push_back(std::move(row));
  }
  write_report(report, run.dataset.schema, cfg.report.output_dir, "selections");
  return report;
}

// ---------------------------------------------------------------------------
// intervene-sweep

struct SweepResult {
  SweepReport report;
  Provenance provenance;
  fs::path csv;
  fs::path json_path;
};

inline SweepResult cmd_intervene_sweep(const RunConfig& cfg, const InterventionSettings& opts) {
  const LoadedRun run = load_run(cfg);
  SelectionTrace trace;
  if (opts.trace) {
    trace = load_trace(*opts.trace, run.dataset.schema);
  } else {
    SelectionDefaults sel = cfg.selection;
    sel.method = opts.method;
    sel.level = Level::dataset;
    sel.instance.reset();
    trace = run_selection(run.model, run.dataset, make_request(run.dataset, sel, cfg.seed), {}).first;
  }
  if (trace.level == Level::instance && trace.method != Method::random)
    fail(ErrorCode::invalid_input, "intervention sweeps need a dataset-level trace");
  std::vector<std::size_t> ks = opts.ks;
  if (ks.empty())
    for (std::size_t k = std::max<std::size_t>(1, trace.min_size()); k <= trace.max_size(); ++k) ks.push_back(k);
  InterventionPlan plan;
  plan.order = opts.order;
  plan.indices = resolve_groups(run.dataset.schema, opts.indices);
  plan.seed = cfg.seed;
  plan.oracle = opts.oracle;
  plan.max_interventions = opts.max_interventions;
  SweepResult out;
  out.report = intervention_sweep(run.model, run.dataset, trace, ks, plan, opts.seeds);
  out.provenance = make_provenance(cfg, run);
  out.csv = cfg.report.output_dir / "sweep.csv";
  out.json_path = cfg.report.output_dir / "sweep.json";
  json j = out.report.to_json();
  j["provenance"] = out.provenance.to_json();
  write_file(out.csv, out.report.to_csv());
  write_file(out.json_path, j.dump(2) + "\n");
  return out;
}

// ---------------------------------------------------------------------------
// gen-synthetic

struct GeneratedFiles {
  fs::path schema;
  fs::path data;
};

inline GeneratedFiles cmd_gen_synthetic(const SyntheticSpec& spec, const fs::path& out_dir) {
  const ConceptDataset ds = generate_synthetic(spec);
  GeneratedFiles files{out_dir / "schema.json", out_dir / "data.csv"};
  save_dataset(ds, files.schema, files.data);
  return files;
}

}  // namespace scom
