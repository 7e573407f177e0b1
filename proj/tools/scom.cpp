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

// scom: train, select, report, intervene-sweep, gen-synthetic,
// eval-selections, serve. Exit status 0 ok, 2 user error, 3 internal error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scom/http_server.hpp"
#include "scom/scom.hpp"

namespace {

constexpr int kExitUser = 2;
constexpr int kExitInternal = 3;

std::string join_names(const scom::ConceptSchema& schema, const std::vector<std::size_t>& set) {
  std::string out;
  for (auto g : set) out += (out.empty() ? "" : ",") + schema.groups[g].name;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  CLI::App app{"Selectable concept output models: train, select concept sets, report, intervene, serve"};
  app.require_subcommand(1);

  std::string config_path;
  auto add_config = [&](CLI::App* sub, bool required = true) {
    auto* opt = sub->add_option("--config", config_path, "run configuration (JSON)");
    if (required) opt->required();
  };

  auto* train = app.add_subcommand("train", "train the output model");
  add_config(train);

  auto* select = app.add_subcommand("select", "run forward, backward or random selection and write the trace");
  add_config(select);
  std::optional<std::string> sel_method, sel_level, sel_instance, sel_out;
  std::optional<std::size_t> sel_k;
  std::vector<std::string> sel_lock, sel_exclude;
  select->add_option("--method", sel_method, "forward | backward | random");
  select->add_option("--level", sel_level, "dataset | instance");
  select->add_option("-k,--k", sel_k, "also print the size-k set");
  select->add_option("--lock", sel_lock, "group kept in every set (name or index)");
  select->add_option("--exclude", sel_exclude, "group never selected (name or index)");
  select->add_option("--instance", sel_instance, "row id for instance-level selection");
  select->add_option("--out", sel_out, "trace output path");

  auto* report = app.add_subcommand("report", "accuracy per method and k");
  add_config(report);
  std::vector<std::size_t> rep_ks;
  std::vector<std::string> rep_methods, rep_traces, rep_selections;
  std::optional<std::string> rep_level;
  std::optional<std::size_t> rep_seeds;
  report->add_option("--ks", rep_ks, "set sizes (default: 1..n)");
  report->add_option("--method", rep_methods, "methods to run when no traces are given");
  report->add_option("--level", rep_level, "dataset | instance");
  report->add_option("--trace", rep_traces, "precomputed trace file(s)");
  report->add_option("--selections", rep_selections, "external selection file(s)");
  report->add_option("--random-seeds", rep_seeds, "seeds for the random baseline");

  auto* sweep = app.add_subcommand("intervene-sweep", "accuracy vs number of oracle interventions");
  add_config(sweep);
  std::vector<std::size_t> sw_ks;
  std::optional<std::string> sw_oracle, sw_order, sw_method, sw_trace;
  std::vector<std::string> sw_indices;
  std::optional<std::size_t> sw_seeds, sw_max;
  sweep->add_option("--ks", sw_ks, "set sizes (default: every size in the trace)");
  sweep->add_option("--oracle", sw_oracle, "class_level | soft");
  sweep->add_option("--order", sw_order, "random | user");
  sweep->add_option("--indices", sw_indices, "intervention order for --order user");
  sweep->add_option("--seeds", sw_seeds, "number of random orders");
  sweep->add_option("--max", sw_max, "cap on interventions per set (0: k)");
  sweep->add_option("--method", sw_method, "selection method for the sets");
  sweep->add_option("--trace", sw_trace, "precomputed dataset-level trace");

  auto* gen = app.add_subcommand("gen-synthetic", "write a synthetic dataset (schema.json, data.csv)");
  std::string gen_generator = "duplicated";
  std::string gen_out = "data";
  scom::SyntheticSpec spec;
  gen->add_option("--generator", gen_generator, "duplicated | xor_distractor | informative_zero | correlated_blocks")
      ->required();
  gen->add_option("--n", spec.n_instances, "number of rows");
  gen->add_option("--noise", spec.noise, "observation flip probability");
  gen->add_option("--seed", spec.seed, "generator seed");
  gen->add_option("--groups", spec.n_groups, "number of concept groups (0: generator default)");
  gen->add_option("--blocks", spec.n_blocks, "correlated_blocks: number of blocks");
  gen->add_option("--out", gen_out, "output directory");

  auto* evalsel = app.add_subcommand("eval-selections", "accuracy of external per-instance selections");
  add_config(evalsel);
  std::vector<std::string> ev_files;
  evalsel->add_option("files", ev_files, "selection CSV file(s)")->required();

  auto* serve = app.add_subcommand("serve", "serve the /api/v1 JSON API");
  add_config(serve);
  std::optional<int> sv_port;
  std::optional<std::string> sv_host;
  serve->add_option("--port", sv_port, "override the configured port");
  serve->add_option("--host", sv_host, "override the configured host");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUser;
  }

  try {
    if (*gen) {
      spec.generator = scom::generator_from_string(gen_generator);
      const auto files = scom::cmd_gen_synthetic(spec, gen_out);
      std::cout << "wrote " << files.schema.string() << " and " << files.data.string() << "\n";
      return 0;
    }

    scom::RunConfig cfg = scom::load_config(config_path);

    if (*train) {
      const auto r = scom::cmd_train(cfg);
      std::cout << "checkpoint " << r.checkpoint.string() << " (" << r.checkpoint_hash << ")\n"
                << "training log " << r.log.string() << "\n";
    } else if (*select) {
      scom::SelectionDefaults opts = cfg.selection;
      if (sel_method) opts.method = scom::method_from_string(*sel_method);
      if (sel_level) opts.level = scom::level_from_string(*sel_level);
      if (sel_k) opts.k = sel_k;
      if (!sel_lock.empty()) opts.locked_in = sel_lock;
      if (!sel_exclude.empty()) opts.excluded = sel_exclude;
      if (sel_instance) opts.instance = sel_instance;
      std::optional<fs::path> out;
      if (sel_out) out = fs::path(*sel_out);
      const auto r = scom::cmd_select(cfg, opts, out);
      std::cout << "trace " << r.path.string() << "\n";
      if (r.set) {
        const auto schema = scom::load_schema(cfg.schema_file);
        std::cout << "k=" << *opts.k << " set: " << join_names(schema, *r.set) << "\n";
      }
    } else if (*report) {
      scom::ReportSettings opts = cfg.report;
      if (!rep_ks.empty()) opts.ks = rep_ks;
      if (!rep_methods.empty()) {
        opts.methods.clear();
        for (const auto& m : rep_methods) opts.methods.push_back(scom::method_from_string(m));
      }
      if (rep_level) opts.level = scom::level_from_string(*rep_level);
      if (rep_seeds) opts.random_seeds = *rep_seeds;
      if (!rep_traces.empty()) opts.traces.assign(rep_traces.begin(), rep_traces.end());
      if (!rep_selections.empty()) opts.selection_files.assign(rep_selections.begin(), rep_selections.end());
      const auto r = scom::cmd_report(cfg, opts);
      std::cout << r.to_csv(scom::load_schema(cfg.schema_file));
      std::cout << "wrote " << (opts.output_dir / "report.csv").string() << "\n";
    } else if (*sweep) {
      scom::InterventionSettings opts = cfg.intervention;
      if (!sw_ks.empty()) opts.ks = sw_ks;
      if (sw_oracle) opts.oracle = scom::oracle_kind_from_string(*sw_oracle);
      if (sw_order) {
        if (*sw_order != "random" && *sw_order != "user")
          scom::fail(scom::ErrorCode::invalid_input, "unknown intervention order '" + *sw_order + "'");
        opts.order = *sw_order == "user" ? scom::InterventionOrder::user : scom::InterventionOrder::random;
      }
      if (!sw_indices.empty()) opts.indices = sw_indices;
      if (sw_seeds) opts.seeds = *sw_seeds;
      if (sw_max) opts.max_interventions = *sw_max;
      if (sw_method) opts.method = scom::method_from_string(*sw_method);
      if (sw_trace) opts.trace = fs::path(*sw_trace);
      const auto r = scom::cmd_intervene_sweep(cfg, opts);
      std::cout << r.report.to_csv() << "wrote " << r.csv.string() << "\n";
    } else if (*evalsel) {
      std::vector<fs::path> files(ev_files.begin(), ev_files.end());
      const auto r = scom::cmd_eval_selections(cfg, files);
      std::cout << r.to_csv(scom::load_schema(cfg.schema_file));
    } else if (*serve) {
      if (sv_port) {
        if (*sv_port < 1 || *sv_port > 65535)
          scom::fail(scom::ErrorCode::invalid_input, "port " + std::to_string(*sv_port) + " is outside 1..65535");
        cfg.service.port = *sv_port;
      }
      if (sv_host) cfg.service.host = *sv_host;
      auto run = scom::load_run(cfg);
      const scom::ApiService api(std::move(run.model), std::move(run.dataset), run.checkpoint_hash, cfg.seed);
      scom::HttpServer server(api, cfg.service);
      const int port = server.bind();
      std::cout << "serving on http://" << cfg.service.host << ":" << port << "/api/v1/" << std::endl;
      server.run();
    }
    return 0;
  } catch (const scom::Error& e) {
    std::cerr << "error (" << scom::to_string(e.code()) << "): " << e.what() << "\n";
    return e.is_user_error() ? kExitUser : kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
