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

// /api/v1 request handlers. Transport-free: `handle` maps (method, path,
// body) to a status and a JSON document, so the HTTP server and the tests
// share one code path. Handlers only read the model and dataset.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scom/dataset.hpp"
#include "scom/error.hpp"
#include "scom/intervention.hpp"
#include "scom/masking.hpp"
#include "scom/oracle.hpp"
#include "scom/output_model.hpp"
#include "scom/selection.hpp"

namespace scom {

struct ApiResponse {
  int status = 200;
  json body;
};

inline json error_body(ErrorCode code, std::string_view message, std::string_view detail = {}) {
  return {{"code", std::string(to_string(code))}, {"message", std::string(message)}, {"detail", std::string(detail)}};
}

inline json prediction_json(const Prediction& p) {
  return {{"probs", p.probs},
          {"entropy_nats", p.entropy_nats},
          {"entropy_bits", p.entropy_bits()},
          {"predicted_class", p.predicted_class()}};
}

class ApiService {
 public:
  ApiService(OutputModel model, ConceptDataset dataset, std::string checkpoint_hash, std::uint64_t seed = 0)
      : model_(std::move(model)),
        ds_(std::move(dataset)),
        checkpoint_hash_(std::move(checkpoint_hash)),
        seed_(seed),
        input_map_(OracleInputMap::from_training(ds_)) {
    require(model_.schema().fingerprint() == ds_.schema.fingerprint(), "dataset schema does not match the model",
            ErrorCode::incompatible_checkpoint);
    for (auto kind : {OracleKind::class_level, OracleKind::soft}) {
      try {
        oracles_.emplace_back(kind, build_oracle(ds_, kind));
      } catch (const Error&) {
        // Unavailable for this dataset; requests naming it get an error.
      }
    }
  }

  const OutputModel& model() const { return model_; }
  const ConceptDataset& dataset() const { return ds_; }

  ApiResponse handle(std::string_view method, std::string_view path, std::string_view body = {}) const {
    try {
      constexpr std::string_view prefix = "/api/v1/";
      if (path.substr(0, prefix.size()) != prefix) return not_found(path);
      const std::string_view route = path.substr(prefix.size());
      if (method == "GET") {
        if (route == "meta") return {200, meta()};
        if (route.substr(0, 10) == "instances/") return {200, instance(std::string(route.substr(10)))};
        return not_found(path);
      }
      if (method != "POST") return {405, error_body(ErrorCode::invalid_input, "method not allowed")};
      const json req = parse_body(body);
      if (route == "predict") return {200, predict(req)};
      if (route == "select") return {200, select(req)};
      if (route == "intervene") return {200, intervene(req)};
      if (route == "evaluate") return {200, evaluate(req)};
      return not_found(path);
    } catch (const Error& e) {
      return {e.is_user_error() ? 400 : 500, error_body(e.code(), e.what(), e.detail())};
    } catch (const json::exception& e) {
      return {400, error_body(ErrorCode::invalid_input, std::string("malformed request: ") + e.what())};
    } catch (const std::exception& e) {
      return {500, error_body(ErrorCode::internal, e.what())};
    }
  }

  json meta() const {
    json splits = json::object();
    for (auto s : {Split::train, Split::val, Split::test}) splits[std::string(to_string(s))] = ds_.rows_in(s).size();
    json oracles = json::array();
    for (const auto& [kind, table] : oracles_) oracles.push_back(std::string(to_string(kind)));
    return {{"schema", model_.schema().to_json()},
            {"schema_fingerprint", model_.schema().fingerprint()},
            {"checkpoint_fingerprint", checkpoint_hash_},
            {"train_config", train_config_to_json(model_.checkpoint().train_config)},
            {"num_instances", ds_.size()},
            {"splits", std::move(splits)},
            {"oracles", std::move(oracles)}};
  }

  json instance(const std::string& id) const {
    const std::size_t r = row(id);
    json oracle = json::object();
    for (const auto& [kind, table] : oracles_) oracle[std::string(to_string(kind))] = input_map_.to_input(table.for_row(ds_, r));
    const auto row_values = ds_.concepts.row(r);
    json j{{"id", ds_.row_id(r)},
           {"index", r},
           {"concepts", std::vector<double>(row_values.begin(), row_values.end())},
           {"label", ds_.labels[r]},
           {"split", std::string(to_string(ds_.split[r]))},
           {"oracle", std::move(oracle)}};
    if (!ds_.schema.class_names.empty()) j["label_name"] = ds_.schema.class_names[ds_.labels[r]];
    return j;
  }

  json predict(const json& req) const {
    const auto concepts = concepts_of(req);
    return prediction_json(model_.predict(concepts, mask_of(req)));
  }

  json select(const json& req) const {
    SelectionRequest s;
    s.method = method_from_string(req.value("method", std::string("backward")));
    s.level = s.method == Method::random ? Level::dataset : level_from_string(req.value("level", std::string("dataset")));
    s.locked_in = groups_of(req, "locked_in");
    s.excluded = groups_of(req, "excluded");
    s.seed = req.value("seed", seed_);
    if (s.level == Level::instance) {
      if (!req.contains("instance")) fail(ErrorCode::infeasible_constraints, "instance-level selection needs an instance");
      s.instance_index = row(id_of(req.at("instance")));
    }
    if (!req.contains("k")) fail(ErrorCode::invalid_input, "missing field 'k'");
    s.k = req.at("k").get<std::size_t>();
    s.validate(model_.num_groups(), ds_.size());
    const auto full = full_trace_request(s, model_.num_groups());
    const SelectionTrace trace = scom::select(model_, ds_, full);
    const auto set = trace.set_at(s.k);
    SelectionTrace prefix = trace;
    prefix.steps.resize(trace.steps_to(s.k));
    json names = json::array();
    for (auto g : set) names.push_back(model_.schema().groups[g].name);
    const auto h = trace.entropy_at(s.k);
    return {{"k", s.k},
            {"set", set},
            {"names", std::move(names)},
            {"mask", mask_json(mask_from_set(set, model_.num_groups()))},
            {"entropy_nats", h ? json(*h) : json(nullptr)},
            {"trace", prefix.to_json(&model_.schema())}};
  }

  json intervene(const json& req) const {
    if (!req.contains("instance")) fail(ErrorCode::invalid_input, "missing field 'instance'");
    const std::size_t r = row(id_of(req.at("instance")));
    const Mask mask = mask_of(req);
    std::vector<double> concepts;
    if (req.contains("concepts")) {
      concepts = concepts_of(req);
    } else {
      const auto v = ds_.concepts.row(r);
      concepts.assign(v.begin(), v.end());
    }
    const auto kind = oracle_kind_from_string(req.value("oracle", std::string("class_level")));
    const auto oracle_values = input_map_.to_input(oracle_table(kind).for_row(ds_, r));
    const auto groups = groups_of(req, "groups");
    const auto after = apply_interventions(concepts, mask, oracle_values, groups, model_.schema());
    return {{"instance", ds_.row_id(r)},
            {"before", prediction_json(model_.predict(concepts, mask))},
            {"after", prediction_json(model_.predict(after, mask))},
            {"concepts", after},
            {"oracle_values", oracle_values}};
  }

  json evaluate(const json& req) const {
    const Mask mask = mask_of(req);
    const auto split_name = req.value("split", std::string("test"));
    const auto split = split_from_string(split_name);
    if (!split) fail(ErrorCode::invalid_input, "unknown split '" + split_name + "'");
    const auto r = scom::evaluate(model_, ds_, mask, *split);
    return {{"accuracy", r.accuracy},
            {"mean_entropy_nats", r.mean_entropy_nats},
            {"mean_entropy_bits", r.mean_entropy_nats / std::log(2.0)},
            {"rows", r.rows},
            {"correct", r.correct}};
  }

 private:
  static ApiResponse not_found(std::string_view path) {
    return {404, error_body(ErrorCode::invalid_input, "no such endpoint: " + std::string(path), path)};
  }

  static json parse_body(std::string_view body) {
    if (body.empty()) return json::object();
    json j = json::parse(body.begin(), body.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(ErrorCode::invalid_input, "request body must be a JSON object");
    return j;
  }

  static json mask_json(const Mask& m) {
    json a = json::array();
    for (auto b : m.bits()) a.push_back(static_cast<int>(b));
    return a;
  }

  static std::string id_of(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_unsigned()) return std::to_string(v.get<std::size_t>());
    fail(ErrorCode::invalid_input, "instance must be a row id string or a non-negative index");
  }

  std::size_t row(const std::string& id) const {
    const auto r = ds_.find_row(id);
    if (!r) fail(ErrorCode::invalid_input, "unknown instance '" + id + "'", id);
    return *r;
  }

  std::vector<double> concepts_of(const json& req) const {
    if (req.contains("concepts")) {
      const auto& c = req.at("concepts");
      if (!c.is_array()) fail(ErrorCode::invalid_input, "'concepts' must be an array of numbers");
      std::vector<double> v;
      for (const auto& x : c) {
        if (!x.is_number()) fail(ErrorCode::invalid_input, "'concepts' must be an array of numbers");
        v.push_back(x.get<double>());
      }
      if (v.size() != model_.schema().total_dims())
        fail(ErrorCode::invalid_input, "'concepts' has " + std::to_string(v.size()) + " values, expected " +
                                           std::to_string(model_.schema().total_dims()));
      return v;
    }
    if (req.contains("instance")) {
      const auto v = ds_.concepts.row(row(id_of(req.at("instance"))));
      return {v.begin(), v.end()};
    }
    fail(ErrorCode::invalid_input, "request needs 'concepts' or 'instance'");
  }

  Mask mask_of(const json& req) const {
    if (!req.contains("mask")) fail(ErrorCode::invalid_input, "missing field 'mask'");
    const auto& m = req.at("mask");
    if (!m.is_array()) fail(ErrorCode::invalid_input, "'mask' must be an array of 0/1");
    std::vector<int> bits;
    for (const auto& b : m) {
      if (b.is_boolean())
        bits.push_back(b.get<bool>() ? 1 : 0);
      else if (b.is_number_integer())
        bits.push_back(b.get<int>());
      else
        fail(ErrorCode::invalid_input, "'mask' must be an array of 0/1");
    }
    if (bits.size() != model_.num_groups())
      fail(ErrorCode::invalid_input, "'mask' has " + std::to_string(bits.size()) + " entries, expected " +
                                         std::to_string(model_.num_groups()));
    return mask_from_bits(bits);
  }

  std::vector<std::size_t> groups_of(const json& req, const char* key) const {
    std::vector<std::size_t> out;
    if (!req.contains(key) || req.at(key).is_null()) return out;
    const auto& a = req.at(key);
    if (!a.is_array()) fail(ErrorCode::invalid_input, std::string("'") + key + "' must be an array of groups");
    for (const auto& g : a) {
      if (g.is_string())
        out.push_back(model_.schema().resolve_group(g.get<std::string>()));
      else if (g.is_number_unsigned())
        out.push_back(model_.schema().resolve_group(std::to_string(g.get<std::size_t>())));
      else
        fail(ErrorCode::invalid_input, std::string("'") + key + "' must hold group names or indices");
    }
    return out;
  }

  const OracleTable& oracle_table(OracleKind kind) const {
    for (const auto& [k, table] : oracles_)
      if (k == kind) return table;
    // Rebuild to surface the construction error.
    (void)build_oracle(ds_, kind);
    fail(ErrorCode::oracle, std::string("oracle '") + std::string(to_string(kind)) + "' is unavailable");
  }

  OutputModel model_;
  ConceptDataset ds_;
  std::string checkpoint_hash_;
  std::uint64_t seed_;
  OracleInputMap input_map_;
  std::vector<std::pair<OracleKind, OracleTable>> oracles_;
};

}  // namespace scom
