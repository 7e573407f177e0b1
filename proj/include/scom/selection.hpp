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

// Concept-set selection.
//
// Greedy forward selection and backward elimination score a candidate set C
// by the output model's predictive entropy H(Y_hat | C): for a model whose
// predictive distribution matches p(y | c), minimising it is the same as
// maximising I(Y; C), and unlike I(Y; C) it is available for continuous and
// multi-dimensional concepts. Dataset-level selection averages the entropy
// over the validation split; instance-level selection uses one row.
//
// A greedy run yields a trace from which the set of every size is read off:
// prefixes for forward selection, suffixes for backward elimination.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scom/dataset.hpp"
#include "scom/error.hpp"
#include "scom/information.hpp"
#include "scom/masking.hpp"
#include "scom/output_model.hpp"
#include "scom/random.hpp"

namespace scom {

enum class Method { forward, backward, random };
enum class Level { dataset, instance };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::forward: return "forward";
    case Method::backward: return "backward";
    case Method::random: return "random";
  }
  return "forward";
}

inline Method method_from_string(std::string_view s) {
  if (s == "forward" || s == "fs") return Method::forward;
  if (s == "backward" || s == "be") return Method::backward;
  if (s == "random") return Method::random;
  fail(ErrorCode::invalid_input, "unknown selection method '" + std::string(s) + "'");
}

inline std::string_view to_string(Level l) { return l == Level::dataset ? "dataset" : "instance"; }

inline Level level_from_string(std::string_view s) {
  if (s == "dataset") return Level::dataset;
  if (s == "instance") return Level::instance;
  fail(ErrorCode::invalid_input, "unknown selection level '" + std::string(s) + "'");
}

// Scores closer than this are ties; ties go to the lowest group index.
inline constexpr double kTieTolerance = 1e-12;

struct SelectionRequest {
  std::size_t k = 0;
  Method method = Method::backward;
  Level level = Level::dataset;
  std::optional<std::size_t> instance_index;
  std::vector<std::size_t> locked_in;
  std::vector<std::size_t> excluded;
  std::uint64_t seed = 0;

  void validate(std::size_t n_groups, std::size_t n_rows) const {
    auto infeasible = [](const std::string& msg) { fail(ErrorCode::infeasible_constraints, msg); };
    for (auto g : locked_in)
      if (g >= n_groups) infeasible("locked_in group " + std::to_string(g) + " out of range");
    for (auto g : excluded)
      if (g >= n_groups) infeasible("excluded group " + std::to_string(g) + " out of range");
    auto sorted_unique = [](std::vector<std::size_t> v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
      return v;
    };
    const auto locked = sorted_unique(locked_in);
    const auto excl = sorted_unique(excluded);
    std::vector<std::size_t> both;
    std::set_intersection(locked.begin(), locked.end(), excl.begin(), excl.end(), std::back_inserter(both));
    if (!both.empty()) infeasible("group " + std::to_string(both.front()) + " is both locked in and excluded");
    if (k < locked.size())
      infeasible("k = " + std::to_string(k) + " is smaller than the " + std::to_string(locked.size()) +
                 " locked-in groups");
    if (k > n_groups - excl.size())
      infeasible("k = " + std::to_string(k) + " exceeds the " + std::to_string(n_groups - excl.size()) +
                 " groups that are not excluded");
    if (method == Method::random && k == 0) infeasible("random selection needs k >= 1");
    if (level == Level::instance) {
      if (!instance_index) infeasible("instance-level selection needs an instance index");
      if (*instance_index >= n_rows) infeasible("instance index " + std::to_string(*instance_index) + " out of range");
    } else if (instance_index) {
      infeasible("instance index given for dataset-level selection");
    }
  }
};

struct SelectionStep {
  std::size_t group = 0;
  std::optional<double> entropy_nats;  // proxy entropy of the set after this step
  std::size_t size_after = 0;

  friend bool operator==(const SelectionStep&, const SelectionStep&) = default;
};

struct SelectionTrace {
  Method method = Method::forward;
  Level level = Level::dataset;
  std::optional<std::size_t> instance_index;
  std::vector<std::size_t> start_set;  // ascending
  std::optional<double> start_entropy_nats;
  std::vector<SelectionStep> steps;
  std::string schema_fingerprint;

  bool grows() const { return method != Method::backward; }

  std::size_t min_size() const { return grows() ? start_set.size() : start_set.size() - steps.size(); }
  std::size_t max_size() const { return grows() ? start_set.size() + steps.size() : start_set.size(); }
  bool covers(std::size_t k) const { return k >= min_size() && k <= max_size(); }

  /// Number of steps taken to reach size k.
  std::size_t steps_to(std::size_t k) const {
    if (!covers(k))
      fail(ErrorCode::invalid_input, "trace covers sizes " + std::to_string(min_size()) + ".." +
                                         std::to_string(max_size()) + ", not " + std::to_string(k));
    return grows() ? k - start_set.size() : start_set.size() - k;
  }

  /// The selected set of size k, ascending.
  std::vector<std::size_t> set_at(std::size_t k) const {
    const std::size_t t = steps_to(k);
    std::vector<std::size_t> s = start_set;
    for (std::size_t i = 0; i < t; ++i) {
      if (grows())
        s.push_back(steps[i].group);
      else
        s.erase(std::find(s.begin(), s.end(), steps[i].group));
    }
    std::sort(s.begin(), s.end());
    return s;
  }

  std::optional<double> entropy_at(std::size_t k) const {
    const std::size_t t = steps_to(k);
    return t == 0 ? start_entropy_nats : steps[t - 1].entropy_nats;
  }

  json to_json(const ConceptSchema* schema = nullptr) const {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json steps_json = json::array();
    for (const auto& s : steps) {
      json j{{"group", s.group}, {"entropy_nats", opt(s.entropy_nats)}, {"size_after", s.size_after}};
      if (schema) j["name"] = schema->groups.at(s.group).name;
      steps_json.push_back(std::move(j));
    }
    json j{{"method", std::string(to_string(method))},
           {"level", std::string(to_string(level))},
           {"start_set", start_set},
           {"start_entropy_nats", opt(start_entropy_nats)},
           {"steps", std::move(steps_json)},
           {"schema_fingerprint", schema_fingerprint}};
    if (instance_index) j["instance"] = *instance_index;
    return j;
  }

  static SelectionTrace from_json(const json& j) {
    SelectionTrace t;
    try {
      t.method = method_from_string(j.at("method").get<std::string>());
      t.level = level_from_string(j.at("level").get<std::string>());
      if (j.contains("instance") && !j.at("instance").is_null()) t.instance_index = j.at("instance").get<std::size_t>();
      t.start_set = j.at("start_set").get<std::vector<std::size_t>>();
      if (!j.at("start_entropy_nats").is_null()) t.start_entropy_nats = j.at("start_entropy_nats").get<double>();
      for (const auto& s : j.at("steps")) {
        SelectionStep step;
        step.group = s.at("group").get<std::size_t>();
        if (!s.at("entropy_nats").is_null()) step.entropy_nats = s.at("entropy_nats").get<double>();
        step.size_after = s.at("size_after").get<std::size_t>();
        t.steps.push_back(step);
      }
      t.schema_fingerprint = j.value("schema_fingerprint", std::string());
    } catch (const json::exception& e) {
      fail(ErrorCode::invalid_input, std::string("malformed selection trace: ") + e.what());
    }
    if (!t.grows() && t.steps.size() > t.start_set.size())
      fail(ErrorCode::invalid_input, "malformed selection trace: more removals than groups");
    return t;
  }

  friend bool operator==(const SelectionTrace&, const SelectionTrace&) = default;
};

/// Mean predictive entropy of a group set over the selection pool.
class EntropyProxy {
 public:
  EntropyProxy(const OutputModel& model, const ConceptDataset& ds, Level level,
               std::optional<std::size_t> instance = std::nullopt)
      : model_(model), ds_(ds) {
    if (level == Level::instance) {
      require(instance.has_value() && *instance < ds.size(), "instance index out of range");
      rows_ = {*instance};
    } else {
      rows_ = ds.rows_in(Split::val);
      if (rows_.empty()) fail(ErrorCode::invalid_input, "dataset-level selection needs a non-empty validation split");
    }
  }

  double operator()(std::span<const std::size_t> set) const {
    return model_.mean_entropy(ds_.concepts, rows_, mask_from_set(set, model_.num_groups()));
  }

  const std::vector<std::size_t>& rows() const { return rows_; }

 private:
  const OutputModel& model_;
  const ConceptDataset& ds_;
  std::vector<std::size_t> rows_;
};

namespace detail {

inline std::vector<std::size_t> sorted_unique(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline bool contains(const std::vector<std::size_t>& v, std::size_t x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

inline SelectionTrace start_trace(const SelectionRequest& req, const ConceptSchema& schema) {
  SelectionTrace t;
  t.method = req.method;
  t.level = req.level;
  t.instance_index = req.instance_index;
  t.schema_fingerprint = schema.fingerprint();
  return t;
}

}  // namespace detail

/// Greedy forward selection from `locked_in` up to size k; each stage adds
/// the candidate with the lowest proxy entropy.
inline SelectionTrace forward_select(const OutputModel& model, const ConceptDataset& ds, const SelectionRequest& req) {
  if (req.method != Method::forward) fail(ErrorCode::invalid_input, "forward_select needs method = forward");
  const std::size_t n = model.num_groups();
  req.validate(n, ds.size());
  const EntropyProxy proxy(model, ds, req.level, req.instance_index);
  const auto excluded = detail::sorted_unique(req.excluded);

  SelectionTrace trace = detail::start_trace(req, model.schema());
  std::vector<std::size_t> current = detail::sorted_unique(req.locked_in);
  trace.start_set = current;
  trace.start_entropy_nats = proxy(current);

  std::vector<std::size_t> candidates;
  for (std::size_t g = 0; g < n; ++g)
    if (!detail::contains(current, g) && !detail::contains(excluded, g)) candidates.push_back(g);

  std::vector<std::size_t> trial;
  while (current.size() < req.k) {
    std::size_t best_pos = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      trial = current;
      trial.push_back(candidates[i]);
      const double h = proxy(trial);
      if (i == 0 || h < best - kTieTolerance) {
        best = h;
        best_pos = i;
      }
    }
    current.push_back(candidates[best_pos]);
    trace.steps.push_back({candidates[best_pos], best, current.size()});
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(best_pos));
  }
  return trace;
}

/// Greedy backward elimination from all non-excluded groups down to
/// max(k, |locked_in|); each stage drops the group whose removal leaves the
/// lowest proxy entropy. Locked-in groups are never removed.
inline SelectionTrace backward_eliminate(const OutputModel& model, const ConceptDataset& ds,
                                         const SelectionRequest& req) {
  if (req.method != Method::backward) fail(ErrorCode::invalid_input, "backward_eliminate needs method = backward");
  const std::size_t n = model.num_groups();
  req.validate(n, ds.size());
  const EntropyProxy proxy(model, ds, req.level, req.instance_index);
  const auto excluded = detail::sorted_unique(req.excluded);
  const auto locked = detail::sorted_unique(req.locked_in);

  SelectionTrace trace = detail::start_trace(req, model.schema());
  std::vector<std::size_t> current;
  for (std::size_t g = 0; g < n; ++g)
    if (!detail::contains(excluded, g)) current.push_back(g);
  trace.start_set = current;
  trace.start_entropy_nats = proxy(current);

  const std::size_t target = std::max(req.k, locked.size());
  std::vector<std::size_t> trial;
  while (current.size() > target) {
    std::optional<std::size_t> best_group;
    double best = 0.0;
    for (auto g : current) {
      if (detail::contains(locked, g)) continue;
      trial.clear();
      for (auto h : current)
        if (h != g) trial.push_back(h);
      const double e = proxy(trial);
      if (!best_group || e < best - kTieTolerance) {
        best = e;
        best_group = g;
      }
    }
    current.erase(std::find(current.begin(), current.end(), *best_group));
    trace.steps.push_back({*best_group, best, current.size()});
  }
  return trace;
}

/// Uniformly random k-subset containing `locked_in` and avoiding `excluded`.
/// The additions are recorded in a random order, so every prefix is itself a
/// uniform random subset.
inline SelectionTrace random_select(const ConceptSchema& schema, std::size_t n_rows, const SelectionRequest& req) {
  if (req.method != Method::random) fail(ErrorCode::invalid_input, "random_select needs method = random");
  const std::size_t n = schema.num_groups();
  req.validate(n, n_rows);
  const auto excluded = detail::sorted_unique(req.excluded);
  SelectionTrace trace = detail::start_trace(req, schema);
  trace.start_set = detail::sorted_unique(req.locked_in);
  std::vector<std::size_t> pool;
  for (std::size_t g = 0; g < n; ++g)
    if (!detail::contains(trace.start_set, g) && !detail::contains(excluded, g)) pool.push_back(g);
  Rng rng = make_rng(req.seed, 0x72616e64ULL);
  const auto picks = sample_without_replacement(pool, req.k - trace.start_set.size(), rng);
  std::size_t size = trace.start_set.size();
  for (auto g : picks) trace.steps.push_back({g, std::nullopt, ++size});
  return trace;
}

inline SelectionTrace select(const OutputModel& model, const ConceptDataset& ds, const SelectionRequest& req) {
  switch (req.method) {
    case Method::forward: return forward_select(model, ds, req);
    case Method::backward: return backward_eliminate(model, ds, req);
    case Method::random: return random_select(model.schema(), ds.size(), req);
  }
  fail(ErrorCode::internal, "unreachable selection method");
}

/// Request that runs the method over every reachable size: forward up to
/// n - |excluded|, backward down to |locked_in|, random over all.
inline SelectionRequest full_trace_request(SelectionRequest req, std::size_t n_groups) {
  const auto excluded = detail::sorted_unique(req.excluded);
  const auto locked = detail::sorted_unique(req.locked_in);
  req.k = req.method == Method::backward ? locked.size() : n_groups - excluded.size();
  return req;
}

// ---------------------------------------------------------------------------
// Exhaustive search (small n only; test oracle)

inline constexpr std::size_t kMaxExhaustiveGroups = 12;

enum class Objective { plugin_mi, proxy_entropy };

struct SubsetScore {
  std::vector<std::size_t> subset;
  double score = 0.0;  // MI in bits, or mean entropy in nats
};

/// Best size-k subset over all C(n, k) candidates: maximal plug-in MI, or
/// minimal proxy entropy (needs `model`). Ties go to the lexicographically
/// smallest subset.
inline SubsetScore exhaustive_best_subset(const ConceptDataset& ds, std::size_t k, Objective objective,
                                          const OutputModel* model = nullptr) {
  const std::size_t n = ds.schema.num_groups();
  if (n > kMaxExhaustiveGroups)
    fail(ErrorCode::invalid_input,
         "exhaustive search refused for " + std::to_string(n) + " groups (limit " +
             std::to_string(kMaxExhaustiveGroups) + "); use forward or backward selection");
  require(k <= n, "k exceeds the number of groups");
  std::optional<EntropyProxy> proxy;
  if (objective == Objective::proxy_entropy) {
    require(model != nullptr, "proxy-entropy objective needs an output model");
    proxy.emplace(*model, ds, Level::dataset);
  }
  const bool maximise = objective == Objective::plugin_mi;

  std::vector<std::size_t> comb = iota_indices(k);
  SubsetScore best;
  bool have = false;
  while (true) {
    const double s = maximise ? plugin_mi(ds, comb).mi_bits : (*proxy)(comb);
    if (!have || (maximise ? s > best.score + kTieTolerance : s < best.score - kTieTolerance)) {
      best = {comb, s};
      have = true;
    }
    // Next combination in lexicographic order.
    std::size_t i = k;
    while (i > 0 && comb[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++comb[i - 1];
    for (std::size_t j = i; j < k; ++j) comb[j] = comb[j - 1] + 1;
  }
  return best;
}

}  // namespace scom
