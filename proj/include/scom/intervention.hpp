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

// Oracle interventions: replace the model's concept inputs for some selected
// groups with oracle values, and sweep accuracy against the number of
// interventions for several concept-set sizes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scom/dataset.hpp"
#include "scom/error.hpp"
#include "scom/masking.hpp"
#include "scom/oracle.hpp"
#include "scom/output_model.hpp"
#include "scom/random.hpp"
#include "scom/selection.hpp"

namespace scom {

enum class InterventionOrder { random, user };

inline std::string_view to_string(InterventionOrder o) { return o == InterventionOrder::random ? "random" : "user"; }

struct InterventionPlan {
  InterventionOrder order = InterventionOrder::random;
  std::vector<std::size_t> indices;  // user order
  std::uint64_t seed = 0;            // random order
  OracleKind oracle = OracleKind::class_level;
  std::size_t max_interventions = 0;  // 0: up to the set size
};

/// Maps oracle values (ground-truth space) to model inputs. Logit-kind
/// dimensions map 0 to the smallest and 1 to the largest training logit,
/// linearly in between; other kinds pass through unchanged.
class OracleInputMap {
 public:
  OracleInputMap() = default;

  static OracleInputMap from_training(const ConceptDataset& ds) {
    OracleInputMap map;
    const auto& schema = ds.schema;
    const std::size_t d = schema.total_dims();
    map.is_logit_.assign(d, false);
    map.lo_.assign(d, 0.0);
    map.hi_.assign(d, 1.0);
    const auto off = schema.offsets();
    auto rows = ds.rows_in(Split::train);
    if (rows.empty()) rows = iota_indices(ds.size());
    for (std::size_t g = 0; g < schema.num_groups(); ++g) {
      if (schema.groups[g].kind != ConceptKind::logit) continue;
      for (std::size_t c = off[g]; c < off[g + 1]; ++c) {
        map.is_logit_[c] = true;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (auto r : rows) {
          lo = std::min(lo, ds.concepts(r, c));
          hi = std::max(hi, ds.concepts(r, c));
        }
        if (rows.empty()) lo = hi = 0.0;
        map.lo_[c] = lo;
        map.hi_[c] = hi;
      }
    }
    return map;
  }

  double to_input(std::size_t dim, double v) const {
    if (dim >= is_logit_.size() || !is_logit_[dim]) return v;
    return lo_[dim] + v * (hi_[dim] - lo_[dim]);
  }

  std::vector<double> to_input(std::span<const double> oracle_row) const {
    std::vector<double> out(oracle_row.size());
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = to_input(c, oracle_row[c]);
    return out;
  }

 private:
  std::vector<bool> is_logit_;
  std::vector<double> lo_, hi_;
};

/// Copy of `concepts` with every dimension of `groups_to_fix` taken from
/// `oracle_values` (model input space). Each fixed group must be selected
/// in `mask`.
inline std::vector<double> apply_interventions(std::span<const double> concepts, const Mask& mask,
                                               std::span<const double> oracle_values,
                                               std::span<const std::size_t> groups_to_fix,
                                               const ConceptSchema& schema) {
  const std::size_t d = schema.total_dims();
  require(concepts.size() == d, "concept vector length does not match the schema");
  require(oracle_values.size() == d, "oracle vector length does not match the schema");
  require(mask.size() == schema.num_groups(), "mask length does not match the schema");
  const auto off = schema.offsets();
  std::vector<double> out(concepts.begin(), concepts.end());
  for (auto g : groups_to_fix) {
    if (g >= schema.num_groups()) fail(ErrorCode::invalid_input, "group index " + std::to_string(g) + " out of range");
    if (!mask.test(g))
      fail(ErrorCode::invalid_input,
           "cannot intervene on '" + schema.groups[g].name + "': it is not in the selected concept set",
           schema.groups[g].name);
    for (std::size_t c = off[g]; c < off[g + 1]; ++c) out[c] = oracle_values[c];
  }
  return out;
}

struct SweepRow {
  std::size_t k = 0;
  std::size_t interventions = 0;
  double accuracy = 0.0;
  double stderr_ = 0.0;

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::size_t seeds = 0;
  OracleKind oracle = OracleKind::class_level;
  InterventionOrder order = InterventionOrder::random;
  std::uint64_t base_seed = 0;

  const SweepRow* find(std::size_t k, std::size_t i) const {
    for (const auto& r : rows)
      if (r.k == k && r.interventions == i) return &r;
    return nullptr;
  }

  std::string to_csv() const {
    std::ostringstream out;
    out << "k,interventions,accuracy,stderr\n";
    for (const auto& r : rows)
      out << r.k << ',' << r.interventions << ',' << csv::format_double(r.accuracy) << ','
          << csv::format_double(r.stderr_) << '\n';
    return out.str();
  }

  json to_json() const {
    json rows_json = json::array();
    for (const auto& r : rows)
      rows_json.push_back(
          {{"k", r.k}, {"interventions", r.interventions}, {"accuracy", r.accuracy}, {"stderr", r.stderr_}});
    return {{"rows", std::move(rows_json)},
            {"seeds", seeds},
            {"seed", base_seed},
            {"oracle", std::string(to_string(oracle))},
            {"order", std::string(to_string(order))}};
  }

  friend bool operator==(const SweepReport&, const SweepReport&) = default;
};

/// Mean and standard error of the mean; 0 error for fewer than two values.
inline std::pair<double, double> mean_and_stderr(std::span<const double> v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2 || std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); }))
    return {v.size() < 2 ? mean : v.front(), 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()))};
}

/// Test-split accuracy after i = 0..max oracle interventions on the size-k
/// set read from `trace`, for every k in `ks`. Random orders are drawn per
/// row, without replacement, independently for each seed. Accuracy is the
/// pooled fraction correct over seeds; stderr is over per-seed accuracies.
inline SweepReport intervention_sweep(const OutputModel& model, const ConceptDataset& ds, const SelectionTrace& trace,
                                      std::span<const std::size_t> ks, const InterventionPlan& plan,
                                      std::size_t seeds) {
  require(seeds >= 1, "intervention sweep needs at least one seed");
  for (auto k : ks)
    if (!trace.covers(k))
      fail(ErrorCode::invalid_input, "size " + std::to_string(k) + " cannot be read from the selection trace");
  const OracleTable table = build_oracle(ds, plan.oracle);
  const OracleInputMap input_map = OracleInputMap::from_training(ds);
  const auto& schema = model.schema();
  const auto off = schema.offsets();
  const auto test_rows = ds.rows_in(Split::test);
  if (test_rows.empty()) fail(ErrorCode::invalid_input, "test split is empty");
  const std::size_t t = test_rows.size();

  Matrix oracle_inputs(t, schema.total_dims());
  for (std::size_t i = 0; i < t; ++i) {
    const auto mapped = input_map.to_input(table.for_row(ds, test_rows[i]));
    std::copy(mapped.begin(), mapped.end(), oracle_inputs.row(i).begin());
  }
  std::vector<std::size_t> labels(t);
  for (std::size_t i = 0; i < t; ++i) labels[i] = ds.labels[test_rows[i]];
  const auto local_rows = iota_indices(t);

  SweepReport report;
  report.seeds = seeds;
  report.oracle = plan.oracle;
  report.order = plan.order;
  report.base_seed = plan.seed;
  for (auto k : ks) {
    const auto set = trace.set_at(k);
    const Mask mask = mask_from_set(set, schema.num_groups());
    std::size_t max_i = plan.max_interventions == 0 ? k : std::min(plan.max_interventions, k);
    if (plan.order == InterventionOrder::user) {
      for (auto g : plan.indices)
        if (!detail::contains(set, g))
          fail(ErrorCode::invalid_input, "user intervention group " + std::to_string(g) + " is not in the size-" +
                                             std::to_string(k) + " set");
      max_i = std::min(max_i, plan.indices.size());
    }
    std::vector<std::vector<double>> per_seed(max_i + 1);
    std::vector<std::size_t> correct_total(max_i + 1, 0);
    for (std::size_t s = 0; s < seeds; ++s) {
      Rng rng = make_rng(mix_seed(plan.seed, s), k);
      std::vector<std::vector<std::size_t>> orders(t);
      for (auto& o : orders)
        o = plan.order == InterventionOrder::user
                ? std::vector<std::size_t>(plan.indices.begin(), plan.indices.begin() + static_cast<std::ptrdiff_t>(max_i))
                : sample_without_replacement(set, max_i, rng);
      Matrix x(t, schema.total_dims());
      for (std::size_t i = 0; i < t; ++i)
        std::copy(ds.concepts.row(test_rows[i]).begin(), ds.concepts.row(test_rows[i]).end(), x.row(i).begin());
      for (std::size_t i = 0; i <= max_i; ++i) {
        if (i > 0)
          for (std::size_t r = 0; r < t; ++r) {
            const std::size_t g = orders[r][i - 1];
            for (std::size_t c = off[g]; c < off[g + 1]; ++c) x(r, c) = oracle_inputs(r, c);
          }
        const Matrix p = model.probabilities(x, local_rows, mask);
        std::size_t correct = 0;
        for (std::size_t r = 0; r < t; ++r)
          if (argmax(p.row(r)) == labels[r]) ++correct;
        correct_total[i] += correct;
        per_seed[i].push_back(static_cast<double>(correct) / static_cast<double>(t));
      }
    }
    for (std::size_t i = 0; i <= max_i; ++i) {
      SweepRow row;
      row.k = k;
      row.interventions = i;
      row.accuracy = static_cast<double>(correct_total[i]) / static_cast<double>(seeds * t);
      row.stderr_ = mean_and_stderr(per_seed[i]).second;
      report.rows.push_back(row);
    }
  }
  return report;
}

}  // namespace scom
