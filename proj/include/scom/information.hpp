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

// Plug-in (empirical-frequency) entropy and mutual information between the
// label and a set of binary concept groups. This is the reference estimator
// the model-based selection is checked against; it only handles discrete
// concepts.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scom/dataset.hpp"
#include "scom/error.hpp"
#include "scom/random.hpp"

namespace scom {

enum class Estimator { plugin_discrete };

inline std::string_view to_string(Estimator) { return "plugin_discrete"; }

struct MIEstimate {
  std::vector<std::size_t> subset;
  double mi_bits = 0.0;
  Estimator estimator = Estimator::plugin_discrete;
};

// Joint support limit: product of group arities.
inline constexpr std::size_t kMaxJointBits = 20;

/// Entropy in bits of the empirical distribution given by `counts`.
inline double entropy_bits_from_counts(std::vector<std::size_t> counts) {
  // Sorted so the sum does not depend on hash-map iteration order.
  std::sort(counts.begin(), counts.end());
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  if (total == 0.0) return 0.0;
  double acc = 0.0;
  for (auto c : counts)
    if (c > 0) acc += static_cast<double>(c) * std::log2(static_cast<double>(c));
  return std::max(0.0, std::log2(total) - acc / total);
}

namespace detail {

inline std::vector<std::size_t> checked_subset(const ConceptDataset& ds, std::span<const std::size_t> subset) {
  const std::size_t n = ds.schema.num_groups();
  std::vector<std::size_t> s(subset.begin(), subset.end());
  std::sort(s.begin(), s.end());
  if (std::adjacent_find(s.begin(), s.end()) != s.end())
    fail(ErrorCode::invalid_input, "subset lists a group twice");
  std::size_t bits = 0;
  for (auto g : s) {
    if (g >= n) fail(ErrorCode::invalid_input, "group index " + std::to_string(g) + " out of range");
    const auto& group = ds.schema.groups[g];
    if (group.kind != ConceptKind::binary)
      fail(ErrorCode::unsupported_estimator,
           "plug-in MI needs discrete concepts; group '" + group.name + "' is " + std::string(to_string(group.kind)) +
               " (use the model-based entropy proxy for continuous concepts)",
           group.name);
    bits += group.dims;
  }
  if (bits > kMaxJointBits)
    fail(ErrorCode::invalid_input,
         "joint support of 2^" + std::to_string(bits) + " cells exceeds the 2^" + std::to_string(kMaxJointBits) +
             " limit");
  return s;
}

/// Packs the subset's binary values of row `r` into one integer.
inline std::uint64_t joint_key(const ConceptDataset& ds, std::span<const std::size_t> subset,
                               std::span<const std::size_t> offsets, std::size_t r) {
  std::uint64_t key = 0;
  for (auto g : subset)
    for (std::size_t c = offsets[g]; c < offsets[g + 1]; ++c) {
      const double v = ds.concepts(r, c);
      if (v != 0.0 && v != 1.0)
        fail(ErrorCode::unsupported_estimator,
             "row " + std::to_string(r) + ": binary group '" + ds.schema.groups[g].name + "' holds non-0/1 value",
             ds.schema.groups[g].name);
      key = (key << 1) | (v == 1.0 ? 1u : 0u);
    }
  return key;
}

}  // namespace detail

/// I(Y; C_subset) in bits from the empirical joint over `rows` (all rows
/// when empty).
inline MIEstimate plugin_mi(const ConceptDataset& ds, std::span<const std::size_t> subset,
                            std::span<const std::size_t> rows = {}) {
  const auto s = detail::checked_subset(ds, subset);
  const auto offsets = ds.schema.offsets();
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all = iota_indices(ds.size());
    rows = all;
  }
  const std::uint64_t classes = ds.schema.num_classes;
  std::unordered_map<std::uint64_t, std::size_t> joint, concept_marginal;
  std::vector<std::size_t> label_marginal(classes, 0);
  for (auto r : rows) {
    const auto key = detail::joint_key(ds, s, offsets, r);
    ++joint[key * classes + ds.labels[r]];
    ++concept_marginal[key];
    ++label_marginal[ds.labels[r]];
  }
  auto values = [](const auto& m) {
    std::vector<std::size_t> v;
    v.reserve(m.size());
    for (const auto& [k, c] : m) v.push_back(c);
    return v;
  };
  const double hy = entropy_bits_from_counts(label_marginal);
  const double hc = entropy_bits_from_counts(values(concept_marginal));
  const double hyc = entropy_bits_from_counts(values(joint));
  return {s, std::max(0.0, hy + hc - hyc), Estimator::plugin_discrete};
}

/// Empirical H(Y) in bits.
inline double label_entropy_bits(const ConceptDataset& ds, std::span<const std::size_t> rows = {}) {
  std::vector<std::size_t> counts(ds.schema.num_classes, 0);
  if (rows.empty())
    for (auto y : ds.labels) ++counts[y];
  else
    for (auto r : rows) ++counts[ds.labels[r]];
  return entropy_bits_from_counts(counts);
}

/// Empirical H(C_subset) in bits.
inline double concept_entropy_bits(const ConceptDataset& ds, std::span<const std::size_t> subset,
                                   std::span<const std::size_t> rows = {}) {
  const auto s = detail::checked_subset(ds, subset);
  const auto offsets = ds.schema.offsets();
  std::unordered_map<std::uint64_t, std::size_t> counts;
  if (rows.empty())
    for (std::size_t r = 0; r < ds.size(); ++r) ++counts[detail::joint_key(ds, s, offsets, r)];
  else
    for (auto r : rows) ++counts[detail::joint_key(ds, s, offsets, r)];
  std::vector<std::size_t> v;
  for (const auto& [k, c] : counts) v.push_back(c);
  return entropy_bits_from_counts(v);
}

}  // namespace scom
