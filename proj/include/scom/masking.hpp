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

// Group masks and mask-augmented concept vectors.
//
// An augmented vector is [c * m_expanded ; m]: every dimension of a masked-out
// group is zeroed, and the group-level mask (length n) is appended so the
// network can tell a masked zero from a genuine zero.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scom/error.hpp"
#include "scom/random.hpp"
#include "scom/schema.hpp"

namespace scom {

class Mask {
 public:
  Mask() = default;
  explicit Mask(std::size_t n, bool value = false) : bits_(n, value ? 1 : 0) {}

  static Mask full(std::size_t n) { return Mask(n, true); }
  static Mask empty(std::size_t n) { return Mask(n, false); }

  std::size_t size() const { return bits_.size(); }
  bool test(std::size_t i) const { return bits_.at(i) != 0; }
  void set(std::size_t i, bool v = true) { bits_.at(i) = v ? 1 : 0; }

  std::size_t popcount() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }

  /// Selected group indices in ascending order.
  std::vector<std::size_t> selected() const {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i]) s.push_back(i);
    return s;
  }

  std::span<const std::uint8_t> bits() const { return bits_; }

  std::string to_string() const {
    std::string s;
    for (auto b : bits_) s.push_back(b ? '1' : '0');
    return s;
  }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

inline Mask mask_from_set(std::span<const std::size_t> selected, std::size_t n) {
  Mask m(n);
  for (auto i : selected) {
    if (i >= n)
      fail(ErrorCode::invalid_input,
           "group index " + std::to_string(i) + " out of range for " + std::to_string(n) + " groups",
           std::to_string(i));
    m.set(i);
  }
  return m;
}

inline Mask mask_from_bits(std::span<const int> bits) {
  Mask m(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != 0 && bits[i] != 1)
      fail(ErrorCode::invalid_input, "mask entries must be 0 or 1", std::to_string(i));
    m.set(i, bits[i] == 1);
  }
  return m;
}

/// Two-step sampler: k ~ U{1..n} (or the `k_weights` prior over 1..n), then
/// a uniformly random k-subset via partial Fisher-Yates.
inline Mask sample_mask(std::size_t n, Rng& rng, std::span<const double> k_weights = {}) {
  require(n >= 1, "sample_mask needs at least one group");
  std::size_t k = 0;
  if (k_weights.empty()) {
    k = 1 + static_cast<std::size_t>(uniform_index(rng, n));
  } else {
    require(k_weights.size() == n, "k_weights must have one entry per mask size 1..n");
    double total = 0.0;
    for (double w : k_weights) total += w;
    require(total > 0.0, "k_weights must not all be zero");
    const double u = uniform_unit(rng) * total;
    double acc = 0.0;
    k = n;
    for (std::size_t i = 0; i < n; ++i) {
      acc += k_weights[i];
      if (u < acc && k_weights[i] > 0.0) {
        k = i + 1;
        break;
      }
    }
  }
  const auto chosen = sample_without_replacement(iota_indices(n), k, rng);
  return mask_from_set(chosen, n);
}

/// Writes the augmented vector (length D + n) for one row into `out`.
inline void augment_into(std::span<const double> concepts, const Mask& mask,
                         std::span<const std::size_t> offsets, std::span<double> out) {
  const std::size_t n = mask.size();
  const std::size_t d = offsets.back();
  for (std::size_t g = 0; g < n; ++g) {
    const bool on = mask.test(g);
    for (std::size_t c = offsets[g]; c < offsets[g + 1]; ++c) out[c] = on ? concepts[c] : 0.0;
    out[d + g] = on ? 1.0 : 0.0;
  }
}

inline std::vector<double> augment(std::span<const double> concepts, const Mask& mask,
                                   const ConceptSchema& schema) {
  const std::size_t d = schema.total_dims();
  const std::size_t n = schema.num_groups();
  if (concepts.size() != d)
    fail(ErrorCode::invalid_input,
         "concept vector has length " + std::to_string(concepts.size()) + ", schema expects " + std::to_string(d));
  if (mask.size() != n)
    fail(ErrorCode::invalid_input,
         "mask has length " + std::to_string(mask.size()) + ", schema has " + std::to_string(n) + " groups");
  std::vector<double> out(d + n);
  const auto off = schema.offsets();
  augment_into(concepts, mask, off, out);
  return out;
}

}  // namespace scom
