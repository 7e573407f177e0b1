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

// Synthetic concept datasets whose information structure is known exactly.
//
// All generators emit binary, one-dimensional groups named C1..Cn. The
// ground-truth concepts follow the generator's construction; the observed
// concepts are the ground truth with every entry flipped independently with
// probability `noise` (an imperfect concept predictor). At noise 0 the two
// matrices are identical. The identity column is the class label.
//
//   duplicated         C1 ~ Bern(1/2), C2..Cn are copies of C1, Y = C1
//   xor_distractor     C1, C2 ~ Bern(1/2), Y = C1 xor C2, C3..Cn independent
//   informative_zero   C1 ~ Bern(1/2), Y = C1, C2..Cn independent
//   correlated_blocks  b latent bits; each block holds noisy copies of its
//                      bit plus one exact representative (the block's last
//                      group); Y = sum_j bit_j * 2^j, so 2^b classes

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "scom/dataset.hpp"
#include "scom/error.hpp"
#include "scom/random.hpp"

namespace scom {

enum class Generator { duplicated, xor_distractor, informative_zero, correlated_blocks };

inline std::string_view to_string(Generator g) {
  switch (g) {
    case Generator::duplicated: return "duplicated";
    case Generator::xor_distractor: return "xor_distractor";
    case Generator::informative_zero: return "informative_zero";
    case Generator::correlated_blocks: return "correlated_blocks";
  }
  return "duplicated";
}

inline Generator generator_from_string(std::string_view s) {
  if (s == "duplicated") return Generator::duplicated;
  if (s == "xor_distractor" || s == "xor") return Generator::xor_distractor;
  if (s == "informative_zero") return Generator::informative_zero;
  if (s == "correlated_blocks") return Generator::correlated_blocks;
  fail(ErrorCode::invalid_input, "unknown generator '" + std::string(s) + "'");
}

// Flip rate of the non-representative members of a correlated block. Keeps
// every within-block pairwise correlation at (1 - 2p)^2 >= 0.96.
inline constexpr double kBlockFlipRate = 0.01;

struct SyntheticSpec {
  Generator generator = Generator::duplicated;
  std::size_t n_instances = 1000;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_groups = 0;  // 0: generator default (2, 3, 2, 8)
  std::size_t n_blocks = 0;  // correlated_blocks only; 0: default 3

  std::size_t groups_or_default() const {
    if (n_groups != 0) return n_groups;
    switch (generator) {
      case Generator::duplicated: return 2;
      case Generator::xor_distractor: return 3;
      case Generator::informative_zero: return 2;
      case Generator::correlated_blocks: return 8;
    }
    return 2;
  }

  std::size_t blocks_or_default() const { return n_blocks != 0 ? n_blocks : 3; }

  void validate() const {
    require(n_instances >= 1, "n_instances must be >= 1");
    require(noise >= 0.0 && noise < 1.0, "noise must lie in [0, 1)");
    const std::size_t n = groups_or_default();
    switch (generator) {
      case Generator::duplicated: require(n >= 2, "duplicated needs at least 2 groups"); break;
      case Generator::xor_distractor: require(n >= 3, "xor_distractor needs at least 3 groups"); break;
      case Generator::informative_zero: require(n >= 1, "informative_zero needs at least 1 group"); break;
      case Generator::correlated_blocks:
        require(blocks_or_default() >= 1 && blocks_or_default() <= 10, "n_blocks must lie in [1, 10]");
        require(n >= blocks_or_default(), "correlated_blocks needs n_groups >= n_blocks");
        break;
    }
  }
};

/// Block index of each group for correlated_blocks: contiguous blocks whose
/// sizes differ by at most one, larger blocks first.
inline std::vector<std::size_t> block_assignment(std::size_t n_groups, std::size_t n_blocks) {
  std::vector<std::size_t> block(n_groups);
  const std::size_t base = n_groups / n_blocks;
  const std::size_t extra = n_groups % n_blocks;
  std::size_t g = 0;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const std::size_t size = base + (b < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) block[g++] = b;
  }
  return block;
}

/// The exact representative of each block (its last group).
inline std::vector<std::size_t> block_representatives(std::size_t n_groups, std::size_t n_blocks) {
  const auto block = block_assignment(n_groups, n_blocks);
  std::vector<std::size_t> reps(n_blocks);
  for (std::size_t g = 0; g < n_groups; ++g) reps[block[g]] = g;
  return reps;
}

inline ConceptDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.groups_or_default();
  const std::size_t rows = spec.n_instances;

  ConceptDataset ds;
  for (std::size_t g = 0; g < n; ++g)
    ds.schema.groups.push_back({"C" + std::to_string(g + 1), 1, ConceptKind::binary});
  ds.schema.num_classes = 2;

  Rng truth_rng = make_rng(spec.seed, 1);
  Rng noise_rng = make_rng(spec.seed, 2);
  auto bit = [&] { return bernoulli(truth_rng, 0.5) ? 1.0 : 0.0; };

  Matrix truth(rows, n);
  ds.labels.resize(rows);
  switch (spec.generator) {
    case Generator::duplicated:
      for (std::size_t r = 0; r < rows; ++r) {
        const double c1 = bit();
        for (std::size_t g = 0; g < n; ++g) truth(r, g) = c1;
        ds.labels[r] = static_cast<std::size_t>(c1);
      }
      break;
    case Generator::xor_distractor:
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t g = 0; g < n; ++g) truth(r, g) = bit();
        ds.labels[r] = static_cast<std::size_t>(truth(r, 0)) ^ static_cast<std::size_t>(truth(r, 1));
      }
      break;
    case Generator::informative_zero:
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t g = 0; g < n; ++g) truth(r, g) = bit();
        ds.labels[r] = static_cast<std::size_t>(truth(r, 0));
      }
      break;
    case Generator::correlated_blocks: {
      const std::size_t b = spec.blocks_or_default();
      const auto block = block_assignment(n, b);
      const auto reps = block_representatives(n, b);
      ds.schema.num_classes = std::size_t{1} << b;
      std::vector<double> latent(b);
      for (std::size_t r = 0; r < rows; ++r) {
        std::size_t y = 0;
        for (std::size_t j = 0; j < b; ++j) {
          latent[j] = bit();
          if (latent[j] != 0.0) y |= std::size_t{1} << j;
        }
        for (std::size_t g = 0; g < n; ++g) {
          const double z = latent[block[g]];
          const bool flip = g != reps[block[g]] && bernoulli(truth_rng, kBlockFlipRate);
          truth(r, g) = flip ? 1.0 - z : z;
        }
        ds.labels[r] = y;
      }
      break;
    }
  }

  ds.concepts = truth;
  if (spec.noise > 0.0)
    for (double& v : ds.concepts.values)
      if (bernoulli(noise_rng, spec.noise)) v = 1.0 - v;
  ds.true_concepts = std::move(truth);

  std::vector<std::string> identity(rows);
  for (std::size_t r = 0; r < rows; ++r) identity[r] = std::to_string(ds.labels[r]);
  ds.identity = std::move(identity);
  ds.split = default_split(rows, spec.seed);
  ds.validate();
  return ds;
}

}  // namespace scom
