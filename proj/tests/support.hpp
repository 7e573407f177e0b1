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

// Shared test helpers: temp directories, cached trained models, and
// reference computations written independently of the library.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <unistd.h>

#include "scom/scom.hpp"

namespace scom::test {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("scom_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline SyntheticSpec spec_for(Generator g, std::size_t n, std::uint64_t seed, double noise = 0.0,
                              std::size_t groups = 0) {
  SyntheticSpec s;
  s.generator = g;
  s.n_instances = n;
  s.seed = seed;
  s.noise = noise;
  s.n_groups = groups;
  return s;
}

/// A dataset and a model trained on it.
struct Trained {
  ConceptDataset ds;
  std::unique_ptr<OutputModel> model;
};

/// Trains once per (spec, config) within a test binary.
inline const Trained& trained(const SyntheticSpec& spec, const TrainConfig& config = {}) {
  static std::map<std::string, std::unique_ptr<Trained>> cache;
  const std::string key = std::string(to_string(spec.generator)) + "/" + std::to_string(spec.n_instances) + "/" +
                          std::to_string(spec.seed) + "/" + std::to_string(spec.noise) + "/" +
                          std::to_string(spec.n_groups) + "/" + train_config_to_json(config).dump();
  auto& slot = cache[key];
  if (!slot) {
    slot = std::make_unique<Trained>();
    slot->ds = generate_synthetic(spec);
    slot->model = std::make_unique<OutputModel>(train_output_model(slot->ds, config), slot->ds.schema);
  }
  return *slot;
}

// ---------------------------------------------------------------------------
// Reference computations

/// Softmax cross-entropy of a network, evaluated by a plain re-implementation
/// (no shared code with the library's forward pass).
inline double reference_loss(const NetworkParams& net, const Matrix& batch, const std::vector<std::size_t>& labels) {
  double total = 0.0;
  for (std::size_t b = 0; b < batch.rows; ++b) {
    std::vector<double> a(batch.row(b).begin(), batch.row(b).end());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const auto& layer = net.layers[l];
      std::vector<double> z(layer.out_dim());
      for (std::size_t o = 0; o < z.size(); ++o) {
        long double s = layer.bias[o];
        for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(layer.weights(o, i)) * a[i];
        z[o] = static_cast<double>(s);
      }
      if (l + 1 < net.layers.size())
        for (double& v : z) v = v > 0.0 ? v : 0.0;
      a = std::move(z);
    }
    const double mx = *std::max_element(a.begin(), a.end());
    long double sum = 0.0;
    for (double v : a) sum += std::exp(static_cast<long double>(v - mx));
    total += static_cast<double>(std::log(sum)) + mx - a[labels[b]];
  }
  return total / static_cast<double>(batch.rows);
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Central finite differences (step h) against the analytic gradient, every
/// parameter. Relative error uses max(|a|, |n|) with a 1e-6 floor so that
/// near-zero entries compare absolutely.
inline GradCheck check_gradients(const NetworkParams& net, const Matrix& batch,
                                 const std::vector<std::size_t>& labels, double h = 1e-5) {
  const auto analytic = loss_and_grad(net, batch, labels).grads;
  GradCheck out;
  NetworkParams probe = net;
  auto compare = [&](double& param, double a) {
    const double saved = param;
    param = saved + h;
    const double up = reference_loss(probe, batch, labels);
    param = saved - h;
    const double down = reference_loss(probe, batch, labels);
    param = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double rel = std::abs(a - numeric) / std::max({1e-6, std::abs(a), std::abs(numeric)});
    out.max_rel_error = std::max(out.max_rel_error, rel);
    ++out.checked;
  };
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    for (std::size_t k = 0; k < net.layers[l].weights.values.size(); ++k)
      compare(probe.layers[l].weights.values[k], analytic.layers[l].weights.values[k]);
    for (std::size_t k = 0; k < net.layers[l].bias.size(); ++k)
      compare(probe.layers[l].bias[k], analytic.layers[l].bias[k]);
  }
  return out;
}

/// A random network with dims <= 10 and a random batch, from `seed`.
struct GradCase {
  NetworkParams net;
  Matrix batch;
  std::vector<std::size_t> labels;
};

inline GradCase random_grad_case(std::uint64_t seed) {
  Rng rng = make_rng(seed, 99);
  const std::size_t in = 2 + uniform_index(rng, 9);
  const std::size_t classes = 2 + uniform_index(rng, 4);
  std::vector<std::size_t> hidden(1 + uniform_index(rng, 2));
  for (auto& h : hidden) h = 2 + uniform_index(rng, 9);
  GradCase c;
  c.net = make_network(in, hidden, classes, rng);
  for (auto& layer : c.net.layers)
    for (double& b : layer.bias) b = uniform_real(rng, -0.5, 0.5);
  c.batch = Matrix(1 + uniform_index(rng, 6), in);
  for (double& v : c.batch.values) v = uniform_real(rng, -2.0, 2.0);
  for (std::size_t b = 0; b < c.batch.rows; ++b) c.labels.push_back(uniform_index(rng, classes));
  return c;
}

/// Exact distribution of the two-step mask sampler for n groups: enumerates
/// k in 1..n and every k-subset. Keyed by the mask's bit string.
inline std::map<std::string, double> enumerate_mask_distribution(std::size_t n) {
  std::map<std::string, double> p;
  for (std::size_t bits = 0; bits < (std::size_t{1} << n); ++bits) {
    std::size_t k = 0;
    std::string key;
    for (std::size_t i = 0; i < n; ++i) {
      const bool on = (bits >> i) & 1U;
      k += on;
      key += on ? '1' : '0';
    }
    if (k == 0) continue;
    double subsets = 1.0;  // C(n, k)
    for (std::size_t i = 0; i < k; ++i) subsets = subsets * static_cast<double>(n - i) / static_cast<double>(i + 1);
    p[key] = (1.0 / static_cast<double>(n)) * (1.0 / subsets);
  }
  return p;
}

/// I(Y; X) in bits from explicit joint probabilities p[x][y].
inline double mi_from_joint(const std::vector<std::vector<double>>& p) {
  std::vector<double> px(p.size(), 0.0), py(p.empty() ? 0 : p[0].size(), 0.0);
  for (std::size_t x = 0; x < p.size(); ++x)
    for (std::size_t y = 0; y < p[x].size(); ++y) {
      px[x] += p[x][y];
      py[y] += p[x][y];
    }
  double mi = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x)
    for (std::size_t y = 0; y < p[x].size(); ++y)
      if (p[x][y] > 0.0) mi += p[x][y] * std::log2(p[x][y] / (px[x] * py[y]));
  return mi;
}

/// Reference plug-in MI: builds the joint table of (subset values, label)
/// with std::map and calls mi_from_joint.
inline double reference_plugin_mi(const ConceptDataset& ds, const std::vector<std::size_t>& subset) {
  std::map<std::vector<int>, std::vector<double>> counts;
  const auto off = ds.schema.offsets();
  for (std::size_t r = 0; r < ds.size(); ++r) {
    std::vector<int> key;
    for (auto g : subset)
      for (std::size_t c = off[g]; c < off[g + 1]; ++c) key.push_back(static_cast<int>(ds.concepts(r, c)));
    auto& row = counts[key];
    row.resize(ds.schema.num_classes, 0.0);
    row[ds.labels[r]] += 1.0;
  }
  std::vector<std::vector<double>> joint;
  for (auto& [k, row] : counts) {
    for (double& v : row) v /= static_cast<double>(ds.size());
    joint.push_back(row);
  }
  return mi_from_joint(joint);
}

/// Mean KL(true posterior || predicted) under the full mask over `rows`,
/// for datasets whose label is a deterministic function of the observed
/// concepts (noise 0): the true posterior is one-hot on the label.
inline double full_mask_kl_deterministic(const OutputModel& model, const ConceptDataset& ds,
                                         const std::vector<std::size_t>& rows) {
  const Mask full = Mask::full(model.num_groups());
  double total = 0.0;
  for (auto r : rows) total += -std::log(model.predict(ds.concepts.row(r), full).probs[ds.labels[r]]);
  return total / static_cast<double>(rows.size());
}

}  // namespace scom::test
