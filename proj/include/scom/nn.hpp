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

// Dense feed-forward classifier: ReLU hidden layers, softmax output,
// mean cross-entropy loss, plain SGD. Double precision throughout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scom/error.hpp"
#include "scom/random.hpp"

namespace scom {

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }

  bool all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// One affine layer; weights are out_dim x in_dim.
struct DenseParams {
  Matrix weights;
  std::vector<double> bias;

  std::size_t in_dim() const { return weights.cols; }
  std::size_t out_dim() const { return weights.rows; }

  friend bool operator==(const DenseParams&, const DenseParams&) = default;
};

enum class Activation { relu };

struct NetworkParams {
  std::vector<DenseParams> layers;
  Activation hidden_activation = Activation::relu;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
  std::size_t num_classes() const { return layers.empty() ? 0 : layers.back().out_dim(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.values.size() + l.bias.size();
    return n;
  }

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

/// Output-model training settings. The optimizer hyperparameters are ours;
/// only the [100, 100] hidden layout is fixed by the method.
struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t batch_size = 32;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden_dims{100, 100};
  // Draw a fresh mask for every row instead of one per batch.
  bool per_row_masks = false;
  // Validation-loss early stopping; 0 disables it.
  std::size_t patience = 0;
  // Optional prior over the mask size k = 1..n (unnormalised); empty = uniform.
  std::vector<double> k_weights;

  void validate() const {
    require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be > 0");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(epochs >= 1, "epochs must be >= 1");
    for (auto h : hidden_dims) require(h >= 1, "hidden layer width must be >= 1");
    for (double w : k_weights) require(w >= 0.0 && std::isfinite(w), "k_weights must be finite and >= 0");
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// ---------------------------------------------------------------------------
// Construction

/// Glorot-uniform weights in [-a, a], a = sqrt(6 / (in + out)); zero biases.
inline NetworkParams make_network(std::size_t input_dim, std::span<const std::size_t> hidden_dims,
                                  std::size_t num_classes, Rng& rng) {
  require(input_dim >= 1 && num_classes >= 1, "network dimensions must be positive");
  NetworkParams net;
  std::size_t in = input_dim;
  auto add_layer = [&](std::size_t out) {
    DenseParams layer{Matrix(out, in), std::vector<double>(out, 0.0)};
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& w : layer.weights.values) w = uniform_real(rng, -a, a);
    net.layers.push_back(std::move(layer));
    in = out;
  };
  for (auto h : hidden_dims) add_layer(h);
  add_layer(num_classes);
  return net;
}

/// Same shapes as `like`, every entry zero.
inline NetworkParams zeros_like(const NetworkParams& like) {
  NetworkParams z;
  z.hidden_activation = like.hidden_activation;
  for (const auto& l : like.layers)
    z.layers.push_back({Matrix(l.out_dim(), l.in_dim()), std::vector<double>(l.out_dim(), 0.0)});
  return z;
}

inline bool same_shape(const NetworkParams& a, const NetworkParams& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (a.layers[i].weights.rows != b.layers[i].weights.rows ||
        a.layers[i].weights.cols != b.layers[i].weights.cols ||
        a.layers[i].bias.size() != b.layers[i].bias.size())
      return false;
  }
  return true;
}

inline void validate_network(const NetworkParams& net) {
  require(!net.layers.empty(), "network has no layers");
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    require(l.weights.values.size() == l.weights.rows * l.weights.cols,
            "layer " + std::to_string(i) + ": weight storage does not match its shape");
    require(l.bias.size() == l.out_dim(), "layer " + std::to_string(i) + ": bias length mismatch");
    require(l.weights.all_finite(), "layer " + std::to_string(i) + ": non-finite weight");
    require(std::all_of(l.bias.begin(), l.bias.end(), [](double v) { return std::isfinite(v); }),
            "layer " + std::to_string(i) + ": non-finite bias");
    if (i + 1 < net.layers.size())
      require(l.out_dim() == net.layers[i + 1].in_dim(),
              "layer " + std::to_string(i) + " output does not feed layer " + std::to_string(i + 1));
  }
}

// ---------------------------------------------------------------------------
// Kernels

namespace detail {

inline void dense_forward(const DenseParams& layer, const Matrix& in, Matrix& out) {
  const std::size_t n_in = layer.in_dim();
  const std::size_t n_out = layer.out_dim();
  out = Matrix(in.rows, n_out);
  for (std::size_t b = 0; b < in.rows; ++b) {
    const double* x = in.values.data() + b * n_in;
    double* z = out.values.data() + b * n_out;
    for (std::size_t o = 0; o < n_out; ++o) {
      const double* w = layer.weights.values.data() + o * n_in;
      double acc = layer.bias[o];
      for (std::size_t i = 0; i < n_in; ++i) acc += w[i] * x[i];
      z[o] = acc;
    }
  }
}

inline void relu_inplace(Matrix& m) {
  for (double& v : m.values) v = v > 0.0 ? v : 0.0;
}

// Row-wise softmax in place; returns nothing, rows sum to 1.
inline void softmax_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    auto row = m.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
}

inline void check_batch(const NetworkParams& net, const Matrix& batch) {
  require(!net.layers.empty(), "network has no layers");
  if (batch.cols != net.input_dim())
    fail(ErrorCode::invalid_input,
         "batch has " + std::to_string(batch.cols) + " columns, network expects " +
             std::to_string(net.input_dim()));
  require(batch.values.size() == batch.rows * batch.cols, "batch storage does not match its shape");
  require(batch.all_finite(), "batch contains non-finite values");
}

}  // namespace detail

/// Class probabilities, one row per input row. Read-only on `net`.
inline Matrix forward(const NetworkParams& net, const Matrix& batch) {
  detail::check_batch(net, batch);
  Matrix act = batch;
  Matrix next;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    detail::dense_forward(net.layers[l], act, next);
    if (l + 1 < net.layers.size()) detail::relu_inplace(next);
    std::swap(act, next);
  }
  detail::softmax_rows(act);
  return act;
}

struct LossAndGrad {
  double loss = 0.0;
  NetworkParams grads;
};

/// Mean softmax cross-entropy over the batch and its gradient.
inline LossAndGrad loss_and_grad(const NetworkParams& net, const Matrix& batch,
                                 std::span<const std::size_t> labels) {
  detail::check_batch(net, batch);
  require(batch.rows >= 1, "empty batch");
  require(labels.size() == batch.rows, "labels length does not match batch rows");
  const std::size_t classes = net.num_classes();
  for (std::size_t b = 0; b < labels.size(); ++b)
    if (labels[b] >= classes)
      fail(ErrorCode::invalid_input,
           "label " + std::to_string(labels[b]) + " at batch row " + std::to_string(b) +
               " is outside [0, " + std::to_string(classes) + ")");

  const std::size_t n_layers = net.layers.size();
  // acts[l] is the input to layer l (post-ReLU for l > 0).
  std::vector<Matrix> acts(n_layers);
  acts[0] = batch;
  Matrix logits;
  for (std::size_t l = 0; l < n_layers; ++l) {
    Matrix z;
    detail::dense_forward(net.layers[l], acts[l], z);
    if (l + 1 < n_layers) {
      detail::relu_inplace(z);
      acts[l + 1] = std::move(z);
    } else {
      logits = std::move(z);
    }
  }

  const double inv_b = 1.0 / static_cast<double>(batch.rows);
  Matrix delta(batch.rows, classes);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.rows; ++b) {
    auto z = logits.row(b);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double log_norm = mx + std::log(sum);
    loss += log_norm - z[labels[b]];
    auto d = delta.row(b);
    for (std::size_t c = 0; c < classes; ++c) d[c] = std::exp(z[c] - log_norm) * inv_b;
    d[labels[b]] -= inv_b;
  }
  loss *= inv_b;

  LossAndGrad out{loss, zeros_like(net)};
  for (std::size_t l = n_layers; l-- > 0;) {
    const DenseParams& layer = net.layers[l];
    DenseParams& g = out.grads.layers[l];
    const Matrix& x = acts[l];
    const std::size_t n_in = layer.in_dim();
    const std::size_t n_out = layer.out_dim();
    const bool propagate = l > 0;
    Matrix dx = propagate ? Matrix(batch.rows, n_in) : Matrix();
    for (std::size_t b = 0; b < batch.rows; ++b) {
      const double* xb = x.values.data() + b * n_in;
      const double* db = delta.values.data() + b * n_out;
      double* dxb = propagate ? dx.values.data() + b * n_in : nullptr;
      for (std::size_t o = 0; o < n_out; ++o) {
        const double d = db[o];
        if (d == 0.0) continue;
        g.bias[o] += d;
        double* gw = g.weights.values.data() + o * n_in;
        const double* w = layer.weights.values.data() + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) gw[i] += d * xb[i];
        if (propagate)
          for (std::size_t i = 0; i < n_in; ++i) dxb[i] += d * w[i];
      }
    }
    if (propagate) {
      // ReLU derivative: pass-through where the activation was positive.
      for (std::size_t k = 0; k < dx.values.size(); ++k)
        if (x.values[k] <= 0.0) dx.values[k] = 0.0;
      delta = std::move(dx);
    }
  }
  return out;
}

/// params -= learning_rate * grads, in place.
inline void apply_sgd(NetworkParams& params, const NetworkParams& grads, double learning_rate) {
  require(same_shape(params, grads), "gradient shape does not match parameters");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& p = params.layers[l];
    const auto& g = grads.layers[l];
    for (std::size_t k = 0; k < p.weights.values.size(); ++k)
      p.weights.values[k] -= learning_rate * g.weights.values[k];
    for (std::size_t k = 0; k < p.bias.size(); ++k) p.bias[k] -= learning_rate * g.bias[k];
  }
}

inline NetworkParams sgd_step(NetworkParams params, const NetworkParams& grads, double learning_rate) {
  apply_sgd(params, grads, learning_rate);
  return params;
}

}  // namespace scom
