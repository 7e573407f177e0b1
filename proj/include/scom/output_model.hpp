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

// The output model: a classifier over mask-augmented concept vectors, trained
// with a freshly sampled group mask per batch so a single set of weights
// serves every concept subset.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "scom/dataset.hpp"
#include "scom/error.hpp"
#include "scom/hash.hpp"
#include "scom/masking.hpp"
#include "scom/nn.hpp"
#include "scom/random.hpp"
#include "scom/schema.hpp"

namespace scom {

inline constexpr int kCheckpointFormatVersion = 1;

/// -sum p ln p over the positive entries, clamped to [0, ln(size)].
inline double entropy_nats(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  const double cap = std::log(static_cast<double>(probs.size()));
  return std::clamp(h, 0.0, cap);
}

/// Index of the largest entry; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

struct Prediction {
  std::vector<double> probs;
  double entropy_nats = 0.0;

  std::size_t predicted_class() const { return argmax(probs); }
  double entropy_bits() const { return entropy_nats / std::log(2.0); }
};

// ---------------------------------------------------------------------------
// Checkpoint

inline json train_config_to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
          {"epochs", c.epochs},               {"seed", c.seed},
          {"hidden_dims", c.hidden_dims},     {"per_row_masks", c.per_row_masks},
          {"patience", c.patience},           {"k_weights", c.k_weights}};
}

/// Reads the fields present in `j` over the defaults in `base`.
inline TrainConfig train_config_from_json(const json& j, TrainConfig base = {}) {
  try {
    base.learning_rate = j.value("learning_rate", base.learning_rate);
    base.batch_size = j.value("batch_size", base.batch_size);
    base.epochs = j.value("epochs", base.epochs);
    base.seed = j.value("seed", base.seed);
    base.hidden_dims = j.value("hidden_dims", base.hidden_dims);
    base.per_row_masks = j.value("per_row_masks", base.per_row_masks);
    base.patience = j.value("patience", base.patience);
    base.k_weights = j.value("k_weights", base.k_weights);
  } catch (const json::exception& e) {
    fail(ErrorCode::invalid_input, std::string("malformed training config: ") + e.what());
  }
  base.validate();
  return base;
}

struct OutputModelCheckpoint {
  int format_version = kCheckpointFormatVersion;
  std::string schema_fingerprint;
  std::size_t num_groups = 0;
  std::size_t concept_dims = 0;
  TrainConfig train_config;
  NetworkParams params;

  json to_json() const {
    json layers = json::array();
    for (const auto& l : params.layers)
      layers.push_back({{"in_dim", l.in_dim()},
                        {"out_dim", l.out_dim()},
                        {"weights", l.weights.values},
                        {"bias", l.bias}});
    return {{"format_version", format_version},
            {"schema_fingerprint", schema_fingerprint},
            {"num_groups", num_groups},
            {"concept_dims", concept_dims},
            {"num_classes", params.num_classes()},
            {"train_config", train_config_to_json(train_config)},
            {"network", {{"hidden_activation", "relu"}, {"output", "softmax"}, {"layers", std::move(layers)}}}};
  }

  /// Hash of the serialized checkpoint.
  std::string fingerprint() const { return scom::fingerprint(to_json().dump()); }

  static OutputModelCheckpoint from_json(const json& j) {
    OutputModelCheckpoint c;
    try {
      c.format_version = j.at("format_version").get<int>();
      if (c.format_version != kCheckpointFormatVersion)
        fail(ErrorCode::incompatible_checkpoint,
             "unsupported checkpoint format_version " + std::to_string(c.format_version));
      c.schema_fingerprint = j.at("schema_fingerprint").get<std::string>();
      c.num_groups = j.at("num_groups").get<std::size_t>();
      c.concept_dims = j.at("concept_dims").get<std::size_t>();
      c.train_config = train_config_from_json(j.at("train_config"));
      const auto& net = j.at("network");
      if (net.value("hidden_activation", std::string("relu")) != "relu")
        fail(ErrorCode::incompatible_checkpoint, "unsupported hidden activation");
      for (const auto& l : net.at("layers")) {
        DenseParams layer;
        const auto in = l.at("in_dim").get<std::size_t>();
        const auto out = l.at("out_dim").get<std::size_t>();
        layer.weights = Matrix(out, in);
        layer.weights.values = l.at("weights").get<std::vector<double>>();
        layer.bias = l.at("bias").get<std::vector<double>>();
        c.params.layers.push_back(std::move(layer));
      }
      if (j.contains("num_classes") && j.at("num_classes").get<std::size_t>() != c.params.num_classes())
        fail(ErrorCode::incompatible_checkpoint, "num_classes does not match the output layer");
    } catch (const json::exception& e) {
      fail(ErrorCode::incompatible_checkpoint, std::string("malformed checkpoint: ") + e.what());
    }
    try {
      validate_network(c.params);
    } catch (const Error& e) {
      fail(ErrorCode::incompatible_checkpoint, std::string("corrupt checkpoint: ") + e.what());
    }
    if (c.params.input_dim() != c.concept_dims + c.num_groups)
      fail(ErrorCode::incompatible_checkpoint, "network input width is not concept_dims + num_groups");
    return c;
  }
};

inline void save_checkpoint(const OutputModelCheckpoint& ckpt, const std::filesystem::path& path) {
  write_file(path, ckpt.to_json().dump() + "\n");
}

inline OutputModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    fail(ErrorCode::io, "checkpoint not found: " + path.string(), path.string());
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::incompatible_checkpoint, "checkpoint " + path.string() + " is not valid JSON", path.string());
  }
  return OutputModelCheckpoint::from_json(j);
}

// ---------------------------------------------------------------------------
// Masks for batched evaluation

/// One mask for every row, or one mask per dataset row.
class MaskAssignment {
 public:
  MaskAssignment(Mask shared) : masks_(std::move(shared)) {}  // NOLINT(implicit)
  MaskAssignment(std::vector<Mask> per_row) : masks_(std::move(per_row)) {}  // NOLINT(implicit)

  const Mask& for_row(std::size_t r) const {
    if (const auto* m = std::get_if<Mask>(&masks_)) return *m;
    const auto& v = std::get<std::vector<Mask>>(masks_);
    if (r >= v.size()) fail(ErrorCode::invalid_input, "no mask for row " + std::to_string(r));
    return v[r];
  }

 private:
  std::variant<Mask, std::vector<Mask>> masks_;
};

// ---------------------------------------------------------------------------
// Model

struct TrainingLog {
  std::vector<double> epoch_loss;  // mean training loss under the sampled masks
  std::vector<double> val_loss;    // only with early stopping
  std::size_t best_epoch = 0;
};

/// Checkpoint + schema, validated against each other. Immutable; every
/// member is safe to call from concurrent readers.
class OutputModel {
 public:
  OutputModel(OutputModelCheckpoint ckpt, ConceptSchema schema)
      : ckpt_(std::move(ckpt)), schema_(std::move(schema)), offsets_(schema_.offsets()) {
    if (ckpt_.schema_fingerprint != schema_.fingerprint())
      fail(ErrorCode::incompatible_checkpoint,
           "checkpoint was trained for schema " + ckpt_.schema_fingerprint + ", got " + schema_.fingerprint());
    if (ckpt_.num_groups != schema_.num_groups() || ckpt_.concept_dims != schema_.total_dims() ||
        ckpt_.params.num_classes() != schema_.num_classes)
      fail(ErrorCode::incompatible_checkpoint, "checkpoint dimensions do not match the schema");
  }

  const OutputModelCheckpoint& checkpoint() const { return ckpt_; }
  const ConceptSchema& schema() const { return schema_; }
  std::size_t num_groups() const { return schema_.num_groups(); }
  std::size_t num_classes() const { return schema_.num_classes; }

  Prediction predict(std::span<const double> concepts, const Mask& mask) const {
    const auto x = augment(concepts, mask, schema_);
    Matrix batch(1, x.size());
    batch.values = x;
    Matrix p = forward(ckpt_.params, batch);
    Prediction out;
    out.probs = std::move(p.values);
    out.entropy_nats = entropy_nats(out.probs);
    return out;
  }

  /// Class probabilities for `rows` of `concepts`, one output row each.
  Matrix probabilities(const Matrix& concepts, std::span<const std::size_t> rows,
                       const MaskAssignment& masks) const {
    require(concepts.cols == schema_.total_dims(), "concept matrix width does not match the schema");
    const std::size_t width = schema_.total_dims() + schema_.num_groups();
    Matrix out(rows.size(), schema_.num_classes);
    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < rows.size(); start += kChunk) {
      const std::size_t end = std::min(rows.size(), start + kChunk);
      Matrix batch(end - start, width);
      for (std::size_t i = start; i < end; ++i) {
        const Mask& m = masks.for_row(rows[i]);
        require(m.size() == schema_.num_groups(), "mask length does not match the schema");
        augment_into(concepts.row(rows[i]), m, offsets_, batch.row(i - start));
      }
      const Matrix p = forward(ckpt_.params, batch);
      std::copy(p.values.begin(), p.values.end(), out.values.begin() + start * out.cols);
    }
    return out;
  }

  /// Mean predictive entropy (nats) over `rows` under `masks`.
  double mean_entropy(const Matrix& concepts, std::span<const std::size_t> rows,
                      const MaskAssignment& masks) const {
    if (rows.empty()) return 0.0;
    const Matrix p = probabilities(concepts, rows, masks);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.rows; ++i) sum += entropy_nats(p.row(i));
    return sum / static_cast<double>(p.rows);
  }

 private:
  OutputModelCheckpoint ckpt_;
  ConceptSchema schema_;
  std::vector<std::size_t> offsets_;
};

inline OutputModelCheckpoint train_output_model(const ConceptDataset& ds, const TrainConfig& config,
                                                TrainingLog* log = nullptr) {
  config.validate();
  const auto& schema = ds.schema;
  const std::size_t n = schema.num_groups();
  const std::size_t d = schema.total_dims();
  const auto offsets = schema.offsets();
  auto train_rows = ds.rows_in(Split::train);
  if (train_rows.empty()) fail(ErrorCode::invalid_input, "training split is empty");
  if (!config.k_weights.empty())
    require(config.k_weights.size() == n, "k_weights must have one entry per mask size 1..n");

  Rng rng = make_rng(config.seed, 0x747261696eULL);
  OutputModelCheckpoint ckpt;
  ckpt.schema_fingerprint = schema.fingerprint();
  ckpt.num_groups = n;
  ckpt.concept_dims = d;
  ckpt.train_config = config;
  ckpt.params = make_network(d + n, config.hidden_dims, schema.num_classes, rng);

  // Early stopping scores a fixed set of validation masks.
  std::vector<std::size_t> val_rows;
  std::vector<Mask> val_masks;
  Matrix val_batch;
  std::vector<std::size_t> val_labels;
  if (config.patience > 0) {
    val_rows = ds.rows_in(Split::val);
    if (val_rows.empty()) fail(ErrorCode::invalid_input, "early stopping needs a validation split");
    Rng val_rng = make_rng(config.seed, 0x76616cULL);
    val_batch = Matrix(val_rows.size(), d + n);
    for (std::size_t i = 0; i < val_rows.size(); ++i) {
      const Mask m = sample_mask(n, val_rng, config.k_weights);
      augment_into(ds.concepts.row(val_rows[i]), m, offsets, val_batch.row(i));
      val_labels.push_back(ds.labels[val_rows[i]]);
    }
  }
  NetworkParams best = ckpt.params;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;

  std::vector<std::size_t> labels;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(std::span<std::size_t>(train_rows), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < train_rows.size(); start += config.batch_size) {
      const std::size_t end = std::min(train_rows.size(), start + config.batch_size);
      Matrix batch(end - start, d + n);
      labels.assign(end - start, 0);
      Mask mask = sample_mask(n, rng, config.k_weights);
      for (std::size_t i = start; i < end; ++i) {
        if (config.per_row_masks && i > start) mask = sample_mask(n, rng, config.k_weights);
        augment_into(ds.concepts.row(train_rows[i]), mask, offsets, batch.row(i - start));
        labels[i - start] = ds.labels[train_rows[i]];
      }
      auto lg = loss_and_grad(ckpt.params, batch, labels);
      apply_sgd(ckpt.params, lg.grads, config.learning_rate);
      loss_sum += lg.loss * static_cast<double>(end - start);
    }
    if (log) log->epoch_loss.push_back(loss_sum / static_cast<double>(train_rows.size()));

    if (config.patience > 0) {
      const double val = loss_and_grad(ckpt.params, val_batch, val_labels).loss;
      if (log) log->val_loss.push_back(val);
      if (val < best_val) {
        best_val = val;
        best = ckpt.params;
        best_epoch = epoch;
      } else if (epoch - best_epoch >= config.patience) {
        break;
      }
    }
  }
  if (config.patience > 0) ckpt.params = std::move(best);
  if (log) log->best_epoch = config.patience > 0 ? best_epoch : config.epochs - 1;
  return ckpt;
}

struct EvalResult {
  double accuracy = 0.0;
  double mean_entropy_nats = 0.0;
  std::size_t rows = 0;
  std::size_t correct = 0;
};

/// Accuracy (argmax, ties to the lowest class) and mean entropy over `rows`.
inline EvalResult evaluate_rows(const OutputModel& model, const ConceptDataset& ds,
                                std::span<const std::size_t> rows, const MaskAssignment& masks) {
  if (rows.empty()) fail(ErrorCode::invalid_input, "evaluation rows are empty");
  const Matrix p = model.probabilities(ds.concepts, rows, masks);
  EvalResult r;
  r.rows = rows.size();
  double h = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (argmax(p.row(i)) == ds.labels[rows[i]]) ++r.correct;
    h += entropy_nats(p.row(i));
  }
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.rows);
  r.mean_entropy_nats = h / static_cast<double>(r.rows);
  return r;
}

inline EvalResult evaluate(const OutputModel& model, const ConceptDataset& ds, const MaskAssignment& masks,
                           Split split) {
  const auto rows = ds.rows_in(split);
  if (rows.empty()) fail(ErrorCode::invalid_input, std::string("split '") + std::string(to_string(split)) + "' is empty");
  return evaluate_rows(model, ds, rows, masks);
}

}  // namespace scom
