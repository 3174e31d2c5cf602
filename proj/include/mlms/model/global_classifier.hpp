// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "mlms/model/aggregator.hpp"
#include "mlms/model/trainer.hpp"

namespace mlms::model {

struct GlobalModelSpec {
  std::size_t input_dim = 0;
  std::size_t hidden_units = 0;
  std::size_t n_hidden = 2;
  Task task = Task::multilabel;
  std::size_t n_outputs = 0;
  double dropout = 0.5;

  /// 512 for inputs of at most 1024 dims, 1024 above.
  static std::size_t default_hidden(std::size_t input_dim) { return input_dim <= 1024 ? 512 : 1024; }

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static GlobalModelSpec from_json(const nlohmann::ordered_json& j);
  bool operator==(const GlobalModelSpec&) const = default;
};

struct GlobalModel {
  GlobalModelSpec spec;
  nn::Network<float> net;  // emits logits
  Provenance provenance;   // layout of the features it was trained on
};

/// n_hidden x (dense -> BN -> ReLU -> dropout), then dense(n_outputs).
GlobalModel build_global(const GlobalModelSpec& spec, const Provenance& provenance, Rng* init);

/// Features stacked row-wise with one shared provenance.
struct FeatureDataset {
  Provenance provenance;
  Examples examples;
};

/// Throws DataError if the features disagree on provenance or dimension.
FeatureDataset make_feature_dataset(std::span<const ClipFeature> features, Task task,
                                    const std::vector<std::vector<float>>& multi_hot,
                                    const std::vector<std::uint32_t>& classes, std::size_t n_outputs);

struct GlobalTrainResult {
  GlobalModel model;
  History history;
};

/// hidden_units = 0 picks GlobalModelSpec::default_hidden. Weights come from
/// the "init" stream of config.seed.
GlobalTrainResult train_global(const FeatureDataset& train, const FeatureDataset& valid,
                               const TrainConfig& config, std::size_t hidden_units = 0,
                               const EpochCallback& on_epoch = {});

/// Sigmoid (multilabel) or softmax (multiclass) scores, one row per feature
/// vector, computed in double from the float logits. Throws DataError when
/// `provenance` differs from the model's.
nn::Tensor<double> predict_global(GlobalModel& model, const nn::Tensor<float>& features,
                                  const Provenance& provenance);
std::vector<double> predict_global(GlobalModel& model, const ClipFeature& feature);

}  // namespace mlms::model
