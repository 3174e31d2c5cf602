// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlms/nn/network.hpp"

namespace mlms::model {

enum class Task { multilabel, multiclass };

std::string to_string(Task task);
Task task_from_string(const std::string& name);

/// Inputs with one row per example along axis 0, plus targets: a (N, L) 0/1
/// matrix for multilabel or N class indices for multiclass.
struct Examples {
  Task task = Task::multilabel;
  nn::Tensor<float> inputs;
  nn::Tensor<float> multi_hot;
  std::vector<std::uint32_t> classes;
  std::size_t n_outputs = 0;

  std::size_t size() const { return inputs.rank() == 0 ? 0 : inputs.dim(0); }
  void validate(const std::string& name) const;
};

struct TrainConfig {
  double lr = 0.01;
  double plateau_factor = 0.2;  // lr multiplier after `patience` epochs without improvement
  std::size_t patience = 3;
  double min_lr = 1e-5;  // stop once lr falls below this
  std::size_t max_epochs = 100;
  std::size_t batch_size = 64;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  bool restore_best = true;  // return the best-validation parameters, not the last

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::ordered_json& j);
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;  // mean over the epoch's batches, train mode
  double valid_loss = 0.0;  // eval mode
  double lr = 0.0;          // rate used during this epoch
};

struct History {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_valid_loss = 0.0;

  /// Columns epoch,train_loss,valid_loss,lr.
  std::string to_csv() const;
};

/// Called after every epoch with the current (not best) parameters; returning
/// true stops training.
using EpochCallback = std::function<bool(const EpochRecord&, nn::Network<float>&)>;

/// Minibatch SGD with Nesterov momentum and plateau decay. Random streams
/// "shuffle" and "dropout" derive from config.seed. A trailing batch of one
/// example is merged into the previous batch, since batch norm needs two rows.
/// Throws NumericalError naming the epoch on a non-finite loss.
History fit(nn::Network<float>& net, const Examples& train, const Examples& valid,
            const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Mean eval-mode loss (BCE or cross entropy) over all examples.
double evaluate_loss(nn::Network<float>& net, const Examples& data, std::size_t batch_size = 256);

/// Eval-mode network outputs (logits) for all examples, in order.
nn::Tensor<float> predict_logits(nn::Network<float>& net, const nn::Tensor<float>& inputs,
                                 std::size_t batch_size = 256);

/// Rows idx of `source` stacked into a new tensor.
nn::Tensor<float> gather_rows(const nn::Tensor<float>& source, std::span<const std::size_t> idx);

}  // namespace mlms::model
