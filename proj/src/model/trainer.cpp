// SPDX-License-Identifier: Apache-2.0
#include "mlms/model/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>

#include "mlms/error.hpp"
#include "mlms/nn/optimizer.hpp"

namespace mlms::model {

std::string to_string(Task task) { return task == Task::multilabel ? "multilabel" : "multiclass"; }

Task task_from_string(const std::string& name) {
  if (name == "multilabel") return Task::multilabel;
  if (name == "multiclass") return Task::multiclass;
  throw DataError("unknown task '" + name + "'");
}

void Examples::validate(const std::string& name) const {
  if (size() == 0) throw UserError(name + " split is empty");
  if (n_outputs == 0) throw UserError(name + ": zero outputs");
  if (task == Task::multilabel) {
    if (multi_hot.shape() != nn::Shape{size(), n_outputs}) {
      throw UserError(name + ": targets " + nn::shape_string(multi_hot.shape()) + " for " +
                      std::to_string(size()) + " examples and " + std::to_string(n_outputs) + " tags");
    }
  } else {
    if (classes.size() != size()) throw UserError(name + ": class count does not match examples");
    for (std::uint32_t c : classes) {
      if (c >= n_outputs) throw UserError(name + ": class index out of range");
    }
  }
}

void TrainConfig::validate() const {
  if (!(lr >= 0.0)) throw UserError("train config: lr must be >= 0");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) throw UserError("train config: plateau_factor must be in (0, 1)");
  if (batch_size < 2) throw UserError("train config: batch_size must be >= 2 (batch norm)");
  if (max_epochs < 1) throw UserError("train config: max_epochs must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw UserError("train config: momentum must be in [0, 1)");
  if (!(min_lr >= 0.0)) throw UserError("train config: min_lr must be >= 0");
}

nlohmann::ordered_json TrainConfig::to_json() const {
  return {{"lr", lr},
          {"plateau_factor", plateau_factor},
          {"patience", patience},
          {"min_lr", min_lr},
          {"max_epochs", max_epochs},
          {"batch_size", batch_size},
          {"momentum", momentum},
          {"seed", seed},
          {"restore_best", restore_best}};
}

TrainConfig TrainConfig::from_json(const nlohmann::ordered_json& j) {
  TrainConfig c;
  try {
    c.lr = j.at("lr").get<double>();
    c.plateau_factor = j.at("plateau_factor").get<double>();
    c.patience = j.at("patience").get<std::size_t>();
    c.min_lr = j.at("min_lr").get<double>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.momentum = j.at("momentum").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.restore_best = j.at("restore_best").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("train config: ") + e.what());
  }
  return c;
}

std::string History::to_csv() const {
  std::string out = "epoch,train_loss,valid_loss,lr\n";
  char line[128];
  for (const EpochRecord& e : epochs) {
    std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,%.9g\n", e.epoch, e.train_loss, e.valid_loss, e.lr);
    out += line;
  }
  return out;
}

nn::Tensor<float> gather_rows(const nn::Tensor<float>& source, std::span<const std::size_t> idx) {
  nn::Shape shape = source.shape();
  const std::size_t row = source.size() / shape[0];
  shape[0] = idx.size();
  nn::Tensor<float> out(shape);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::memcpy(out.data() + i * row, source.data() + idx[i] * row, row * sizeof(float));
  }
  return out;
}

namespace {

nn::LossResult<float> batch_loss(const Examples& data, const nn::Tensor<float>& logits,
                                 std::span<const std::size_t> idx) {
  if (data.task == Task::multilabel) return nn::bce_with_logits(logits, gather_rows(data.multi_hot, idx));
  std::vector<std::uint32_t> cls(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) cls[i] = data.classes[idx[i]];
  return nn::softmax_cross_entropy(logits, cls);
}

// Batch boundaries over n examples; a trailing single example joins the previous batch.
std::vector<std::pair<std::size_t, std::size_t>> batches(std::size_t n, std::size_t batch) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch) out.emplace_back(start, std::min(n, start + batch));
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out[out.size() - 2].second = n;
    out.pop_back();
  }
  return out;
}

}  // namespace

double evaluate_loss(nn::Network<float>& net, const Examples& data, std::size_t batch_size) {
  data.validate("evaluation");
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  double total = 0.0;
  for (const auto& [lo, hi] : batches(data.size(), batch_size)) {
    const std::span<const std::size_t> part(idx.data() + lo, hi - lo);
    const nn::Tensor<float> logits = net.forward(gather_rows(data.inputs, part), nn::Mode::eval);
    total += batch_loss(data, logits, part).loss * static_cast<double>(hi - lo);
  }
  return total / static_cast<double>(data.size());
}

nn::Tensor<float> predict_logits(nn::Network<float>& net, const nn::Tensor<float>& inputs,
                                 std::size_t batch_size) {
  const std::size_t n = inputs.dim(0);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  nn::Tensor<float> out;
  std::size_t width = 0;
  for (std::size_t lo = 0; lo < n; lo += batch_size) {
    const std::size_t hi = std::min(n, lo + batch_size);
    const nn::Tensor<float> part =
        net.forward(gather_rows(inputs, std::span<const std::size_t>(idx.data() + lo, hi - lo)), nn::Mode::eval);
    if (lo == 0) {
      width = part.size() / part.dim(0);
      out = nn::Tensor<float>({n, width});
    }
    std::memcpy(out.data() + lo * width, part.data(), part.size() * sizeof(float));
  }
  return out;
}

History fit(nn::Network<float>& net, const Examples& train, const Examples& valid,
            const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  train.validate("train");
  valid.validate("valid");
  if (train.size() < 2) throw UserError("train split needs at least 2 examples (batch norm)");

  Rng shuffle = Rng::stream(config.seed, "shuffle");
  Rng dropout = Rng::stream(config.seed, "dropout");
  net.set_rng(&dropout);

  History history;
  nn::Network<float> best;
  bool have_best = false;
  double lr = config.lr;
  std::size_t stale = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    for (const auto& [lo, hi] : batches(order.size(), config.batch_size)) {
      const std::span<const std::size_t> part(order.data() + lo, hi - lo);
      const nn::Tensor<float> logits = net.forward(gather_rows(train.inputs, part), nn::Mode::train);
      const nn::LossResult<float> loss = batch_loss(train, logits, part);
      if (!std::isfinite(loss.loss)) {
        throw NumericalError("non-finite training loss in epoch " + std::to_string(epoch));
      }
      net.backward(loss.grad);
      nn::sgd_nesterov_step<float>(net.parameters(), lr, config.momentum);
      total += loss.loss * static_cast<double>(hi - lo);
    }
    EpochRecord rec{epoch, total / static_cast<double>(train.size()), evaluate_loss(net, valid), lr};
    if (!std::isfinite(rec.valid_loss)) {
      throw NumericalError("non-finite validation loss in epoch " + std::to_string(epoch));
    }
    history.epochs.push_back(rec);

    if (!have_best || rec.valid_loss < history.best_valid_loss) {
      history.best_valid_loss = rec.valid_loss;
      history.best_epoch = epoch;
      if (config.restore_best) best = net;
      have_best = true;
      stale = 0;
    } else if (++stale >= config.patience) {
      lr *= config.plateau_factor;
      stale = 0;
    }
    if (on_epoch && on_epoch(rec, net)) break;
    if (lr < config.min_lr) break;
  }
  if (config.restore_best && have_best) net = best;
  net.set_rng(nullptr);
  return history;
}

}  // namespace mlms::model
