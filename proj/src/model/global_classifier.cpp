// SPDX-License-Identifier: Apache-2.0
#include "mlms/model/global_classifier.hpp"

#include <algorithm>

#include "mlms/error.hpp"

namespace mlms::model {

void GlobalModelSpec::validate() const {
  if (input_dim == 0 || hidden_units == 0 || n_outputs == 0) {
    throw UserError("global model spec: dimensions must be positive");
  }
  if (n_hidden == 0) throw UserError("global model spec: need at least one hidden layer");
  if (task == Task::multiclass && n_outputs < 2) throw UserError("global model spec: multiclass needs >= 2 classes");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UserError("global model spec: dropout must be in [0, 1)");
}

nlohmann::ordered_json GlobalModelSpec::to_json() const {
  return {{"input_dim", input_dim}, {"hidden_units", hidden_units}, {"n_hidden", n_hidden},
          {"task", to_string(task)}, {"n_outputs", n_outputs},      {"dropout", dropout}};
}

GlobalModelSpec GlobalModelSpec::from_json(const nlohmann::ordered_json& j) {
  GlobalModelSpec s;
  try {
    s.input_dim = j.at("input_dim").get<std::size_t>();
    s.hidden_units = j.at("hidden_units").get<std::size_t>();
    s.n_hidden = j.at("n_hidden").get<std::size_t>();
    s.task = task_from_string(j.at("task").get<std::string>());
    s.n_outputs = j.at("n_outputs").get<std::size_t>();
    s.dropout = j.at("dropout").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("global model spec: ") + e.what());
  }
  s.validate();
  return s;
}

GlobalModel build_global(const GlobalModelSpec& spec, const Provenance& provenance, Rng* init) {
  spec.validate();
  check_provenance(provenance, spec.input_dim);
  using nn::LayerConfig;
  GlobalModel m;
  m.spec = spec;
  m.provenance = provenance;
  std::size_t width = spec.input_dim;
  for (std::size_t h = 0; h < spec.n_hidden; ++h) {
    m.net.add(LayerConfig::dense(width, spec.hidden_units), init);
    m.net.add(LayerConfig::batchnorm(spec.hidden_units), init);
    m.net.add(LayerConfig::simple(nn::LayerKind::relu), init);
    m.net.add(LayerConfig::dropout(spec.dropout), init);
    width = spec.hidden_units;
  }
  m.net.add(LayerConfig::dense(width, spec.n_outputs), init);
  return m;
}

FeatureDataset make_feature_dataset(std::span<const ClipFeature> features, Task task,
                                    const std::vector<std::vector<float>>& multi_hot,
                                    const std::vector<std::uint32_t>& classes, std::size_t n_outputs) {
  FeatureDataset ds;
  ds.examples.task = task;
  ds.examples.n_outputs = n_outputs;
  if (features.empty()) return ds;
  ds.provenance = features[0].provenance;
  const std::size_t dim = features[0].values.size();
  check_provenance(ds.provenance, dim);
  for (const ClipFeature& f : features) {
    if (f.provenance != ds.provenance) {
      throw DataError("feature provenance differs within the dataset: " + describe_provenance(f.provenance) +
                      " vs " + describe_provenance(ds.provenance));
    }
  }
  const std::size_t n = features.size();
  ds.examples.inputs = nn::Tensor<float>({n, dim});
  for (std::size_t i = 0; i < n; ++i) std::copy(features[i].values.begin(), features[i].values.end(), ds.examples.inputs.data() + i * dim);
  if (task == Task::multilabel) {
    if (multi_hot.size() != n) throw UserError("feature dataset: label count does not match features");
    ds.examples.multi_hot = nn::Tensor<float>({n, n_outputs});
    for (std::size_t i = 0; i < n; ++i) {
      if (multi_hot[i].size() != n_outputs) throw DataError("feature dataset: label width mismatch");
      std::copy(multi_hot[i].begin(), multi_hot[i].end(), ds.examples.multi_hot.data() + i * n_outputs);
    }
  } else {
    if (classes.size() != n) throw UserError("feature dataset: label count does not match features");
    ds.examples.classes = classes;
  }
  return ds;
}

GlobalTrainResult train_global(const FeatureDataset& train, const FeatureDataset& valid,
                               const TrainConfig& config, std::size_t hidden_units,
                               const EpochCallback& on_epoch) {
  if (train.examples.size() == 0) throw UserError("train split is empty");
  if (valid.examples.size() == 0) throw UserError("valid split is empty");
  if (train.provenance != valid.provenance) {
    throw DataError("train and valid features have different provenance");
  }
  GlobalModelSpec spec;
  spec.input_dim = train.examples.inputs.dim(1);
  spec.hidden_units = hidden_units == 0 ? GlobalModelSpec::default_hidden(spec.input_dim) : hidden_units;
  spec.task = train.examples.task;
  spec.n_outputs = train.examples.n_outputs;
  Rng init = Rng::stream(config.seed, "init");
  GlobalTrainResult r;
  r.model = build_global(spec, train.provenance, &init);
  r.history = fit(r.model.net, train.examples, valid.examples, config, on_epoch);
  return r;
}

nn::Tensor<double> predict_global(GlobalModel& model, const nn::Tensor<float>& features,
                                  const Provenance& provenance) {
  if (provenance != model.provenance) {
    throw DataError("feature provenance [" + describe_provenance(provenance) +
                    "] does not match the model's [" + describe_provenance(model.provenance) + "]");
  }
  if (features.rank() != 2 || features.dim(1) != model.spec.input_dim) {
    throw DataError("feature shape " + nn::shape_string(features.shape()) + " does not match input dim " +
                    std::to_string(model.spec.input_dim));
  }
  const nn::Tensor<float> logits = predict_logits(model.net, features);
  nn::Tensor<double> wide(logits.shape());
  std::copy(logits.storage().begin(), logits.storage().end(), wide.storage().begin());
  return model.spec.task == Task::multilabel ? nn::sigmoid_forward(wide) : nn::softmax_forward(wide);
}

std::vector<double> predict_global(GlobalModel& model, const ClipFeature& feature) {
  nn::Tensor<float> x({1, feature.values.size()});
  std::copy(feature.values.begin(), feature.values.end(), x.data());
  return predict_global(model, x, feature.provenance).storage();
}

}  // namespace mlms::model
