// SPDX-License-Identifier: Apache-2.0
#include "mlms/model/local_cnn.hpp"

#include <algorithm>
#include <cstring>

#include "mlms/error.hpp"

namespace mlms::model {

std::vector<std::size_t> LocalModelSpec::block_lengths() const {
  std::vector<std::size_t> out;
  std::size_t t = input_frames;
  for (const ConvBlock& b : conv_blocks) {
    out.push_back(t);
    t = b.pool_length == 0 ? 0 : t / b.pool_length;
  }
  return out;
}

void LocalModelSpec::validate() const {
  if (input_frames == 0 || mel_bins == 0 || fc_units == 0 || n_outputs == 0) {
    throw UserError("local model spec: sizes must be positive");
  }
  if (conv_blocks.empty()) throw UserError("local model spec: no conv blocks");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UserError("local model spec: dropout must be in [0, 1)");
  std::size_t t = input_frames;
  for (const ConvBlock& b : conv_blocks) {
    if (b.filter_length == 0 || b.filters == 0 || b.pool_length == 0) {
      throw UserError("local model spec: conv block sizes must be positive");
    }
    if (t < b.pool_length) throw UserError("local model spec: pool longer than its input");
    t /= b.pool_length;
  }
  if (t != 1) {
    throw UserError("local model spec: pools reduce " + std::to_string(input_frames) +
                    " frames to " + std::to_string(t) + ", not 1");
  }
}

nlohmann::ordered_json LocalModelSpec::to_json() const {
  nlohmann::ordered_json blocks = nlohmann::ordered_json::array();
  for (const ConvBlock& b : conv_blocks) blocks.push_back({b.filter_length, b.filters, b.pool_length});
  return {{"input_frames", input_frames}, {"mel_bins", mel_bins}, {"conv_blocks", blocks},
          {"fc_units", fc_units},         {"n_outputs", n_outputs}, {"dropout", dropout}};
}

LocalModelSpec LocalModelSpec::from_json(const nlohmann::ordered_json& j) {
  LocalModelSpec s;
  try {
    s.input_frames = j.at("input_frames").get<std::size_t>();
    s.mel_bins = j.at("mel_bins").get<std::size_t>();
    for (const auto& b : j.at("conv_blocks")) {
      s.conv_blocks.push_back({b.at(0).get<std::size_t>(), b.at(1).get<std::size_t>(), b.at(2).get<std::size_t>()});
    }
    s.fc_units = j.at("fc_units").get<std::size_t>();
    s.n_outputs = j.at("n_outputs").get<std::size_t>();
    s.dropout = j.at("dropout").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("local model spec: ") + e.what());
  }
  s.validate();
  return s;
}

LocalModelSpec build_local_model(std::size_t input_frames, std::size_t n_outputs) {
  LocalModelSpec s;
  s.input_frames = input_frames;
  s.n_outputs = n_outputs;
  const ConvBlock a{3, 128, 3}, wide{3, 256, 3}, tail{2, 256, 2};
  switch (input_frames) {
    case 18: s.conv_blocks = {a, a, tail}; break;
    case 27: s.conv_blocks = {a, a, wide}; break;
    case 54: s.conv_blocks = {a, a, wide, tail}; break;
    case 108: s.conv_blocks = {a, a, wide, tail, tail}; break;
    case 216: s.conv_blocks = {a, a, wide, tail, tail, tail}; break;
    default:
      throw UserError("unsupported input size " + std::to_string(input_frames) +
                      " frames (expected 18, 27, 54, 108 or 216)");
  }
  s.validate();
  return s;
}

template <typename T>
nn::Network<T> make_local_network(const LocalModelSpec& spec, Rng* init) {
  spec.validate();
  using nn::LayerConfig;
  nn::Network<T> net;
  std::size_t channels = spec.mel_bins;
  std::vector<std::size_t> taps;
  for (std::size_t b = 0; b < spec.conv_blocks.size(); ++b) {
    const ConvBlock& blk = spec.conv_blocks[b];
    net.add(LayerConfig::conv1d(channels, blk.filter_length, blk.filters), init);
    net.add(LayerConfig::batchnorm(blk.filters), init);
    net.add(LayerConfig::simple(nn::LayerKind::relu), init);
    net.add(LayerConfig::maxpool1d(blk.pool_length), init);
    taps.push_back(block_relu_layer(b));
    channels = blk.filters;
  }
  net.add(LayerConfig::simple(nn::LayerKind::flatten), init);
  net.add(LayerConfig::dense(channels, spec.fc_units), init);
  net.add(LayerConfig::batchnorm(spec.fc_units), init);
  net.add(LayerConfig::simple(nn::LayerKind::relu), init);
  net.add(LayerConfig::dropout(spec.dropout), init);
  net.add(LayerConfig::dense(spec.fc_units, spec.n_outputs), init);
  net.set_taps(std::move(taps));
  return net;
}

template nn::Network<float> make_local_network<float>(const LocalModelSpec&, Rng*);
template nn::Network<double> make_local_network<double>(const LocalModelSpec&, Rng*);

std::size_t segment_count(std::size_t clip_frames, std::size_t input_frames) {
  if (input_frames == 0) throw UserError("segment length must be positive");
  return clip_frames / input_frames;
}

SegmentBatch segment_clip(const audio::MelSpectrogram& mel, std::size_t input_frames,
                          const std::string& clip_id) {
  const std::size_t n = segment_count(mel.frame_count(), input_frames);
  if (n == 0) {
    throw DataError("clip " + (clip_id.empty() ? std::string("<unnamed>") : clip_id) + " has " +
                    std::to_string(mel.frame_count()) + " frames, shorter than one " +
                    std::to_string(input_frames) + "-frame segment");
  }
  SegmentBatch batch;
  const std::size_t bins = mel.mel_bins();
  batch.segments = nn::Tensor<float>({n, input_frames, bins});
  std::memcpy(batch.segments.data(), mel.frames.data(), n * input_frames * bins * sizeof(float));
  batch.clip_ids.assign(n, clip_id);
  return batch;
}

Examples make_segment_examples(std::span<const LabeledClip> clips, const LocalModelSpec& spec,
                               const audio::NormStats& norm) {
  Examples ex;
  ex.task = Task::multilabel;
  ex.n_outputs = spec.n_outputs;
  std::size_t total = 0;
  for (const LabeledClip& c : clips) {
    if (!c.mel) throw UserError("clip " + c.id + " has no spectrogram");
    if (c.mel->mel_bins() != spec.mel_bins) {
      throw DataError("clip " + c.id + ": " + std::to_string(c.mel->mel_bins()) + " mel bins, model expects " +
                      std::to_string(spec.mel_bins));
    }
    if (c.multi_hot.size() != spec.n_outputs) throw DataError("clip " + c.id + ": label width mismatch");
    const std::size_t n = segment_count(c.mel->frame_count(), spec.input_frames);
    if (n == 0) throw DataError("clip " + c.id + " is shorter than one segment");
    total += n;
  }
  if (total == 0) return ex;
  const std::size_t seg_size = spec.input_frames * spec.mel_bins;
  ex.inputs = nn::Tensor<float>({total, spec.input_frames, spec.mel_bins});
  ex.multi_hot = nn::Tensor<float>({total, spec.n_outputs});
  std::size_t row = 0;
  for (const LabeledClip& c : clips) {
    const std::size_t n = segment_count(c.mel->frame_count(), spec.input_frames);
    float* dst = ex.inputs.data() + row * seg_size;
    const float* src = c.mel->frames.data();
    if (c.mel->normalized) {
      std::memcpy(dst, src, n * seg_size * sizeof(float));
    } else {
      for (std::size_t i = 0; i < n * seg_size; ++i) dst[i] = static_cast<float>((src[i] - norm.mean) / norm.std);
    }
    for (std::size_t s = 0; s < n; ++s) {
      std::copy(c.multi_hot.begin(), c.multi_hot.end(), ex.multi_hot.data() + (row + s) * spec.n_outputs);
    }
    row += n;
  }
  return ex;
}

LocalTrainResult train_local(const LocalModelSpec& spec, std::span<const LabeledClip> train,
                             std::span<const LabeledClip> valid, const audio::NormStats& norm,
                             const audio::FrontendConfig& frontend, const TrainConfig& config,
                             const EpochCallback& on_epoch) {
  spec.validate();
  if (train.empty()) throw UserError("train split is empty");
  if (valid.empty()) throw UserError("valid split is empty");
  Rng init = Rng::stream(config.seed, "init");
  LocalTrainResult result;
  result.model.spec = spec;
  result.model.norm = norm;
  result.model.frontend = frontend;
  result.model.net = make_local_network<float>(spec, &init);
  const Examples tr = make_segment_examples(train, spec, norm);
  const Examples va = make_segment_examples(valid, spec, norm);
  result.history = fit(result.model.net, tr, va, config, on_epoch);
  return result;
}

audio::MelSpectrogram network_input(const LocalModel& model, const audio::MelSpectrogram& mel) {
  if (mel.normalized) return mel;
  return audio::normalize(mel, model.norm);
}

double ordered_sum(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

std::vector<double> predict_local_clip(LocalModel& model, const audio::MelSpectrogram& mel) {
  const SegmentBatch batch = segment_clip(network_input(model, mel), model.spec.input_frames);
  const nn::Tensor<float> logits = model.net.forward(batch.segments, nn::Mode::eval);
  const std::size_t n = logits.dim(0), l = logits.dim(1);
  std::vector<double> out(l);
  std::vector<double> column(n);
  for (std::size_t j = 0; j < l; ++j) {
    for (std::size_t s = 0; s < n; ++s) column[s] = nn::sigmoid<double>(logits[s * l + j]);
    out[j] = ordered_sum(column) / static_cast<double>(n);
  }
  return out;
}

}  // namespace mlms::model
