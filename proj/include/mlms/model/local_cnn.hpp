// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlms/audio/frontend.hpp"
#include "mlms/model/trainer.hpp"
#include "mlms/nn/network.hpp"

namespace mlms::model {

inline constexpr std::array<std::size_t, 5> kScales{18, 27, 54, 108, 216};

struct ConvBlock {
  std::size_t filter_length = 0;
  std::size_t filters = 0;
  std::size_t pool_length = 0;
  bool operator==(const ConvBlock&) const = default;
};

struct LocalModelSpec {
  std::size_t input_frames = 0;
  std::size_t mel_bins = 128;
  std::vector<ConvBlock> conv_blocks;
  std::size_t fc_units = 256;
  std::size_t n_outputs = 0;
  double dropout = 0.5;

  /// Time length seen by each conv block (its output length, before pooling).
  std::vector<std::size_t> block_lengths() const;
  /// Throws UserError unless the pools reduce input_frames to exactly 1.
  void validate() const;

  nlohmann::ordered_json to_json() const;
  static LocalModelSpec from_json(const nlohmann::ordered_json& j);
  bool operator==(const LocalModelSpec&) const = default;
};

/// 27 frames: (3,128,3) (3,128,3) (3,256,3). 18 replaces the last block by
/// (2,256,2); 54/108/216 append one/two/three (2,256,2) blocks.
LocalModelSpec build_local_model(std::size_t input_frames, std::size_t n_outputs);

/// conv -> BN -> ReLU -> max-pool per block, then flatten -> dense(fc) -> BN
/// -> ReLU -> dropout -> dense(n_outputs). The network emits logits; taps are
/// the ReLU outputs of the conv blocks.
template <typename T>
nn::Network<T> make_local_network(const LocalModelSpec& spec, Rng* init);

/// Layer index of conv block b's ReLU inside make_local_network.
inline std::size_t block_relu_layer(std::size_t b) { return 4 * b + 2; }

struct LocalModel {
  LocalModelSpec spec;
  nn::Network<float> net;
  audio::NormStats norm;
  audio::FrontendConfig frontend;
};

struct SegmentBatch {
  nn::Tensor<float> segments;          // (n_seg, input_frames, mel_bins)
  std::vector<std::string> clip_ids;   // one per segment
};

std::size_t segment_count(std::size_t clip_frames, std::size_t input_frames);

/// Consecutive non-overlapping windows from frame 0; the remainder is dropped.
SegmentBatch segment_clip(const audio::MelSpectrogram& mel, std::size_t input_frames,
                          const std::string& clip_id = {});

/// A clip with labels, already normalised or not (see network_input()).
struct LabeledClip {
  std::string id;
  const audio::MelSpectrogram* mel = nullptr;
  std::vector<float> multi_hot;
};

/// Segment examples for a local model; every segment inherits its clip's tags.
Examples make_segment_examples(std::span<const LabeledClip> clips, const LocalModelSpec& spec,
                               const audio::NormStats& norm);

struct LocalTrainResult {
  LocalModel model;
  History history;
};

/// Initialises weights from the "init" stream of config.seed and trains.
LocalTrainResult train_local(const LocalModelSpec& spec, std::span<const LabeledClip> train,
                             std::span<const LabeledClip> valid, const audio::NormStats& norm,
                             const audio::FrontendConfig& frontend, const TrainConfig& config,
                             const EpochCallback& on_epoch = {});

/// The spectrogram normalised with the model's stats (returned unchanged when
/// already normalised).
audio::MelSpectrogram network_input(const LocalModel& model, const audio::MelSpectrogram& mel);

/// Mean over segments of the per-segment sigmoid outputs (eval mode, sigmoid
/// in double). The mean is order independent: values are sorted before summation.
std::vector<double> predict_local_clip(LocalModel& model, const audio::MelSpectrogram& mel);

/// Sum of values in ascending order, in double; used wherever a reduction
/// must not depend on the order of its inputs.
double ordered_sum(std::vector<double>& values);

}  // namespace mlms::model
