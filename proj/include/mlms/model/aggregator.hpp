// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlms/model/local_cnn.hpp"

namespace mlms::model {

/// Per conv block, the post-ReLU, pre-pool activations of a batch of
/// segments: tensors of shape (n_seg, T_b, C_b).
struct LayerActivationSet {
  std::vector<nn::Tensor<float>> layers;
};

/// Eval-mode forward of (n_seg, F, bins) or a single (F, bins) segment,
/// stopping after the deepest requested block. An empty `blocks` means all.
LayerActivationSet extract_segment_features(LocalModel& model, const nn::Tensor<float>& segments,
                                            const std::vector<std::size_t>& blocks = {});

/// Max over time of a (T, C) activation, or row-wise over (n, T, C) giving (n, C).
nn::Tensor<float> segment_max_pool(const nn::Tensor<float>& activation);

/// Mean over rows of an (n_seg, C) matrix. Each channel's values are sorted
/// before summation, so the result does not depend on segment order.
std::vector<double> clip_average(const nn::Tensor<float>& segment_vectors);

/// One block of a feature vector: the channels of one layer of one scale.
struct ProvenanceEntry {
  std::size_t input_frames = 0;
  std::size_t layer = 0;  // 0-based conv block index
  std::size_t channels = 0;
  std::size_t offset = 0;
  bool operator==(const ProvenanceEntry&) const = default;
};

using Provenance = std::vector<ProvenanceEntry>;

nlohmann::ordered_json provenance_to_json(const Provenance& p);
Provenance provenance_from_json(const nlohmann::ordered_json& j);
/// Throws DataError unless the entries tile [0, dim) in order.
void check_provenance(const Provenance& p, std::size_t dim);
std::string describe_provenance(const Provenance& p);

struct ClipFeature {
  std::vector<float> values;
  Provenance provenance;
};

/// Scales in ascending order; per-scale block lists (missing or empty = all blocks).
struct FeatureSelection {
  std::vector<std::size_t> scales;
  std::map<std::size_t, std::vector<std::size_t>> layers;

  /// Sorted, de-duplicated blocks for a scale with `n_blocks` conv blocks.
  std::vector<std::size_t> blocks_for(std::size_t scale, std::size_t n_blocks) const;
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static FeatureSelection from_json(const nlohmann::ordered_json& j);
  bool operator==(const FeatureSelection&) const = default;
};

/// For each selected block: clip_average of segment_max_pool over all segments,
/// concatenated in ascending block order.
ClipFeature aggregate_clip(LocalModel& model, const audio::MelSpectrogram& mel,
                           const std::vector<std::size_t>& blocks = {});

/// Concatenates per-scale features in ascending scale order. Throws UserError
/// when a selected scale has no part.
ClipFeature concat_multiscale(const std::map<std::size_t, ClipFeature>& parts,
                              const FeatureSelection& selection);

}  // namespace mlms::model
