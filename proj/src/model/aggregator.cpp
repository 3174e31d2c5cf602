// SPDX-License-Identifier: Apache-2.0
#include "mlms/model/aggregator.hpp"

#include <algorithm>
#include <set>

#include "mlms/error.hpp"
#include "mlms/simd/kernels.hpp"

namespace mlms::model {

namespace {

std::vector<std::size_t> resolve_blocks(const std::vector<std::size_t>& blocks, std::size_t n_blocks) {
  std::vector<std::size_t> out = blocks;
  if (out.empty()) {
    for (std::size_t b = 0; b < n_blocks; ++b) out.push_back(b);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.back() >= n_blocks) {
    throw UserError("layer L" + std::to_string(out.back() + 1) + " requested but the model has " +
                    std::to_string(n_blocks) + " conv layers");
  }
  return out;
}

}  // namespace

LayerActivationSet extract_segment_features(LocalModel& model, const nn::Tensor<float>& segments,
                                            const std::vector<std::size_t>& blocks) {
  const LocalModelSpec& spec = model.spec;
  nn::Tensor<float> input = segments;
  if (input.rank() == 2) input.reshape({1, input.dim(0), input.dim(1)});
  if (input.rank() != 3 || input.dim(1) != spec.input_frames || input.dim(2) != spec.mel_bins) {
    throw UserError("segment shape " + nn::shape_string(segments.shape()) + " does not match a " +
                    std::to_string(spec.input_frames) + "-frame model with " +
                    std::to_string(spec.mel_bins) + " mel bins");
  }
  const std::vector<std::size_t> chosen = resolve_blocks(blocks, spec.conv_blocks.size());
  std::vector<nn::Tensor<float>> taps;
  model.net.forward_prefix(input, nn::Mode::eval, block_relu_layer(chosen.back()) + 1, &taps);
  LayerActivationSet out;
  for (std::size_t b : chosen) out.layers.push_back(std::move(taps.at(b)));
  return out;
}

nn::Tensor<float> segment_max_pool(const nn::Tensor<float>& activation) {
  if (activation.rank() == 2) {
    nn::Tensor<float> out({activation.dim(1)});
    simd::column_max(activation.data(), activation.dim(0), activation.dim(1), out.data());
    return out;
  }
  if (activation.rank() != 3) throw UserError("segment_max_pool: expected (T, C) or (n, T, C)");
  const std::size_t n = activation.dim(0), t = activation.dim(1), c = activation.dim(2);
  nn::Tensor<float> out({n, c});
  for (std::size_t s = 0; s < n; ++s) simd::column_max(activation.data() + s * t * c, t, c, out.data() + s * c);
  return out;
}

std::vector<double> clip_average(const nn::Tensor<float>& segment_vectors) {
  if (segment_vectors.rank() != 2) throw UserError("clip_average: expected (n_seg, C)");
  const std::size_t n = segment_vectors.dim(0), c = segment_vectors.dim(1);
  std::vector<double> out(c);
  std::vector<double> column(n);
  for (std::size_t j = 0; j < c; ++j) {
    for (std::size_t s = 0; s < n; ++s) column[s] = segment_vectors[s * c + j];
    out[j] = ordered_sum(column) / static_cast<double>(n);
  }
  return out;
}

nlohmann::ordered_json provenance_to_json(const Provenance& p) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const ProvenanceEntry& e : p) {
    arr.push_back({{"input_frames", e.input_frames}, {"layer", e.layer}, {"channels", e.channels}, {"offset", e.offset}});
  }
  return arr;
}

Provenance provenance_from_json(const nlohmann::ordered_json& j) {
  Provenance p;
  try {
    for (const auto& e : j) {
      p.push_back({e.at("input_frames").get<std::size_t>(), e.at("layer").get<std::size_t>(),
                   e.at("channels").get<std::size_t>(), e.at("offset").get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("feature provenance: ") + e.what());
  }
  return p;
}

void check_provenance(const Provenance& p, std::size_t dim) {
  std::size_t next = 0;
  for (const ProvenanceEntry& e : p) {
    if (e.offset != next || e.channels == 0) throw DataError("feature provenance does not tile the vector");
    next += e.channels;
  }
  if (next != dim) {
    throw DataError("feature provenance covers " + std::to_string(next) + " of " + std::to_string(dim) + " dims");
  }
}

std::string describe_provenance(const Provenance& p) {
  std::string s;
  for (const ProvenanceEntry& e : p) {
    if (!s.empty()) s += ' ';
    s += std::to_string(e.input_frames) + ":L" + std::to_string(e.layer + 1) + "x" + std::to_string(e.channels);
  }
  return s;
}

std::vector<std::size_t> FeatureSelection::blocks_for(std::size_t scale, std::size_t n_blocks) const {
  const auto it = layers.find(scale);
  return resolve_blocks(it == layers.end() ? std::vector<std::size_t>{} : it->second, n_blocks);
}

void FeatureSelection::validate() const {
  if (scales.empty()) throw UserError("feature selection: no scales");
  if (!std::is_sorted(scales.begin(), scales.end()) ||
      std::adjacent_find(scales.begin(), scales.end()) != scales.end()) {
    throw UserError("feature selection: scales must be strictly ascending");
  }
  for (const auto& [scale, blocks] : layers) {
    if (!std::binary_search(scales.begin(), scales.end(), scale)) {
      throw UserError("feature selection: layers given for unselected scale " + std::to_string(scale));
    }
  }
}

nlohmann::ordered_json FeatureSelection::to_json() const {
  nlohmann::ordered_json l = nlohmann::ordered_json::object();
  for (const auto& [scale, blocks] : layers) l[std::to_string(scale)] = blocks;
  return {{"scales", scales}, {"layers", l}};
}

FeatureSelection FeatureSelection::from_json(const nlohmann::ordered_json& j) {
  FeatureSelection s;
  try {
    s.scales = j.at("scales").get<std::vector<std::size_t>>();
    for (const auto& [k, v] : j.at("layers").items()) s.layers[std::stoul(k)] = v.get<std::vector<std::size_t>>();
  } catch (const std::exception& e) {
    throw DataError(std::string("feature selection: ") + e.what());
  }
  s.validate();
  return s;
}

ClipFeature aggregate_clip(LocalModel& model, const audio::MelSpectrogram& mel,
                           const std::vector<std::size_t>& blocks) {
  const std::vector<std::size_t> chosen = resolve_blocks(blocks, model.spec.conv_blocks.size());
  const SegmentBatch batch = segment_clip(network_input(model, mel), model.spec.input_frames);
  const LayerActivationSet acts = extract_segment_features(model, batch.segments, chosen);
  ClipFeature f;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const std::vector<double> avg = clip_average(segment_max_pool(acts.layers[i]));
    f.provenance.push_back({model.spec.input_frames, chosen[i], avg.size(), f.values.size()});
    for (double v : avg) f.values.push_back(static_cast<float>(v));
  }
  return f;
}

ClipFeature concat_multiscale(const std::map<std::size_t, ClipFeature>& parts,
                              const FeatureSelection& selection) {
  selection.validate();
  ClipFeature out;
  for (std::size_t scale : selection.scales) {
    const auto it = parts.find(scale);
    if (it == parts.end()) throw UserError("no features for selected scale " + std::to_string(scale));
    check_provenance(it->second.provenance, it->second.values.size());
    for (ProvenanceEntry e : it->second.provenance) {
      if (e.input_frames != scale) throw DataError("feature part for scale " + std::to_string(scale) + " has foreign provenance");
      e.offset += out.values.size();
      out.provenance.push_back(e);
    }
    out.values.insert(out.values.end(), it->second.values.begin(), it->second.values.end());
  }
  return out;
}

}  // namespace mlms::model
