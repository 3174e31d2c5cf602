// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlms/model/aggregator.hpp"

namespace mlms::pipeline {

inline constexpr std::uint32_t kFeatureStoreVersion = 1;

/// Aggregated clip features sharing one provenance, sorted by clip_id.
/// File layout: "MLFS", u32 version, u64 header length, JSON header
/// (selection, dim, provenance, sources, record count), then per record
/// u32 id length, id bytes and dim float32 LE values.
struct FeatureStore {
  model::FeatureSelection selection;
  model::Provenance provenance;
  std::size_t dim = 0;
  nlohmann::ordered_json sources = nlohmann::ordered_json::array();  // extracting checkpoints
  std::vector<std::string> ids;
  std::vector<std::vector<float>> values;

  /// Index of a clip, or npos.
  std::size_t find(const std::string& clip_id) const;
  model::ClipFeature feature(std::size_t i) const { return {values[i], provenance}; }
  /// Throws DataError on unsorted/duplicate ids or rows of the wrong width.
  void validate() const;
};

void save_feature_store(const std::filesystem::path& path, const FeatureStore& store);
FeatureStore load_feature_store(const std::filesystem::path& path);

}  // namespace mlms::pipeline
