// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlms/model/global_classifier.hpp"
#include "mlms/model/local_cnn.hpp"

namespace mlms::pipeline {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// What a checkpoint records besides the model itself.
struct CheckpointMeta {
  std::uint64_t seed = 0;
  model::TrainConfig train;
  std::vector<std::string> vocabulary;  // output names, in output order
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();  // e.g. clip counts, best epoch
};

/// File layout: "MLMS", u32 version, u64 header length, UTF-8 JSON header,
/// then float32 LE tensors in the order listed under header["tensors"].
/// The header has no timestamps, so identical models give identical bytes.
void save_local_checkpoint(const std::filesystem::path& path, model::LocalModel& model,
                           const CheckpointMeta& meta);
model::LocalModel load_local_checkpoint(const std::filesystem::path& path,
                                        CheckpointMeta* meta = nullptr);

void save_global_checkpoint(const std::filesystem::path& path, model::GlobalModel& model,
                            const model::FeatureSelection& selection, const CheckpointMeta& meta);
model::GlobalModel load_global_checkpoint(const std::filesystem::path& path,
                                          model::FeatureSelection* selection = nullptr,
                                          CheckpointMeta* meta = nullptr);

/// "local" or "global"; reads the header only.
std::string checkpoint_kind(const std::filesystem::path& path);
nlohmann::ordered_json checkpoint_header(const std::filesystem::path& path);

}  // namespace mlms::pipeline
