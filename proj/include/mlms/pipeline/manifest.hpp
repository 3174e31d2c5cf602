// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mlms/model/trainer.hpp"

namespace mlms::pipeline {

enum class Split { train, valid, test };
std::string to_string(Split split);
Split split_from_string(const std::string& name);

/// Multi-hot tags or one class per clip.
enum class LabelKind { tags, classes };

struct ManifestRecord {
  std::string clip_id;
  std::string path;  // relative paths resolve against the manifest's directory
  Split split = Split::train;
  std::vector<std::uint8_t> tags;  // LabelKind::tags, one entry per vocabulary word
  std::uint32_t label = 0;         // LabelKind::classes
  bool operator==(const ManifestRecord&) const = default;
};

/// Tab-separated table with a header line
///   clip_id <TAB> path <TAB> split <TAB> tags|class
/// where `tags` lists vocabulary words joined by '|' and `class` holds one
/// word. The vocabulary lives in a sidecar file, one word per line.
struct Manifest {
  LabelKind kind = LabelKind::tags;
  std::vector<std::string> vocabulary;
  std::vector<ManifestRecord> records;
  std::filesystem::path base_dir;  // not serialised

  /// Throws DataError on duplicate ids or labels outside the vocabulary.
  void validate() const;
  model::Task task() const {
    return kind == LabelKind::tags ? model::Task::multilabel : model::Task::multiclass;
  }
  std::vector<std::size_t> split_indices(Split split) const;
  /// Throws UserError when one of the splits has no clips.
  void require_splits(std::initializer_list<Split> splits) const;
  std::filesystem::path resolve(const ManifestRecord& r) const;
  std::vector<float> multi_hot(const ManifestRecord& r) const;
  const ManifestRecord* find(const std::string& clip_id) const;

  std::string to_tsv() const;
  std::string vocabulary_text() const;
  static Manifest parse(std::string_view tsv, std::string_view vocabulary, const std::string& name);
  /// Reads `path` and `path` + ".vocab".
  static Manifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  bool operator==(const Manifest& o) const {
    return kind == o.kind && vocabulary == o.vocabulary && records == o.records;
  }
};

std::filesystem::path vocabulary_path(const std::filesystem::path& manifest);

}  // namespace mlms::pipeline
