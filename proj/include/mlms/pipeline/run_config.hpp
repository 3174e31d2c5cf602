// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "mlms/audio/frontend.hpp"
#include "mlms/model/aggregator.hpp"
#include "mlms/model/trainer.hpp"
#include "mlms/pipeline/synth.hpp"

namespace mlms::pipeline {

/// Everything a command needs besides its inputs, as `key = value` lines.
/// Blank lines and lines starting with '#' are ignored; unknown keys are
/// rejected. Layers are written 1-based ("1,2,3" or "all"), optionally per
/// scale as `layers.<scale>`.
struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;  // drives train.seed and synth.seed
  model::TrainConfig train;
  std::vector<std::size_t> scales{27};
  std::vector<std::size_t> layers;  // 0-based blocks for every scale; empty = all
  std::map<std::size_t, std::vector<std::size_t>> scale_layers;  // per-scale overrides
  audio::FrontendConfig frontend;
  std::size_t hidden_units = 0;  // 0 = automatic
  std::size_t threads = 0;       // 0 = hardware concurrency
  SynthSpec synth;
  std::map<std::string, std::string> paths;  // written as path.<name>
  bool selection_given = false;  // set once scales or layers were assigned; not serialised

  static RunConfig parse(std::string_view text, const std::string& name);
  static RunConfig load(const std::filesystem::path& path);
  /// Fully resolved config, every key present.
  std::string to_text() const;
  void save(const std::filesystem::path& path) const;
  /// Applies one `key = value` assignment; throws UserError on bad keys or values.
  void set(const std::string& key, const std::string& value);
  model::FeatureSelection selection() const;
};

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& key);
/// "all" gives an empty list; otherwise 1-based layer numbers become 0-based.
std::vector<std::size_t> parse_layer_list(const std::string& text, const std::string& key);
std::string format_double(double v);

}  // namespace mlms::pipeline
