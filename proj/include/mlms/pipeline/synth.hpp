// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlms/audio/wav.hpp"

namespace mlms::pipeline {

/// Tag vocabulary of the synthetic set. The first six are short events
/// ("local"), the rest clip-wide properties ("global").
inline constexpr std::array<const char*, 12> kSynthTags{
    "tone-220",   "tone-440",      "tone-880",      "tone-1760",  "tone-3520",   "noise-burst",
    "tempo-slow", "tempo-fast",    "density-sparse", "density-dense", "tilt-bright", "tilt-dark"};
inline constexpr std::array<double, 5> kToneFrequencies{220.0, 440.0, 880.0, 1760.0, 3520.0};
/// Untagged distractor tones, a fifth above each tag pitch.
inline constexpr std::array<double, 5> kDecoyFrequencies{330.0, 660.0, 1320.0, 2640.0, 5280.0};
bool is_local_tag(const std::string& tag);

enum class SynthLabeling { tags, genre };

struct SynthSpec {
  std::size_t n_train = 400;
  std::size_t n_valid = 100;
  std::size_t n_test = 100;
  double duration = 29.1;  // seconds
  int sample_rate = 22050;
  std::uint64_t seed = 0;
  SynthLabeling labeling = SynthLabeling::tags;
  std::size_t n_genres = 5;  // genre labeling only, 2..5

  std::size_t n_clips() const { return n_train + n_valid + n_test; }
  void validate() const;
  nlohmann::ordered_json to_json() const;
};

enum class TempoClass { slow, medium, fast };
enum class DensityClass { sparse, medium, dense };
enum class TiltClass { dark, neutral, bright };

/// Inter-onset interval range of the beat track, seconds.
std::pair<double, double> tempo_ioi_range(TempoClass c);
/// Poisson click rate, events per second.
double density_rate(DensityClass c);

struct SynthEvent {
  std::string source;  // tag name, "decoy-<hz>", "beat" or "click"
  double onset = 0.0;  // seconds
  double length = 0.0;
  double frequency = 0.0;  // tones only
};

struct SynthClip {
  std::string id;
  audio::PcmClip audio;  // quantised to 16 bits
  std::vector<std::uint8_t> tags;  // over kSynthTags
  std::uint32_t genre = 0;
  TempoClass tempo = TempoClass::medium;
  double beat_ioi = 0.0;
  DensityClass density = DensityClass::medium;
  TiltClass tilt = TiltClass::neutral;
  std::vector<SynthEvent> events;  // sorted by onset
};

/// Length of every tone/noise burst, seconds.
inline constexpr double kBurstLength = 0.12;
/// Upper bound on the onset gap between consecutive bursts of one source.
inline constexpr double kMaxBurstGap = 0.55;

/// Clip `index` of the set; depends only on (spec, index).
SynthClip synth_clip(const SynthSpec& spec, std::size_t index);

std::string synth_clip_id(std::size_t index);

}  // namespace mlms::pipeline
