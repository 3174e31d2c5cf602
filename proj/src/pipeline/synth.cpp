// SPDX-License-Identifier: Apache-2.0
#include "mlms/pipeline/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "mlms/error.hpp"
#include "mlms/rng.hpp"

namespace mlms::pipeline {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kKickLength = 0.15;
constexpr double kClickLength = 0.004;
constexpr double kTagProbability = 0.35;

std::size_t tag_index(const char* name) {
  for (std::size_t i = 0; i < kSynthTags.size(); ++i) {
    if (std::string(kSynthTags[i]) == name) return i;
  }
  throw UserError(std::string("unknown synthetic tag ") + name);
}

struct GenrePrototype {
  TempoClass tempo;
  DensityClass density;
  TiltClass tilt;
  std::array<bool, 6> local;  // tone-220 .. tone-3520, noise-burst
};

constexpr std::array<GenrePrototype, 5> kGenres{{
    {TempoClass::slow, DensityClass::sparse, TiltClass::dark, {true, true, false, false, false, false}},
    {TempoClass::fast, DensityClass::dense, TiltClass::bright, {false, false, false, true, true, false}},
    {TempoClass::medium, DensityClass::medium, TiltClass::neutral, {false, false, true, false, false, true}},
    {TempoClass::fast, DensityClass::sparse, TiltClass::dark, {false, true, false, true, false, false}},
    {TempoClass::slow, DensityClass::dense, TiltClass::bright, {true, false, false, false, false, true}},
}};

double log_uniform(Rng& rng, double lo, double hi) { return lo * std::pow(hi / lo, rng.uniform()); }

template <typename E>
E pick_class(Rng& rng) {
  return static_cast<E>(rng.below(3));
}

template <typename E>
E follow_or_pick(Rng& rng, E prototype, double follow) {
  return rng.bernoulli(follow) ? prototype : pick_class<E>(rng);
}

// Raised-cosine attack and release around a flat top.
double burst_envelope(double t, double length) {
  constexpr double ramp = 0.01;
  if (t < 0.0 || t >= length) return 0.0;
  if (t < ramp) return 0.5 - 0.5 * std::cos(std::numbers::pi * t / ramp);
  if (t > length - ramp) return 0.5 - 0.5 * std::cos(std::numbers::pi * (length - t) / ramp);
  return 1.0;
}

void render_tone(std::vector<double>& out, int rate, double onset, double freq, double amp,
                 double phase) {
  const auto start = static_cast<std::size_t>(std::llround(onset * rate));
  const auto n = static_cast<std::size_t>(std::llround(kBurstLength * rate));
  for (std::size_t i = 0; i < n && start + i < out.size(); ++i) {
    const double t = static_cast<double>(i) / rate;
    out[start + i] += amp * burst_envelope(t, kBurstLength) * std::sin(kTwoPi * freq * t + phase);
  }
}

void render_noise_burst(std::vector<double>& out, int rate, double onset, double amp, Rng& rng) {
  const auto start = static_cast<std::size_t>(std::llround(onset * rate));
  const auto n = static_cast<std::size_t>(std::llround(kBurstLength * rate));
  for (std::size_t i = 0; i < n && start + i < out.size(); ++i) {
    const double t = static_cast<double>(i) / rate;
    out[start + i] += amp * burst_envelope(t, kBurstLength) * rng.normal();
  }
}

// Pitch-swept decaying sine.
void render_kick(std::vector<double>& out, int rate, double onset, double amp) {
  const auto start = static_cast<std::size_t>(std::llround(onset * rate));
  const auto n = static_cast<std::size_t>(std::llround(kKickLength * rate));
  double phase = 0.0;
  for (std::size_t i = 0; i < n && start + i < out.size(); ++i) {
    const double t = static_cast<double>(i) / rate;
    const double freq = 55.0 + 95.0 * std::exp(-t / 0.03);
    const double fade = std::min(1.0, (kKickLength - t) / 0.01);
    out[start + i] += amp * std::exp(-t / 0.05) * fade * std::sin(phase);
    phase += kTwoPi * freq / rate;
  }
}

// Differenced white noise with a 1 ms decay.
void render_click(std::vector<double>& out, int rate, double onset, double amp, Rng& rng) {
  const auto start = static_cast<std::size_t>(std::llround(onset * rate));
  const auto n = static_cast<std::size_t>(std::llround(kClickLength * rate));
  double prev = 0.0;
  for (std::size_t i = 0; i < n && start + i < out.size(); ++i) {
    const double t = static_cast<double>(i) / rate;
    const double x = rng.normal();
    out[start + i] += amp * std::exp(-t / 0.001) * (x - prev);
    prev = x;
  }
}

// White noise; dark is a one-pole low pass y = (1 - a) x + a y[n-1], bright a
// pre-emphasis y = x - b x[n-1]. `strength` is a or b.
std::vector<double> background(std::size_t n, TiltClass tilt, double strength, double level, Rng& rng) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal();
  if (tilt == TiltClass::dark) {
    double y = 0.0;
    for (double& v : x) {
      y = (1.0 - strength) * v + strength * y;
      v = y;
    }
  } else if (tilt == TiltClass::bright) {
    double prev = 0.0;
    for (double& v : x) {
      const double cur = v;
      v = cur - strength * prev;
      prev = cur;
    }
  }
  double energy = 0.0;
  for (const double v : x) energy += v * v;
  const double gain = level / std::sqrt(energy / static_cast<double>(n));
  for (double& v : x) v *= gain;
  return x;
}

}  // namespace

bool is_local_tag(const std::string& tag) {
  for (std::size_t i = 0; i < 6; ++i) {
    if (tag == kSynthTags[i]) return true;
  }
  return false;
}

void SynthSpec::validate() const {
  if (n_train == 0) throw UserError("synth: n_train must be positive");
  if (!(duration > 1.0)) throw UserError("synth: duration must exceed 1 s");
  if (sample_rate < 16000) throw UserError("synth: sample_rate must be at least 16000 Hz");
  if (labeling == SynthLabeling::genre && (n_genres < 2 || n_genres > kGenres.size())) {
    throw UserError("synth: n_genres must be in [2, 5]");
  }
}

nlohmann::ordered_json SynthSpec::to_json() const {
  nlohmann::ordered_json j;
  j["n_train"] = n_train;
  j["n_valid"] = n_valid;
  j["n_test"] = n_test;
  j["duration"] = duration;
  j["sample_rate"] = sample_rate;
  j["seed"] = seed;
  j["labeling"] = labeling == SynthLabeling::tags ? "tags" : "genre";
  j["n_genres"] = n_genres;
  return j;
}

std::pair<double, double> tempo_ioi_range(TempoClass c) {
  switch (c) {
    case TempoClass::slow: return {0.8, 1.0};
    case TempoClass::medium: return {0.5, 0.6};
    case TempoClass::fast: return {0.3, 0.36};
  }
  return {0.5, 0.6};
}

double density_rate(DensityClass c) {
  switch (c) {
    case DensityClass::sparse: return 0.4;
    case DensityClass::medium: return 1.2;
    case DensityClass::dense: return 3.5;
  }
  return 1.2;
}

std::string synth_clip_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "clip%05zu", index);
  return buf;
}

SynthClip synth_clip(const SynthSpec& spec, std::size_t index) {
  spec.validate();
  Rng rng = Rng::stream(spec.seed, "synth/" + std::to_string(index));
  SynthClip clip;
  clip.id = synth_clip_id(index);
  clip.tags.assign(kSynthTags.size(), 0);
  const double dur = spec.duration;
  const int rate = spec.sample_rate;

  std::array<bool, 6> local{};
  if (spec.labeling == SynthLabeling::tags) {
    for (bool& b : local) b = rng.bernoulli(kTagProbability);
    clip.tempo = pick_class<TempoClass>(rng);
    clip.density = pick_class<DensityClass>(rng);
    clip.tilt = pick_class<TiltClass>(rng);
  } else {
    clip.genre = static_cast<std::uint32_t>(index % spec.n_genres);
    const GenrePrototype& g = kGenres[clip.genre];
    for (std::size_t i = 0; i < local.size(); ++i) local[i] = rng.bernoulli(g.local[i] ? 0.7 : 0.15);
    clip.tempo = follow_or_pick(rng, g.tempo, 0.6);
    clip.density = follow_or_pick(rng, g.density, 0.6);
    clip.tilt = follow_or_pick(rng, g.tilt, 0.6);
  }
  for (std::size_t i = 0; i < local.size(); ++i) clip.tags[i] = local[i] ? 1 : 0;
  if (clip.tempo == TempoClass::slow) clip.tags[tag_index("tempo-slow")] = 1;
  if (clip.tempo == TempoClass::fast) clip.tags[tag_index("tempo-fast")] = 1;
  if (clip.density == DensityClass::sparse) clip.tags[tag_index("density-sparse")] = 1;
  if (clip.density == DensityClass::dense) clip.tags[tag_index("density-dense")] = 1;
  if (clip.tilt == TiltClass::bright) clip.tags[tag_index("tilt-bright")] = 1;
  if (clip.tilt == TiltClass::dark) clip.tags[tag_index("tilt-dark")] = 1;

  const auto n = static_cast<std::size_t>(std::llround(dur * rate));
  const double tilt_strength = rng.uniform(0.3, 0.85);
  std::vector<double> mix = background(n, clip.tilt, tilt_strength, rng.uniform(0.015, 0.06), rng);

  // Beat track.
  const auto [ioi_lo, ioi_hi] = tempo_ioi_range(clip.tempo);
  clip.beat_ioi = rng.uniform(ioi_lo, ioi_hi);
  // Kicks sit on a grid of beat_ioi with a small Gaussian timing jitter.
  const double kick_level = log_uniform(rng, 0.08, 0.4);
  for (double grid = rng.uniform(0.0, clip.beat_ioi); grid + kKickLength <= dur; grid += clip.beat_ioi) {
    const double jitter = std::clamp(0.03 * clip.beat_ioi * rng.normal(), -0.06 * clip.beat_ioi, 0.06 * clip.beat_ioi);
    const double t = std::clamp(grid + jitter, 0.0, dur - kKickLength);
    render_kick(mix, rate, t, kick_level * rng.uniform(0.9, 1.1));
    clip.events.push_back({"beat", t, kKickLength, 0.0});
  }

  // Bursts: tagged sources plus decoy tones, each repeating every 0.25 to
  // kMaxBurstGap seconds, so even an 18-frame window usually holds one.
  struct Source {
    std::string name;
    double frequency;  // 0 for the noise burst
  };
  std::vector<Source> sources;
  for (std::size_t i = 0; i < kToneFrequencies.size(); ++i) {
    if (local[i]) sources.push_back({kSynthTags[i], kToneFrequencies[i]});
  }
  if (local[5]) sources.push_back({"noise-burst", 0.0});
  // Near misses: 1 to 2 semitones from a tag pitch. Mel bands resolve them at
  // high pitch but not at low pitch.
  for (const double f : kToneFrequencies) {
    if (rng.bernoulli(kTagProbability)) {
      const double semitones = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(1.0, 2.0);
      const double g = f * std::pow(2.0, semitones / 12.0);
      sources.push_back({"decoy-" + std::to_string(static_cast<int>(std::lround(g))), g});
    }
  }
  for (const double f : kDecoyFrequencies) {
    if (rng.bernoulli(kTagProbability)) {
      sources.push_back({"decoy-" + std::to_string(static_cast<int>(f)), f});
    }
  }
  rng.shuffle(std::span<Source>(sources));
  for (const Source& s : sources) {
    const double level = log_uniform(rng, 0.015, 0.12);
    for (double t = rng.uniform(0.0, 0.4); t + kBurstLength <= dur; t += rng.uniform(0.25, kMaxBurstGap)) {
      const double amp = level * rng.uniform(0.8, 1.2);
      if (s.frequency > 0.0) {
        render_tone(mix, rate, t, s.frequency, amp, rng.uniform(0.0, kTwoPi));
      } else {
        render_noise_burst(mix, rate, t, 0.6 * amp, rng);
      }
      clip.events.push_back({s.name, t, kBurstLength, s.frequency});
    }
  }

  // Clicks, a Poisson process.
  const double lambda = density_rate(clip.density);
  for (double t = -std::log(1.0 - rng.uniform()) / lambda; t + kClickLength <= dur;
       t += -std::log(1.0 - rng.uniform()) / lambda) {
    render_click(mix, rate, t, 0.15, rng);
    clip.events.push_back({"click", t, kClickLength, 0.0});
  }

  std::stable_sort(clip.events.begin(), clip.events.end(),
                   [](const SynthEvent& a, const SynthEvent& b) { return a.onset < b.onset; });

  clip.audio.sample_rate = rate;
  clip.audio.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    clip.audio.samples[i] = static_cast<float>(std::clamp(mix[i], -1.0, 1.0));
  }
  audio::quantize_pcm16(clip.audio);
  return clip;
}

}  // namespace mlms::pipeline
