// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "mlms/audio/wav.hpp"
#include "mlms/nn/tensor.hpp"

namespace mlms::audio {

struct FrontendConfig {
  int sample_rate = 22050;
  std::size_t n_fft = 1024;
  std::size_t hop = 512;
  std::size_t n_mels = 128;
  double fmin = 0.0;
  double fmax = 11025.0;
  double compression = 10.0;  // C in ln(1 + C * A)
  std::size_t frames = 1250;  // clips are truncated to this many frames
  bool pad_short = false;     // zero-pad short clips instead of rejecting them

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static FrontendConfig from_json(const nlohmann::ordered_json& j);
  bool operator==(const FrontendConfig&) const = default;
};

/// Triangular filters on the HTK mel scale, unit peak. Each row's nonzero
/// support is [lo[m], hi[m]); `weights` holds the dense (n_mels, bins) matrix.
struct MelFilterbank {
  nn::Tensor<double> weights;
  std::vector<std::size_t> lo;
  std::vector<std::size_t> hi;

  std::size_t n_mels() const { return weights.dim(0); }
  std::size_t n_bins() const { return weights.dim(1); }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

MelFilterbank make_mel_filterbank(int sample_rate, std::size_t n_fft, std::size_t n_mels,
                                  double fmin, double fmax);

/// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

/// |DFT| of Hann-windowed frames starting at sample 0, no centre padding:
/// T = floor((len - n_fft) / hop) + 1 rows of n_fft / 2 + 1 bins.
nn::Tensor<double> stft_magnitude(const PcmClip& clip, std::size_t n_fft = 1024,
                                  std::size_t hop = 512);

/// out[t, m] = sum_k fb[m, k] * mag[t, k].
nn::Tensor<double> mel_project(const nn::Tensor<double>& mag, const MelFilterbank& fb);

/// Time-major (T, n_mels) log-mel frames.
struct MelSpectrogram {
  nn::Tensor<float> frames;
  std::size_t hop = 512;
  bool normalized = false;

  std::size_t frame_count() const { return frames.dim(0); }
  std::size_t mel_bins() const { return frames.dim(1); }
};

/// ln(1 + C * A) elementwise. Throws UserError on negative input.
MelSpectrogram log_compress(const nn::Tensor<double>& mel, double compression = 10.0,
                            std::size_t hop = 512);

struct NormStats {
  double mean = 0.0;
  double std = 1.0;

  nlohmann::ordered_json to_json() const;
  static NormStats from_json(const nlohmann::ordered_json& j);
  bool operator==(const NormStats&) const = default;
};

/// Running count, mean and sum of squared deviations. Per-clip partials are
/// combined with Chan's pairwise update, so merging clip partials in order
/// equals fit_norm_stats over the same clips.
struct NormAccumulator {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  static NormAccumulator of(const MelSpectrogram& mel);
  void merge(const NormAccumulator& other);
  /// Throws DataError when the data is constant or empty.
  NormStats finish() const;
};

/// Scalar mean and population standard deviation over every cell of every
/// spectrogram. Throws DataError when the data is constant (std = 0).
NormStats fit_norm_stats(std::span<const MelSpectrogram> clips);

/// (x - mean) / std. Throws UserError on already normalized input or std <= 0.
MelSpectrogram normalize(const MelSpectrogram& mel, const NormStats& stats);

/// Full chain: resample, STFT, mel projection, log compression and
/// truncation (or padding) to config.frames.
MelSpectrogram compute_mel(const PcmClip& clip, const FrontendConfig& config);

/// Filterbank for a config, cached per distinct config.
const MelFilterbank& filterbank_for(const FrontendConfig& config);

/// Cache file: "MLMC", u32 version, u32 frames, u32 mel_bins, u32 hop,
/// u32 sample_rate, u8 normalized, then float32 LE frames, time-major.
void save_mel_cache(const std::filesystem::path& path, const MelSpectrogram& mel,
                    int sample_rate);
MelSpectrogram load_mel_cache(const std::filesystem::path& path, int* sample_rate = nullptr);

}  // namespace mlms::audio
