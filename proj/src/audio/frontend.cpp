// SPDX-License-Identifier: Apache-2.0
#include "mlms/audio/frontend.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

#include "mlms/audio/resample.hpp"
#include "mlms/error.hpp"
#include "mlms/io/binary.hpp"

namespace mlms::audio {

namespace {

constexpr std::string_view kCacheMagic = "MLMC";
constexpr std::uint32_t kCacheVersion = 1;

// FFTW's planner is not thread-safe; execution with new-array calls is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

void FrontendConfig::validate() const {
  if (sample_rate <= 0) throw UserError("frontend: sample_rate must be positive");
  if (n_fft < 2 || hop < 1) throw UserError("frontend: n_fft must be >= 2 and hop >= 1");
  if (n_mels < 1) throw UserError("frontend: n_mels must be >= 1");
  if (!(fmin >= 0.0 && fmax > fmin && fmax <= sample_rate / 2.0)) {
    throw UserError("frontend: need 0 <= fmin < fmax <= sample_rate / 2");
  }
  if (!(compression > 0.0)) throw UserError("frontend: compression must be positive");
  if (frames < 1) throw UserError("frontend: frames must be >= 1");
}

nlohmann::ordered_json FrontendConfig::to_json() const {
  return {{"sample_rate", sample_rate}, {"n_fft", n_fft},     {"hop", hop},
          {"n_mels", n_mels},           {"fmin", fmin},       {"fmax", fmax},
          {"mel_scale", "htk"},         {"filter_norm", "unit_peak"},
          {"window", "hann_periodic"},  {"compression", compression},
          {"log", "natural"},           {"frames", frames},   {"pad_short", pad_short}};
}

FrontendConfig FrontendConfig::from_json(const nlohmann::ordered_json& j) {
  FrontendConfig c;
  try {
    c.sample_rate = j.at("sample_rate").get<int>();
    c.n_fft = j.at("n_fft").get<std::size_t>();
    c.hop = j.at("hop").get<std::size_t>();
    c.n_mels = j.at("n_mels").get<std::size_t>();
    c.fmin = j.at("fmin").get<double>();
    c.fmax = j.at("fmax").get<double>();
    c.compression = j.at("compression").get<double>();
    c.frames = j.at("frames").get<std::size_t>();
    c.pad_short = j.at("pad_short").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("frontend config: ") + e.what());
  }
  c.validate();
  return c;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank make_mel_filterbank(int sample_rate, std::size_t n_fft, std::size_t n_mels,
                                  double fmin, double fmax) {
  const std::size_t bins = n_fft / 2 + 1;
  const double m_lo = hz_to_mel(fmin);
  const double m_hi = hz_to_mel(fmax);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(m_lo + (m_hi - m_lo) * static_cast<double>(i) / (n_mels + 1));
  }
  MelFilterbank fb;
  fb.weights = nn::Tensor<double>({n_mels, bins});
  fb.lo.assign(n_mels, bins);
  fb.hi.assign(n_mels, 0);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double left = edges[m], centre = edges[m + 1], right = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      const double w = std::max(0.0, std::min((f - left) / (centre - left), (right - f) / (right - centre)));
      if (w > 0.0) {
        fb.weights[m * bins + k] = w;
        fb.lo[m] = std::min(fb.lo[m], k);
        fb.hi[m] = k + 1;
      }
    }
    if (fb.hi[m] == 0) {
      throw UserError("mel filterbank: filter " + std::to_string(m) +
                      " covers no FFT bin; use fewer mel bands or a longer FFT");
    }
  }
  return fb;
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

nn::Tensor<double> stft_magnitude(const PcmClip& clip, std::size_t n_fft, std::size_t hop) {
  if (n_fft < 2 || hop < 1) throw UserError("stft: n_fft must be >= 2 and hop >= 1");
  if (clip.samples.size() < n_fft) {
    throw DataError("stft: clip has " + std::to_string(clip.samples.size()) +
                    " samples, fewer than one " + std::to_string(n_fft) + "-sample window");
  }
  const std::size_t frames = (clip.samples.size() - n_fft) / hop + 1;
  const std::size_t bins = n_fft / 2 + 1;
  const std::vector<double> window = hann_window(n_fft);

  auto* in = static_cast<double*>(fftw_malloc(sizeof(double) * n_fft));
  auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins));
  std::unique_ptr<void, void (*)(void*)> free_in(in, fftw_free);
  std::unique_ptr<void, void (*)(void*)> free_out(out, fftw_free);
  fftw_plan plan;
  {
    // FFTW_ESTIMATE picks the algorithm without timing, so results are reproducible.
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n_fft), in, out, FFTW_ESTIMATE);
  }
  if (!plan) throw NumericalError("stft: FFTW planning failed");

  nn::Tensor<double> mag({frames, bins});
  for (std::size_t t = 0; t < frames; ++t) {
    const float* x = clip.samples.data() + t * hop;
    for (std::size_t i = 0; i < n_fft; ++i) in[i] = window[i] * x[i];
    fftw_execute_dft_r2c(plan, in, out);
    for (std::size_t k = 0; k < bins; ++k) mag[t * bins + k] = std::hypot(out[k][0], out[k][1]);
  }
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return mag;
}

nn::Tensor<double> mel_project(const nn::Tensor<double>& mag, const MelFilterbank& fb) {
  if (mag.rank() != 2 || mag.dim(1) != fb.n_bins()) {
    throw UserError("mel_project: magnitude shape " + nn::shape_string(mag.shape()) +
                    " does not match filterbank with " + std::to_string(fb.n_bins()) + " bins");
  }
  const std::size_t frames = mag.dim(0), bins = fb.n_bins(), mels = fb.n_mels();
  nn::Tensor<double> out({frames, mels});
  for (std::size_t t = 0; t < frames; ++t) {
    const double* row = mag.data() + t * bins;
    for (std::size_t m = 0; m < mels; ++m) {
      const double* w = fb.weights.data() + m * bins;
      double acc = 0.0;
      for (std::size_t k = fb.lo[m]; k < fb.hi[m]; ++k) acc += w[k] * row[k];
      out[t * mels + m] = acc;
    }
  }
  return out;
}

MelSpectrogram log_compress(const nn::Tensor<double>& mel, double compression, std::size_t hop) {
  if (mel.rank() != 2) throw UserError("log_compress: expected a (T, mels) matrix");
  MelSpectrogram out;
  out.hop = hop;
  out.frames = nn::Tensor<float>(mel.shape());
  for (std::size_t i = 0; i < mel.size(); ++i) {
    if (!(mel[i] >= 0.0)) throw UserError("log_compress: negative or NaN magnitude");
    out.frames[i] = static_cast<float>(std::log1p(compression * mel[i]));
  }
  return out;
}

nlohmann::ordered_json NormStats::to_json() const { return {{"mean", mean}, {"std", std}}; }

NormStats NormStats::from_json(const nlohmann::ordered_json& j) {
  NormStats s;
  try {
    s.mean = j.at("mean").get<double>();
    s.std = j.at("std").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("norm stats: ") + e.what());
  }
  if (!(s.std > 0.0)) throw DataError("norm stats: std must be positive");
  return s;
}

NormAccumulator NormAccumulator::of(const MelSpectrogram& mel) {
  if (mel.normalized) throw UserError("norm stats: input is already normalized");
  NormAccumulator a;
  const auto& v = mel.frames.storage();
  if (v.empty()) return a;
  double s = 0.0;
  for (float x : v) s += x;
  a.count = static_cast<double>(v.size());
  a.mean = s / a.count;
  for (float x : v) a.m2 += (x - a.mean) * (x - a.mean);
  return a;
}

void NormAccumulator::merge(const NormAccumulator& o) {
  if (o.count == 0.0) return;
  const double total = count + o.count;
  const double delta = o.mean - mean;
  mean += delta * o.count / total;
  m2 += o.m2 + delta * delta * count * o.count / total;
  count = total;
}

NormStats NormAccumulator::finish() const {
  const double std = count > 0.0 ? std::sqrt(m2 / count) : 0.0;
  if (!(std > 0.0)) {
    throw DataError("fit_norm_stats: training data is constant (std = 0)");
  }
  return {mean, std};
}

NormStats fit_norm_stats(std::span<const MelSpectrogram> clips) {
  if (clips.empty()) throw UserError("fit_norm_stats: no training spectrograms");
  NormAccumulator acc;
  for (const MelSpectrogram& c : clips) {
    if (c.normalized) throw UserError("fit_norm_stats: input is already normalized");
    acc.merge(NormAccumulator::of(c));
  }
  return acc.finish();
}

MelSpectrogram normalize(const MelSpectrogram& mel, const NormStats& stats) {
  if (mel.normalized) throw UserError("normalize: spectrogram is already normalized");
  if (!(stats.std > 0.0)) throw UserError("normalize: std must be positive");
  MelSpectrogram out = mel;
  for (float& x : out.frames.storage()) x = static_cast<float>((x - stats.mean) / stats.std);
  out.normalized = true;
  return out;
}

const MelFilterbank& filterbank_for(const FrontendConfig& config) {
  static std::mutex m;
  static std::map<std::tuple<int, std::size_t, std::size_t, double, double>, MelFilterbank> cache;
  const auto key = std::make_tuple(config.sample_rate, config.n_fft, config.n_mels, config.fmin, config.fmax);
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, make_mel_filterbank(config.sample_rate, config.n_fft, config.n_mels,
                                                config.fmin, config.fmax)).first;
  }
  return it->second;
}

MelSpectrogram compute_mel(const PcmClip& clip, const FrontendConfig& config) {
  config.validate();
  PcmClip resampled;
  if (clip.sample_rate != config.sample_rate) resampled = resample(clip, config.sample_rate);
  const PcmClip& pcm = clip.sample_rate == config.sample_rate ? clip : resampled;
  const nn::Tensor<double> mag = stft_magnitude(pcm, config.n_fft, config.hop);
  MelSpectrogram mel = log_compress(mel_project(mag, filterbank_for(config)), config.compression, config.hop);
  const std::size_t t = mel.frame_count();
  if (t == config.frames) return mel;
  if (t < config.frames && !config.pad_short) {
    throw DataError("clip too short: " + std::to_string(t) + " frames, need " +
                    std::to_string(config.frames) + " (enable pad_short to zero-pad)");
  }
  nn::Tensor<float> fixed({config.frames, config.n_mels});
  const std::size_t keep = std::min(t, config.frames);
  std::copy_n(mel.frames.data(), keep * config.n_mels, fixed.data());
  mel.frames = std::move(fixed);
  return mel;
}

void save_mel_cache(const std::filesystem::path& path, const MelSpectrogram& mel, int sample_rate) {
  io::ByteWriter w;
  w.bytes(kCacheMagic);
  w.u32(kCacheVersion);
  w.u32(static_cast<std::uint32_t>(mel.frame_count()));
  w.u32(static_cast<std::uint32_t>(mel.mel_bins()));
  w.u32(static_cast<std::uint32_t>(mel.hop));
  w.u32(static_cast<std::uint32_t>(sample_rate));
  w.u8(mel.normalized ? 1 : 0);
  w.f32s(mel.frames.storage());
  io::write_file(path, w.data());
}

MelSpectrogram load_mel_cache(const std::filesystem::path& path, int* sample_rate) {
  const std::string bytes = io::read_file(path);
  io::ByteReader r(bytes, path.string());
  if (r.bytes(4) != kCacheMagic) throw DataError(path.string() + ": not a mel cache file");
  const std::uint32_t version = r.u32();
  if (version != kCacheVersion) {
    throw DataError(path.string() + ": unsupported mel cache version " + std::to_string(version));
  }
  const std::uint32_t frames = r.u32(), bins = r.u32(), hop = r.u32(), rate = r.u32();
  const std::uint8_t normalized = r.u8();
  if (frames == 0 || bins == 0 || normalized > 1) throw DataError(path.string() + ": corrupt mel cache header");
  if (r.remaining() != static_cast<std::size_t>(frames) * bins * sizeof(float)) {
    throw DataError(path.string() + ": mel cache payload size does not match header");
  }
  MelSpectrogram mel;
  mel.hop = hop;
  mel.normalized = normalized == 1;
  mel.frames = nn::Tensor<float>({frames, bins});
  r.f32s(mel.frames.storage());
  for (float x : mel.frames.storage()) {
    if (!std::isfinite(x)) throw DataError(path.string() + ": non-finite value in mel cache");
  }
  if (sample_rate) *sample_rate = static_cast<int>(rate);
  return mel;
}

}  // namespace mlms::audio
