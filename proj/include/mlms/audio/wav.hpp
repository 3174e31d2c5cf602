// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mlms::audio {

/// Mono waveform with amplitudes in [-1, 1].
struct PcmClip {
  std::vector<float> samples;
  int sample_rate = 0;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

enum class WavEncoding { pcm8, pcm16, pcm24, pcm32, float32 };

/// Reads a PCM WAV (8/16/24/32-bit integer or 32-bit float, any channel
/// count) and averages the channels. Integer samples are scaled by 2^-(bits-1),
/// so full-scale positive 16-bit is 32767/32768. Throws DataError naming the
/// path on unreadable or unsupported files.
PcmClip load_audio(const std::filesystem::path& path);

/// Parses WAV bytes already in memory; `name` is used in error messages.
PcmClip decode_wav(std::string_view bytes, const std::string& name);

/// Interleaved multi-channel samples. Integer encodings round to nearest and
/// clip to the representable range.
std::string encode_wav(const std::vector<float>& interleaved, int channels, int sample_rate,
                       WavEncoding encoding);

void write_wav(const std::filesystem::path& path, const PcmClip& clip,
               WavEncoding encoding = WavEncoding::pcm16);

/// Rounds every sample to the nearest 16-bit level, exactly as a pcm16
/// write/read round trip would.
void quantize_pcm16(PcmClip& clip);

}  // namespace mlms::audio
