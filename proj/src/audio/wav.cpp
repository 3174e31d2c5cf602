// SPDX-License-Identifier: Apache-2.0
#include "mlms/audio/wav.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "mlms/error.hpp"
#include "mlms/io/binary.hpp"

namespace mlms::audio {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct Format {
  std::uint16_t tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

std::int32_t quantize(float x, int bits) {
  const double scale = std::ldexp(1.0, bits - 1);
  const double q = std::nearbyint(static_cast<double>(x) * scale);
  return static_cast<std::int32_t>(std::clamp(q, -scale, scale - 1.0));
}

}  // namespace

PcmClip decode_wav(std::string_view bytes, const std::string& name) {
  io::ByteReader r(bytes, name);
  if (r.bytes(4) != "RIFF") throw DataError(name + ": not a RIFF file");
  r.u32();
  if (r.bytes(4) != "WAVE") throw DataError(name + ": not a WAVE file");

  Format fmt;
  bool have_fmt = false;
  std::string_view payload;
  bool have_data = false;
  while (r.remaining() >= 8 && !have_data) {
    const std::string_view id = r.bytes(4);
    const std::uint32_t size = r.u32();
    if (id == "fmt ") {
      if (size < 16) throw DataError(name + ": fmt chunk too short");
      io::ByteReader f(r.bytes(size), name);
      fmt.tag = f.u16();
      fmt.channels = f.u16();
      fmt.rate = f.u32();
      f.u32();
      fmt.block_align = f.u16();
      fmt.bits = f.u16();
      if (fmt.tag == kFormatExtensible) {
        if (size < 40) throw DataError(name + ": extensible fmt chunk too short");
        f.skip(8);
        fmt.tag = f.u16();  // first two bytes of the sub-format GUID
      }
      have_fmt = true;
      if ((size & 1u) && r.remaining() > 0) r.skip(1);
    } else if (id == "data") {
      if (!have_fmt) throw DataError(name + ": data chunk before fmt chunk");
      // Tolerate a truncated final chunk as long as whole frames remain.
      payload = r.bytes(std::min<std::size_t>(size, r.remaining()));
      have_data = true;
    } else {
      r.skip(std::min<std::size_t>(size + (size & 1u), r.remaining()));
    }
  }
  if (!have_fmt) throw DataError(name + ": missing fmt chunk");
  if (!have_data) throw DataError(name + ": missing data chunk");
  if (fmt.channels == 0) throw DataError(name + ": zero channels");
  if (fmt.rate == 0) throw DataError(name + ": zero sample rate");

  const bool is_int = fmt.tag == kFormatPcm &&
                      (fmt.bits == 8 || fmt.bits == 16 || fmt.bits == 24 || fmt.bits == 32);
  const bool is_float = fmt.tag == kFormatFloat && fmt.bits == 32;
  if (!is_int && !is_float) {
    throw DataError(name + ": unsupported encoding (format tag " + std::to_string(fmt.tag) +
                    ", " + std::to_string(fmt.bits) + " bits)");
  }
  const std::size_t sample_bytes = fmt.bits / 8;
  const std::size_t frame_bytes = sample_bytes * fmt.channels;
  const std::size_t frames = payload.size() / frame_bytes;
  if (frames == 0) throw DataError(name + ": no audio samples");

  PcmClip clip;
  clip.sample_rate = static_cast<int>(fmt.rate);
  clip.samples.resize(frames);
  io::ByteReader d(payload, name);
  const double int_scale = std::ldexp(1.0, -(fmt.bits - 1));
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt.channels; ++c) {
      double v = 0.0;
      switch (fmt.bits) {
        case 8: v = (static_cast<int>(d.u8()) - 128) * int_scale; break;
        case 16: v = d.i16() * int_scale; break;
        case 24: {
          std::uint32_t u = d.u8();
          u |= static_cast<std::uint32_t>(d.u8()) << 8;
          u |= static_cast<std::uint32_t>(d.u8()) << 16;
          const std::int32_t s = static_cast<std::int32_t>(u << 8) >> 8;
          v = s * int_scale;
          break;
        }
        default:
          if (is_float) {
            const float f = d.f32();
            if (!std::isfinite(f)) throw DataError(name + ": non-finite float sample");
            v = std::clamp(static_cast<double>(f), -1.0, 1.0);
          } else {
            v = static_cast<std::int32_t>(d.u32()) * int_scale;
          }
      }
      acc += v;
    }
    clip.samples[i] = static_cast<float>(acc / fmt.channels);
  }
  return clip;
}

PcmClip load_audio(const std::filesystem::path& path) {
  const std::string bytes = io::read_file(path);
  return decode_wav(bytes, path.string());
}

std::string encode_wav(const std::vector<float>& interleaved, int channels, int sample_rate,
                       WavEncoding encoding) {
  if (channels <= 0 || sample_rate <= 0 || interleaved.size() % channels != 0) {
    throw UserError("encode_wav: inconsistent channel count or sample rate");
  }
  int bits = 16;
  std::uint16_t tag = kFormatPcm;
  switch (encoding) {
    case WavEncoding::pcm8: bits = 8; break;
    case WavEncoding::pcm16: bits = 16; break;
    case WavEncoding::pcm24: bits = 24; break;
    case WavEncoding::pcm32: bits = 32; break;
    case WavEncoding::float32: bits = 32; tag = kFormatFloat; break;
  }
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(interleaved.size() * (bits / 8));
  io::ByteWriter w;
  w.bytes("RIFF");
  w.u32(36 + data_bytes + (data_bytes & 1u));
  w.bytes("WAVE");
  w.bytes("fmt ");
  w.u32(16);
  w.u16(tag);
  w.u16(static_cast<std::uint16_t>(channels));
  w.u32(static_cast<std::uint32_t>(sample_rate));
  w.u32(static_cast<std::uint32_t>(sample_rate * channels * (bits / 8)));
  w.u16(static_cast<std::uint16_t>(channels * (bits / 8)));
  w.u16(static_cast<std::uint16_t>(bits));
  w.bytes("data");
  w.u32(data_bytes);
  for (float x : interleaved) {
    switch (encoding) {
      case WavEncoding::pcm8: w.u8(static_cast<std::uint8_t>(quantize(x, 8) + 128)); break;
      case WavEncoding::pcm16: w.i16(static_cast<std::int16_t>(quantize(x, 16))); break;
      case WavEncoding::pcm24: {
        const std::uint32_t u = static_cast<std::uint32_t>(quantize(x, 24));
        w.u8(static_cast<std::uint8_t>(u));
        w.u8(static_cast<std::uint8_t>(u >> 8));
        w.u8(static_cast<std::uint8_t>(u >> 16));
        break;
      }
      case WavEncoding::pcm32: w.u32(static_cast<std::uint32_t>(quantize(x, 32))); break;
      case WavEncoding::float32: w.f32(x); break;
    }
  }
  if (data_bytes & 1u) w.u8(0);
  return w.release();
}

void write_wav(const std::filesystem::path& path, const PcmClip& clip, WavEncoding encoding) {
  io::write_file(path, encode_wav(clip.samples, 1, clip.sample_rate, encoding));
}

void quantize_pcm16(PcmClip& clip) {
  for (float& x : clip.samples) x = static_cast<float>(quantize(x, 16) * std::ldexp(1.0, -15));
}

}  // namespace mlms::audio
