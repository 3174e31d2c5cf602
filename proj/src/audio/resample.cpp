// SPDX-License-Identifier: Apache-2.0
#include "mlms/audio/resample.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "mlms/error.hpp"

namespace mlms::audio {

double resample_kernel(double x, double cutoff, const ResampleOptions& options) {
  const double half_width = options.zero_crossings / cutoff;
  if (std::abs(x) >= half_width) return 0.0;
  const double u = x / half_width;
  const double window = std::cyl_bessel_i(0.0, options.kaiser_beta * std::sqrt(1.0 - u * u)) /
                        std::cyl_bessel_i(0.0, options.kaiser_beta);
  const double arg = std::numbers::pi * cutoff * x;
  const double sinc = arg == 0.0 ? 1.0 : std::sin(arg) / arg;
  return cutoff * sinc * window;
}

PcmClip resample(const PcmClip& clip, int target_rate, const ResampleOptions& options) {
  if (target_rate <= 0) throw UserError("resample: target rate must be positive");
  if (clip.sample_rate <= 0) throw UserError("resample: source rate must be positive");
  if (options.zero_crossings < 1) throw UserError("resample: zero_crossings must be >= 1");
  if (clip.sample_rate == target_rate) return clip;

  const std::int64_t g = std::gcd(clip.sample_rate, target_rate);
  const std::int64_t up = target_rate / g;     // output steps per period
  const std::int64_t down = clip.sample_rate / g;  // input steps per period
  const double cutoff = std::min(1.0, static_cast<double>(target_rate) / clip.sample_rate);
  const std::int64_t radius = static_cast<std::int64_t>(std::ceil(options.zero_crossings / cutoff));
  const std::size_t taps = static_cast<std::size_t>(2 * radius);

  // Output n sits at input position n * down / up = base + phase / up.
  // Tap k covers input index base - radius + 1 + k.
  std::vector<double> table(static_cast<std::size_t>(up) * taps);
  for (std::int64_t phase = 0; phase < up; ++phase) {
    const double frac = static_cast<double>(phase) / static_cast<double>(up);
    for (std::size_t k = 0; k < taps; ++k) {
      const double x = frac + static_cast<double>(radius - 1) - static_cast<double>(k);
      table[static_cast<std::size_t>(phase) * taps + k] = resample_kernel(x, cutoff, options);
    }
  }

  const std::int64_t n_in = static_cast<std::int64_t>(clip.samples.size());
  const std::int64_t n_out = std::llround(static_cast<double>(n_in) * up / down);
  PcmClip out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(std::max<std::int64_t>(n_out, 1)));
  for (std::int64_t n = 0; n < static_cast<std::int64_t>(out.samples.size()); ++n) {
    const std::int64_t num = n * down;
    const std::int64_t base = num / up;
    const double* w = table.data() + static_cast<std::size_t>(num % up) * taps;
    const std::int64_t first = base - radius + 1;
    double acc = 0.0;
    double norm = 0.0;
    for (std::size_t k = 0; k < taps; ++k) {
      const std::int64_t j = first + static_cast<std::int64_t>(k);
      if (j < 0 || j >= n_in) continue;
      acc += w[k] * clip.samples[static_cast<std::size_t>(j)];
      norm += w[k];
    }
    out.samples[static_cast<std::size_t>(n)] = norm > 0.0 ? static_cast<float>(acc / norm) : 0.0f;
  }
  return out;
}

}  // namespace mlms::audio
