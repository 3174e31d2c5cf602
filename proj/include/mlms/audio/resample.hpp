// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mlms/audio/wav.hpp"

namespace mlms::audio {

struct ResampleOptions {
  int zero_crossings = 16;  // kernel half-width in periods of the cutoff
  double kaiser_beta = 8.6;
};

/// Kaiser-windowed sinc interpolation with the cutoff at the lower of the two
/// Nyquist frequencies. Output length is round(n * target / source); each
/// output is divided by the sum of the kernel weights it used, so constant
/// signals stay constant up to the clip edges. Equal rates return a copy.
PcmClip resample(const PcmClip& clip, int target_rate, const ResampleOptions& options = {});

/// Kernel value at offset x input samples for the given cutoff (fraction of
/// input Nyquist) and options. Exposed for tests.
double resample_kernel(double x, double cutoff, const ResampleOptions& options);

}  // namespace mlms::audio
