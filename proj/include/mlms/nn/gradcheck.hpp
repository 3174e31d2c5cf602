// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>

#include "mlms/nn/network.hpp"

namespace mlms::nn {

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// Entries sampled per parameter tensor (all entries when the tensor is smaller).
  std::size_t samples_per_tensor = 12;
  /// Input entries sampled for the input gradient (0 disables the input check).
  std::size_t input_samples = 12;
  /// Denominator floor of the relative error. A central difference at
  /// eps = 1e-5 on an O(1) loss carries ~1e-11 of round-off, which this keeps
  /// from dominating exactly-zero gradients (e.g. a bias feeding batch norm).
  double abs_floor = 1e-6;
  /// Skip entries whose +/- epsilon perturbation flips a ReLU or max-pool branch.
  bool filter_kinks = true;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
};

using LossFunction = std::function<LossResult<double>(const Tensor<double>& output)>;

/// Compares analytic gradients against central differences
/// (f(x + eps) - f(x - eps)) / (2 eps) on a random subset of parameter and
/// input entries. Relative error is |a - n| / max(|a|, |n|, abs_floor); two
/// zero gradients count as error 0. Train mode is rejected when the network
/// contains active dropout, since the mask would differ between evaluations.
GradCheckResult finite_difference_check(Network<double>& net, const Tensor<double>& input,
                                        const LossFunction& loss, Mode mode,
                                        const GradCheckOptions& options = {});

}  // namespace mlms::nn
