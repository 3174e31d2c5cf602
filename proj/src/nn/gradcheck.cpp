// SPDX-License-Identifier: Apache-2.0
#include "mlms/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mlms/error.hpp"

namespace mlms::nn {
namespace {

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count >= n) return idx;
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double relative_error(double analytic, double numeric, double floor) {
  const double diff = std::abs(analytic - numeric);
  if (diff == 0.0) return 0.0;
  return diff / std::max({std::abs(analytic), std::abs(numeric), floor});
}

}  // namespace

GradCheckResult finite_difference_check(Network<double>& net, const Tensor<double>& input,
                                        const LossFunction& loss, Mode mode,
                                        const GradCheckOptions& options) {
  if (mode == Mode::train) {
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
      const LayerConfig& c = net.layer(i).config();
      if (c.kind == LayerKind::dropout && c.dropout_rate > 0.0) {
        throw UserError("gradient check: disable dropout or use eval mode");
      }
    }
  }

  Tensor<double> x = input;
  net.zero_grad();
  const Tensor<double> out = net.forward(x, mode);
  const std::uint64_t base_signature = net.kink_signature();
  const LossResult<double> base = loss(out);
  const Tensor<double> input_grad = net.backward(base.grad);

  auto evaluate = [&](std::uint64_t* signature) {
    const Tensor<double> o = net.forward(x, mode);
    *signature = net.kink_signature();
    return loss(o).loss;
  };

  GradCheckResult result;
  Rng rng(options.seed);
  const double eps = options.epsilon;

  auto probe = [&](double& slot, double analytic) {
    const double saved = slot;
    std::uint64_t sig_plus = 0;
    std::uint64_t sig_minus = 0;
    slot = saved + eps;
    const double f_plus = evaluate(&sig_plus);
    slot = saved - eps;
    const double f_minus = evaluate(&sig_minus);
    slot = saved;
    if (options.filter_kinks && (sig_plus != base_signature || sig_minus != base_signature)) {
      ++result.skipped_kinks;
      return;
    }
    const double numeric = (f_plus - f_minus) / (2.0 * eps);
    result.max_relative_error =
        std::max(result.max_relative_error, relative_error(analytic, numeric, options.abs_floor));
    ++result.checked;
  };

  // Snapshot analytic gradients first: the probes below overwrite layer caches
  // and, in train mode, BN running statistics (which do not affect the output).
  std::vector<Parameter<double>*> params = net.parameters();
  std::vector<Tensor<double>> grads;
  grads.reserve(params.size());
  for (Parameter<double>* p : params) grads.push_back(p->grad);

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter<double>* p = params[pi];
    for (std::size_t i : sample_indices(p->value.size(), options.samples_per_tensor, rng)) {
      probe(p->value[i], grads[pi][i]);
    }
  }

  if (options.input_samples > 0) {
    for (std::size_t i : sample_indices(x.size(), options.input_samples, rng)) {
      probe(x[i], input_grad[i]);
    }
  }

  net.zero_grad();
  return result;
}

}  // namespace mlms::nn
