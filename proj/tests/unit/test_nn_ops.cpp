// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mlms/error.hpp"
#include "mlms/nn/gradcheck.hpp"
#include "mlms/nn/ops.hpp"
#include "mlms/nn/optimizer.hpp"
#include "oracles.hpp"

using namespace mlms;
using namespace mlms::nn;

namespace {

// Loss = sum_i r_i * out_i with fixed random r, so every output entry matters.
LossFunction linear_probe(const Shape& out_shape, std::uint64_t seed) {
  Rng rng(seed);
  auto r = std::make_shared<Tensor<double>>(oracle::random_tensor<double>(out_shape, rng));
  return [r](const Tensor<double>& out) {
    LossResult<double> res{0.0, *r};
    for (std::size_t i = 0; i < out.size(); ++i) res.loss += (*r)[i] * out[i];
    return res;
  };
}

Network<double> single(const LayerConfig& c, Rng& init) {
  Network<double> net;
  net.add(c, &init);
  return net;
}

}  // namespace

// ---- conv1d -----------------------------------------------------------------

TEST_CASE("conv1d: k=1 identity kernel reproduces the input") {
  Rng rng(1);
  const Tensor<double> x = oracle::random_tensor<double>({9, 4}, rng);
  Tensor<double> w({1, 4, 4});
  for (std::size_t c = 0; c < 4; ++c) w[c * 4 + c] = 1.0;
  const Tensor<double> y = conv1d_forward(x, w, Tensor<double>({4}));
  CHECK(y == x);
}

TEST_CASE("conv1d: zero weights give the bias on every frame") {
  Rng rng(2);
  const Tensor<double> x = oracle::random_tensor<double>({2, 5, 3}, rng);
  Tensor<double> bias({6});
  for (std::size_t o = 0; o < 6; ++o) bias[o] = 0.5 * o - 1.0;
  const Tensor<double> y = conv1d_forward(x, Tensor<double>({3, 3, 6}), bias);
  REQUIRE(y.shape() == Shape{2, 5, 6});
  for (std::size_t r = 0; r < 10; ++r) {
    for (std::size_t o = 0; o < 6; ++o) CHECK(y[r * 6 + o] == bias[o]);
  }
}

TEST_CASE("conv1d: random 27x128, k=3, 128 filters matches the naive triple loop") {
  Rng rng(3);
  const Tensor<double> x = oracle::random_tensor<double>({27, 128}, rng);
  const Tensor<double> w = oracle::random_tensor<double>({3, 128, 128}, rng);
  const Tensor<double> b = oracle::random_tensor<double>({128}, rng);
  const Tensor<double> y = conv1d_forward(x, w, b);
  const std::vector<double> ref = oracle::conv1d(x.storage(), 27, 128, w.storage(), 3, 128,
                                                 b.storage());
  double worst = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, oracle::rel_err(y[i], ref[i], 1e-12));
  CHECK(worst < 1e-9);
}

TEST_CASE("conv1d: float path agrees with the double oracle") {
  Rng rng(4);
  const Tensor<float> x = oracle::random_tensor<float>({3, 27, 16}, rng);
  const Tensor<float> w = oracle::random_tensor<float>({2, 16, 24}, rng);
  const Tensor<float> b = oracle::random_tensor<float>({24}, rng);
  const Tensor<float> y = conv1d_forward(x, w, b);
  for (std::size_t n = 0; n < 3; ++n) {
    std::vector<double> xin(x.data() + n * 27 * 16, x.data() + (n + 1) * 27 * 16);
    const std::vector<double> ref = oracle::conv1d(
        xin, 27, 16, std::vector<double>(w.storage().begin(), w.storage().end()), 2, 24,
        std::vector<double>(b.storage().begin(), b.storage().end()));
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(y[n * 27 * 24 + i] - ref[i]) < 1e-4);
  }
}

TEST_CASE("conv1d: channel mismatch is rejected") {
  CHECK_THROWS_AS(conv1d_forward(Tensor<double>({4, 3}), Tensor<double>({3, 2, 5}),
                                 Tensor<double>({5})),
                  UserError);
}

TEST_CASE("conv1d preserves the temporal length for every (k, T)") {
  Rng rng(5);
  for (std::size_t k = 1; k <= 6; ++k) {
    for (std::size_t t = 1; t <= 12; ++t) {
      const Tensor<double> y = conv1d_forward(oracle::random_tensor<double>({2, t, 3}, rng),
                                              oracle::random_tensor<double>({k, 3, 2}, rng),
                                              Tensor<double>({2}));
      CHECK(y.shape() == Shape{2, t, 2});
    }
  }
}

TEST_CASE("conv1d_backward: zero upstream gradient gives zero gradients") {
  Rng rng(6);
  const Tensor<double> x = oracle::random_tensor<double>({5, 3}, rng);
  const Tensor<double> w = oracle::random_tensor<double>({3, 3, 4}, rng);
  Tensor<double> cols;
  conv1d_forward(x, w, Tensor<double>({4}), &cols);
  const ConvGrads<double> g = conv1d_backward(Tensor<double>({5, 4}), cols, x.shape(), w);
  for (double v : g.input.storage()) CHECK(v == 0.0);
  for (double v : g.weights.storage()) CHECK(v == 0.0);
  for (double v : g.bias.storage()) CHECK(v == 0.0);
}

TEST_CASE("conv1d_backward: the 1x1 case reduces to dense backward") {
  Rng rng(7);
  const Tensor<double> x = oracle::random_tensor<double>({6, 5}, rng);
  Tensor<double> w3 = oracle::random_tensor<double>({1, 5, 3}, rng);
  Tensor<double> w2 = w3;
  w2.reshape({5, 3});
  const Tensor<double> g = oracle::random_tensor<double>({6, 3}, rng);
  Tensor<double> cols;
  conv1d_forward(x, w3, Tensor<double>({3}), &cols);
  const ConvGrads<double> cg = conv1d_backward(g, cols, x.shape(), w3);
  const DenseGrads<double> dg = dense_backward(g, x, w2);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(cg.input[i] == doctest::Approx(dg.input[i]));
  for (std::size_t i = 0; i < w2.size(); ++i) CHECK(cg.weights[i] == doctest::Approx(dg.weights[i]));
  for (std::size_t i = 0; i < 3; ++i) CHECK(cg.bias[i] == doctest::Approx(dg.bias[i]));
}

TEST_CASE("conv1d_backward matches central differences") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(100 + seed);
    for (const std::size_t k : {2, 3, 4}) {
      Network<double> net = single(LayerConfig::conv1d(3, k, 4), rng);
      const Tensor<double> x = oracle::random_tensor<double>({2, 7, 3}, rng);
      GradCheckOptions opt;
      opt.seed = seed;
      const GradCheckResult r =
          finite_difference_check(net, x, linear_probe({2, 7, 4}, seed), Mode::train, opt);
      CHECK(r.checked > 0);
      CHECK(r.max_relative_error < 1e-6);
    }
  }
}

TEST_CASE("conv1d_backward: independent central-difference oracle on the weights") {
  Rng rng(8);
  Tensor<double> x = oracle::random_tensor<double>({6, 2}, rng);
  Tensor<double> w = oracle::random_tensor<double>({3, 2, 3}, rng);
  const Tensor<double> b = oracle::random_tensor<double>({3}, rng);
  const Tensor<double> r = oracle::random_tensor<double>({6, 3}, rng);
  auto f = [&] {
    const std::vector<double> y = oracle::conv1d(x.storage(), 6, 2, w.storage(), 3, 3, b.storage());
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += r[i] * y[i];
    return s;
  };
  Tensor<double> cols;
  conv1d_forward(x, w, b, &cols);
  const ConvGrads<double> g = conv1d_backward(r, cols, x.shape(), w);
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(oracle::rel_err(g.weights[i], oracle::central_difference(f, w[i], 1e-5)) < 1e-6);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(oracle::rel_err(g.input[i], oracle::central_difference(f, x[i], 1e-5)) < 1e-6);
  }
}

// ---- maxpool ----------------------------------------------------------------

TEST_CASE("maxpool1d: constant input gives constant output") {
  const PoolResult<double> r = maxpool1d_forward(Tensor<double>({10, 3}, 2.5), 3);
  REQUIRE(r.output.shape() == Shape{3, 3});
  for (double v : r.output.storage()) CHECK(v == 2.5);
}

TEST_CASE("maxpool1d: 27 frames with pool 3 give 9") {
  CHECK(maxpool1d_forward(Tensor<double>({27, 128}), 3).output.shape() == Shape{9, 128});
}

TEST_CASE("maxpool1d: random input equals the naive window max exactly") {
  Rng rng(9);
  const Tensor<double> x = oracle::random_tensor<double>({29, 5}, rng);
  const PoolResult<double> r = maxpool1d_forward(x, 4);
  CHECK(r.output.storage() == oracle::window_max(x.storage(), 29, 5, 4));
}

TEST_CASE("maxpool1d output length is floor(T/p) for all T >= p") {
  for (std::size_t p = 1; p <= 5; ++p) {
    for (std::size_t t = p; t <= 20; ++t) {
      CHECK(maxpool1d_forward(Tensor<double>({2, t, 1}), p).output.dim(1) == t / p);
    }
  }
  CHECK_THROWS_AS(maxpool1d_forward(Tensor<double>({2, 3}), 4), UserError);
}

TEST_CASE("maxpool1d_backward routing") {
  SUBCASE("zero gradient") {
    Rng rng(10);
    const Tensor<double> x = oracle::random_tensor<double>({6, 2}, rng);
    const PoolResult<double> r = maxpool1d_forward(x, 3);
    const Tensor<double> g = maxpool1d_backward(Tensor<double>({2, 2}), r.argmax, x.shape());
    for (double v : g.storage()) CHECK(v == 0.0);
  }
  SUBCASE("strictly increasing windows route to the last element") {
    Tensor<double> x({6, 1});
    for (std::size_t t = 0; t < 6; ++t) x[t] = static_cast<double>(t);
    const PoolResult<double> r = maxpool1d_forward(x, 3);
    const Tensor<double> g = maxpool1d_backward(Tensor<double>({2, 1}, 1.0), r.argmax, x.shape());
    CHECK(g.storage() == std::vector<double>{0, 0, 1, 0, 0, 1});
  }
  SUBCASE("ties go to the lowest index") {
    const Tensor<double> x({4, 1}, 1.0);
    const PoolResult<double> r = maxpool1d_forward(x, 2);
    const Tensor<double> g = maxpool1d_backward(Tensor<double>({2, 1}, 1.0), r.argmax, x.shape());
    CHECK(g.storage() == std::vector<double>{1, 0, 1, 0});
  }
  SUBCASE("stale cache") {
    CHECK_THROWS_AS(maxpool1d_backward(Tensor<double>({3, 1}), {0, 1}, {6, 1}), UserError);
  }
  SUBCASE("finite differences away from ties") {
    Rng rng(11);
    Network<double> net = single(LayerConfig::maxpool1d(3), rng);
    const Tensor<double> x = oracle::random_tensor<double>({2, 10, 4}, rng);
    GradCheckOptions opt;
    opt.input_samples = 80;
    const GradCheckResult res =
        finite_difference_check(net, x, linear_probe({2, 3, 4}, 2), Mode::train, opt);
    CHECK(res.checked > 0);
    CHECK(res.max_relative_error < 1e-4);
  }
}

// ---- batchnorm --------------------------------------------------------------

TEST_CASE("batchnorm: eval with running (0, 1) is x / sqrt(1 + eps)") {
  BatchNormState<double> st(3, 0.99, 1e-5);
  st.updates = 1;
  Rng rng(12);
  const Tensor<double> x = oracle::random_tensor<double>({4, 3}, rng);
  const Tensor<double> y = batchnorm_forward(x, st, Mode::eval);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(x[i] / std::sqrt(1 + 1e-5)));
}

TEST_CASE("batchnorm: train mode maps a constant channel to beta") {
  BatchNormState<double> st(2, 0.99, 1e-5);
  st.beta.value[0] = 0.3;
  st.beta.value[1] = -0.7;
  Tensor<double> x({5, 2});
  for (std::size_t r = 0; r < 5; ++r) {
    x[r * 2] = 4.0;
    x[r * 2 + 1] = -2.0;
  }
  const Tensor<double> y = batchnorm_forward(x, st, Mode::train);
  for (std::size_t r = 0; r < 5; ++r) {
    CHECK(y[r * 2] == doctest::Approx(0.3));
    CHECK(y[r * 2 + 1] == doctest::Approx(-0.7));
  }
}

TEST_CASE("batchnorm: train output has per-channel mean 0 and variance 1") {
  Rng rng(13);
  BatchNormState<double> st(4, 0.99, 1e-12);
  const Tensor<double> x = oracle::random_tensor<double>({8, 9, 4}, rng, -3.0, 5.0);
  const Tensor<double> y = batchnorm_forward(x, st, Mode::train);
  for (std::size_t c = 0; c < 4; ++c) {
    double m = 0.0, v = 0.0;
    for (std::size_t r = 0; r < 72; ++r) m += y[r * 4 + c];
    m /= 72;
    for (std::size_t r = 0; r < 72; ++r) v += (y[r * 4 + c] - m) * (y[r * 4 + c] - m);
    v /= 72;
    CHECK(std::abs(m) < 1e-6);
    CHECK(std::abs(v - 1.0) < 1e-6);
  }
}

TEST_CASE("batchnorm: running statistics and error paths") {
  BatchNormState<double> st(1, 0.9, 1e-5);
  CHECK_THROWS_AS(batchnorm_forward(Tensor<double>({3, 1}), st, Mode::eval), UserError);
  CHECK_THROWS_AS(batchnorm_forward(Tensor<double>({1, 1}), st, Mode::train), UserError);
  Tensor<double> a({2, 1});
  a[0] = 1.0;
  a[1] = 3.0;  // mean 2, var 1
  batchnorm_forward(a, st, Mode::train);
  CHECK(st.running_mean[0] == doctest::Approx(2.0));
  CHECK(st.running_var[0] == doctest::Approx(1.0));
  Tensor<double> b({2, 1});
  b[0] = 5.0;
  b[1] = 5.0;  // mean 5, var 0
  batchnorm_forward(b, st, Mode::train);
  CHECK(st.running_mean[0] == doctest::Approx(0.9 * 2.0 + 0.1 * 5.0));
  CHECK(st.running_var[0] == doctest::Approx(0.9));
}

TEST_CASE("batchnorm backward matches central differences in train and eval mode") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(200 + seed);
    Network<double> net = single(LayerConfig::batchnorm(3), rng);
    const Tensor<double> x = oracle::random_tensor<double>({4, 5, 3}, rng);
    GradCheckResult r =
        finite_difference_check(net, x, linear_probe({4, 5, 3}, seed), Mode::train);
    CHECK(r.max_relative_error < 1e-6);
    r = finite_difference_check(net, x, linear_probe({4, 5, 3}, seed), Mode::eval);
    CHECK(r.max_relative_error < 1e-6);
  }
}

// ---- activations ------------------------------------------------------------

TEST_CASE("relu, sigmoid and softmax values") {
  Tensor<double> x({2});
  x[0] = -1.0;
  x[1] = 2.0;
  CHECK(relu_forward(x).storage() == std::vector<double>{0.0, 2.0});
  CHECK(sigmoid(0.0) == 0.5);
  const Tensor<double> s = softmax_forward(Tensor<double>({3, 7}, 0.25));
  for (double v : s.storage()) CHECK(v == doctest::Approx(1.0 / 7.0));
}

TEST_CASE("sigmoid stays inside (0, 1) and softmax rows sum to 1") {
  Rng rng(14);
  const Tensor<double> z = oracle::random_tensor<double>({50, 9}, rng, -800.0, 800.0);
  const Tensor<double> pz = sigmoid_forward(z);
  for (double v : pz.storage()) CHECK((v > 0.0 && v < 1.0));
  const Tensor<float> zf = oracle::random_tensor<float>({50, 9}, rng, -80.0, 80.0);
  const Tensor<float> pf = sigmoid_forward(zf);
  for (float v : pf.storage()) CHECK((v > 0.0f && v < 1.0f));
  const Tensor<double> s = softmax_forward(z);
  for (std::size_t r = 0; r < 50; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 9; ++c) sum += s[r * 9 + c];
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("activation backward passes match central differences") {
  Rng rng(15);
  for (const LayerKind kind : {LayerKind::relu, LayerKind::sigmoid, LayerKind::softmax}) {
    Network<double> net = single(LayerConfig::simple(kind), rng);
    const Tensor<double> x = oracle::random_tensor<double>({3, 6}, rng, -2.0, 2.0);
    GradCheckOptions opt;
    opt.input_samples = 18;
    const GradCheckResult r = finite_difference_check(net, x, linear_probe({3, 6}, 3), Mode::train, opt);
    CHECK(r.checked > 0);
    CHECK(r.max_relative_error < 1e-6);
  }
}

// ---- dense ------------------------------------------------------------------

TEST_CASE("dense: identity weights and zero input") {
  Rng rng(16);
  const Tensor<double> x = oracle::random_tensor<double>({4, 3}, rng);
  Tensor<double> eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0;
  CHECK(dense_forward(x, eye, Tensor<double>({3})) == x);
  const Tensor<double> b = oracle::random_tensor<double>({2}, rng);
  const Tensor<double> y = dense_forward(Tensor<double>({5, 3}), oracle::random_tensor<double>({3, 2}, rng), b);
  for (std::size_t r = 0; r < 5; ++r) {
    CHECK(y[r * 2] == b[0]);
    CHECK(y[r * 2 + 1] == b[1]);
  }
  CHECK_THROWS_AS(dense_forward(x, Tensor<double>({4, 2}), Tensor<double>({2})), UserError);
}

TEST_CASE("dense backward matches central differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(300 + seed);
    Network<double> net = single(LayerConfig::dense(7, 5), rng);
    const GradCheckResult r = finite_difference_check(
        net, oracle::random_tensor<double>({4, 7}, rng), linear_probe({4, 5}, seed), Mode::train);
    CHECK(r.max_relative_error < 1e-6);
  }
}

// ---- dropout ----------------------------------------------------------------

TEST_CASE("dropout: eval and rate 0 are identities") {
  Rng rng(17);
  const Tensor<float> x = oracle::random_tensor<float>({100}, rng);
  CHECK(dropout_forward(x, 0.5, Mode::eval, nullptr) == x);
  CHECK(dropout_forward(x, 0.0, Mode::train, &rng) == x);
  CHECK_THROWS_AS(dropout_forward(x, 1.0, Mode::train, &rng), UserError);
}

TEST_CASE("dropout: survivor fraction and expectation at rate 0.5") {
  Rng rng(18);
  const std::size_t n = 200000;
  const Tensor<double> x({n}, 1.0);
  const Tensor<double> y = dropout_forward(x, 0.5, Mode::train, &rng);
  double survivors = 0.0, mean = 0.0;
  for (double v : y.storage()) {
    if (v != 0.0) survivors += 1.0;
    mean += v;
  }
  CHECK(std::abs(survivors / n - 0.5) < 0.02);
  CHECK(std::abs(mean / n - 1.0) < 0.02);
}

// ---- losses -----------------------------------------------------------------

TEST_CASE("bce: analytic values") {
  Tensor<double> y({2, 2});
  y[0] = 1;
  y[3] = 1;
  Tensor<double> p = y;
  CHECK(bce_loss(p, y) < 1e-6);
  CHECK(bce_loss(Tensor<double>({2, 2}, 0.5), y) == doctest::Approx(std::numbers::ln2));
  CHECK(bce_with_logits(Tensor<double>({2, 2}), y).loss == doctest::Approx(std::numbers::ln2));
  Tensor<double> bad({1});
  bad[0] = 0.5;
  CHECK_THROWS_AS(bce_with_logits(Tensor<double>({1}), bad), UserError);
}

TEST_CASE("bce_with_logits gradient matches central differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(400 + seed);
    Tensor<double> z = oracle::random_tensor<double>({4, 3}, rng, -4.0, 4.0);
    Tensor<double> y({4, 3});
    for (double& v : y.storage()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const LossResult<double> r = bce_with_logits(z, y);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double num = oracle::central_difference([&] { return bce_with_logits(z, y).loss; }, z[i], 1e-5);
      CHECK(oracle::rel_err(r.grad[i], num) < 1e-6);
    }
  }
}

TEST_CASE("cross entropy: analytic values, gradient and range errors") {
  const std::vector<std::uint32_t> cls{0, 3, 9};
  CHECK(softmax_cross_entropy(Tensor<double>({3, 10}), cls).loss == doctest::Approx(std::log(10.0)));
  Tensor<double> dominant({3, 10});
  for (std::size_t n = 0; n < 3; ++n) dominant[n * 10 + cls[n]] = 50.0;
  CHECK(softmax_cross_entropy(dominant, cls).loss < 1e-12);
  CHECK_THROWS_AS(softmax_cross_entropy(Tensor<double>({1, 4}), {4}), UserError);

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(500 + seed);
    Tensor<double> z = oracle::random_tensor<double>({3, 5}, rng, -3.0, 3.0);
    const std::vector<std::uint32_t> t{static_cast<std::uint32_t>(rng.below(5)),
                                       static_cast<std::uint32_t>(rng.below(5)),
                                       static_cast<std::uint32_t>(rng.below(5))};
    const LossResult<double> r = softmax_cross_entropy(z, t);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double num = oracle::central_difference([&] { return softmax_cross_entropy(z, t).loss; }, z[i], 1e-5);
      CHECK(oracle::rel_err(r.grad[i], num) < 1e-6);
    }
  }
}

// ---- optimizer --------------------------------------------------------------

TEST_CASE("sgd_nesterov_step") {
  SUBCASE("zero gradient and velocity leave the value unchanged") {
    Parameter<double> p(Tensor<double>({3}, 1.5));
    std::vector<Parameter<double>*> ps{&p};
    sgd_nesterov_step<double>(ps, 0.1);
    CHECK(p.value.storage() == std::vector<double>(3, 1.5));
  }
  SUBCASE("first step moves by (1 + mu) * lr * g") {
    Parameter<double> p(Tensor<double>({1}, 2.0));
    p.grad[0] = 3.0;
    std::vector<Parameter<double>*> ps{&p};
    sgd_nesterov_step<double>(ps, 0.01, 0.9);
    CHECK(p.value[0] == doctest::Approx(2.0 - 1.9 * 0.01 * 3.0));
    CHECK(p.grad[0] == 0.0);
  }
  SUBCASE("lr = 0 from rest leaves values unchanged") {
    Rng rng(19);
    Parameter<float> p(oracle::random_tensor<float>({37}, rng));
    p.grad = oracle::random_tensor<float>({37}, rng);
    const Tensor<float> before = p.value;
    std::vector<Parameter<float>*> ps{&p};
    sgd_nesterov_step<float>(ps, 0.0);
    CHECK(p.value == before);
  }
  SUBCASE("quadratic bowl matches a scalar simulation and converges") {
    Parameter<double> p(Tensor<double>({1}, 1.0));
    std::vector<Parameter<double>*> ps{&p};
    double x = 1.0, v = 0.0;  // independent scalar simulation of the same recurrence
    std::vector<double> trace;
    for (int step = 0; step < 100; ++step) {
      p.grad[0] = 2.0 * p.value[0];
      sgd_nesterov_step<double>(ps, 0.01, 0.9);
      const double g = 2.0 * x;
      v = 0.9 * v - 0.01 * g;
      x = x + 0.9 * v - 0.01 * g;
      CHECK(p.value[0] == doctest::Approx(x).epsilon(1e-12));
      trace.push_back(std::abs(x));
    }
    CHECK(trace.back() < 0.05);
    CHECK(trace.back() < trace[10]);
  }
}

// ---- gradient checker -------------------------------------------------------

TEST_CASE("finite_difference_check on a dense-only toy net") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(600 + seed);
    Network<double> net;
    net.add(LayerConfig::dense(6, 5), &rng);
    net.add(LayerConfig::dense(5, 3), &rng);
    Tensor<double> y({4, 3});
    for (double& v : y.storage()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const GradCheckResult r = finite_difference_check(
        net, oracle::random_tensor<double>({4, 6}, rng),
        [&](const Tensor<double>& out) { return bce_with_logits(out, y); }, Mode::train);
    CHECK(r.checked > 30);
    CHECK(r.max_relative_error < 1e-6);
  }
}

TEST_CASE("finite_difference_check: zero input and zero targets give error 0") {
  Network<double> net;
  net.add(LayerConfig::dense(4, 3), nullptr);  // zero weights
  const GradCheckResult r = finite_difference_check(
      net, Tensor<double>({2, 4}),
      [](const Tensor<double>& out) {
        LossResult<double> res{0.0, Tensor<double>(out.shape())};
        for (std::size_t i = 0; i < out.size(); ++i) {
          res.loss += out[i] * out[i];
          res.grad[i] = 2.0 * out[i];
        }
        return res;
      },
      Mode::train);
  CHECK(r.max_relative_error == 0.0);
}

TEST_CASE("finite_difference_check rejects active dropout in train mode") {
  Network<double> net;
  net.add(LayerConfig::dropout(0.5), nullptr);
  CHECK_THROWS_AS(finite_difference_check(net, Tensor<double>({2, 2}), linear_probe({2, 2}, 0), Mode::train),
                  UserError);
}

TEST_CASE("eval-mode network forward is bitwise deterministic") {
  Rng rng(20);
  Network<float> net;
  net.add(LayerConfig::conv1d(8, 3, 6), &rng);
  net.add(LayerConfig::batchnorm(6), nullptr);
  net.add(LayerConfig::simple(LayerKind::relu), nullptr);
  net.add(LayerConfig::maxpool1d(2), nullptr);
  net.add(LayerConfig::simple(LayerKind::flatten), nullptr);
  net.add(LayerConfig::dropout(0.5), nullptr);
  net.add(LayerConfig::dense(30, 4), &rng);
  Rng drop(1);
  net.set_rng(&drop);
  const Tensor<float> x = oracle::random_tensor<float>({3, 10, 8}, rng);
  net.forward(x, Mode::train);
  const Tensor<float> a = net.forward(x, Mode::eval);
  const Tensor<float> b = net.forward(x, Mode::eval);
  CHECK(a == b);
  Network<float> copy = net;
  CHECK(copy.forward(x, Mode::eval) == a);
}
