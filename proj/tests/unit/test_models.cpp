// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "mlms/error.hpp"
#include "mlms/eval/metrics.hpp"
#include "mlms/model/aggregator.hpp"
#include "mlms/model/global_classifier.hpp"
#include "mlms/model/local_cnn.hpp"
#include "mlms/nn/gradcheck.hpp"
#include "oracles.hpp"

using namespace mlms;
using namespace mlms::model;

namespace {

// Fresh networks need one train-mode pass before eval mode has BN statistics.
template <typename T>
void warm_up(nn::Network<T>& net, std::size_t frames, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  Rng drop(seed + 1);
  net.set_rng(&drop);
  net.forward(oracle::random_tensor<T>({4, frames, 128}, rng, lo, hi), nn::Mode::train);
  net.set_rng(nullptr);
}

LocalModel tiny_checkpoint(std::size_t scale, std::size_t tags, std::uint64_t seed) {
  LocalModel m;
  m.spec = build_local_model(scale, tags);
  Rng init(seed);
  m.net = make_local_network<float>(m.spec, &init);
  warm_up(m.net, scale, seed + 100);
  m.norm = {0.0, 1.0};
  return m;
}

audio::MelSpectrogram random_mel(std::size_t frames, Rng& rng) {
  audio::MelSpectrogram m;
  m.frames = oracle::random_tensor<float>({frames, 128}, rng, -2.0, 2.0);
  m.normalized = true;
  return m;
}

// Copy of `mel` with its first n segments of length f reordered by perm.
audio::MelSpectrogram permute_segments(const audio::MelSpectrogram& mel, std::size_t f,
                                       const std::vector<std::size_t>& perm) {
  audio::MelSpectrogram out = mel;
  for (std::size_t s = 0; s < perm.size(); ++s) {
    std::copy_n(mel.frames.data() + perm[s] * f * 128, f * 128, out.frames.data() + s * f * 128);
  }
  return out;
}

}  // namespace

// ---- local_cnn --------------------------------------------------------------

TEST_CASE("build_local_model: block lengths and channels") {
  const LocalModelSpec s27 = build_local_model(27, 50);
  CHECK(s27.block_lengths() == std::vector<std::size_t>{27, 9, 3});
  std::vector<std::size_t> ch;
  for (const ConvBlock& b : s27.conv_blocks) ch.push_back(b.filters);
  CHECK(ch == std::vector<std::size_t>{128, 128, 256});
  CHECK(build_local_model(18, 5).block_lengths() == std::vector<std::size_t>{18, 6, 2});
  CHECK(build_local_model(54, 5).block_lengths() == std::vector<std::size_t>{54, 18, 6, 2});
  CHECK(build_local_model(108, 5).block_lengths() == std::vector<std::size_t>{108, 36, 12, 4, 2});
  CHECK(build_local_model(216, 5).block_lengths() == std::vector<std::size_t>{216, 72, 24, 8, 4, 2});
  CHECK_THROWS_AS(build_local_model(30, 5), UserError);
  LocalModelSpec bad = s27;
  bad.conv_blocks.pop_back();
  CHECK_THROWS_AS(bad.validate(), UserError);
  CHECK(LocalModelSpec::from_json(s27.to_json()) == s27);
}

TEST_CASE("local networks: output width equals the tag count and taps have the block shapes") {
  for (const std::size_t scale : kScales) {
    LocalModel m = tiny_checkpoint(scale, 7, scale);
    Rng rng(scale);
    std::vector<nn::Tensor<float>> taps;
    const nn::Tensor<float> out = m.net.forward(oracle::random_tensor<float>({3, scale, 128}, rng), nn::Mode::eval, &taps);
    CHECK(out.shape() == nn::Shape{3, 7});
    const std::vector<std::size_t> lengths = m.spec.block_lengths();
    REQUIRE(taps.size() == m.spec.conv_blocks.size());
    for (std::size_t b = 0; b < taps.size(); ++b) {
      CHECK(taps[b].shape() == nn::Shape{3, lengths[b], m.spec.conv_blocks[b].filters});
    }
  }
}

TEST_CASE("segment_clip counts and contents") {
  const std::map<std::size_t, std::size_t> expected{{18, 69}, {27, 46}, {54, 23}, {108, 11}, {216, 5}};
  for (const auto& [scale, count] : expected) CHECK(segment_count(1250, scale) == count);
  Rng rng(1);
  const audio::MelSpectrogram clip = random_mel(27, rng);
  const SegmentBatch one = segment_clip(clip, 27, "c1");
  CHECK(one.segments.shape() == nn::Shape{1, 27, 128});
  CHECK(one.segments.storage() == clip.frames.storage());
  CHECK(one.clip_ids == std::vector<std::string>{"c1"});
  const audio::MelSpectrogram longer = random_mel(100, rng);
  const SegmentBatch b = segment_clip(longer, 27);
  REQUIRE(b.segments.dim(0) == 3);
  CHECK(b.segments[2 * 27 * 128 + 5] == longer.frames[54 * 128 + 5]);
  CHECK_THROWS_AS(segment_clip(random_mel(20, rng), 27, "short"), DataError);
}

TEST_CASE("full 27-frame local model passes the finite-difference check with frozen BN") {
  const LocalModelSpec spec = build_local_model(27, 4);
  Rng init(7);
  nn::Network<double> net = make_local_network<double>(spec, &init);
  warm_up(net, 27, 8);
  Rng rng(9);
  const nn::Tensor<double> x = oracle::random_tensor<double>({2, 27, 128}, rng);
  nn::Tensor<double> y({2, 4});
  for (double& v : y.storage()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
  nn::GradCheckOptions opt;
  opt.samples_per_tensor = 6;
  const nn::GradCheckResult r = nn::finite_difference_check(
      net, x, [&](const nn::Tensor<double>& out) { return nn::bce_with_logits(out, y); }, nn::Mode::eval, opt);
  CHECK(r.checked > 100);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("train-mode gradient check of a conv/BN/pool stack without dropout") {
  LocalModelSpec spec = build_local_model(18, 3);
  spec.dropout = 0.0;
  for (ConvBlock& b : spec.conv_blocks) b.filters = 8;
  spec.fc_units = 6;
  spec.mel_bins = 5;
  Rng init(11);
  nn::Network<double> net = make_local_network<double>(spec, &init);
  Rng rng(12);
  const nn::Tensor<double> x = oracle::random_tensor<double>({3, 18, 5}, rng);
  nn::Tensor<double> y({3, 3});
  for (double& v : y.storage()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
  const nn::GradCheckResult r = nn::finite_difference_check(
      net, x, [&](const nn::Tensor<double>& out) { return nn::bce_with_logits(out, y); }, nn::Mode::train);
  CHECK(r.checked > 50);
  CHECK(r.max_relative_error < 1e-4);
}

namespace {

struct TinyData {
  std::vector<audio::MelSpectrogram> mels;
  std::vector<LabeledClip> clips;
};

TinyData tiny_dataset(std::size_t n, std::size_t frames, std::uint64_t seed) {
  TinyData d;
  Rng rng(seed);
  d.mels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.mels[i].frames = oracle::random_tensor<float>({frames, 128}, rng, 0.0, 3.0);
    std::vector<float> y{rng.bernoulli(0.5) ? 1.0f : 0.0f, rng.bernoulli(0.5) ? 1.0f : 0.0f};
    d.clips.push_back({"clip" + std::to_string(i), &d.mels[i], y});
  }
  return d;
}

}  // namespace

TEST_CASE("train_local: lr 0 keeps parameters, fixed seed gives identical histories") {
  const TinyData d = tiny_dataset(6, 54, 3);
  const std::span<const LabeledClip> all(d.clips);
  const LocalModelSpec spec = build_local_model(27, 2);
  const audio::NormStats norm = audio::fit_norm_stats(d.mels);
  TrainConfig cfg;
  cfg.max_epochs = 1;
  cfg.lr = 0.0;
  cfg.batch_size = 4;
  Rng init = Rng::stream(cfg.seed, "init");
  nn::Network<float> fresh = make_local_network<float>(spec, &init);
  LocalTrainResult r = train_local(spec, all.first(4), all.subspan(4), norm, {}, cfg);
  const auto before = fresh.parameters();
  const auto after = r.model.net.parameters();
  REQUIRE(before.size() == after.size());
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i]->value == after[i]->value);

  cfg.lr = 0.01;
  cfg.max_epochs = 3;
  const LocalTrainResult a = train_local(spec, all.first(4), all.subspan(4), norm, {}, cfg);
  const LocalTrainResult b = train_local(spec, all.first(4), all.subspan(4), norm, {}, cfg);
  CHECK(a.history.to_csv() == b.history.to_csv());
  CHECK(a.history.epochs.size() == 3);
  cfg.seed = 99;
  const LocalTrainResult c = train_local(spec, all.first(4), all.subspan(4), norm, {}, cfg);
  CHECK(c.history.to_csv() != a.history.to_csv());
  CHECK_THROWS_AS(train_local(spec, all.first(0), all.subspan(4), norm, {}, cfg), UserError);
}

TEST_CASE("history CSV layout") {
  History h;
  h.epochs.push_back({1, 0.5, 0.25, 0.01});
  CHECK(h.to_csv() == "epoch,train_loss,valid_loss,lr\n1,0.5,0.25,0.01\n");
}

TEST_CASE("predict_local_clip") {
  LocalModel m = tiny_checkpoint(27, 5, 21);
  Rng rng(22);
  SUBCASE("single segment equals the segment's own prediction") {
    const audio::MelSpectrogram clip = random_mel(27, rng);
    const std::vector<double> p = predict_local_clip(m, clip);
    nn::Tensor<float> seg = clip.frames;
    seg.reshape({1, 27, 128});
    const nn::Tensor<float> logit = m.net.forward(seg, nn::Mode::eval);
    for (std::size_t j = 0; j < 5; ++j) CHECK(p[j] == nn::sigmoid<double>(logit[j]));
  }
  SUBCASE("repeated identical segments equal one segment") {
    const audio::MelSpectrogram one = random_mel(27, rng);
    audio::MelSpectrogram many;
    many.normalized = true;
    many.frames = nn::Tensor<float>({27 * 7 + 3, 128});
    for (std::size_t s = 0; s < 7; ++s) std::copy_n(one.frames.data(), 27 * 128, many.frames.data() + s * 27 * 128);
    const std::vector<double> a = predict_local_clip(m, one);
    const std::vector<double> b = predict_local_clip(m, many);
    for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(a[j] - b[j]) < 1e-12);
  }
  SUBCASE("random clip matches per-segment forward then average; permutation invariant") {
    const audio::MelSpectrogram clip = random_mel(1250, rng);
    const std::vector<double> p = predict_local_clip(m, clip);
    std::vector<double> ref(5, 0.0);
    for (std::size_t s = 0; s < 46; ++s) {
      nn::Tensor<float> seg({1, 27, 128});
      std::copy_n(clip.frames.data() + s * 27 * 128, 27 * 128, seg.data());
      const nn::Tensor<float> logit = m.net.forward(seg, nn::Mode::eval);
      for (std::size_t j = 0; j < 5; ++j) ref[j] += 1.0 / (1.0 + std::exp(-static_cast<double>(logit[j]))) / 46.0;
    }
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(std::abs(p[j] - ref[j]) < 1e-6);
      CHECK((p[j] > 0.0 && p[j] < 1.0));
    }
    std::vector<std::size_t> perm(46);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<std::size_t>(perm));
    CHECK(predict_local_clip(m, permute_segments(clip, 27, perm)) == p);
    CHECK(predict_local_clip(m, clip) == p);
  }
  SUBCASE("unnormalised input uses the model's stats") {
    m.norm = {1.0, 2.0};
    audio::MelSpectrogram raw = random_mel(54, rng);
    raw.normalized = false;
    CHECK(predict_local_clip(m, raw) == predict_local_clip(m, audio::normalize(raw, m.norm)));
  }
}

// ---- aggregator -------------------------------------------------------------

TEST_CASE("extract_segment_features shapes for the 27-frame model") {
  LocalModel m = tiny_checkpoint(27, 3, 31);
  Rng rng(32);
  const LayerActivationSet a = extract_segment_features(m, oracle::random_tensor<float>({27, 128}, rng));
  REQUIRE(a.layers.size() == 3);
  CHECK(a.layers[0].shape() == nn::Shape{1, 27, 128});
  CHECK(a.layers[1].shape() == nn::Shape{1, 9, 128});
  CHECK(a.layers[2].shape() == nn::Shape{1, 3, 256});
  for (float v : a.layers[1].storage()) CHECK(v >= 0.0f);
  CHECK_THROWS_AS(extract_segment_features(m, nn::Tensor<float>({26, 128})), UserError);
  const LayerActivationSet only2 = extract_segment_features(m, oracle::random_tensor<float>({27, 128}, rng), {1});
  CHECK(only2.layers.size() == 1);
  CHECK(only2.layers[0].shape() == nn::Shape{1, 9, 128});
}

TEST_CASE("zero segment with zero biases and beta gives constant activations per channel") {
  LocalModel m;
  m.spec = build_local_model(27, 3);
  Rng init(33);
  m.net = make_local_network<float>(m.spec, &init);
  // All-zero input: every BN layer records mean 0 and variance 0.
  Rng drop(1);
  m.net.set_rng(&drop);
  m.net.forward(nn::Tensor<float>({2, 27, 128}), nn::Mode::train);
  const LayerActivationSet a = extract_segment_features(m, nn::Tensor<float>({27, 128}));
  for (const nn::Tensor<float>& t : a.layers) {
    for (float v : t.storage()) CHECK(v == 0.0f);
  }
  // Positive beta in the first BN: layer 1 becomes ReLU(beta), constant over time.
  Rng rng(34);
  nn::Tensor<float>* beta = nullptr;
  for (const auto& s : m.net.state()) {
    if (s.name == "1.beta") beta = s.tensor;
  }
  REQUIRE(beta);
  for (float& v : beta->storage()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  const LayerActivationSet b = extract_segment_features(m, nn::Tensor<float>({27, 128}));
  for (std::size_t c = 0; c < 128; ++c) {
    for (std::size_t t = 0; t < 27; ++t) CHECK(b.layers[0][t * 128 + c] == std::max(0.0f, (*beta)[c]));
  }
  LayerActivationSet twice = extract_segment_features(m, nn::Tensor<float>({27, 128}));
  for (std::size_t i = 0; i < 3; ++i) CHECK(twice.layers[i] == b.layers[i]);
}

TEST_CASE("segment_max_pool and clip_average") {
  Rng rng(35);
  CHECK(segment_max_pool(nn::Tensor<float>({6, 4}, 1.5f)).storage() == std::vector<float>(4, 1.5f));
  const nn::Tensor<float> row = oracle::random_tensor<float>({1, 9}, rng);
  CHECK(segment_max_pool(row).storage() == row.storage());
  const nn::Tensor<float> x = oracle::random_tensor<float>({13, 11}, rng);
  const nn::Tensor<float> mp = segment_max_pool(x);
  for (std::size_t c = 0; c < 11; ++c) {
    float best = x[c];
    for (std::size_t t = 1; t < 13; ++t) best = std::max(best, x[t * 11 + c]);
    CHECK(mp[c] == best);
  }
  CHECK(clip_average(row) == std::vector<double>(row.storage().begin(), row.storage().end()));
  nn::Tensor<float> pm({2, 9});
  for (std::size_t c = 0; c < 9; ++c) {
    pm[c] = row[c];
    pm[9 + c] = -row[c];
  }
  for (double v : clip_average(pm)) CHECK(v == 0.0);
  const nn::Tensor<float> r = oracle::random_tensor<float>({46, 128}, rng, 0.0, 4.0);
  const std::vector<double> avg = clip_average(r);
  for (std::size_t c = 0; c < 128; ++c) {
    double s = 0.0;
    for (std::size_t n = 0; n < 46; ++n) s += r[n * 128 + c];
    CHECK(oracle::rel_err(avg[c], s / 46.0) < 1e-9);
  }
}

TEST_CASE("aggregate_clip dimensions, bounds and identical segments") {
  LocalModel m = tiny_checkpoint(27, 3, 41);
  Rng rng(42);
  const audio::MelSpectrogram clip = random_mel(1250, rng);
  const ClipFeature all = aggregate_clip(m, clip);
  CHECK(all.values.size() == 512);
  check_provenance(all.provenance, 512);
  CHECK(aggregate_clip(m, clip, {2}).values.size() == 256);
  CHECK_THROWS_AS(aggregate_clip(m, clip, {3}), UserError);

  // Mean of segment maxima lies between their extremes.
  const SegmentBatch batch = segment_clip(clip, 27);
  const LayerActivationSet acts = extract_segment_features(m, batch.segments);
  std::size_t off = 0;
  for (const nn::Tensor<float>& layer : acts.layers) {
    const nn::Tensor<float> maxes = segment_max_pool(layer);
    const std::size_t c = maxes.dim(1);
    for (std::size_t j = 0; j < c; ++j) {
      float lo = maxes[j], hi = maxes[j];
      for (std::size_t s = 1; s < maxes.dim(0); ++s) {
        lo = std::min(lo, maxes[s * c + j]);
        hi = std::max(hi, maxes[s * c + j]);
      }
      CHECK(all.values[off + j] >= lo);
      CHECK(all.values[off + j] <= hi);
    }
    off += c;
  }

  const audio::MelSpectrogram one = random_mel(27, rng);
  audio::MelSpectrogram rep;
  rep.normalized = true;
  rep.frames = nn::Tensor<float>({27 * 5, 128});
  for (std::size_t s = 0; s < 5; ++s) std::copy_n(one.frames.data(), 27 * 128, rep.frames.data() + s * 27 * 128);
  nn::Tensor<float> seg = one.frames;
  seg.reshape({1, 27, 128});
  const LayerActivationSet single = extract_segment_features(m, seg);
  std::vector<float> expect;
  for (const nn::Tensor<float>& layer : single.layers) {
    const nn::Tensor<float> mp = segment_max_pool(layer);
    expect.insert(expect.end(), mp.storage().begin(), mp.storage().end());
  }
  CHECK(aggregate_clip(m, rep).values == expect);
}

TEST_CASE("aggregation is bitwise invariant to segment order and deterministic") {
  LocalModel m = tiny_checkpoint(18, 3, 51);
  Rng rng(52);
  const audio::MelSpectrogram clip = random_mel(1250, rng);
  const ClipFeature base = aggregate_clip(m, clip);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<std::size_t> perm(69);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<std::size_t>(perm));
    CHECK(aggregate_clip(m, permute_segments(clip, 18, perm)).values == base.values);
  }
  CHECK(aggregate_clip(m, clip).values == base.values);
}

TEST_CASE("concat_multiscale dimensions over all scale subsets") {
  std::map<std::size_t, LocalModel> models;
  for (const std::size_t s : kScales) models.emplace(s, tiny_checkpoint(s, 2, 60 + s));
  Rng rng(61);
  const audio::MelSpectrogram clip = random_mel(1250, rng);
  std::map<std::size_t, ClipFeature> parts;
  for (auto& [s, m] : models) parts[s] = aggregate_clip(m, clip);
  const std::map<std::size_t, std::size_t> dims{{18, 512}, {27, 512}, {54, 768}, {108, 1024}, {216, 1280}};
  for (const auto& [s, d] : dims) CHECK(parts[s].values.size() == d);

  for (unsigned mask = 1; mask < 32; ++mask) {
    FeatureSelection sel;
    std::size_t expect = 0;
    for (std::size_t i = 0; i < 5; ++i) {
      if (mask & (1u << i)) {
        sel.scales.push_back(kScales[i]);
        for (const ConvBlock& b : models.at(kScales[i]).spec.conv_blocks) expect += b.filters;
      }
    }
    const ClipFeature f = concat_multiscale(parts, sel);
    CHECK(f.values.size() == expect);
    check_provenance(f.provenance, f.values.size());
    std::size_t from_prov = 0;
    for (const ProvenanceEntry& e : f.provenance) from_prov += e.channels;
    CHECK(from_prov == expect);
    for (std::size_t i = 1; i < f.provenance.size(); ++i) {
      const auto& a = f.provenance[i - 1];
      const auto& b = f.provenance[i];
      CHECK((a.input_frames < b.input_frames || (a.input_frames == b.input_frames && a.layer < b.layer)));
    }
  }
  FeatureSelection three{{18, 27, 54}, {}};
  CHECK(concat_multiscale(parts, three).values.size() == 1792);
  FeatureSelection single{{27}, {}};
  const ClipFeature f27 = concat_multiscale(parts, single);
  CHECK(f27.values == parts[27].values);
  CHECK(f27.provenance == parts[27].provenance);
  std::map<std::size_t, ClipFeature> missing = parts;
  missing.erase(54);
  CHECK_THROWS_AS(concat_multiscale(missing, three), UserError);
  CHECK(FeatureSelection::from_json(three.to_json()) == three);
  CHECK(provenance_from_json(provenance_to_json(f27.provenance)) == f27.provenance);
}

// ---- global_classifier ------------------------------------------------------

namespace {

Provenance flat_provenance(std::size_t dim) { return {{27, 0, dim, 0}}; }

FeatureDataset random_features(std::size_t n, std::size_t dim, std::size_t tags, Rng& rng) {
  std::vector<ClipFeature> f(n);
  std::vector<std::vector<float>> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    f[i].provenance = flat_provenance(dim);
    for (std::size_t d = 0; d < dim; ++d) f[i].values.push_back(static_cast<float>(rng.normal()));
    for (std::size_t t = 0; t < tags; ++t) y[i].push_back(rng.bernoulli(0.4) ? 1.0f : 0.0f);
  }
  return make_feature_dataset(f, Task::multilabel, y, {}, tags);
}

}  // namespace

TEST_CASE("build_global parameter count and heads") {
  GlobalModelSpec spec{512, 512, 2, Task::multilabel, 50, 0.5};
  Rng init(1);
  GlobalModel g = build_global(spec, flat_provenance(512), &init);
  const std::size_t dense = 512 * 512 + 512 + 512 * 512 + 512 + 512 * 50 + 50;
  CHECK(g.net.parameter_count() == dense + 2 * (512 + 512));
  CHECK(GlobalModelSpec::default_hidden(512) == 512);
  CHECK(GlobalModelSpec::default_hidden(1024) == 512);
  CHECK(GlobalModelSpec::default_hidden(1792) == 1024);
  CHECK(GlobalModelSpec::from_json(spec.to_json()) == spec);

  Rng rng(2);
  GlobalModel one = build_global({16, 8, 2, Task::multilabel, 1, 0.5}, flat_provenance(16), &init);
  {
    Rng drop(3);
    one.net.set_rng(&drop);
    one.net.forward(oracle::random_tensor<float>({4, 16}, rng), nn::Mode::train);
  }
  const nn::Tensor<double> p1 = predict_global(one, oracle::random_tensor<float>({5, 16}, rng), flat_provenance(16));
  CHECK(p1.shape() == nn::Shape{5, 1});
  for (double v : p1.storage()) CHECK((v > 0.0 && v < 1.0));

  GlobalModel mc = build_global({16, 8, 2, Task::multiclass, 10, 0.5}, flat_provenance(16), &init);
  Rng drop(4);
  mc.net.set_rng(&drop);
  mc.net.forward(oracle::random_tensor<float>({4, 16}, rng), nn::Mode::train);
  const nn::Tensor<double> p = predict_global(mc, oracle::random_tensor<float>({6, 16}, rng, -5, 5), flat_provenance(16));
  for (std::size_t r = 0; r < 6; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < 10; ++k) s += p[r * 10 + k];
    CHECK(std::abs(s - 1.0) < 1e-9);
  }
  CHECK_THROWS_AS(build_global({0, 8, 2, Task::multilabel, 1, 0.5}, {}, &init), UserError);
}

TEST_CASE("predict_global: uniform logits, determinism, batching and the provenance guard") {
  Rng rng(5);
  GlobalModel g = build_global({12, 8, 2, Task::multiclass, 4, 0.5}, flat_provenance(12), nullptr);
  Rng drop(6);
  g.net.set_rng(&drop);
  g.net.forward(oracle::random_tensor<float>({4, 12}, rng), nn::Mode::train);
  // Zero-initialised output layer: every class gets 1/K.
  ClipFeature f{std::vector<float>(12, 0.3f), flat_provenance(12)};
  for (double v : predict_global(g, f)) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

  Rng init(7);
  GlobalModel h = build_global({12, 8, 2, Task::multilabel, 3, 0.5}, flat_provenance(12), &init);
  h.net.set_rng(&drop);
  h.net.forward(oracle::random_tensor<float>({4, 12}, rng), nn::Mode::train);
  const nn::Tensor<float> batch = oracle::random_tensor<float>({300, 12}, rng);
  const nn::Tensor<double> all = predict_global(h, batch, flat_provenance(12));
  for (std::size_t i = 0; i < 300; i += 37) {
    ClipFeature one{std::vector<float>(batch.data() + i * 12, batch.data() + (i + 1) * 12), flat_provenance(12)};
    const std::vector<double> a = predict_global(h, one);
    const std::vector<double> b = predict_global(h, one);
    CHECK(a == b);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(a[k] - all[i * 3 + k]) < 1e-6);
  }
  const Provenance other{{18, 0, 12, 0}};
  CHECK_THROWS_AS(predict_global(h, batch, other), DataError);
  CHECK_THROWS_AS(predict_global(h, nn::Tensor<float>({2, 11}), {{27, 0, 11, 0}}), DataError);
}

TEST_CASE("make_feature_dataset rejects mixed provenance") {
  std::vector<ClipFeature> f(2);
  f[0] = {std::vector<float>(4, 0.0f), flat_provenance(4)};
  f[1] = {std::vector<float>(4, 0.0f), {{18, 0, 4, 0}}};
  CHECK_THROWS_AS(make_feature_dataset(f, Task::multilabel, {{1.0f}, {0.0f}}, {}, 1), DataError);
}

TEST_CASE("train_global: overfits 20 random examples, lr 0 is inert, shuffled labels give chance AUC") {
  Rng rng(8);
  const FeatureDataset small = random_features(20, 64, 4, rng);
  TrainConfig cfg;
  cfg.max_epochs = 200;
  cfg.restore_best = false;
  cfg.batch_size = 8;
  double final_loss = 1.0;
  GlobalTrainResult r = train_global(small, small, cfg, 0, [&](const EpochRecord&, nn::Network<float>& net) {
    final_loss = evaluate_loss(net, small.examples);
    return final_loss < 0.05;
  });
  CHECK(final_loss < 0.05);
  CHECK(r.history.epochs.size() <= 200);
  GlobalTrainResult again = train_global(small, small, cfg, 0, [&](const EpochRecord&, nn::Network<float>& net) {
    return evaluate_loss(net, small.examples) < 0.05;
  });
  CHECK(again.history.to_csv() == r.history.to_csv());

  TrainConfig zero = cfg;
  zero.lr = 0.0;
  zero.max_epochs = 1;
  Rng init = Rng::stream(zero.seed, "init");
  GlobalModel fresh = build_global({64, 512, 2, Task::multilabel, 4, 0.5}, small.provenance, &init);
  GlobalTrainResult z = train_global(small, small, zero);
  const auto pa = fresh.net.parameters(), pb = z.model.net.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);

  // Informative features, but training labels shuffled across clips.
  const std::size_t n_train = 400, n_valid = 200, dim = 32, tags = 6;
  std::vector<ClipFeature> feats(n_train + n_valid);
  std::vector<std::vector<float>> labels(n_train + n_valid);
  for (std::size_t i = 0; i < feats.size(); ++i) {
    feats[i].provenance = flat_provenance(dim);
    for (std::size_t t = 0; t < tags; ++t) labels[i].push_back(rng.bernoulli(0.5) ? 1.0f : 0.0f);
    for (std::size_t d = 0; d < dim; ++d) {
      feats[i].values.push_back(static_cast<float>(rng.normal() + (d < tags ? 2.0 * labels[i][d] : 0.0)));
    }
  }
  std::vector<std::vector<float>> shuffled(labels.begin(), labels.begin() + n_train);
  rng.shuffle(std::span<std::vector<float>>(shuffled));
  const FeatureDataset tr = make_feature_dataset(std::span(feats).first(n_train), Task::multilabel, shuffled, {}, tags);
  const std::vector<std::vector<float>> vlabels(labels.begin() + n_train, labels.end());
  const FeatureDataset va = make_feature_dataset(std::span(feats).subspan(n_train), Task::multilabel, vlabels, {}, tags);
  TrainConfig ctl;
  ctl.max_epochs = 20;
  GlobalTrainResult control = train_global(tr, va, ctl);
  const nn::Tensor<double> scores = predict_global(control.model, va.examples.inputs, va.provenance);
  eval::ScoreMatrix sm;
  sm.n_clips = n_valid;
  sm.n_tags = tags;
  sm.scores = scores.storage();
  for (float v : va.examples.multi_hot.storage()) sm.labels.push_back(static_cast<std::uint8_t>(v));
  for (std::size_t t = 0; t < tags; ++t) sm.tags.push_back("t" + std::to_string(t));
  CHECK(std::abs(eval::mean_auc(sm) - 0.5) < 0.1);
}
