// SPDX-License-Identifier: Apache-2.0
#include "mlms/pipeline/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>

#include "mlms/audio/wav.hpp"
#include "mlms/error.hpp"
#include "mlms/io/binary.hpp"
#include "mlms/model/global_classifier.hpp"
#include "mlms/model/local_cnn.hpp"
#include "mlms/pipeline/checkpoint.hpp"
#include "mlms/pipeline/util.hpp"

namespace mlms::pipeline {

namespace {

using json = nlohmann::ordered_json;

// Skips the write when the file already holds exactly these bytes.
bool write_if_changed(const fs::path& path, const std::string& contents) {
  std::error_code ec;
  if (fs::exists(path, ec)) {
    try {
      if (io::read_file(path) == contents) return false;
    } catch (const DataError&) {
    }
  }
  io::write_file(path, contents);
  return true;
}

void save_config(RunConfig config, const std::string& command, const fs::path& path) {
  config.command = command;
  write_if_changed(path, config.to_text());
}

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool cache_matches(const audio::MelSpectrogram& mel, int rate, const audio::FrontendConfig& fe) {
  return !mel.normalized && mel.frame_count() == fe.frames && mel.mel_bins() == fe.n_mels &&
         mel.hop == fe.hop && rate == fe.sample_rate;
}

std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

json history_summary(const model::History& h, std::size_t n_train, std::size_t n_valid) {
  return {{"train_clips", n_train},
          {"valid_clips", n_valid},
          {"epochs_run", h.epochs.size()},
          {"best_epoch", h.best_epoch},
          {"best_valid_loss", h.best_valid_loss}};
}

// Clip features of the given manifest rows, looked up by id.
std::vector<model::ClipFeature> features_for(const FeatureStore& store, const Manifest& m,
                                             const std::vector<std::size_t>& rows,
                                             const fs::path& path) {
  std::vector<model::ClipFeature> out;
  out.reserve(rows.size());
  for (const std::size_t r : rows) {
    const std::string& id = m.records[r].clip_id;
    const std::size_t k = store.find(id);
    if (k == std::string::npos) throw DataError(path.string() + ": no feature record for clip " + id);
    out.push_back(store.feature(k));
  }
  return out;
}

// (scale, block) pairs a selection expands to.
std::vector<std::pair<std::size_t, std::size_t>> selected_pairs(const model::FeatureSelection& s) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const std::size_t scale : s.scales) {
    const std::size_t n_blocks = model::build_local_model(scale, 1).conv_blocks.size();
    for (const std::size_t b : s.blocks_for(scale, n_blocks)) out.emplace_back(scale, b);
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> provenance_pairs(const model::Provenance& p) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const model::ProvenanceEntry& e : p) out.emplace_back(e.input_frames, e.layer);
  return out;
}

std::vector<std::uint8_t> label_matrix(const Manifest& m, const std::vector<std::size_t>& rows) {
  std::vector<std::uint8_t> out;
  for (const std::size_t r : rows) {
    for (const float v : m.multi_hot(m.records[r])) out.push_back(v > 0.5f ? 1 : 0);
  }
  return out;
}

std::uint32_t argmax(const double* row, std::size_t k) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < k; ++j) {
    if (row[j] > row[best]) best = j;
  }
  return static_cast<std::uint32_t>(best);
}

}  // namespace

fs::path cache_file(const fs::path& cache_dir, const std::string& clip_id) {
  if (clip_id.find_first_of("/\\") != std::string::npos || clip_id == "." || clip_id == "..") {
    throw DataError("clip_id '" + clip_id + "' cannot name a cache file");
  }
  return cache_dir / (clip_id + ".mlmc");
}

fs::path local_checkpoint_file(const fs::path& dir, std::size_t input_frames) {
  return dir / ("local_" + std::to_string(input_frames) + ".mlms");
}

fs::path history_file(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p.replace_extension();
  p += "_history.csv";
  return p;
}

fs::path config_file_for(const fs::path& output) {
  fs::path p = output;
  p += ".run_config.txt";
  return p;
}

CacheInfo load_cache_info(const fs::path& cache_dir) {
  const fs::path path = cache_dir / kNormStatsFile;
  std::error_code ec;
  if (!fs::exists(path, ec)) {
    throw DataError(cache_dir.string() + ": not a prepared cache (missing " + kNormStatsFile + ")");
  }
  try {
    const json j = json::parse(io::read_file(path));
    CacheInfo info;
    info.frontend = audio::FrontendConfig::from_json(j.at("frontend"));
    info.norm = audio::NormStats::from_json(j.at("norm_stats"));
    info.train_clips = j.at("train_clips").get<std::size_t>();
    return info;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed: " + e.what());
  } catch (const UserError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

audio::MelSpectrogram load_cached_mel(const fs::path& cache_dir, const std::string& clip_id) {
  try {
    return audio::load_mel_cache(cache_file(cache_dir, clip_id));
  } catch (const DataError& e) {
    throw DataError("clip " + clip_id + ": " + e.what());
  }
}

Manifest cmd_synth(const fs::path& out_dir, const RunConfig& config) {
  SynthSpec spec = config.synth;
  spec.seed = config.seed;
  spec.validate();
  Manifest m;
  if (spec.labeling == SynthLabeling::tags) {
    m.kind = LabelKind::tags;
    for (const char* t : kSynthTags) m.vocabulary.emplace_back(t);
  } else {
    m.kind = LabelKind::classes;
    for (std::size_t g = 0; g < spec.n_genres; ++g) m.vocabulary.push_back("genre-" + std::to_string(g));
  }
  const std::size_t n = spec.n_clips();
  m.records.resize(n);
  parallel_for(n, config.threads, [&](std::size_t i, std::size_t) {
    const SynthClip clip = synth_clip(spec, i);
    const fs::path rel = fs::path("audio") / (clip.id + ".wav");
    audio::write_wav(out_dir / rel, clip.audio);
    ManifestRecord& r = m.records[i];
    r.clip_id = clip.id;
    r.path = rel.generic_string();
    r.split = i < spec.n_train ? Split::train : i < spec.n_train + spec.n_valid ? Split::valid : Split::test;
    if (m.kind == LabelKind::tags) {
      r.tags = clip.tags;
    } else {
      r.label = clip.genre;
    }
  });
  m.base_dir = out_dir;
  m.save(out_dir / kManifestFile);
  RunConfig resolved = config;
  resolved.synth = spec;
  resolved.paths["output"] = out_dir.string();
  save_config(resolved, "synth", out_dir / kRunConfigFile);
  log_line("synth: wrote " + std::to_string(n) + " clips to " + out_dir.string());
  return m;
}

PrepareResult cmd_prepare(const fs::path& manifest_path, const fs::path& out_dir,
                          const RunConfig& config) {
  const Manifest m = Manifest::load(manifest_path);
  const audio::FrontendConfig& fe = config.frontend;
  fe.validate();
  bool same_frontend = false;
  try {
    same_frontend = load_cache_info(out_dir).frontend == fe;
  } catch (const DataError&) {
  }

  enum class Status { written, skipped, failed };
  struct Outcome {
    Status status = Status::failed;
    audio::NormAccumulator acc;
    std::string error;
  };
  std::vector<Outcome> outcomes(m.records.size());
  parallel_for(m.records.size(), config.threads, [&](std::size_t i, std::size_t) {
    const ManifestRecord& rec = m.records[i];
    Outcome& o = outcomes[i];
    try {
      const fs::path src = m.resolve(rec);
      const fs::path dst = cache_file(out_dir, rec.clip_id);
      std::optional<audio::MelSpectrogram> mel;
      std::error_code ec;
      if (same_frontend && fs::exists(dst, ec) && fs::exists(src, ec) &&
          fs::last_write_time(dst) >= fs::last_write_time(src)) {
        try {
          int rate = 0;
          mel = audio::load_mel_cache(dst, &rate);
          if (!cache_matches(*mel, rate, fe)) mel.reset();
        } catch (const DataError&) {
          mel.reset();
        }
        if (mel) o.status = Status::skipped;
      }
      if (!mel) {
        if (src.extension() == ".mlmc") {
          int rate = 0;
          mel = audio::load_mel_cache(src, &rate);
          if (!cache_matches(*mel, rate, fe)) {
            throw DataError(src.string() + ": cached spectrogram does not match the front-end");
          }
        } else {
          mel = audio::compute_mel(audio::load_audio(src), fe);
        }
        audio::save_mel_cache(dst, *mel, fe.sample_rate);
        o.status = Status::written;
      }
      if (rec.split == Split::train) o.acc = audio::NormAccumulator::of(*mel);
    } catch (const std::exception& e) {
      o.status = Status::failed;
      o.error = e.what();
    }
  });

  PrepareResult result;
  audio::NormAccumulator acc;
  std::size_t train_clips = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const Outcome& o = outcomes[i];
    if (o.status == Status::failed) {
      result.failures.push_back(m.records[i].clip_id + ": " + o.error);
      log_line("prepare: clip " + m.records[i].clip_id + " failed: " + o.error);
      continue;
    }
    (o.status == Status::written ? result.written : result.skipped) += 1;
    if (m.records[i].split == Split::train) {
      acc.merge(o.acc);
      ++train_clips;
    }
  }
  if (train_clips > 0) {
    result.norm = acc.finish();
    json j;
    j["frontend"] = fe.to_json();
    j["norm_stats"] = result.norm.to_json();
    j["train_clips"] = train_clips;
    result.stats_written = write_if_changed(out_dir / kNormStatsFile, j.dump(2) + "\n");
  } else {
    log_line("prepare: no usable train clips; norm stats not fitted");
  }
  RunConfig resolved = config;
  resolved.paths["manifest"] = manifest_path.string();
  resolved.paths["output"] = out_dir.string();
  save_config(resolved, "prepare", out_dir / kRunConfigFile);
  log_line("prepare: " + std::to_string(result.written) + " written, " +
           std::to_string(result.skipped) + " up to date, " +
           std::to_string(result.failures.size()) + " failed");
  return result;
}

TrainLocalResult cmd_train_local(const fs::path& manifest_path, const fs::path& cache_dir,
                                 const fs::path& out_dir, const RunConfig& config,
                                 const model::EpochCallback& on_epoch) {
  const Manifest m = Manifest::load(manifest_path);
  if (m.kind != LabelKind::tags) throw UserError("train-local needs a tag manifest");
  m.require_splits({Split::train, Split::valid});
  const CacheInfo info = load_cache_info(cache_dir);
  std::vector<std::size_t> scales = config.scales;
  std::sort(scales.begin(), scales.end());
  scales.erase(std::unique(scales.begin(), scales.end()), scales.end());
  if (scales.empty()) throw UserError("train-local: no scales requested");
  for (const std::size_t s : scales) model::build_local_model(s, m.vocabulary.size()).validate();

  const std::vector<std::size_t> train_rows = m.split_indices(Split::train);
  const std::vector<std::size_t> valid_rows = m.split_indices(Split::valid);
  std::vector<std::size_t> rows = train_rows;
  rows.insert(rows.end(), valid_rows.begin(), valid_rows.end());
  std::vector<audio::MelSpectrogram> mels(rows.size());
  parallel_for(rows.size(), config.threads, [&](std::size_t i, std::size_t) {
    mels[i] = load_cached_mel(cache_dir, m.records[rows[i]].clip_id);
  });
  std::vector<model::LabeledClip> train, valid;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ManifestRecord& r = m.records[rows[i]];
    (i < train_rows.size() ? train : valid).push_back({r.clip_id, &mels[i], m.multi_hot(r)});
  }

  TrainLocalResult result;
  for (const std::size_t s : scales) {
    const model::LocalModelSpec spec = model::build_local_model(s, m.vocabulary.size());
    model::LocalTrainResult r =
        model::train_local(spec, train, valid, info.norm, info.frontend, config.train, on_epoch);
    CheckpointMeta meta;
    meta.seed = config.seed;
    meta.train = config.train;
    meta.vocabulary = m.vocabulary;
    meta.extra = history_summary(r.history, train.size(), valid.size());
    const fs::path path = local_checkpoint_file(out_dir, s);
    save_local_checkpoint(path, r.model, meta);
    io::write_file(history_file(path), r.history.to_csv());
    log_line("train-local: " + std::to_string(s) + " frames, " + std::to_string(r.history.epochs.size()) +
             " epochs, best epoch " + std::to_string(r.history.best_epoch) + " (valid loss " +
             format_g(r.history.best_valid_loss) + ")");
    result.checkpoints.push_back(path);
    result.histories.push_back(std::move(r.history));
  }
  RunConfig resolved = config;
  resolved.scales = scales;
  resolved.frontend = info.frontend;
  resolved.paths["manifest"] = manifest_path.string();
  resolved.paths["cache"] = cache_dir.string();
  resolved.paths["output"] = out_dir.string();
  save_config(resolved, "train-local", out_dir / kRunConfigFile);
  return result;
}

FeatureStore cmd_extract(const fs::path& manifest_path, const fs::path& cache_dir,
                         const fs::path& checkpoint_dir, const fs::path& out_path,
                         const RunConfig& config) {
  const Manifest m = Manifest::load(manifest_path);
  const CacheInfo info = load_cache_info(cache_dir);
  const model::FeatureSelection sel = config.selection();

  std::map<std::size_t, model::LocalModel> models;
  FeatureStore store;
  store.selection = sel;
  for (const std::size_t s : sel.scales) {
    const fs::path p = local_checkpoint_file(checkpoint_dir, s);
    std::error_code ec;
    if (!fs::exists(p, ec)) {
      throw UserError("extract: no checkpoint for scale " + std::to_string(s) + " (" + p.string() + ")");
    }
    CheckpointMeta meta;
    model::LocalModel lm = load_local_checkpoint(p, &meta);
    if (lm.spec.input_frames != s) {
      throw DataError(p.string() + ": checkpoint is for " + std::to_string(lm.spec.input_frames) + " frames");
    }
    if (!(lm.frontend == info.frontend)) {
      throw DataError(p.string() + ": checkpoint front-end differs from the cache in " + cache_dir.string());
    }
    store.sources.push_back({{"input_frames", s},
                             {"checkpoint", p.filename().string()},
                             {"fnv1a64", fnv1a64_hex(io::read_file(p))},
                             {"seed", meta.seed}});
    models.emplace(s, std::move(lm));
  }

  std::vector<std::size_t> order(m.records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return m.records[a].clip_id < m.records[b].clip_id;
  });
  const std::size_t workers = worker_count(order.size(), config.threads);
  std::vector<std::map<std::size_t, model::LocalModel>> copies(workers, models);
  std::vector<model::ClipFeature> rows(order.size());
  parallel_for(order.size(), config.threads, [&](std::size_t k, std::size_t w) {
    const std::string& id = m.records[order[k]].clip_id;
    const audio::MelSpectrogram mel = load_cached_mel(cache_dir, id);
    std::map<std::size_t, model::ClipFeature> parts;
    for (auto& [s, lm] : copies[w]) {
      parts[s] = model::aggregate_clip(lm, mel, sel.blocks_for(s, lm.spec.conv_blocks.size()));
    }
    rows[k] = model::concat_multiscale(parts, sel);
  });
  if (rows.empty()) throw UserError("extract: manifest has no clips");
  store.provenance = rows[0].provenance;
  store.dim = rows[0].values.size();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].provenance != store.provenance) throw DataError("extract: provenance differs between clips");
    store.ids.push_back(m.records[order[k]].clip_id);
    store.values.push_back(std::move(rows[k].values));
  }
  save_feature_store(out_path, store);
  RunConfig resolved = config;
  resolved.paths["manifest"] = manifest_path.string();
  resolved.paths["cache"] = cache_dir.string();
  resolved.paths["checkpoints"] = checkpoint_dir.string();
  resolved.paths["output"] = out_path.string();
  save_config(resolved, "extract", config_file_for(out_path));
  log_line("extract: " + std::to_string(store.ids.size()) + " clips, " + std::to_string(store.dim) +
           " dims (" + model::describe_provenance(store.provenance) + ")");
  return store;
}

TrainGlobalResult cmd_train_global(const fs::path& manifest_path, const fs::path& features,
                                   const fs::path& out_path, const RunConfig& config,
                                   const model::EpochCallback& on_epoch) {
  const Manifest m = Manifest::load(manifest_path);
  m.require_splits({Split::train, Split::valid});
  const FeatureStore store = load_feature_store(features);
  if (config.selection_given &&
      selected_pairs(config.selection()) != provenance_pairs(store.provenance)) {
    throw DataError(features.string() + ": features hold " + model::describe_provenance(store.provenance) +
                    ", which does not match the configured scales and layers");
  }
  auto dataset = [&](Split split) {
    const std::vector<std::size_t> rows = m.split_indices(split);
    std::vector<std::vector<float>> hot;
    std::vector<std::uint32_t> classes;
    for (const std::size_t r : rows) {
      hot.push_back(m.multi_hot(m.records[r]));
      classes.push_back(m.records[r].label);
    }
    return model::make_feature_dataset(features_for(store, m, rows, features), m.task(), hot, classes,
                                       m.vocabulary.size());
  };
  const model::FeatureDataset train = dataset(Split::train);
  const model::FeatureDataset valid = dataset(Split::valid);
  model::GlobalTrainResult r = model::train_global(train, valid, config.train, config.hidden_units, on_epoch);

  CheckpointMeta meta;
  meta.seed = config.seed;
  meta.train = config.train;
  meta.vocabulary = m.vocabulary;
  meta.extra = history_summary(r.history, train.examples.size(), valid.examples.size());
  meta.extra["feature_sources"] = store.sources;
  save_global_checkpoint(out_path, r.model, store.selection, meta);
  io::write_file(history_file(out_path), r.history.to_csv());

  RunConfig resolved = config;
  resolved.scales = store.selection.scales;
  resolved.layers.clear();
  resolved.scale_layers = store.selection.layers;
  resolved.hidden_units = r.model.spec.hidden_units;
  resolved.paths["manifest"] = manifest_path.string();
  resolved.paths["features"] = features.string();
  resolved.paths["output"] = out_path.string();
  save_config(resolved, "train-global", config_file_for(out_path));
  log_line("train-global: " + model::to_string(m.task()) + ", " + std::to_string(store.dim) + " -> " +
           std::to_string(r.model.spec.n_outputs) + ", " + std::to_string(r.history.epochs.size()) +
           " epochs, best epoch " + std::to_string(r.history.best_epoch));
  return {out_path, std::move(r.history)};
}

EvaluateResult cmd_evaluate(const fs::path& manifest_path, const fs::path& cache_dir,
                            const std::vector<EvalModel>& models, const std::string& baseline,
                            const fs::path& report_dir, const RunConfig& config) {
  const Manifest m = Manifest::load(manifest_path);
  m.require_splits({Split::test});
  if (models.empty()) throw UserError("evaluate: no models given");
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (models[i].name == models[j].name) throw UserError("evaluate: duplicate model name " + models[i].name);
    }
  }
  const std::vector<std::size_t> test = m.split_indices(Split::test);
  const std::size_t L = m.vocabulary.size();
  const std::vector<std::uint8_t> labels = label_matrix(m, test);

  EvaluateResult result;
  std::vector<std::string> kinds;
  for (const EvalModel& em : models) {
    const std::string kind = checkpoint_kind(em.checkpoint);
    CheckpointMeta meta;
    eval::ScoreMatrix sm;
    sm.n_clips = test.size();
    sm.n_tags = L;
    sm.labels = labels;
    sm.tags = m.vocabulary;
    sm.scores.assign(test.size() * L, 0.0);
    if (kind == "local") {
      if (m.kind != LabelKind::tags) throw UserError("evaluate: local models need a tag manifest");
      model::LocalModel lm = load_local_checkpoint(em.checkpoint, &meta);
      const CacheInfo info = load_cache_info(cache_dir);
      if (!(lm.frontend == info.frontend)) {
        throw DataError(em.checkpoint.string() + ": checkpoint front-end differs from the cache");
      }
      if (meta.vocabulary != m.vocabulary) {
        throw DataError(em.checkpoint.string() + ": output vocabulary differs from the manifest");
      }
      std::vector<model::LocalModel> copies(worker_count(test.size(), config.threads), lm);
      parallel_for(test.size(), config.threads, [&](std::size_t i, std::size_t w) {
        const audio::MelSpectrogram mel = load_cached_mel(cache_dir, m.records[test[i]].clip_id);
        const std::vector<double> p = model::predict_local_clip(copies[w], mel);
        std::copy(p.begin(), p.end(), sm.scores.begin() + static_cast<std::ptrdiff_t>(i * L));
      });
    } else {
      model::GlobalModel gm = load_global_checkpoint(em.checkpoint, nullptr, &meta);
      if (meta.vocabulary != m.vocabulary || gm.spec.task != m.task()) {
        throw DataError(em.checkpoint.string() + ": outputs do not match the manifest's labels");
      }
      if (em.features.empty()) throw UserError("evaluate: global model " + em.name + " needs a feature store");
      const FeatureStore store = load_feature_store(em.features);
      const std::vector<model::ClipFeature> feats = features_for(store, m, test, em.features);
      nn::Tensor<float> x({test.size(), store.dim});
      for (std::size_t i = 0; i < test.size(); ++i) {
        std::copy(feats[i].values.begin(), feats[i].values.end(), x.data() + i * store.dim);
      }
      const nn::Tensor<double> p = model::predict_global(gm, x, store.provenance);
      std::copy(p.values().begin(), p.values().end(), sm.scores.begin());
    }
    kinds.push_back(kind);
    result.scores.emplace_back(em.name, std::move(sm));
  }

  RunConfig resolved = config;
  resolved.paths["manifest"] = manifest_path.string();
  resolved.paths["cache"] = cache_dir.string();
  resolved.paths["output"] = report_dir.string();
  for (const EvalModel& em : models) {
    resolved.paths["model." + em.name] = em.checkpoint.string();
    if (!em.features.empty()) resolved.paths["features." + em.name] = em.features.string();
  }

  std::vector<std::string> notes{"test clips: " + std::to_string(test.size())};
  if (m.kind == LabelKind::tags) {
    const std::string base = baseline.empty() ? models.front().name : baseline;
    for (std::size_t i = 0; i < models.size(); ++i) {
      result.summary.push_back({models[i].name, kinds[i], eval::mean_auc(result.scores[i].second)});
    }
    result.report = eval::per_tag_report(result.scores, base);
    if (!result.report->excluded.empty()) {
      std::string ex = "excluded single-class tags:";
      for (const std::string& t : result.report->excluded) ex += " " + t;
      notes.push_back(ex);
    }
    notes.push_back("per-tag baseline: " + base);
    result.summary_text = eval::summary_table(result.summary, "mean AUC", notes);
    write_if_changed(report_dir / "per_tag.csv", result.report->to_csv());
  } else {
    std::vector<std::uint32_t> truth;
    for (const std::size_t r : test) truth.push_back(m.records[r].label);
    for (std::size_t i = 0; i < models.size(); ++i) {
      std::vector<std::uint32_t> pred;
      for (std::size_t c = 0; c < test.size(); ++c) pred.push_back(argmax(&result.scores[i].second.scores[c * L], L));
      result.summary.push_back({models[i].name, kinds[i], eval::accuracy(pred, truth)});
    }
    std::vector<std::size_t> counts(L, 0);
    for (const std::size_t r : m.split_indices(Split::train)) ++counts[m.records[r].label];
    const auto majority = static_cast<std::uint32_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    const std::vector<std::uint32_t> constant(test.size(), majority);
    result.summary.push_back({"majority", "baseline", eval::accuracy(constant, truth)});
    notes.push_back("majority class (train split): " + m.vocabulary[majority]);
    result.summary_text = eval::summary_table(result.summary, "accuracy", notes);
  }
  write_if_changed(report_dir / "summary.txt", result.summary_text);
  save_config(resolved, "evaluate", report_dir / kRunConfigFile);
  return result;
}

}  // namespace mlms::pipeline
