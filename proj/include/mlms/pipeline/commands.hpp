// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mlms/eval/metrics.hpp"
#include "mlms/model/trainer.hpp"
#include "mlms/pipeline/feature_store.hpp"
#include "mlms/pipeline/manifest.hpp"
#include "mlms/pipeline/run_config.hpp"
#include "mlms/pipeline/synth.hpp"

namespace mlms::pipeline {

namespace fs = std::filesystem;

/// File names inside output directories.
inline constexpr const char* kRunConfigFile = "run_config.txt";
inline constexpr const char* kNormStatsFile = "norm_stats.json";
inline constexpr const char* kManifestFile = "manifest.tsv";
fs::path cache_file(const fs::path& cache_dir, const std::string& clip_id);
fs::path local_checkpoint_file(const fs::path& dir, std::size_t input_frames);
fs::path history_file(const fs::path& checkpoint);
/// Resolved config written next to a single-file output.
fs::path config_file_for(const fs::path& output);

/// Prepared cache contents besides the per-clip spectrograms.
struct CacheInfo {
  audio::FrontendConfig frontend;
  audio::NormStats norm;
  std::size_t train_clips = 0;
};
CacheInfo load_cache_info(const fs::path& cache_dir);
/// Cached spectrogram of one clip; errors name the clip.
audio::MelSpectrogram load_cached_mel(const fs::path& cache_dir, const std::string& clip_id);

/// Writes `out_dir`/audio/<clip_id>.wav, the manifest, its vocabulary and
/// the resolved config. Returns the manifest.
Manifest cmd_synth(const fs::path& out_dir, const RunConfig& config);

struct PrepareResult {
  std::size_t written = 0;
  std::size_t skipped = 0;  // already up to date
  std::vector<std::string> failures;  // "clip_id: reason"
  bool stats_written = false;
  audio::NormStats norm;
};
/// One cache file per clip plus norm_stats.json (fitted on the train split).
/// Entries newer than their source and produced with the same front-end are
/// skipped. Per-clip failures are logged and collected, not thrown.
PrepareResult cmd_prepare(const fs::path& manifest, const fs::path& out_dir, const RunConfig& config);

struct TrainLocalResult {
  std::vector<fs::path> checkpoints;
  std::vector<model::History> histories;
};
/// One checkpoint (local_<frames>.mlms) and history CSV per scale in config.scales.
TrainLocalResult cmd_train_local(const fs::path& manifest, const fs::path& cache_dir,
                                 const fs::path& out_dir, const RunConfig& config,
                                 const model::EpochCallback& on_epoch = {});

/// Aggregated features of every manifest clip under config.selection(),
/// read from local_<frames>.mlms checkpoints in `checkpoint_dir`.
FeatureStore cmd_extract(const fs::path& manifest, const fs::path& cache_dir,
                         const fs::path& checkpoint_dir, const fs::path& out_path,
                         const RunConfig& config);

struct TrainGlobalResult {
  fs::path checkpoint;
  model::History history;
};
/// Sigmoid head for tag manifests, softmax head for class manifests. The
/// manifest may differ from the one the extracting CNNs were trained on.
TrainGlobalResult cmd_train_global(const fs::path& manifest, const fs::path& features,
                                   const fs::path& out_path, const RunConfig& config,
                                   const model::EpochCallback& on_epoch = {});

/// One configuration of an evaluation report.
struct EvalModel {
  std::string name;
  fs::path checkpoint;
  fs::path features;  // global models only
};

struct EvaluateResult {
  std::vector<eval::SummaryRow> summary;
  std::optional<eval::TagReport> report;  // tag manifests only
  std::vector<std::pair<std::string, eval::ScoreMatrix>> scores;
  std::string summary_text;
};
/// Scores the test split with every model and writes summary.txt, and for
/// tag manifests per_tag.csv against `baseline` (default: the first model).
/// Class manifests also get a majority-class row.
EvaluateResult cmd_evaluate(const fs::path& manifest, const fs::path& cache_dir,
                            const std::vector<EvalModel>& models, const std::string& baseline,
                            const fs::path& report_dir, const RunConfig& config);

}  // namespace mlms::pipeline
