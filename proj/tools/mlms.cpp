// SPDX-License-Identifier: Apache-2.0
// Command-line front end: synth, prepare, train-local, extract, train-global, evaluate.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mlms/error.hpp"
#include "mlms/pipeline/commands.hpp"
#include "mlms/pipeline/util.hpp"

namespace {

using namespace mlms;
using namespace mlms::pipeline;

// Options every subcommand accepts; applied in order file < --set < flags.
struct Common {
  std::string config_path;
  std::vector<std::string> assignments;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::map<std::string, std::string> flags;  // config key -> value from dedicated flags
  bool quiet = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "Run config file (key = value lines)");
  app->add_option("--set", c.assignments, "Override one config key, as key=value")->take_all();
  app->add_option("--seed", c.seed, "Seed override");
  app->add_option("--threads", c.threads, "Worker threads for per-clip work (0 = all cores)");
  app->add_flag("-q,--quiet", c.quiet, "Suppress progress messages");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : RunConfig::load(c.config_path);
  for (const std::string& a : c.assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw UserError("--set expects key=value, got '" + a + "'");
    cfg.set(a.substr(0, eq), a.substr(eq + 1));
  }
  for (const auto& [k, v] : c.flags) cfg.set(k, v);
  if (c.seed) cfg.set("seed", std::to_string(*c.seed));
  if (c.threads) cfg.set("threads", std::to_string(*c.threads));
  return cfg;
}

// Registers a string flag that maps onto a config key when given.
void add_key_flag(CLI::App* app, Common& c, const std::string& flag, const std::string& key,
                  const std::string& help) {
  app->add_option_function<std::string>(flag, [&c, key](const std::string& v) { c.flags[key] = v; }, help);
}

std::pair<std::string, std::string> split_named(const std::string& s, const char* what) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
    throw UserError(std::string(what) + " expects NAME=PATH, got '" + s + "'");
  }
  return {s.substr(0, eq), s.substr(eq + 1)};
}

int run(int argc, char** argv) {
  CLI::App app{"Multi-level, multi-scale feature aggregation for music auto-tagging"};
  app.require_subcommand(1);
  Common c;
  std::string manifest, cache, out, checkpoints, features, baseline;
  std::vector<std::string> model_args, feature_args;

  CLI::App* synth = app.add_subcommand("synth", "Generate the synthetic tagged (or genre) dataset");
  add_common(synth, c);
  synth->add_option("--out", out, "Output directory")->required();
  add_key_flag(synth, c, "--train", "synth.n_train", "Train clips");
  add_key_flag(synth, c, "--valid", "synth.n_valid", "Validation clips");
  add_key_flag(synth, c, "--test", "synth.n_test", "Test clips");
  add_key_flag(synth, c, "--labeling", "synth.labeling", "tags or genre");
  add_key_flag(synth, c, "--genres", "synth.n_genres", "Genre count for --labeling genre");
  add_key_flag(synth, c, "--duration", "synth.duration", "Clip length in seconds");

  CLI::App* prepare = app.add_subcommand("prepare", "Compute mel-spectrogram caches and norm stats");
  add_common(prepare, c);
  prepare->add_option("--manifest", manifest, "Manifest TSV")->required();
  prepare->add_option("--out", out, "Cache directory")->required();

  CLI::App* train_local = app.add_subcommand("train-local", "Train one local CNN per scale");
  add_common(train_local, c);
  train_local->add_option("--manifest", manifest, "Manifest TSV")->required();
  train_local->add_option("--cache", cache, "Prepared cache directory")->required();
  train_local->add_option("--out", out, "Checkpoint directory")->required();
  add_key_flag(train_local, c, "--scales", "scales", "Input frames, e.g. 18,27,54");

  CLI::App* extract = app.add_subcommand("extract", "Aggregate multi-level, multi-scale clip features");
  add_common(extract, c);
  extract->add_option("--manifest", manifest, "Manifest TSV")->required();
  extract->add_option("--cache", cache, "Prepared cache directory")->required();
  extract->add_option("--checkpoints", checkpoints, "Directory with local_<frames>.mlms")->required();
  extract->add_option("--out", out, "Feature store file")->required();
  add_key_flag(extract, c, "--scales", "scales", "Input frames, e.g. 18,27,54");
  add_key_flag(extract, c, "--layers", "layers", "1-based layers, e.g. 1,2,3 or all");

  CLI::App* train_global = app.add_subcommand("train-global", "Train the clip-level classifier");
  add_common(train_global, c);
  train_global->add_option("--manifest", manifest, "Manifest TSV (tags or classes)")->required();
  train_global->add_option("--features", features, "Feature store")->required();
  train_global->add_option("--out", out, "Checkpoint file")->required();
  add_key_flag(train_global, c, "--scales", "scales", "Expected scales of the feature store");
  add_key_flag(train_global, c, "--layers", "layers", "Expected layers of the feature store");
  add_key_flag(train_global, c, "--hidden", "hidden_units", "Hidden width (0 = automatic)");

  CLI::App* evaluate = app.add_subcommand("evaluate", "Score the test split and write reports");
  add_common(evaluate, c);
  evaluate->add_option("--manifest", manifest, "Manifest TSV")->required();
  evaluate->add_option("--cache", cache, "Prepared cache directory (local models)");
  evaluate->add_option("--model", model_args, "NAME=CHECKPOINT, repeatable; order is report order")
      ->required()
      ->take_all();
  evaluate->add_option("--features", feature_args, "NAME=STORE for each global model")->take_all();
  evaluate->add_option("--baseline", baseline, "Baseline configuration of the per-tag report");
  evaluate->add_option("--report", out, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::user_error);
  }
  set_quiet(c.quiet);
  const RunConfig cfg = resolve(c);

  if (synth->parsed()) {
    cmd_synth(out, cfg);
  } else if (prepare->parsed()) {
    const PrepareResult r = cmd_prepare(manifest, out, cfg);
    if (!r.failures.empty()) return static_cast<int>(ExitCode::data_error);
  } else if (train_local->parsed()) {
    cmd_train_local(manifest, cache, out, cfg);
  } else if (extract->parsed()) {
    cmd_extract(manifest, cache, checkpoints, out, cfg);
  } else if (train_global->parsed()) {
    cmd_train_global(manifest, features, out, cfg);
  } else if (evaluate->parsed()) {
    std::map<std::string, std::string> stores;
    for (const std::string& f : feature_args) stores.insert(split_named(f, "--features"));
    std::vector<EvalModel> models;
    for (const std::string& a : model_args) {
      auto [name, path] = split_named(a, "--model");
      EvalModel em{name, path, {}};
      if (const auto it = stores.find(name); it != stores.end()) em.features = it->second;
      models.push_back(std::move(em));
    }
    const EvaluateResult r = cmd_evaluate(manifest, cache, models, baseline, out, cfg);
    std::cout << r.summary_text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mlms::UserError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(mlms::ExitCode::user_error);
  } catch (const mlms::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return static_cast<int>(mlms::ExitCode::data_error);
  } catch (const mlms::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return static_cast<int>(mlms::ExitCode::numerical_failure);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return static_cast<int>(mlms::ExitCode::data_error);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(mlms::ExitCode::data_error);
  }
}
