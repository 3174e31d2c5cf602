// SPDX-License-Identifier: Apache-2.0
#include "mlms/pipeline/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>

#include "mlms/error.hpp"
#include "mlms/io/binary.hpp"

namespace mlms::pipeline {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw UserError("config: " + key + " = '" + value + "' is not " + expected);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::string join(const std::vector<std::size_t>& v, std::size_t add = 0) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i] + add);
  }
  return out;
}

std::string layers_text(const std::vector<std::size_t>& blocks) {
  return blocks.empty() ? "all" : join(blocks, 1);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& key) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string item = trim(std::string_view(text).substr(start, comma - start));
    if (item.empty()) bad_value(key, text, "a comma-separated list of integers");
    out.push_back(static_cast<std::size_t>(parse_u64(key, item)));
    start = comma + 1;
  }
  return out;
}

std::vector<std::size_t> parse_layer_list(const std::string& text, const std::string& key) {
  if (trim(text) == "all") return {};
  std::vector<std::size_t> out = parse_size_list(text, key);
  for (std::size_t& l : out) {
    if (l == 0) bad_value(key, text, "a list of 1-based layer numbers");
    --l;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"command", [&](const std::string& v) { command = v; }},
      {"seed", [&](const std::string& v) { seed = parse_u64(key, v); }},
      {"lr", [&](const std::string& v) { train.lr = parse_double(key, v); }},
      {"plateau_factor", [&](const std::string& v) { train.plateau_factor = parse_double(key, v); }},
      {"patience", [&](const std::string& v) { train.patience = parse_u64(key, v); }},
      {"min_lr", [&](const std::string& v) { train.min_lr = parse_double(key, v); }},
      {"max_epochs", [&](const std::string& v) { train.max_epochs = parse_u64(key, v); }},
      {"batch_size", [&](const std::string& v) { train.batch_size = parse_u64(key, v); }},
      {"momentum", [&](const std::string& v) { train.momentum = parse_double(key, v); }},
      {"restore_best", [&](const std::string& v) { train.restore_best = parse_bool(key, v); }},
      {"scales", [&](const std::string& v) { scales = parse_size_list(v, key); }},
      {"layers", [&](const std::string& v) { layers = parse_layer_list(v, key); }},
      {"hidden_units", [&](const std::string& v) { hidden_units = parse_u64(key, v); }},
      {"threads", [&](const std::string& v) { threads = parse_u64(key, v); }},
      {"frontend.sample_rate",
       [&](const std::string& v) { frontend.sample_rate = static_cast<int>(parse_u64(key, v)); }},
      {"frontend.n_fft", [&](const std::string& v) { frontend.n_fft = parse_u64(key, v); }},
      {"frontend.hop", [&](const std::string& v) { frontend.hop = parse_u64(key, v); }},
      {"frontend.n_mels", [&](const std::string& v) { frontend.n_mels = parse_u64(key, v); }},
      {"frontend.fmin", [&](const std::string& v) { frontend.fmin = parse_double(key, v); }},
      {"frontend.fmax", [&](const std::string& v) { frontend.fmax = parse_double(key, v); }},
      {"frontend.compression", [&](const std::string& v) { frontend.compression = parse_double(key, v); }},
      {"frontend.frames", [&](const std::string& v) { frontend.frames = parse_u64(key, v); }},
      {"frontend.pad_short", [&](const std::string& v) { frontend.pad_short = parse_bool(key, v); }},
      {"synth.n_train", [&](const std::string& v) { synth.n_train = parse_u64(key, v); }},
      {"synth.n_valid", [&](const std::string& v) { synth.n_valid = parse_u64(key, v); }},
      {"synth.n_test", [&](const std::string& v) { synth.n_test = parse_u64(key, v); }},
      {"synth.duration", [&](const std::string& v) { synth.duration = parse_double(key, v); }},
      {"synth.sample_rate",
       [&](const std::string& v) { synth.sample_rate = static_cast<int>(parse_u64(key, v)); }},
      {"synth.labeling",
       [&](const std::string& v) {
         if (v == "tags") synth.labeling = SynthLabeling::tags;
         else if (v == "genre") synth.labeling = SynthLabeling::genre;
         else bad_value(key, v, "tags or genre");
       }},
      {"synth.n_genres", [&](const std::string& v) { synth.n_genres = parse_u64(key, v); }},
  };
  if (const auto it = setters.find(key); it != setters.end()) {
    it->second(value);
  } else if (key.rfind("path.", 0) == 0 && key.size() > 5) {
    paths[key.substr(5)] = value;
  } else if (key.rfind("layers.", 0) == 0 && key.size() > 7) {
    const auto scale = static_cast<std::size_t>(parse_u64(key, key.substr(7)));
    scale_layers[scale] = parse_layer_list(value, key);
  } else {
    throw UserError("config: unknown key '" + key + "'");
  }
  if (key == "scales" || key.rfind("layers", 0) == 0) selection_given = true;
  train.seed = seed;
  synth.seed = seed;
}

model::FeatureSelection RunConfig::selection() const {
  model::FeatureSelection s;
  s.scales = scales;
  std::sort(s.scales.begin(), s.scales.end());
  for (const std::size_t scale : s.scales) {
    const auto it = scale_layers.find(scale);
    if (it != scale_layers.end()) {
      if (!it->second.empty()) s.layers[scale] = it->second;
    } else if (!layers.empty()) {
      s.layers[scale] = layers;
    }
  }
  for (const auto& [scale, blocks] : scale_layers) {
    if (!std::binary_search(s.scales.begin(), s.scales.end(), scale)) {
      throw UserError("config: layers." + std::to_string(scale) + " names an unselected scale");
    }
  }
  s.validate();
  return s;
}

RunConfig RunConfig::parse(std::string_view text, const std::string& name) {
  RunConfig c;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = std::min(text.find('\n', start), text.size());
    const std::string line = trim(text.substr(start, nl - start));
    start = nl + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw UserError(name + ":" + std::to_string(line_no) + ": expected key = value");
    }
    try {
      c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const UserError& e) {
      throw UserError(name + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const DataError& e) {
    throw UserError(e.what());
  }
  return parse(text, path.string());
}

std::string RunConfig::to_text() const {
  std::string out = "# mlms run config, fully resolved\n";
  auto put = [&out](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
  put("command", command);
  put("seed", std::to_string(seed));
  put("lr", format_double(train.lr));
  put("plateau_factor", format_double(train.plateau_factor));
  put("patience", std::to_string(train.patience));
  put("min_lr", format_double(train.min_lr));
  put("max_epochs", std::to_string(train.max_epochs));
  put("batch_size", std::to_string(train.batch_size));
  put("momentum", format_double(train.momentum));
  put("restore_best", train.restore_best ? "true" : "false");
  put("scales", join(scales));
  put("layers", layers_text(layers));
  for (const auto& [scale, blocks] : scale_layers) put("layers." + std::to_string(scale), layers_text(blocks));
  put("hidden_units", std::to_string(hidden_units));
  put("threads", std::to_string(threads));
  put("frontend.sample_rate", std::to_string(frontend.sample_rate));
  put("frontend.n_fft", std::to_string(frontend.n_fft));
  put("frontend.hop", std::to_string(frontend.hop));
  put("frontend.n_mels", std::to_string(frontend.n_mels));
  put("frontend.fmin", format_double(frontend.fmin));
  put("frontend.fmax", format_double(frontend.fmax));
  put("frontend.compression", format_double(frontend.compression));
  put("frontend.frames", std::to_string(frontend.frames));
  put("frontend.pad_short", frontend.pad_short ? "true" : "false");
  put("synth.n_train", std::to_string(synth.n_train));
  put("synth.n_valid", std::to_string(synth.n_valid));
  put("synth.n_test", std::to_string(synth.n_test));
  put("synth.duration", format_double(synth.duration));
  put("synth.sample_rate", std::to_string(synth.sample_rate));
  put("synth.labeling", synth.labeling == SynthLabeling::tags ? "tags" : "genre");
  put("synth.n_genres", std::to_string(synth.n_genres));
  for (const auto& [k, v] : paths) put("path." + k, v);
  return out;
}

void RunConfig::save(const std::filesystem::path& path) const { io::write_file(path, to_text()); }

}  // namespace mlms::pipeline
