// SPDX-License-Identifier: Apache-2.0
#include "mlms/pipeline/manifest.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "mlms/error.hpp"
#include "mlms/io/binary.hpp"

namespace mlms::pipeline {

namespace {

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  for (std::string_view line : split_on(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

bool valid_word(std::string_view w) {
  return !w.empty() && w.find_first_of("\t\n\r|") == std::string_view::npos;
}

}  // namespace

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "valid") return Split::valid;
  if (name == "test") return Split::test;
  throw DataError("unknown split '" + name + "' (expected train, valid or test)");
}

std::filesystem::path vocabulary_path(const std::filesystem::path& manifest) {
  return manifest.string() + ".vocab";
}

void Manifest::validate() const {
  std::unordered_set<std::string> words;
  for (const std::string& w : vocabulary) {
    if (!valid_word(w)) throw DataError("manifest: invalid vocabulary word '" + w + "'");
    if (!words.insert(w).second) throw DataError("manifest: duplicate vocabulary word '" + w + "'");
  }
  if (vocabulary.empty()) throw DataError("manifest: empty vocabulary");
  std::unordered_set<std::string> ids;
  for (const ManifestRecord& r : records) {
    if (!valid_word(r.clip_id)) throw DataError("manifest: invalid clip_id '" + r.clip_id + "'");
    if (!ids.insert(r.clip_id).second) throw DataError("manifest: duplicate clip_id " + r.clip_id);
    if (r.path.empty() || r.path.find_first_of("\t\n\r") != std::string::npos) {
      throw DataError("manifest: invalid path for clip " + r.clip_id);
    }
    if (kind == LabelKind::tags) {
      if (r.tags.size() != vocabulary.size()) {
        throw DataError("manifest: label width of clip " + r.clip_id + " differs from the vocabulary");
      }
      for (const std::uint8_t t : r.tags) {
        if (t > 1) throw DataError("manifest: non-binary tag for clip " + r.clip_id);
      }
    } else if (r.label >= vocabulary.size()) {
      throw DataError("manifest: class of clip " + r.clip_id + " outside the vocabulary");
    }
  }
}

std::vector<std::size_t> Manifest::split_indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].split == split) out.push_back(i);
  }
  return out;
}

void Manifest::require_splits(std::initializer_list<Split> splits) const {
  for (const Split s : splits) {
    if (split_indices(s).empty()) throw UserError("manifest has no " + to_string(s) + " clips");
  }
}

std::filesystem::path Manifest::resolve(const ManifestRecord& r) const {
  const std::filesystem::path p(r.path);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<float> Manifest::multi_hot(const ManifestRecord& r) const {
  std::vector<float> out(vocabulary.size(), 0.0f);
  if (kind == LabelKind::tags) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = r.tags[i];
  } else {
    out[r.label] = 1.0f;
  }
  return out;
}

const ManifestRecord* Manifest::find(const std::string& clip_id) const {
  for (const ManifestRecord& r : records) {
    if (r.clip_id == clip_id) return &r;
  }
  return nullptr;
}

std::string Manifest::to_tsv() const {
  std::string out = "clip_id\tpath\tsplit\t";
  out += kind == LabelKind::tags ? "tags\n" : "class\n";
  for (const ManifestRecord& r : records) {
    out += r.clip_id + "\t" + r.path + "\t" + to_string(r.split) + "\t";
    if (kind == LabelKind::tags) {
      bool first = true;
      for (std::size_t i = 0; i < r.tags.size(); ++i) {
        if (!r.tags[i]) continue;
        if (!first) out += '|';
        out += vocabulary[i];
        first = false;
      }
    } else {
      out += vocabulary.at(r.label);
    }
    out += '\n';
  }
  return out;
}

std::string Manifest::vocabulary_text() const {
  std::string out;
  for (const std::string& w : vocabulary) out += w + "\n";
  return out;
}

Manifest Manifest::parse(std::string_view tsv, std::string_view vocab, const std::string& name) {
  Manifest m;
  for (std::string_view w : lines_of(vocab)) m.vocabulary.emplace_back(w);
  std::unordered_map<std::string, std::uint32_t> index;
  for (std::size_t i = 0; i < m.vocabulary.size(); ++i) {
    index.emplace(m.vocabulary[i], static_cast<std::uint32_t>(i));
  }

  const std::vector<std::string_view> lines = lines_of(tsv);
  if (lines.empty()) throw DataError(name + ": missing header line");
  if (lines[0] == "clip_id\tpath\tsplit\ttags") {
    m.kind = LabelKind::tags;
  } else if (lines[0] == "clip_id\tpath\tsplit\tclass") {
    m.kind = LabelKind::classes;
  } else {
    throw DataError(name + ": header must be clip_id, path, split, tags|class (tab separated)");
  }
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const std::string where = name + ":" + std::to_string(ln + 1);
    const std::vector<std::string_view> cols = split_on(lines[ln], '\t');
    if (cols.size() != 4) throw DataError(where + ": expected 4 tab-separated columns");
    ManifestRecord r;
    r.clip_id = std::string(cols[0]);
    r.path = std::string(cols[1]);
    try {
      r.split = split_from_string(std::string(cols[2]));
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    auto lookup = [&](std::string_view w) {
      const auto it = index.find(std::string(w));
      if (it == index.end()) throw DataError(where + ": label '" + std::string(w) + "' not in vocabulary");
      return it->second;
    };
    if (m.kind == LabelKind::tags) {
      r.tags.assign(m.vocabulary.size(), 0);
      if (!cols[3].empty()) {
        for (std::string_view w : split_on(cols[3], '|')) r.tags[lookup(w)] = 1;
      }
    } else {
      r.label = lookup(cols[3]);
    }
    m.records.push_back(std::move(r));
  }
  try {
    m.validate();
  } catch (const DataError& e) {
    throw DataError(name + ": " + e.what());
  }
  return m;
}

Manifest Manifest::load(const std::filesystem::path& path) {
  const std::string tsv = io::read_file(path);
  const std::string vocab = io::read_file(vocabulary_path(path));
  Manifest m = parse(tsv, vocab, path.string());
  m.base_dir = path.parent_path();
  return m;
}

void Manifest::save(const std::filesystem::path& path) const {
  validate();
  io::write_file(path, to_tsv());
  io::write_file(vocabulary_path(path), vocabulary_text());
}

}  // namespace mlms::pipeline
