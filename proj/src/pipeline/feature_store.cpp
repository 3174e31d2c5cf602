// SPDX-License-Identifier: Apache-2.0
#include "mlms/pipeline/feature_store.hpp"

#include <algorithm>
#include <cmath>

#include "mlms/error.hpp"
#include "mlms/io/binary.hpp"

namespace mlms::pipeline {

namespace {
using json = nlohmann::ordered_json;
constexpr std::string_view kMagic = "MLFS";
}  // namespace

std::size_t FeatureStore::find(const std::string& clip_id) const {
  const auto it = std::lower_bound(ids.begin(), ids.end(), clip_id);
  if (it == ids.end() || *it != clip_id) return std::string::npos;
  return static_cast<std::size_t>(it - ids.begin());
}

void FeatureStore::validate() const {
  model::check_provenance(provenance, dim);
  if (ids.size() != values.size()) throw DataError("feature store: id and row counts differ");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0 && !(ids[i - 1] < ids[i])) throw DataError("feature store: ids not strictly sorted");
    if (values[i].size() != dim) throw DataError("feature store: row " + ids[i] + " has the wrong width");
  }
}

void save_feature_store(const std::filesystem::path& path, const FeatureStore& store) {
  store.validate();
  json h;
  h["format"] = "mlms-features";
  h["selection"] = store.selection.to_json();
  h["dim"] = store.dim;
  h["provenance"] = model::provenance_to_json(store.provenance);
  h["sources"] = store.sources;
  h["records"] = store.ids.size();
  const std::string text = h.dump();
  io::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kFeatureStoreVersion);
  w.u64(text.size());
  w.bytes(text);
  for (std::size_t i = 0; i < store.ids.size(); ++i) {
    w.u32(static_cast<std::uint32_t>(store.ids[i].size()));
    w.bytes(store.ids[i]);
    w.f32s(store.values[i]);
  }
  io::write_file(path, w.data());
}

FeatureStore load_feature_store(const std::filesystem::path& path) {
  const std::string bytes = io::read_file(path);
  const std::string where = path.string();
  io::ByteReader r(bytes, where);
  if (r.bytes(4) != kMagic) throw DataError(where + ": not an mlms feature store");
  const std::uint32_t version = r.u32();
  if (version != kFeatureStoreVersion) {
    throw DataError(where + ": unsupported feature store version " + std::to_string(version));
  }
  const std::uint64_t len = r.u64();
  if (len > r.remaining()) throw DataError(where + ": truncated header");
  FeatureStore s;
  std::size_t records = 0;
  try {
    const json h = json::parse(r.bytes(static_cast<std::size_t>(len)));
    s.selection = model::FeatureSelection::from_json(h.at("selection"));
    s.dim = h.at("dim").get<std::size_t>();
    s.provenance = model::provenance_from_json(h.at("provenance"));
    s.sources = h.at("sources");
    records = h.at("records").get<std::size_t>();
  } catch (const json::exception& e) {
    throw DataError(where + ": malformed header: " + e.what());
  }
  for (std::size_t i = 0; i < records; ++i) {
    const std::uint32_t n = r.u32();
    s.ids.emplace_back(r.bytes(n));
    std::vector<float> row(s.dim);
    r.f32s(row);
    for (const float v : row) {
      if (!std::isfinite(v)) throw DataError(where + ": non-finite feature for clip " + s.ids.back());
    }
    s.values.push_back(std::move(row));
  }
  if (r.remaining() != 0) throw DataError(where + ": trailing bytes after the last record");
  try {
    s.validate();
  } catch (const DataError& e) {
    throw DataError(where + ": " + e.what());
  }
  return s;
}

}  // namespace mlms::pipeline
