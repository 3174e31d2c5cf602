// SPDX-License-Identifier: Apache-2.0
#include "mlms/pipeline/checkpoint.hpp"

#include <cmath>

#include "mlms/error.hpp"
#include "mlms/io/binary.hpp"

namespace mlms::pipeline {

namespace {

using json = nlohmann::ordered_json;
constexpr std::string_view kMagic = "MLMS";

json tensor_table(nn::Network<float>& net, std::size_t* total) {
  json t = json::array();
  *total = 0;
  for (const nn::NamedTensor<float>& nt : net.state()) {
    t.push_back({{"name", nt.name}, {"shape", nt.tensor->shape()}});
    *total += nt.tensor->size();
  }
  return t;
}

void put_meta(json& h, const CheckpointMeta& meta) {
  h["seed"] = meta.seed;
  h["train_config"] = meta.train.to_json();
  h["vocabulary"] = meta.vocabulary;
  h["metadata"] = meta.extra;
}

void write(const std::filesystem::path& path, json header, nn::Network<float>& net) {
  std::size_t total = 0;
  header["tensors"] = tensor_table(net, &total);
  header["payload_floats"] = total;
  const std::string text = header.dump();
  io::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kCheckpointVersion);
  w.u64(text.size());
  w.bytes(text);
  for (const nn::NamedTensor<float>& nt : net.state()) w.f32s(nt.tensor->values());
  io::write_file(path, w.data());
}

struct Loaded {
  json header;
  std::string bytes;
  std::size_t payload_offset = 0;
};

Loaded read_header(const std::filesystem::path& path, bool need_payload) {
  Loaded l;
  l.bytes = io::read_file(path);
  io::ByteReader r(l.bytes, path.string());
  if (r.bytes(4) != kMagic) throw DataError(path.string() + ": not an mlms checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint64_t len = r.u64();
  if (len > r.remaining()) throw DataError(path.string() + ": truncated checkpoint header");
  const std::string_view text = r.bytes(static_cast<std::size_t>(len));
  try {
    l.header = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed checkpoint header: " + e.what());
  }
  l.payload_offset = r.position();
  if (need_payload) {
    const std::size_t floats = l.header.value("payload_floats", std::size_t{0});
    if (r.remaining() != floats * sizeof(float)) {
      throw DataError(path.string() + ": payload holds " + std::to_string(r.remaining()) +
                      " bytes, header declares " + std::to_string(floats * sizeof(float)));
    }
  }
  return l;
}

CheckpointMeta read_meta(const json& h) {
  CheckpointMeta m;
  m.seed = h.at("seed").get<std::uint64_t>();
  m.train = model::TrainConfig::from_json(h.at("train_config"));
  m.vocabulary = h.at("vocabulary").get<std::vector<std::string>>();
  m.extra = h.at("metadata");
  return m;
}

// Copies the payload into the network, checking names and shapes against the header.
void fill(nn::Network<float>& net, const Loaded& l, const std::filesystem::path& path) {
  const json& table = l.header.at("tensors");
  std::vector<nn::NamedTensor<float>> state = net.state();
  if (table.size() != state.size()) {
    throw DataError(path.string() + ": tensor table does not match the architecture");
  }
  io::ByteReader r(std::string_view(l.bytes).substr(l.payload_offset), path.string());
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (table[i].at("name").get<std::string>() != state[i].name ||
        table[i].at("shape").get<nn::Shape>() != state[i].tensor->shape()) {
      throw DataError(path.string() + ": tensor " + state[i].name + " does not match the architecture");
    }
    r.f32s(state[i].tensor->storage());
    for (const float v : state[i].tensor->values()) {
      if (!std::isfinite(v)) throw DataError(path.string() + ": non-finite value in " + state[i].name);
    }
  }
}

json strip_updates(json layers) {
  for (json& l : layers) l.erase("updates");
  return layers;
}

template <typename F>
auto guarded(const std::filesystem::path& path, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed checkpoint header: " + e.what());
  } catch (const UserError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace

void save_local_checkpoint(const std::filesystem::path& path, model::LocalModel& m,
                           const CheckpointMeta& meta) {
  json h;
  h["format"] = "mlms-checkpoint";
  h["kind"] = "local";
  h["spec"] = m.spec.to_json();
  h["layers"] = m.net.describe();
  h["frontend"] = m.frontend.to_json();
  h["norm_stats"] = m.norm.to_json();
  put_meta(h, meta);
  write(path, std::move(h), m.net);
}

model::LocalModel load_local_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta) {
  const Loaded l = read_header(path, true);
  return guarded(path, [&] {
    if (l.header.at("kind") != "local") throw DataError(path.string() + ": not a local checkpoint");
    model::LocalModel m;
    m.spec = model::LocalModelSpec::from_json(l.header.at("spec"));
    m.spec.validate();
    m.frontend = audio::FrontendConfig::from_json(l.header.at("frontend"));
    m.norm = audio::NormStats::from_json(l.header.at("norm_stats"));
    m.net = nn::Network<float>::from_description(l.header.at("layers"), nullptr);
    const json expected = strip_updates(model::make_local_network<float>(m.spec, nullptr).describe());
    if (strip_updates(l.header.at("layers")) != expected) {
      throw DataError(path.string() + ": layer list does not match the model spec");
    }
    std::vector<std::size_t> taps;
    for (std::size_t b = 0; b < m.spec.conv_blocks.size(); ++b) taps.push_back(model::block_relu_layer(b));
    m.net.set_taps(taps);
    fill(m.net, l, path);
    if (meta) *meta = read_meta(l.header);
    return m;
  });
}

void save_global_checkpoint(const std::filesystem::path& path, model::GlobalModel& m,
                            const model::FeatureSelection& selection, const CheckpointMeta& meta) {
  json h;
  h["format"] = "mlms-checkpoint";
  h["kind"] = "global";
  h["spec"] = m.spec.to_json();
  h["layers"] = m.net.describe();
  h["provenance"] = model::provenance_to_json(m.provenance);
  h["selection"] = selection.to_json();
  put_meta(h, meta);
  write(path, std::move(h), m.net);
}

model::GlobalModel load_global_checkpoint(const std::filesystem::path& path,
                                          model::FeatureSelection* selection, CheckpointMeta* meta) {
  const Loaded l = read_header(path, true);
  return guarded(path, [&] {
    if (l.header.at("kind") != "global") throw DataError(path.string() + ": not a global checkpoint");
    const model::GlobalModelSpec spec = model::GlobalModelSpec::from_json(l.header.at("spec"));
    const model::Provenance prov = model::provenance_from_json(l.header.at("provenance"));
    model::GlobalModel m = model::build_global(spec, prov, nullptr);
    if (strip_updates(l.header.at("layers")) != strip_updates(m.net.describe())) {
      throw DataError(path.string() + ": layer list does not match the model spec");
    }
    m.net = nn::Network<float>::from_description(l.header.at("layers"), nullptr);
    fill(m.net, l, path);
    if (selection) *selection = model::FeatureSelection::from_json(l.header.at("selection"));
    if (meta) *meta = read_meta(l.header);
    return m;
  });
}

nlohmann::ordered_json checkpoint_header(const std::filesystem::path& path) {
  return read_header(path, false).header;
}

std::string checkpoint_kind(const std::filesystem::path& path) {
  const json h = checkpoint_header(path);
  const std::string kind = h.value("kind", std::string{});
  if (kind != "local" && kind != "global") throw DataError(path.string() + ": unknown checkpoint kind");
  return kind;
}

}  // namespace mlms::pipeline
