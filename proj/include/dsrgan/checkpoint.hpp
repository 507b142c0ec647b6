#ifndef DSRGAN_CHECKPOINT_HPP_
#define DSRGAN_CHECKPOINT_HPP_

// Binary checkpoint layout (all integers little-endian):
//
//   bytes 0-7   magic "DSRGANCP"
//   u32         format version
//   u64         metadata length L
//   L bytes     UTF-8 JSON: configs, normalization, epoch, optimizer step
//               counts and a tensor manifest (name, shape, byte offset)
//   payload     float32 tensors in manifest order, offsets relative to
//               the payload start

#include <nlohmann/json.hpp>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <type_traits>
#include <string>
#include <vector>

#include "dsrgan/adam.hpp"
#include "dsrgan/config.hpp"
#include "dsrgan/error.hpp"
#include "dsrgan/raster.hpp"
#include "dsrgan/tensor.hpp"

namespace dsrgan {

inline constexpr std::array<char, 8> kCheckpointMagic = {'D', 'S', 'R', 'G', 'A', 'N', 'C', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  /// Completed epochs; training resumes at this epoch index.
  std::int64_t epoch = 0;
  TrainConfig config;
  NormParams norm;
  ParamSet<float> generator;
  ParamSet<float> discriminator;
  AdamState<float> adam_g;
  AdamState<float> adam_d;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

namespace detail {

template <class U>
void put_le(std::string& out, U v) {
  static_assert(std::is_unsigned_v<U>);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <class U>
U get_le(const unsigned char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

inline void put_floats(std::string& out, const Tensor<float>& t) {
  for (float f : t.vec()) put_le(out, std::bit_cast<std::uint32_t>(f));
}

struct ManifestEntry {
  std::string group;
  const Parameter<float>* param;
  const Tensor<float>* tensor;
};

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& cp) {
  std::vector<detail::ManifestEntry> entries;
  auto add_params = [&](const std::string& group, const ParamSet<float>& ps) {
    for (const auto& p : ps) entries.push_back({group, &p, &p.value});
  };
  auto add_state = [&](const std::string& group, const ParamSet<float>& ps,
                       const AdamState<float>& st) {
    detail::require<ShapeError>(st.m.size() == ps.size() && st.v.size() == ps.size(),
                                "checkpoint: optimizer state does not match " + group);
    for (std::size_t i = 0; i < ps.size(); ++i) entries.push_back({group + ".m", &ps[i], &st.m[i]});
    for (std::size_t i = 0; i < ps.size(); ++i) entries.push_back({group + ".v", &ps[i], &st.v[i]});
  };
  add_params("generator", cp.generator);
  add_params("discriminator", cp.discriminator);
  add_state("adam_g", cp.generator, cp.adam_g);
  add_state("adam_d", cp.discriminator, cp.adam_d);

  json manifest = json::array();
  std::uint64_t offset = 0;
  for (const auto& e : entries) {
    const Shape s = e.tensor->shape();
    manifest.push_back({{"group", e.group},
                        {"name", e.param->name},
                        {"shape", {s.n, s.c, s.h, s.w}},
                        {"trainable", e.param->trainable},
                        {"offset", offset}});
    offset += 4 * e.tensor->size();
  }
  json meta = {{"epoch", cp.epoch},
               {"config", to_json(cp.config)},
               {"seed", cp.config.seed},
               {"norm", {{"min_elev", cp.norm.min_elev}, {"max_elev", cp.norm.max_elev}}},
               {"adam", {{"generator_step", cp.adam_g.step}, {"discriminator_step", cp.adam_d.step}}},
               {"payload_bytes", offset},
               {"tensors", manifest}};
  const std::string meta_text = meta.dump();

  std::string out(kCheckpointMagic.begin(), kCheckpointMagic.end());
  detail::put_le(out, kCheckpointVersion);
  detail::put_le(out, static_cast<std::uint64_t>(meta_text.size()));
  out += meta_text;
  out.reserve(out.size() + offset);
  for (const auto& e : entries) detail::put_floats(out, *e.tensor);
  return out;
}

inline Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source = "<memory>") {
  auto fail = [&](const std::string& msg) { return FormatError("checkpoint '" + source + "': " + msg); };
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 20) throw fail("truncated header");
  if (std::memcmp(bytes.data(), kCheckpointMagic.data(), kCheckpointMagic.size()) != 0) {
    throw fail("bad magic bytes");
  }
  const auto version = detail::get_le<std::uint32_t>(p + 8);
  if (version != kCheckpointVersion) {
    throw fail("unsupported version " + std::to_string(version) + " (expected " +
               std::to_string(kCheckpointVersion) + ")");
  }
  const auto meta_len = detail::get_le<std::uint64_t>(p + 12);
  if (meta_len > bytes.size() - 20) throw fail("truncated metadata");
  json meta;
  try {
    meta = json::parse(bytes.substr(20, meta_len));
  } catch (const json::parse_error& e) {
    throw fail(std::string("metadata is not valid JSON: ") + e.what());
  }
  const std::size_t payload_start = 20 + meta_len;

  Checkpoint cp;
  try {
    cp.epoch = meta.at("epoch").get<std::int64_t>();
    cp.config = train_config_from_json(meta.at("config"));
    cp.norm.min_elev = meta.at("norm").at("min_elev").get<double>();
    cp.norm.max_elev = meta.at("norm").at("max_elev").get<double>();
    cp.adam_g.step = meta.at("adam").at("generator_step").get<std::int64_t>();
    cp.adam_d.step = meta.at("adam").at("discriminator_step").get<std::int64_t>();
    const auto payload = meta.at("payload_bytes").get<std::uint64_t>();
    if (bytes.size() - payload_start != payload) throw fail("truncated or oversized payload");

    for (const auto& e : meta.at("tensors")) {
      const auto group = e.at("group").get<std::string>();
      const auto name = e.at("name").get<std::string>();
      const auto dims = e.at("shape").get<std::vector<std::size_t>>();
      if (dims.size() != 4) throw fail("tensor '" + name + "' needs a 4-d shape");
      const Shape s{dims[0], dims[1], dims[2], dims[3]};
      const auto off = e.at("offset").get<std::uint64_t>();
      if (off + 4 * s.size() > payload) throw fail("tensor '" + name + "' exceeds payload");
      std::vector<float> data(s.size());
      const unsigned char* src = p + payload_start + off;
      for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = std::bit_cast<float>(detail::get_le<std::uint32_t>(src + 4 * i));
      }
      Tensor<float> t(s, std::move(data));
      const bool trainable = e.at("trainable").get<bool>();
      if (group == "generator") {
        cp.generator.add(name, std::move(t), trainable);
      } else if (group == "discriminator") {
        cp.discriminator.add(name, std::move(t), trainable);
      } else if (group == "adam_g.m") {
        cp.adam_g.m.push_back(std::move(t));
      } else if (group == "adam_g.v") {
        cp.adam_g.v.push_back(std::move(t));
      } else if (group == "adam_d.m") {
        cp.adam_d.m.push_back(std::move(t));
      } else if (group == "adam_d.v") {
        cp.adam_d.v.push_back(std::move(t));
      } else {
        throw fail("unknown tensor group '" + group + "'");
      }
    }
  } catch (const json::exception& e) {
    throw fail(std::string("malformed metadata: ") + e.what());
  } catch (const ConfigError& e) {
    throw fail(e.what());
  }
  if (cp.adam_g.m.size() != cp.generator.size() || cp.adam_g.v.size() != cp.generator.size() ||
      cp.adam_d.m.size() != cp.discriminator.size() ||
      cp.adam_d.v.size() != cp.discriminator.size()) {
    throw fail("optimizer state does not match the parameter sets");
  }
  return cp;
}

inline void save_checkpoint(const Checkpoint& cp, const std::string& path) {
  const std::string bytes = serialize_checkpoint(cp);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str(), path);
}

}  // namespace dsrgan

#endif  // DSRGAN_CHECKPOINT_HPP_
