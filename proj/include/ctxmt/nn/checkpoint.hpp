#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "ctxmt/error.hpp"
#include "ctxmt/nn/transformer.hpp"

namespace ctxmt::nn {

struct TrainingMeta {
  std::size_t steps = 0;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t rng_seed = 0;
};

struct NamedArray {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> values;
};

struct ModelCheckpoint {
  ModelConfig config;
  std::vector<NamedArray> parameters;
  std::string vocab_hash;
  TrainingMeta meta;

  const NamedArray* find(const std::string& name) const {
    for (const auto& p : parameters)
      if (p.name == name) return &p;
    return nullptr;
  }
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"d_model", c.d_model},
       {"num_heads", c.num_heads},
       {"num_encoder_layers", c.num_encoder_layers},
       {"num_decoder_layers", c.num_decoder_layers},
       {"ff_dim", c.ff_dim},
       {"max_sequence_length", c.max_sequence_length},
       {"vocab_size", c.vocab_size},
       {"dropout_rate", c.dropout_rate},
       {"positional_encoding", c.positional_encoding}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.d_model = j.value("d_model", c.d_model);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.num_encoder_layers = j.value("num_encoder_layers", c.num_encoder_layers);
  c.num_decoder_layers = j.value("num_decoder_layers", c.num_decoder_layers);
  c.ff_dim = j.value("ff_dim", c.ff_dim);
  c.max_sequence_length = j.value("max_sequence_length", c.max_sequence_length);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
  c.positional_encoding = j.value("positional_encoding", c.positional_encoding);
}

template <typename T>
ModelCheckpoint to_checkpoint(const Transformer<T>& model, std::string vocab_hash, TrainingMeta meta = {}) {
  ModelCheckpoint ck;
  ck.config = model.config();
  ck.vocab_hash = std::move(vocab_hash);
  ck.meta = meta;
  for (const auto& [name, tensor] : model.params().items()) {
    NamedArray a{name, tensor.shape, {}};
    a.values.reserve(tensor.size());
    for (T v : tensor.values()) a.values.push_back(static_cast<float>(v));
    ck.parameters.push_back(std::move(a));
  }
  return ck;
}

template <typename T>
void load_parameters(Transformer<T>& model, const ModelCheckpoint& ck) {
  if (!(model.config() == ck.config)) throw ConfigError("checkpoint configuration differs from model configuration");
  auto& items = model.params().items();
  if (items.size() != ck.parameters.size()) throw DataError("checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& src = ck.parameters[i];
    auto& dst = items[i];
    if (src.name != dst.name || src.shape != dst.tensor.shape)
      throw DataError("checkpoint parameter '" + src.name + "' does not match model parameter '" + dst.name + "'");
    auto vals = dst.tensor.values();
    for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = static_cast<T>(src.values[k]);
  }
}

template <typename T>
Transformer<T> model_from_checkpoint(const ModelCheckpoint& ck) {
  Transformer<T> m(ck.config);
  load_parameters(m, ck);
  return m;
}

// Fresh parameters for `config`; identical (config, seed) give identical bits.
inline ModelCheckpoint init_model(const ModelConfig& config, std::uint64_t seed, std::string vocab_hash = {}) {
  Transformer<float> m(config);
  m.init(seed);
  return to_checkpoint(m, std::move(vocab_hash), TrainingMeta{0, std::numeric_limits<double>::quiet_NaN(), seed});
}

inline constexpr char kCheckpointMagic[8] = {'C', 'T', 'X', 'M', 'T', 'C', 'K', 'P'};

namespace detail {

inline void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void write_f32_le(std::ostream& out, const std::vector<float>& vals) {
  std::vector<unsigned char> buf(vals.size() * 4);
  for (std::size_t i = 0; i < vals.size(); ++i) {
    auto u = std::bit_cast<std::uint32_t>(vals[i]);
    for (int k = 0; k < 4; ++k) buf[4 * i + static_cast<std::size_t>(k)] = static_cast<unsigned char>(u >> (8 * k));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

inline std::vector<float> read_f32_le(std::istream& in, std::size_t n) {
  std::vector<unsigned char> buf(n * 4);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  std::vector<float> vals(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t u = 0;
    for (int k = 0; k < 4; ++k) u |= static_cast<std::uint32_t>(buf[4 * i + static_cast<std::size_t>(k)]) << (8 * k);
    vals[i] = std::bit_cast<float>(u);
  }
  return vals;
}

}  // namespace detail

// Layout: 8-byte magic, u64 header length, JSON header (config, vocab_hash,
// training_meta, parameter names and shapes), then each parameter as
// little-endian float32 in header order.
inline void save_checkpoint(const ModelCheckpoint& ck, const std::string& path) {
  nlohmann::json header;
  header["format"] = "ctxmt-checkpoint";
  header["version"] = 1;
  header["config"] = ck.config;
  header["vocab_hash"] = ck.vocab_hash;
  header["training_meta"] = {{"steps", ck.meta.steps},
                             {"final_loss", std::isfinite(ck.meta.final_loss) ? nlohmann::json(ck.meta.final_loss)
                                                                              : nlohmann::json(nullptr)},
                             {"rng_seed", ck.meta.rng_seed}};
  auto& plist = header["parameters"] = nlohmann::json::array();
  for (const auto& p : ck.parameters) plist.push_back({{"name", p.name}, {"shape", p.shape}});
  std::string h = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path);
  out.write(kCheckpointMagic, 8);
  detail::write_u64(out, h.size());
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (const auto& p : ck.parameters) detail::write_f32_le(out, p.values);
  if (!out) throw DataError("failed writing checkpoint " + path);
}

inline ModelCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) throw DataError(path + " is not a checkpoint file");
  std::uint64_t len = detail::read_u64(in);
  if (len > (1u << 28)) throw DataError(path + ": implausible header length");
  std::string h(len, '\0');
  in.read(h.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError(path + ": truncated header");
  ModelCheckpoint ck;
  try {
    auto header = nlohmann::json::parse(h);
    ck.config = header.at("config").get<ModelConfig>();
    ck.vocab_hash = header.at("vocab_hash").get<std::string>();
    const auto& meta = header.at("training_meta");
    ck.meta.steps = meta.at("steps").get<std::size_t>();
    ck.meta.final_loss =
        meta.at("final_loss").is_null() ? std::numeric_limits<double>::quiet_NaN() : meta["final_loss"].get<double>();
    ck.meta.rng_seed = meta.at("rng_seed").get<std::uint64_t>();
    for (const auto& p : header.at("parameters")) {
      NamedArray a{p.at("name").get<std::string>(), p.at("shape").get<std::vector<std::size_t>>(), {}};
      std::size_t n = 1;
      for (auto s : a.shape) n *= s;
      a.values = detail::read_f32_le(in, n);
      if (!in) throw DataError(path + ": truncated parameter block " + a.name);
      ck.parameters.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": malformed checkpoint header: " + e.what());
  }
  return ck;
}

}  // namespace ctxmt::nn
