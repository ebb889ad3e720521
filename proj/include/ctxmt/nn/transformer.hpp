#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ctxmt/bpe.hpp"
#include "ctxmt/error.hpp"
#include "ctxmt/nn/ops.hpp"
#include "ctxmt/nn/tape.hpp"
#include "ctxmt/nn/tensor.hpp"

namespace ctxmt::nn {

struct ModelConfig {
  int d_model = 64;
  int num_heads = 4;
  int num_encoder_layers = 2;
  int num_decoder_layers = 2;
  int ff_dim = 128;
  int max_sequence_length = 256;
  int vocab_size = 0;
  double dropout_rate = 0.1;
  std::string positional_encoding = "sinusoidal";

  void validate() const {
    if (d_model <= 0 || num_heads <= 0) throw ConfigError("d_model and num_heads must be positive");
    if (d_model % num_heads != 0)
      throw ConfigError("d_model (" + std::to_string(d_model) + ") must be divisible by num_heads (" +
                        std::to_string(num_heads) + ")");
    if (num_encoder_layers < 0 || num_decoder_layers < 0 || ff_dim <= 0)
      throw ConfigError("invalid layer configuration");
    if (vocab_size <= 0) throw ConfigError("vocab_size must be positive");
    if (max_sequence_length < 3) throw ConfigError("max_sequence_length too small");
    if (dropout_rate < 0 || dropout_rate >= 1) throw ConfigError("dropout_rate must be in [0,1)");
    if (positional_encoding != "sinusoidal") throw ConfigError("only sinusoidal positional encoding is supported");
  }

  int head_dim() const { return d_model / num_heads; }

  bool operator==(const ModelConfig&) const = default;
};

// Packed ragged batch of id sequences.
struct PackedSequences {
  std::vector<int> tokens;
  std::vector<Segment> segments;
  std::vector<int> positions;  // position of each row inside its sequence

  static PackedSequences pack(std::span<const std::vector<int>> seqs) {
    PackedSequences p;
    for (const auto& s : seqs) {
      p.segments.push_back({static_cast<Eigen::Index>(p.tokens.size()), static_cast<Eigen::Index>(s.size())});
      for (std::size_t i = 0; i < s.size(); ++i) {
        p.tokens.push_back(s[i]);
        p.positions.push_back(static_cast<int>(i));
      }
    }
    return p;
  }
};

template <typename T>
class Transformer {
 public:
  explicit Transformer(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    build_parameters();
    build_positional_table();
  }

  const ModelConfig& config() const { return cfg_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }

  // Scaled uniform (Glorot) for weight matrices and the embedding, zeros for
  // biases, ones for layer-norm gains.
  void init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& [name, tensor] : params_.items()) {
      const bool is_gain = name.size() >= 2 && name.compare(name.size() - 2, 2, ".g") == 0;
      const bool is_bias = name.size() >= 2 && name.compare(name.size() - 2, 2, ".b") == 0;
      if (is_gain) {
        tensor.value.setOnes();
      } else if (is_bias) {
        tensor.value.setZero();
      } else {
        double fan_in = static_cast<double>(tensor.shape[0]);
        double fan_out = static_cast<double>(tensor.shape[1]);
        double bound = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (auto& x : tensor.values()) x = static_cast<T>(u(rng));
      }
    }
  }

  void check_length(std::size_t len, const char* what) const {
    if (len > static_cast<std::size_t>(cfg_.max_sequence_length))
      throw LengthError(std::string(what) + " length " + std::to_string(len) + " exceeds max_sequence_length " +
                        std::to_string(cfg_.max_sequence_length));
  }

  // Encoder over packed sources (each already terminated by EOS). Returns the
  // memory rows; `key_masked` receives the PAD mask of the memory.
  Var encode(Tape<T>& t, const PackedSequences& src, std::vector<char>& key_masked,
             std::mt19937_64* rng = nullptr) const {
    const double p = rng ? cfg_.dropout_rate : 0.0;
    key_masked.assign(src.tokens.size(), 0);
    for (std::size_t i = 0; i < src.tokens.size(); ++i) key_masked[i] = src.tokens[i] == kPadId;
    Var x = embed(t, src, rng);
    for (const auto& L : enc_) {
      Var h = ln(t, x, L.ln1);
      Var a = self_attention(t, h, L.attn, src.segments, false, &key_masked);
      x = ops::add(t, x, maybe_dropout(t, a, p, rng));
      h = ln(t, x, L.ln2);
      x = ops::add(t, x, maybe_dropout(t, ffn(t, h, L.ff), p, rng));
    }
    return ln(t, x, enc_final_);
  }

  // Decoder logits for packed decoder inputs (each starting with BOS);
  // sequence s of `tgt` attends to memory segment `mem_segments[s]`.
  Var decode(Tape<T>& t, const PackedSequences& tgt, Var memory, std::span<const Segment> mem_segments,
             const std::vector<char>& mem_masked, std::mt19937_64* rng = nullptr) const {
    const double p = rng ? cfg_.dropout_rate : 0.0;
    Var y = embed(t, tgt, rng);
    for (const auto& L : dec_) {
      Var h = ln(t, y, L.ln1);
      Var a = self_attention(t, h, L.self_attn, tgt.segments, true, nullptr);
      y = ops::add(t, y, maybe_dropout(t, a, p, rng));
      h = ln(t, y, L.ln2);
      Var c = cross_attention(t, h, memory, L.cross_attn, tgt.segments, mem_segments, &mem_masked);
      y = ops::add(t, y, maybe_dropout(t, c, p, rng));
      h = ln(t, y, L.ln3);
      y = ops::add(t, y, maybe_dropout(t, ffn(t, h, L.ff), p, rng));
    }
    y = ln(t, y, dec_final_);
    return ops::matmul_bt(t, y, param(t, embedding_));  // tied output projection
  }

 private:
  struct LayerNormIdx {
    std::size_t g, b;
  };
  struct AttentionIdx {
    std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
  };
  struct FeedForwardIdx {
    std::size_t w1, b1, w2, b2;
  };
  struct EncoderLayer {
    LayerNormIdx ln1;
    AttentionIdx attn;
    LayerNormIdx ln2;
    FeedForwardIdx ff;
  };
  struct DecoderLayer {
    LayerNormIdx ln1;
    AttentionIdx self_attn;
    LayerNormIdx ln2;
    AttentionIdx cross_attn;
    LayerNormIdx ln3;
    FeedForwardIdx ff;
  };

  void build_parameters() {
    const auto d = static_cast<std::size_t>(cfg_.d_model);
    const auto f = static_cast<std::size_t>(cfg_.ff_dim);
    embedding_ = params_.add("embed", {static_cast<std::size_t>(cfg_.vocab_size), d});
    auto layer_norm = [&](const std::string& p) {
      return LayerNormIdx{params_.add(p + ".g", {d}), params_.add(p + ".b", {d})};
    };
    auto attention = [&](const std::string& p) {
      AttentionIdx a{};
      a.wq = params_.add(p + ".wq", {d, d});
      a.bq = params_.add(p + ".wq.b", {d});
      a.wk = params_.add(p + ".wk", {d, d});
      a.bk = params_.add(p + ".wk.b", {d});
      a.wv = params_.add(p + ".wv", {d, d});
      a.bv = params_.add(p + ".wv.b", {d});
      a.wo = params_.add(p + ".wo", {d, d});
      a.bo = params_.add(p + ".wo.b", {d});
      return a;
    };
    auto feed_forward = [&](const std::string& p) {
      FeedForwardIdx x{};
      x.w1 = params_.add(p + ".w1", {d, f});
      x.b1 = params_.add(p + ".w1.b", {f});
      x.w2 = params_.add(p + ".w2", {f, d});
      x.b2 = params_.add(p + ".w2.b", {d});
      return x;
    };
    for (int l = 0; l < cfg_.num_encoder_layers; ++l) {
      std::string p = "enc." + std::to_string(l);
      EncoderLayer L;
      L.ln1 = layer_norm(p + ".ln1");
      L.attn = attention(p + ".self");
      L.ln2 = layer_norm(p + ".ln2");
      L.ff = feed_forward(p + ".ff");
      enc_.push_back(L);
    }
    enc_final_ = layer_norm("enc.final");
    for (int l = 0; l < cfg_.num_decoder_layers; ++l) {
      std::string p = "dec." + std::to_string(l);
      DecoderLayer L;
      L.ln1 = layer_norm(p + ".ln1");
      L.self_attn = attention(p + ".self");
      L.ln2 = layer_norm(p + ".ln2");
      L.cross_attn = attention(p + ".cross");
      L.ln3 = layer_norm(p + ".ln3");
      L.ff = feed_forward(p + ".ff");
      dec_.push_back(L);
    }
    dec_final_ = layer_norm("dec.final");
  }

  void build_positional_table() {
    const int d = cfg_.d_model;
    positional_ = Matrix<T>(cfg_.max_sequence_length, d);
    for (int pos = 0; pos < cfg_.max_sequence_length; ++pos)
      for (int i = 0; i < d; ++i) {
        double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / d);
        double angle = pos * rate;
        positional_(pos, i) = static_cast<T>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
      }
  }

  // Gradients are only written when the tape records, which training does
  // through a non-const model.
  Var param(Tape<T>& t, std::size_t idx) const { return t.parameter(const_cast<Tensor<T>&>(params_[idx])); }

  Var embed(Tape<T>& t, const PackedSequences& seq, std::mt19937_64* rng) const {
    for (const auto& s : seq.segments) check_length(static_cast<std::size_t>(s.length), "sequence");
    Var e = ops::embedding(t, param(t, embedding_), std::span<const int>(seq.tokens));
    e = ops::scale(t, e, static_cast<T>(std::sqrt(static_cast<double>(cfg_.d_model))));
    Matrix<T> pe(static_cast<Eigen::Index>(seq.tokens.size()), cfg_.d_model);
    for (std::size_t i = 0; i < seq.positions.size(); ++i)
      pe.row(static_cast<Eigen::Index>(i)) = positional_.row(seq.positions[i]);
    Var x = ops::add(t, e, t.constant(std::move(pe)));
    return maybe_dropout(t, x, rng ? cfg_.dropout_rate : 0.0, rng);
  }

  static Var maybe_dropout(Tape<T>& t, Var x, double p, std::mt19937_64* rng) {
    if (!rng || p <= 0) return x;
    return ops::dropout(t, x, p, *rng);
  }

  Var ln(Tape<T>& t, Var x, const LayerNormIdx& idx) const {
    return ops::layer_norm(t, x, param(t, idx.g), param(t, idx.b));
  }

  Var linear(Tape<T>& t, Var x, std::size_t w, std::size_t b) const {
    return ops::add_row(t, ops::matmul(t, x, param(t, w)), param(t, b));
  }

  Var ffn(Tape<T>& t, Var x, const FeedForwardIdx& f) const {
    return linear(t, ops::relu(t, linear(t, x, f.w1, f.b1)), f.w2, f.b2);
  }

  Var self_attention(Tape<T>& t, Var h, const AttentionIdx& a, std::span<const Segment> segs, bool causal,
                     const std::vector<char>* masked) const {
    Var q = linear(t, h, a.wq, a.bq);
    Var k = linear(t, h, a.wk, a.bk);
    Var v = linear(t, h, a.wv, a.bv);
    Var o = ops::attention(t, q, k, v, segs, segs, cfg_.num_heads, causal, masked);
    return linear(t, o, a.wo, a.bo);
  }

  Var cross_attention(Tape<T>& t, Var h, Var memory, const AttentionIdx& a, std::span<const Segment> q_segs,
                      std::span<const Segment> k_segs, const std::vector<char>* masked) const {
    Var q = linear(t, h, a.wq, a.bq);
    Var k = linear(t, memory, a.wk, a.bk);
    Var v = linear(t, memory, a.wv, a.bv);
    Var o = ops::attention(t, q, k, v, q_segs, k_segs, cfg_.num_heads, false, masked);
    return linear(t, o, a.wo, a.bo);
  }

  ModelConfig cfg_;
  ParameterSet<T> params_;
  std::size_t embedding_ = 0;
  std::vector<EncoderLayer> enc_;
  LayerNormIdx enc_final_{};
  std::vector<DecoderLayer> dec_;
  LayerNormIdx dec_final_{};
  Matrix<T> positional_;
};

}  // namespace ctxmt::nn
