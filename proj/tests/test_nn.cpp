#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "ctxmt/nn/checkpoint.hpp"
#include "ctxmt/nn/gradcheck.hpp"
#include "ctxmt/nn/inference.hpp"
#include "ctxmt/nn/ops.hpp"
#include "ctxmt/nn/transformer.hpp"

using namespace ctxmt;
using namespace ctxmt::nn;

namespace {

ModelConfig small_config(int vocab = 12) {
  ModelConfig c;
  c.d_model = 16;
  c.num_heads = 2;
  c.num_encoder_layers = 1;
  c.num_decoder_layers = 1;
  c.ff_dim = 32;
  c.max_sequence_length = 32;
  c.vocab_size = vocab;
  c.dropout_rate = 0.0;
  return c;
}

double row_logsumexp(const Matrix<double>& m, Eigen::Index r) {
  double mx = m.row(r).maxCoeff();
  return mx + std::log((m.row(r).array() - mx).exp().sum());
}

}  // namespace

TEST(ModelConfig, HeadDimAndDivisibility) {
  ModelConfig c;
  c.vocab_size = 10;
  EXPECT_EQ(c.head_dim(), 16);
  c.d_model = 65;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(Transformer<float>{c}, ConfigError);
}

TEST(ModelConfig, RejectsBadValues) {
  ModelConfig c = small_config();
  c.vocab_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.dropout_rate = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.positional_encoding = "learned";
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(InitModel, SameSeedIsBitIdentical) {
  auto a = init_model(small_config(), 42);
  auto b = init_model(small_config(), 42);
  ASSERT_EQ(a.parameters.size(), b.parameters.size());
  for (std::size_t i = 0; i < a.parameters.size(); ++i) {
    ASSERT_EQ(a.parameters[i].values.size(), b.parameters[i].values.size());
    EXPECT_EQ(0, std::memcmp(a.parameters[i].values.data(), b.parameters[i].values.data(),
                             a.parameters[i].values.size() * sizeof(float)));
  }
  auto c = init_model(small_config(), 43);
  EXPECT_NE(a.parameters[0].values, c.parameters[0].values);
}

TEST(InitModel, ScaledUniformBoundsAndSharedEmbedding) {
  auto ck = init_model(small_config(), 5);
  int embeds = 0;
  for (const auto& p : ck.parameters) {
    if (p.name == "embed") ++embeds;
    bool gain = p.name.ends_with(".g"), bias = p.name.ends_with(".b");
    for (float v : p.values) {
      if (gain) {
        EXPECT_EQ(v, 1.0f);
      } else if (bias) {
        EXPECT_EQ(v, 0.0f);
      } else {
        double bound = std::sqrt(6.0 / static_cast<double>(p.shape[0] + p.shape[1]));
        EXPECT_LE(std::abs(v), bound + 1e-7) << p.name;
      }
    }
  }
  EXPECT_EQ(embeds, 1);
  for (const auto& p : ck.parameters) EXPECT_FALSE(p.name.find("proj") != std::string::npos) << p.name;
}

TEST(Checkpoint, RoundTripsThroughFile) {
  auto ck = init_model(small_config(), 9, "abc123");
  ck.meta.steps = 17;
  ck.meta.final_loss = 1.25;
  auto path = (std::filesystem::temp_directory_path() / "ctxmt_ck_roundtrip.bin").string();
  save_checkpoint(ck, path);
  auto back = load_checkpoint(path);
  EXPECT_EQ(back.config, ck.config);
  EXPECT_EQ(back.vocab_hash, "abc123");
  EXPECT_EQ(back.meta.steps, 17u);
  EXPECT_DOUBLE_EQ(back.meta.final_loss, 1.25);
  ASSERT_EQ(back.parameters.size(), ck.parameters.size());
  for (std::size_t i = 0; i < ck.parameters.size(); ++i) {
    EXPECT_EQ(back.parameters[i].name, ck.parameters[i].name);
    EXPECT_EQ(back.parameters[i].shape, ck.parameters[i].shape);
    EXPECT_EQ(back.parameters[i].values, ck.parameters[i].values);
  }
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsGarbage) {
  auto path = (std::filesystem::temp_directory_path() / "ctxmt_ck_garbage.bin").string();
  {
    std::ofstream out(path);
    out << "not a checkpoint";
  }
  EXPECT_THROW(load_checkpoint(path), DataError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), DataError);
}

TEST(Checkpoint, LoadIntoDifferentConfigFails) {
  auto ck = init_model(small_config(), 1);
  auto other = small_config();
  other.ff_dim = 48;
  Transformer<float> m(other);
  EXPECT_THROW(load_parameters(m, ck), ConfigError);
}

TEST(Forward, ZeroEmbeddingGivesUniform) {
  auto cfg = small_config(20);
  Transformer<double> m(cfg);
  m.init(3);
  m.params()[0].value.setZero();  // embed is the output projection too
  std::vector<int> in{5, 6, 7}, out{8, 9};
  auto logp = forward(m, in, out);
  ASSERT_EQ(logp.rows(), 3);
  for (Eigen::Index r = 0; r < logp.rows(); ++r)
    for (Eigen::Index v = 0; v < logp.cols(); ++v) EXPECT_NEAR(logp(r, v), -std::log(20.0), 1e-12);
}

TEST(Forward, RowsNormalize) {
  Transformer<double> m(small_config());
  m.init(11);
  std::vector<int> in{5, 6, 7, 8}, out{9, 10, 11};
  auto logp = forward(m, in, out);
  for (Eigen::Index r = 0; r < logp.rows(); ++r) EXPECT_NEAR(row_logsumexp(logp, r), 0.0, 1e-5);
  Transformer<float> mf(small_config());
  mf.init(11);
  auto lf = forward(mf, in, out);
  for (Eigen::Index r = 0; r < lf.rows(); ++r) {
    Matrix<double> row = lf.row(r).cast<double>();
    EXPECT_NEAR(row_logsumexp(row, 0), 0.0, 1e-5);
  }
}

TEST(Forward, OverlongSequenceIsLengthError) {
  Transformer<float> m(small_config());
  m.init(1);
  std::vector<int> in(40, 5), out{6};
  EXPECT_THROW(forward(m, in, out), LengthError);
  std::vector<int> ok_in{5}, long_out(40, 6);
  EXPECT_THROW(forward(m, ok_in, long_out), LengthError);
  EXPECT_THROW(score_sequence(m, in, out), LengthError);
}

TEST(Forward, Causality) {
  Transformer<double> m(small_config());
  m.init(4);
  std::vector<int> in{5, 6, 7};
  std::vector<int> a{8, 9, 10, 11}, b{8, 9, 6, 5};
  auto la = forward(m, in, a);
  auto lb = forward(m, in, b);
  // Prefixes agree up to position 2, so rows 0..2 must agree.
  for (Eigen::Index r = 0; r <= 2; ++r) EXPECT_LT((la.row(r) - lb.row(r)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT((la.row(3) - lb.row(3)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Attention, WeightsSumToOne) {
  Tape<double> t(false);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  Matrix<double> q(5, 4), k(5, 4), v = Matrix<double>::Identity(5, 4);
  for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = n(rng), k.data()[i] = n(rng);
  // With V = ones, every output row equals the sum of the attention weights.
  Matrix<double> ones = Matrix<double>::Ones(5, 4);
  std::vector<Segment> seg{{0, 2}, {2, 3}};
  Var out = ops::attention(t, t.constant(q), t.constant(k), t.constant(ones), seg, seg, 2, true);
  EXPECT_LT((t.value(out).array() - 1.0).abs().maxCoeff(), 1e-12);
}

// Key rows flagged as PAD can be permuted (or rewritten) without changing
// the attention output.
TEST(Attention, PermutingMaskedKeysDoesNotChangeOutput) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  auto rnd = [&](Eigen::Index r, Eigen::Index c) {
    Matrix<double> m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
  };
  Matrix<double> q = rnd(3, 4), k = rnd(4, 4), v = rnd(4, 4);
  std::vector<char> masked{0, 1, 0, 1};
  std::vector<Segment> qs{{0, 3}}, ks{{0, 4}};
  Tape<double> t1(false);
  Var o1 = ops::attention(t1, t1.constant(q), t1.constant(k), t1.constant(v), qs, ks, 2, false, &masked);
  Matrix<double> k2 = k, v2 = v;
  k2.row(1).swap(k2.row(3));
  v2.row(1).swap(v2.row(3));
  k2.row(3) *= 7.0;
  Tape<double> t2(false);
  Var o2 = ops::attention(t2, t2.constant(q), t2.constant(k2), t2.constant(v2), qs, ks, 2, false, &masked);
  EXPECT_LT((t1.value(o1) - t2.value(o2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Forward, PadMemoryRowsAreIgnoredByDecoder) {
  Transformer<double> m(small_config());
  m.init(6);
  std::vector<int> src{5, kPadId, 6, kPadId, kEosId};
  auto ps = PackedSequences::pack(std::span<const std::vector<int>>(&src, 1));
  std::vector<int> tgt{kBosId, 7, 8};
  auto pt = PackedSequences::pack(std::span<const std::vector<int>>(&tgt, 1));

  Tape<double> t(false);
  std::vector<char> mask;
  Var mem = m.encode(t, ps, mask);
  EXPECT_EQ(mask, (std::vector<char>{0, 1, 0, 1, 0}));
  Matrix<double> memory = t.value(mem);
  Var l1 = m.decode(t, pt, t.constant(memory), ps.segments, mask);
  Matrix<double> swapped = memory;
  swapped.row(1).swap(swapped.row(3));
  swapped.row(1).setConstant(3.0);
  Var l2 = m.decode(t, pt, t.constant(swapped), ps.segments, mask);
  EXPECT_LT((t.value(l1) - t.value(l2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Forward, PackedBatchMatchesSingleSequences) {
  Transformer<double> m(small_config());
  m.init(12);
  std::vector<int> i1{5, 6}, o1{7, 8, 9}, i2{10, 11, 5, 6}, o2{6};
  ScoreRequest reqs[] = {{i1, o1}, {i2, o2}};
  auto batch = score_batch(m, std::span<const ScoreRequest>(reqs));
  EXPECT_NEAR(batch[0], score_sequence(m, i1, o1), 1e-10);
  EXPECT_NEAR(batch[1], score_sequence(m, i2, o2), 1e-10);
}

TEST(Score, UniformModelIsMinusLLogV) {
  Transformer<double> m(small_config(20));
  m.init(3);
  m.params()[0].value.setZero();
  std::vector<int> in{5, 6}, out{7, 8, 9};
  EXPECT_NEAR(score_sequence(m, in, out), -4.0 * std::log(20.0), 1e-10);
  std::vector<int> empty;
  EXPECT_NEAR(score_sequence(m, in, empty), -std::log(20.0), 1e-12);
}

TEST(Score, ChainRuleAdditivity) {
  Transformer<double> m(small_config());
  m.init(21);
  std::vector<int> in{5, 6, 7}, out{8, 9, 10};
  auto logp = forward(m, in, out);
  double manual = 0;
  for (std::size_t j = 0; j < out.size(); ++j) manual += logp(static_cast<Eigen::Index>(j), out[j]);
  manual += logp(static_cast<Eigen::Index>(out.size()), kEosId);
  EXPECT_NEAR(score_sequence(m, in, out), manual, 1e-10);
}

TEST(Translate, LengthPenalty) {
  EXPECT_DOUBLE_EQ(length_penalty(1), 1.0);
  EXPECT_NEAR(length_penalty(7), std::pow(2.0, 0.6), 1e-12);
}

TEST(Translate, GreedyFollowsArgmaxChain) {
  Transformer<double> m(small_config());
  m.init(31);
  std::vector<int> in{5, 6, 7};
  auto h = translate(m, in, 1, 10);
  // Oracle: repeated forward calls, picking the argmax each step.
  std::vector<int> chain;
  for (int step = 0; step < 10; ++step) {
    auto logp = forward(m, in, chain);
    Eigen::Index best = 0;
    logp.row(logp.rows() - 1).maxCoeff(&best);
    chain.push_back(static_cast<int>(best));
    if (best == kEosId) break;
  }
  if (chain.back() != kEosId) chain.push_back(kEosId);
  EXPECT_EQ(h.tokens, chain);
  EXPECT_EQ(h.tokens.back(), kEosId);
}

TEST(Translate, BeamDominatesGreedyAndIsDeterministic) {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    Transformer<double> m(small_config());
    m.init(seed);
    std::vector<int> in{5, 6, 7, 8};
    auto g = translate(m, in, 1, 8);
    auto b = translate(m, in, 4, 8);
    EXPECT_GE(b.normalized(), g.normalized() - 1e-12);
    auto b2 = translate(m, in, 4, 8);
    EXPECT_EQ(b.tokens, b2.tokens);
    EXPECT_EQ(b.log_prob, b2.log_prob);
    // The reported score is the model's own score of the chosen output.
    EXPECT_NEAR(b.log_prob, score_sequence(m, in, strip_eos(b.tokens)), 1e-9);
  }
}

TEST(Translate, MaxLenTruncatesWithEos) {
  Transformer<double> m(small_config(20));
  m.init(2);
  m.params()[0].value.setZero();
  m.params()[0].value(7, 0) = 1.0;  // nudge every position toward token 7
  std::vector<int> in{5};
  auto h = translate(m, in, 2, 3);
  EXPECT_LE(h.tokens.size(), 4u);
  EXPECT_EQ(h.tokens.back(), kEosId);
  EXPECT_THROW(translate(m, in, 0, 3), ConfigError);
}

TEST(GradientCheck, SmallModelPasses) {
  auto cfg = small_config(14);
  Transformer<double> m(cfg);
  m.init(77);
  EncodedExample ex{{5, 6, 7, 8, 4, 9}, {10, 11, 4, 12, 13}};
  auto r = gradient_check(m, ex, 1e-5);
  EXPECT_GT(r.checked, 0u);
  EXPECT_LT(r.max_relative_error, 1e-3);
  EXPECT_GT(r.max_abs_gradient, 1e-4);
}

// Final layer norm with zero gain makes the decoder output a constant vector;
// choosing it so EOS dominates by a wide margin drives the loss to zero.
TEST(GradientCheck, ZeroLossGivesZeroGradients) {
  auto cfg = small_config(8);
  Transformer<double> m(cfg);
  m.init(5);
  auto& items = m.params().items();
  auto find = [&](const std::string& name) -> Tensor<double>& {
    for (auto& it : items)
      if (it.name == name) return it.tensor;
    throw std::runtime_error(name);
  };
  find("dec.final.g").value.setZero();
  auto& b = find("dec.final.b").value;
  b.setZero();
  b(0, 0) = 1.0;
  auto& e = find("embed").value;
  e.col(0).setConstant(-500.0);
  e(kEosId, 0) = 500.0;
  EncodedExample ex{{5, 6}, {}};
  double loss = example_loss(m, ex, true);
  EXPECT_LT(loss, 1e-12);
  for (auto& it : items) EXPECT_LT(it.tensor.grad.cwiseAbs().maxCoeff(), 1e-8) << it.name;
}

TEST(GradientCheck, CorruptedGradientIsDetected) {
  Transformer<double> m(small_config(14));
  m.init(77);
  EncodedExample ex{{5, 6, 7, 8}, {10, 11, 12}};
  GradientCheckOptions opt;
  opt.corrupt = [](ParameterSet<double>& ps) {
    for (auto& it : ps.items()) it.tensor.grad *= 1.5;
  };
  auto r = gradient_check(m, ex, 1e-5, opt);
  EXPECT_GT(r.max_relative_error, 1e-1);
}
