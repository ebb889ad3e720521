#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "ctxmt/bpe.hpp"
#include "ctxmt/synthetic.hpp"

using namespace ctxmt;

namespace {

ParallelCorpus one_pair(const std::string& src, const std::string& tgt) {
  ParallelCorpus c;
  c.documents.push_back(make_document("d1", {src}, {tgt}));
  return c;
}

}  // namespace

TEST(LearnBpe, MostFrequentPairFirst) {
  auto m = learn_joint_bpe(one_pair("aa ab", "ab"), 1);
  ASSERT_EQ(m.merges.size(), 1u);
  EXPECT_EQ(m.merges[0], (SymbolPair{"a", "b"}));
}

TEST(LearnBpe, ZeroOperationsGivesCharacterVocabulary) {
  auto m = learn_joint_bpe(one_pair("abc cab", "zz"), 0);
  EXPECT_TRUE(m.merges.empty());
  EXPECT_EQ(m.alphabet, (std::vector<std::string>{"a", "b", "c", "z"}));
}

TEST(LearnBpe, TiesBrokenLexicographically) {
  // (c,d) and (a,b) both occur twice; (a,b) is smaller.
  auto m = learn_joint_bpe(one_pair("cd ab", "cd ab"), 2);
  ASSERT_EQ(m.merges.size(), 2u);
  EXPECT_EQ(m.merges[0], (SymbolPair{"a", "b"}));
  EXPECT_EQ(m.merges[1], (SymbolPair{"c", "d"}));
}

TEST(LearnBpe, ReservedSymbolsAreNotLearned) {
  auto m = learn_joint_bpe(one_pair("a <SEP> b", "a"), 5);
  EXPECT_EQ(m.alphabet, (std::vector<std::string>{"a", "b"}));
}

TEST(ApplyBpe, Examples) {
  BpeModel empty = learn_joint_bpe(one_pair("x", "x"), 0);
  EXPECT_EQ(apply_bpe(empty, "x"), (TokenSequence{"x"}));
  BpeModel m = learn_joint_bpe(one_pair("ab", "ab"), 0);
  m.merges = {{"a", "b"}};
  m.alphabet = {"a", "b"};
  EXPECT_EQ(apply_bpe(m, "aab"), (TokenSequence{"a@@", "ab"}));
  EXPECT_EQ(apply_bpe(m, "aab <SEP> b"), (TokenSequence{"a@@", "ab", "<SEP>", "b"}));
  EXPECT_EQ(apply_bpe(m, "aqb"), (TokenSequence{"a@@", "<UNK>", "b"}));
}

TEST(DecodeBpe, Examples) {
  EXPECT_EQ(decode_bpe({"a@@", "ab"}), "aab");
  EXPECT_EQ(decode_bpe({}), "");
  EXPECT_EQ(decode_bpe({"<SEP>"}), "<SEP>");
  EXPECT_EQ(decode_bpe({"a@@", "b", "c"}), "ab c");
}

TEST(BuildVocab, ReservedIdsAndCoverage) {
  SyntheticConfig sc;
  sc.num_documents = 30;
  auto data = generate_synthetic(sc);
  auto m = learn_joint_bpe(data.corpus, 50);
  auto v = build_vocab(m);
  EXPECT_EQ(v.at("<PAD>"), 0);
  EXPECT_EQ(v.at("<UNK>"), 1);
  EXPECT_EQ(v.at("<BOS>"), 2);
  EXPECT_EQ(v.at("<EOS>"), 3);
  EXPECT_EQ(v.at("<SEP>"), 4);
  EXPECT_EQ(v, build_vocab(m));
  for (const auto& [l, r] : m.merges) {
    EXPECT_TRUE(v.count(l + r));
    EXPECT_TRUE(v.count(l + r + "@@"));
  }
  // Every segment of the training text has an id.
  BpeSegmenter seg(m);
  for (const auto& d : data.corpus.documents)
    for (const auto& p : d.pairs)
      for (const auto& t : seg.apply(p.source + " " + p.target)) EXPECT_TRUE(v.count(t)) << t;
}

TEST(BpeProperties, RoundTripMonotonicityJointness) {
  SyntheticConfig sc;
  sc.num_documents = 50;
  auto data = generate_synthetic(sc);
  std::vector<BpeModel> models;
  for (std::size_t ops : {0, 10, 100}) models.push_back(learn_joint_bpe(data.corpus, ops));
  for (const auto& d : data.corpus.documents)
    for (const auto& p : d.pairs)
      for (const auto* line : {&p.source, &p.target}) {
        std::size_t prev = SIZE_MAX;
        for (const auto& m : models) {
          auto toks = apply_bpe(m, *line);
          EXPECT_EQ(decode_bpe(toks), text::normalize_whitespace(*line));
          EXPECT_LE(toks.size(), prev);
          prev = toks.size();
        }
      }
  // A word segments the same way wherever it occurs.
  BpeSegmenter seg(models[2]);
  TokenSequence alone, inside;
  seg.segment_word("V", alone);
  auto line = seg.apply("x V");
  EXPECT_EQ(TokenSequence(line.end() - static_cast<std::ptrdiff_t>(alone.size()), line.end()), alone);
}

TEST(BpeFiles, SaveLoadRoundTrip) {
  SyntheticConfig sc;
  sc.num_documents = 20;
  auto m = learn_joint_bpe(generate_synthetic(sc).corpus, 40);
  auto dir = std::filesystem::temp_directory_path();
  auto merges = (dir / "ctxmt_bpe_rt.merges").string(), vocab = (dir / "ctxmt_bpe_rt.vocab").string();
  save_bpe(m, merges, vocab);
  auto back = load_bpe(merges, vocab);
  EXPECT_EQ(back.merges, m.merges);
  EXPECT_EQ(back.alphabet, m.alphabet);
  EXPECT_EQ(load_vocab(vocab), build_vocab(m));
  EXPECT_EQ(vocab_hash(build_vocab(back)), vocab_hash(build_vocab(m)));
  std::filesystem::remove(merges);
  std::filesystem::remove(vocab);
}

TEST(BpeIds, EncodeDecode) {
  auto m = learn_joint_bpe(one_pair("ab ab", "ab"), 1);
  auto v = build_vocab(m);
  auto ids = encode_ids({"ab", "<SEP>", "zz"}, v);
  EXPECT_EQ(ids[1], kSepId);
  EXPECT_EQ(ids[2], kUnkId);
  EXPECT_EQ(decode_ids(ids, id_to_symbol(v)), (TokenSequence{"ab", "<SEP>", "<UNK>"}));
}
