#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ctxmt/contrastive_set.hpp"
#include "ctxmt/corpus.hpp"
#include "ctxmt/error.hpp"
#include "ctxmt/text.hpp"

namespace ctxmt {

struct SyntheticConfig {
  std::size_t num_documents = 100;
  std::size_t sentences_per_document = 8;
  std::size_t source_vocab_size = 40;
  std::size_t target_vocab_size = 40;
  std::size_t min_sentence_length = 2;  // filler words per sentence
  std::size_t max_sentence_length = 4;
  // TargetOnly, BothSides, SourceOnly, Combined.
  std::array<double, 4> proportions{0.35, 0.25, 0.25, 0.15};
  std::size_t max_distance = 3;
  double instance_rate = 0.9;  // chance an eligible slot carries an instance
  std::uint64_t rng_seed = 1;
};

inline void validate(const SyntheticConfig& c) {
  double sum = 0;
  for (double p : c.proportions) {
    if (p < 0) throw ConfigError("category proportions must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("category proportions must sum to 1");
  if (c.max_distance < 1) throw ConfigError("max_distance must be >= 1");
  if (c.max_distance >= c.sentences_per_document)
    throw ConfigError("max_distance must be smaller than sentences_per_document");
  if (c.source_vocab_size == 0 || c.target_vocab_size == 0)
    throw ConfigError("vocabulary sizes must be positive");
  if (c.min_sentence_length == 0 || c.min_sentence_length > c.max_sentence_length)
    throw ConfigError("invalid sentence length range");
  if (c.instance_rate < 0 || c.instance_rate > 1) throw ConfigError("instance_rate must be in [0,1]");
  if (c.num_documents == 0) throw ConfigError("num_documents must be positive");
}

// Closed token inventory of the synthetic language pair. Each category has a
// context marker and an ambiguous current-sentence token with two target forms.
namespace synth_tokens {
// TargetOnly: register lives only in the target context.
inline constexpr const char* kGreet = "greet";
inline constexpr const char* kRegisterFormal = "Rf";
inline constexpr const char* kRegisterInformal = "Ri";
inline constexpr const char* kVerb = "V";
inline constexpr const char* kVerbFormal = "Vf";
inline constexpr const char* kVerbInformal = "Vi";
// BothSides: gendered noun marked on both sides.
inline constexpr const char* kNounBothMasc = "Mm";
inline constexpr const char* kNounBothFem = "Mf";
inline constexpr const char* kNounBothMascTgt = "Gm";
inline constexpr const char* kNounBothFemTgt = "Gf";
// SourceOnly: gendered source noun translated into an unmarked target noun.
inline constexpr const char* kNounMasc = "Nm";
inline constexpr const char* kNounFem = "Nf";
inline constexpr const char* kNounNeutral = "N0";
inline constexpr const char* kPronoun = "P";
inline constexpr const char* kPronounMasc = "Pm";
inline constexpr const char* kPronounFem = "Pf";
// Combined: person from the source, an ambiguous form in the target.
inline constexpr const char* kSecondPerson = "Y2";
inline constexpr const char* kThirdPerson = "Y3";
inline constexpr const char* kFormA = "Ua";
inline constexpr const char* kFormB = "Ub";
inline constexpr const char* kCombinedVerb = "C";
inline constexpr const char* kCombinedFormal = "Cf";
inline constexpr const char* kCombinedInformal = "Ci";
}  // namespace synth_tokens

// Filler lexicon plus the word-level translation rules of the synthetic pair.
// Depends only on the vocabulary sizes, so corpora generated with different
// seeds share one language.
class SyntheticLexicon {
 public:
  SyntheticLexicon(std::size_t source_size, std::size_t target_size) {
    source_words_ = make_words(source_size, "bdgklmnprst", "aeiou", 0x5eedULL);
    target_words_ = make_words(target_size, "cfhjvwxz", "aeiouy", 0xfeedULL);
    for (std::size_t k = 0; k < source_words_.size(); ++k) {
      const auto& t = target_words_[k % target_words_.size()];
      forward_[source_words_[k]] = t;
      reverse_.emplace(t, source_words_[k]);  // keeps the lowest source index
    }
    using namespace synth_tokens;
    for (auto [t, s] : std::initializer_list<std::pair<const char*, const char*>>{
             {kRegisterFormal, kGreet}, {kRegisterInformal, kGreet}, {kVerbFormal, kVerb},
             {kVerbInformal, kVerb}, {kNounBothMascTgt, kNounBothMasc},
             {kNounBothFemTgt, kNounBothFem}, {kNounNeutral, kNounMasc}, {kPronounMasc, kPronoun},
             {kPronounFem, kPronoun}, {kFormA, kSecondPerson}, {kFormB, kSecondPerson},
             {kCombinedFormal, kCombinedVerb}, {kCombinedInformal, kCombinedVerb}})
      reverse_.emplace(t, s);
  }

  const std::vector<std::string>& source_words() const { return source_words_; }
  const std::vector<std::string>& target_words() const { return target_words_; }
  const std::string& translate_filler(const std::string& w) const { return forward_.at(w); }

  // Sentence-level target-to-source mapping. Information only present in
  // source context (e.g. the gender behind N0) cannot be recovered and falls
  // back to a fixed default form.
  std::string reverse_translate(const std::string& target_line) const {
    std::vector<std::string> out;
    for (const auto& w : text::split_whitespace(target_line)) {
      auto it = reverse_.find(w);
      out.push_back(it == reverse_.end() ? w : it->second);
    }
    return text::join(out);
  }

 private:
  static std::vector<std::string> make_words(std::size_t n, std::string_view consonants,
                                             std::string_view vowels, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::set<std::string> seen;
    std::vector<std::string> words;
    while (words.size() < n) {
      std::size_t syllables = 1 + rng() % 3;
      std::string w;
      for (std::size_t s = 0; s < syllables; ++s) {
        w += consonants[rng() % consonants.size()];
        w += vowels[rng() % vowels.size()];
      }
      if (seen.insert(w).second) words.push_back(w);
    }
    return words;
  }

  std::vector<std::string> source_words_, target_words_;
  std::map<std::string, std::string> forward_;
  std::map<std::string, std::string> reverse_;
};

struct SyntheticData {
  ParallelCorpus corpus;
  ContrastiveSet contrastive;
};

namespace detail {

struct SentenceDraft {
  std::vector<std::string> source, target;
};

class SyntheticBuilder {
 public:
  SyntheticBuilder(const SyntheticConfig& cfg, const SyntheticLexicon& lex)
      : cfg_(cfg), lex_(lex), rng_(cfg.rng_seed) {}

  SentenceDraft filler() {
    SentenceDraft s;
    std::size_t len = uniform(cfg_.min_sentence_length, cfg_.max_sentence_length);
    for (std::size_t k = 0; k < len; ++k) {
      const auto& w = lex_.source_words()[uniform(0, lex_.source_words().size() - 1)];
      s.source.push_back(w);
      s.target.push_back(lex_.translate_filler(w));
    }
    return s;
  }

  // Filler sentence with one aligned token pair inserted at a random slot.
  SentenceDraft with_token(const std::string& src, const std::string& tgt) {
    auto s = filler();
    std::size_t pos = uniform(0, s.source.size());
    s.source.insert(s.source.begin() + static_cast<std::ptrdiff_t>(pos), src);
    s.target.insert(s.target.begin() + static_cast<std::ptrdiff_t>(pos), tgt);
    ambiguous_pos_ = pos;
    return s;
  }

  std::size_t uniform(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  bool coin() { return uniform(0, 1) == 1; }
  bool bernoulli(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }

  PhenomenonCategory sample_category() {
    std::discrete_distribution<int> dist(cfg_.proportions.begin(), cfg_.proportions.end());
    return kAllCategories[dist(rng_)];
  }

  std::size_t last_inserted_position() const { return ambiguous_pos_; }

 private:
  const SyntheticConfig& cfg_;
  const SyntheticLexicon& lex_;
  std::mt19937_64 rng_;
  std::size_t ambiguous_pos_ = 0;
};

// Disambiguator/ambiguous sentence pair of one phenomenon instance, plus the
// target form of the wrong reading.
struct InstanceDraft {
  SentenceDraft disambiguator;
  SentenceDraft ambiguous;
  std::size_t ambiguous_slot = 0;
  std::string wrong_form;
};

inline InstanceDraft draft_instance(PhenomenonCategory cat, SyntheticBuilder& b) {
  using namespace synth_tokens;
  InstanceDraft d;
  auto ambiguous = [&](const char* src, const char* right, const char* wrong) {
    d.ambiguous = b.with_token(src, right);
    d.ambiguous_slot = b.last_inserted_position();
    d.wrong_form = wrong;
  };
  switch (cat) {
    case PhenomenonCategory::TargetOnly: {
      bool formal = b.coin();
      d.disambiguator = b.with_token(kGreet, formal ? kRegisterFormal : kRegisterInformal);
      ambiguous(kVerb, formal ? kVerbFormal : kVerbInformal, formal ? kVerbInformal : kVerbFormal);
      break;
    }
    case PhenomenonCategory::BothSides: {
      bool fem = b.coin();
      d.disambiguator = b.with_token(fem ? kNounBothFem : kNounBothMasc,
                                     fem ? kNounBothFemTgt : kNounBothMascTgt);
      ambiguous(kPronoun, fem ? kPronounFem : kPronounMasc, fem ? kPronounMasc : kPronounFem);
      break;
    }
    case PhenomenonCategory::SourceOnly: {
      bool fem = b.coin();
      d.disambiguator = b.with_token(fem ? kNounFem : kNounMasc, kNounNeutral);
      ambiguous(kPronoun, fem ? kPronounFem : kPronounMasc, fem ? kPronounMasc : kPronounFem);
      break;
    }
    case PhenomenonCategory::Combined: {
      // The target form encodes (person == second) XOR formal, so neither
      // side alone determines the register.
      bool second = b.coin();
      bool formal = b.coin();
      d.disambiguator = b.with_token(second ? kSecondPerson : kThirdPerson,
                                     (second == formal) ? kFormA : kFormB);
      ambiguous(kCombinedVerb, formal ? kCombinedFormal : kCombinedInformal,
                formal ? kCombinedInformal : kCombinedFormal);
      break;
    }
  }
  return d;
}

}  // namespace detail

// Generates documents that embed phenomenon instances at sampled distances,
// together with one contrastive instance per embedded phenomenon. The context
// window of every ambiguous sentence holds no other instance material.
inline SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  validate(cfg);
  SyntheticLexicon lex(cfg.source_vocab_size, cfg.target_vocab_size);
  detail::SyntheticBuilder b(cfg, lex);
  SyntheticData out;
  const std::size_t window = cfg.max_distance;
  const std::size_t len = cfg.sentences_per_document;

  for (std::size_t doc_no = 0; doc_no < cfg.num_documents; ++doc_no) {
    std::vector<detail::SentenceDraft> sentences(len);
    std::vector<bool> filled(len, false);
    struct Placed {
      std::size_t pos, distance, slot;
      PhenomenonCategory cat;
      std::string wrong;
    };
    std::vector<Placed> placed;

    std::size_t next_min = 0;
    while (true) {
      std::size_t d = b.uniform(1, cfg.max_distance);
      std::size_t i = std::max(next_min, d);
      if (i >= len) break;
      if (!b.bernoulli(cfg.instance_rate)) {
        next_min = i + 1;
        continue;
      }
      auto cat = b.sample_category();
      auto draft = detail::draft_instance(cat, b);
      sentences[i - d] = std::move(draft.disambiguator);
      sentences[i] = std::move(draft.ambiguous);
      filled[i - d] = filled[i] = true;
      placed.push_back({i, d, draft.ambiguous_slot, cat, draft.wrong_form});
      next_min = i + window + 1;
    }
    for (std::size_t k = 0; k < len; ++k)
      if (!filled[k]) sentences[k] = b.filler();

    std::vector<std::string> src, tgt;
    for (auto& s : sentences) {
      src.push_back(text::join(s.source));
      tgt.push_back(text::join(s.target));
    }
    auto doc = make_document("d" + std::to_string(doc_no + 1), src, tgt);

    for (const auto& p : placed) {
      ContrastiveInstance inst;
      std::size_t first = p.pos >= window ? p.pos - window : 0;
      for (std::size_t k = first; k < p.pos; ++k) {
        inst.source_context.push_back(src[k]);
        inst.target_context.push_back(tgt[k]);
      }
      inst.source_current = src[p.pos];
      auto wrong_tokens = sentences[p.pos].target;
      wrong_tokens[p.slot] = p.wrong;
      std::string right = tgt[p.pos];
      std::string wrong = text::join(wrong_tokens);
      inst.correct_index = b.coin() ? 1 : 0;
      inst.candidates = inst.correct_index == 0 ? std::vector<std::string>{right, wrong}
                                                : std::vector<std::string>{wrong, right};
      inst.distance = p.distance;
      inst.category = p.cat;
      inst.doc_id = doc.doc_id;
      inst.sentence_index = p.pos;
      validate(inst);
      out.contrastive.push_back(std::move(inst));
    }
    out.corpus.documents.push_back(std::move(doc));
  }
  return out;
}

// Keeps only the instances whose generating document is in `corpus`.
inline ContrastiveSet restrict_to(const ContrastiveSet& set, const ParallelCorpus& corpus) {
  std::set<std::string> ids;
  for (const auto& d : corpus.documents) ids.insert(d.doc_id);
  ContrastiveSet out;
  for (const auto& inst : set)
    if (ids.count(inst.doc_id)) out.push_back(inst);
  return out;
}

}  // namespace ctxmt
