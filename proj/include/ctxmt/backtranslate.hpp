#pragma once

#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ctxmt/bpe.hpp"
#include "ctxmt/contextize.hpp"
#include "ctxmt/corpus.hpp"
#include "ctxmt/error.hpp"
#include "ctxmt/eval/parallel.hpp"
#include "ctxmt/synthetic.hpp"
#include "ctxmt/text.hpp"

namespace ctxmt {

struct MonolingualDocument {
  std::string doc_id;
  std::vector<std::string> sentences;
};

struct MonolingualCorpus {
  std::vector<MonolingualDocument> documents;

  std::size_t num_sentences() const {
    std::size_t n = 0;
    for (const auto& d : documents) n += d.sentences.size();
    return n;
  }
};

// Blank-line separated blocks, one document per block, ids "d1", "d2", ...
inline MonolingualCorpus load_monolingual(const std::string& path) {
  auto blocks = split_blocks(text::read_lines(path));
  if (blocks.empty()) throw DataError("empty monolingual corpus: " + path);
  MonolingualCorpus mono;
  for (std::size_t b = 0; b < blocks.size(); ++b) mono.documents.push_back({"d" + std::to_string(b + 1), blocks[b]});
  return mono;
}

inline MonolingualCorpus target_side(const ParallelCorpus& corpus) {
  MonolingualCorpus mono;
  for (const auto& doc : corpus.documents) {
    MonolingualDocument d{doc.doc_id, {}};
    for (const auto& p : doc.pairs) d.sentences.push_back(p.target);
    mono.documents.push_back(std::move(d));
  }
  return mono;
}

inline std::string render_monolingual(const MonolingualCorpus& mono) {
  std::string out;
  for (std::size_t d = 0; d < mono.documents.size(); ++d) {
    if (d) out += '\n';
    for (const auto& s : mono.documents[d].sentences) out += s + '\n';
  }
  return out;
}

// Sentence-level target-to-source translator.
class ReverseTranslator {
 public:
  virtual ~ReverseTranslator() = default;
  virtual std::string translate(const std::string& target_sentence) const = 0;
};

class CopyTranslator : public ReverseTranslator {
 public:
  std::string translate(const std::string& s) const override { return s; }
};

// Word-level inverse of the synthetic language.
class LexiconTranslator : public ReverseTranslator {
 public:
  explicit LexiconTranslator(SyntheticLexicon lex) : lex_(std::move(lex)) {}
  std::string translate(const std::string& s) const override { return lex_.reverse_translate(s); }

 private:
  SyntheticLexicon lex_;
};

// Wraps another translator and deletes each output character with probability
// `rate`. The corruption of a sentence depends only on its text and the seed.
class CharDropoutTranslator : public ReverseTranslator {
 public:
  CharDropoutTranslator(std::shared_ptr<const ReverseTranslator> base, double rate, std::uint64_t seed)
      : base_(std::move(base)), rate_(rate), seed_(seed) {
    if (!(rate >= 0 && rate < 1)) throw ConfigError("character dropout rate must be in [0,1)");
  }

  std::string translate(const std::string& s) const override {
    std::string clean = base_->translate(s);
    std::mt19937_64 rng(seed_ ^ std::stoull(text::fnv1a_hex(s), nullptr, 16));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::string> words;
    for (const auto& w : text::split_whitespace(clean)) {
      std::string kept;
      for (const auto& ch : text::utf8_chars(w))
        if (u(rng) >= rate_) kept += ch;
      if (!kept.empty()) words.push_back(std::move(kept));
    }
    return text::join(words);
  }

 private:
  std::shared_ptr<const ReverseTranslator> base_;
  double rate_;
  std::uint64_t seed_;
};

// Sentence-level reverse model (target side in, source side out).
template <typename T>
class ModelTranslator : public ReverseTranslator {
 public:
  ModelTranslator(const nn::Transformer<T>& model, const BpeModel& bpe, const Vocab& vocab, std::size_t beam_size = 4)
      : model_(model), bpe_(bpe), vocab_(vocab), symbols_(id_to_symbol(vocab)), seg_(bpe), beam_(beam_size) {}

  std::string translate(const std::string& s) const override {
    eval::DecodeOptions opt;
    opt.beam_size = beam_;
    return eval::decode_current(model_, seg_.apply(s), ContextScheme{}, vocab_, symbols_, opt,
                                bpe_.continuation_marker);
  }

 private:
  const nn::Transformer<T>& model_;
  const BpeModel& bpe_;
  const Vocab& vocab_;
  std::vector<std::string> symbols_;
  BpeSegmenter seg_;
  std::size_t beam_;
};

// Parallel corpus whose source side is machine generated. `bt_documents`
// records which documents are back-translated.
struct BtCorpus {
  ParallelCorpus corpus;
  std::set<std::string> bt_documents;

  bool is_back_translated(const std::string& doc_id) const { return bt_documents.count(doc_id) > 0; }
};

// An empty back-translation is replaced by the unknown symbol so every pair
// keeps a non-empty source side.
inline BtCorpus back_translate(const MonolingualCorpus& mono, const ReverseTranslator& reverse) {
  if (mono.documents.empty()) throw DataError("empty monolingual corpus");
  BtCorpus bt;
  for (const auto& doc : mono.documents) {
    if (doc.sentences.empty()) throw DataError("monolingual document " + doc.doc_id + " is empty");
    std::vector<std::string> src;
    for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
      std::string s;
      try {
        s = reverse.translate(doc.sentences[i]);
      } catch (const std::exception& e) {
        throw DataError("back-translation failed at document " + doc.doc_id + ", sentence " + std::to_string(i) +
                        ": " + e.what());
      }
      src.push_back(text::is_blank(s) ? std::string(kUnk) : text::normalize_whitespace(s));
    }
    bt.corpus.documents.push_back(make_document(doc.doc_id, src, doc.sentences));
    bt.bt_documents.insert(doc.doc_id);
  }
  return bt;
}

inline std::vector<TrainingExample> build_bt_dataset(const BtCorpus& bt, const ContextScheme& scheme,
                                                     const BpeModel& bpe) {
  return build_dataset(bt.corpus, scheme, bpe);
}

// Sidecar listing: "doc_id<TAB>BT" or "doc_id<TAB>PA" per document.
inline std::string render_provenance(const BtCorpus& bt) {
  std::string out;
  for (const auto& d : bt.corpus.documents) out += d.doc_id + '\t' + (bt.is_back_translated(d.doc_id) ? "BT" : "PA") + '\n';
  return out;
}

inline void write_bt_corpus(const BtCorpus& bt, const std::string& prefix) {
  write_corpus(bt.corpus, prefix + ".src", prefix + ".tgt");
  text::write_file(prefix + ".provenance", render_provenance(bt));
}

inline BtCorpus load_bt_corpus(const std::string& prefix) {
  BtCorpus bt;
  bt.corpus = load_corpus(prefix + ".src", prefix + ".tgt");
  std::size_t d = 0;
  for (const auto& line : text::read_lines(prefix + ".provenance")) {
    auto f = text::split_whitespace(line);
    if (f.empty()) continue;
    if (f.size() != 2 || (f[1] != "BT" && f[1] != "PA")) throw DataError("malformed provenance line: " + line);
    if (d >= bt.corpus.documents.size()) throw DataError("provenance lists more documents than the corpus");
    bt.corpus.documents[d++].doc_id = f[0];  // original ids, in file order
    if (f[1] == "BT") bt.bt_documents.insert(f[0]);
  }
  if (d != bt.corpus.documents.size()) throw DataError("provenance lists fewer documents than the corpus");
  return bt;
}

}  // namespace ctxmt
