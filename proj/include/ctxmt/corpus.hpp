#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ctxmt/error.hpp"
#include "ctxmt/text.hpp"

namespace ctxmt {

struct SentencePair {
  std::string source;
  std::string target;
  std::size_t index = 0;  // position within the owning document
};

struct Document {
  std::string doc_id;
  std::vector<SentencePair> pairs;

  std::size_t size() const { return pairs.size(); }
};

struct ParallelCorpus {
  std::vector<Document> documents;
  std::string source_lang = "src";
  std::string target_lang = "tgt";

  std::size_t num_pairs() const {
    std::size_t n = 0;
    for (const auto& d : documents) n += d.size();
    return n;
  }
  bool empty() const { return documents.empty(); }
};

// Builds a document from aligned sentence lists, enforcing the pair invariants.
inline Document make_document(std::string doc_id, const std::vector<std::string>& sources,
                              const std::vector<std::string>& targets) {
  if (sources.size() != targets.size())
    throw DataError("document " + doc_id + ": source/target sentence counts differ");
  if (sources.empty()) throw DataError("document " + doc_id + " has no sentences");
  Document doc{std::move(doc_id), {}};
  doc.pairs.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (text::is_blank(sources[i]) || text::is_blank(targets[i]))
      throw DataError("document " + doc.doc_id + ": empty sentence at index " + std::to_string(i));
    doc.pairs.push_back({sources[i], targets[i], i});
  }
  return doc;
}

inline void validate(const ParallelCorpus& corpus) {
  std::set<std::string> ids;
  for (const auto& doc : corpus.documents) {
    if (!ids.insert(doc.doc_id).second) throw DataError("duplicate doc_id " + doc.doc_id);
    if (doc.pairs.empty()) throw DataError("document " + doc.doc_id + " is empty");
    for (std::size_t i = 0; i < doc.pairs.size(); ++i) {
      if (doc.pairs[i].index != i) throw DataError("document " + doc.doc_id + ": index gap");
      if (text::is_blank(doc.pairs[i].source) || text::is_blank(doc.pairs[i].target))
        throw DataError("document " + doc.doc_id + ": empty sentence");
    }
  }
}

// Splits a line list into blank-line separated blocks. Runs of blank lines
// and leading/trailing blanks never produce empty blocks.
inline std::vector<std::vector<std::string>> split_blocks(const std::vector<std::string>& lines) {
  std::vector<std::vector<std::string>> blocks;
  std::vector<std::string> current;
  for (const auto& line : lines) {
    if (text::is_blank(line)) {
      if (!current.empty()) blocks.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(line);
    }
  }
  if (!current.empty()) blocks.push_back(std::move(current));
  return blocks;
}

inline ParallelCorpus load_corpus(const std::string& src_path, const std::string& tgt_path) {
  auto src_blocks = split_blocks(text::read_lines(src_path));
  auto tgt_blocks = split_blocks(text::read_lines(tgt_path));
  if (src_blocks.empty() && tgt_blocks.empty())
    throw DataError("empty corpus: " + src_path + " / " + tgt_path);
  std::size_t common = std::min(src_blocks.size(), tgt_blocks.size());
  for (std::size_t b = 0; b < common; ++b) {
    if (src_blocks[b].size() != tgt_blocks[b].size())
      throw AlignmentError("block " + std::to_string(b + 1) + ": " +
                               std::to_string(src_blocks[b].size()) + " source lines vs " +
                               std::to_string(tgt_blocks[b].size()) + " target lines",
                           b + 1);
  }
  if (src_blocks.size() != tgt_blocks.size())
    throw AlignmentError("block count mismatch (" + std::to_string(src_blocks.size()) + " vs " +
                             std::to_string(tgt_blocks.size()) + "), first unmatched block " +
                             std::to_string(common + 1),
                         common + 1);
  ParallelCorpus corpus;
  for (std::size_t b = 0; b < common; ++b)
    corpus.documents.push_back(make_document("d" + std::to_string(b + 1), src_blocks[b], tgt_blocks[b]));
  return corpus;
}

inline std::string render_side(const ParallelCorpus& corpus, bool source) {
  std::string out;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    if (d) out += '\n';
    for (const auto& p : corpus.documents[d].pairs) {
      out += source ? p.source : p.target;
      out += '\n';
    }
  }
  return out;
}

inline void write_corpus(const ParallelCorpus& corpus, const std::string& src_path,
                         const std::string& tgt_path) {
  text::write_file(src_path, render_side(corpus, true));
  text::write_file(tgt_path, render_side(corpus, false));
}

struct CorpusSplit {
  ParallelCorpus train, dev, test;
};

inline CorpusSplit split_corpus(const ParallelCorpus& corpus, std::array<double, 3> ratios,
                                std::uint64_t seed) {
  double sum = 0;
  for (double r : ratios) {
    if (!(r > 0)) throw ConfigError("split ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  const std::size_t n = corpus.documents.size();
  // dev/test are floored, train takes the remainder.
  auto n_dev = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios[1] + 1e-9));
  auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios[2] + 1e-9));
  if (n_dev + n_test > n || n_dev == 0 || n_test == 0 || n - n_dev - n_test == 0)
    throw DataError("cannot split " + std::to_string(n) + " documents into three non-empty parts");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> bucket(n, 0);
  for (std::size_t k = 0; k < n_dev; ++k) bucket[order[k]] = 1;
  for (std::size_t k = n_dev; k < n_dev + n_test; ++k) bucket[order[k]] = 2;

  CorpusSplit out;
  for (auto* part : {&out.train, &out.dev, &out.test}) {
    part->source_lang = corpus.source_lang;
    part->target_lang = corpus.target_lang;
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = bucket[i] == 0 ? out.train : bucket[i] == 1 ? out.dev : out.test;
    dst.documents.push_back(corpus.documents[i]);
  }
  return out;
}

}  // namespace ctxmt
