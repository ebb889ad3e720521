#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ctxmt/bpe.hpp"
#include "ctxmt/contextize.hpp"
#include "ctxmt/contrastive_set.hpp"
#include "ctxmt/error.hpp"
#include "ctxmt/nn/inference.hpp"

namespace ctxmt::eval {

struct ScoringItem {
  TokenSequence input;
  TokenSequence output;
};

// Total log-probability of each (input, output) pair.
using BatchScorer = std::function<std::vector<double>(std::span<const ScoringItem>)>;
using Scorer = std::function<double(const TokenSequence&, const TokenSequence&)>;

inline BatchScorer batch_scorer(Scorer s) {
  return [s = std::move(s)](std::span<const ScoringItem> items) {
    std::vector<double> out;
    out.reserve(items.size());
    for (const auto& it : items) out.push_back(s(it.input, it.output));
    return out;
  };
}

template <typename T>
BatchScorer model_scorer(const nn::Transformer<T>& model, const Vocab& vocab) {
  return [&model, &vocab](std::span<const ScoringItem> items) {
    std::vector<std::vector<int>> ins, outs;
    for (const auto& it : items) {
      ins.push_back(encode_ids(it.input, vocab));
      outs.push_back(encode_ids(it.output, vocab));
    }
    std::vector<nn::ScoreRequest> reqs;
    for (std::size_t k = 0; k < items.size(); ++k) reqs.push_back({ins[k], outs[k]});
    return nn::score_batch(model, std::span<const nn::ScoreRequest>(reqs));
  };
}

struct ContrastiveResult {
  std::size_t instance = 0;
  std::size_t chosen_index = 0;
  std::size_t correct_index = 0;
  bool correct = false;
  std::size_t distance = 1;
  PhenomenonCategory category = PhenomenonCategory::TargetOnly;
  std::vector<double> scores;
};

struct ContrastiveOptions {
  bool length_normalize = false;  // divide by output length incl. EOS
  std::size_t chunk = 32;         // instances scored per scorer call
};

// Scheme-shaped scoring items of one instance, built from reference context.
inline std::vector<ScoringItem> contrastive_items(const ContrastiveInstance& inst, const ContextScheme& scheme,
                                                  const BpeSegmenter& seg) {
  std::size_t c = std::min(scheme.n - 1, inst.source_context.size());
  std::vector<TokenSequence> src_ctx, tgt_ctx;
  for (std::size_t k = inst.source_context.size() - c; k < inst.source_context.size(); ++k) {
    src_ctx.push_back(seg.apply(inst.source_context[k]));
    tgt_ctx.push_back(seg.apply(inst.target_context[k]));
  }
  TokenSequence input = compose_input(scheme, src_ctx, tgt_ctx, seg.apply(inst.source_current));
  std::vector<ScoringItem> items;
  for (const auto& cand : inst.candidates) items.push_back({input, compose_output(scheme, tgt_ctx, seg.apply(cand))});
  return items;
}

namespace detail {

inline ContrastiveResult pick(std::size_t idx, const ContrastiveInstance& inst, std::vector<double> scores) {
  ContrastiveResult r;
  r.instance = idx;
  r.correct_index = inst.correct_index;
  r.distance = inst.distance;
  r.category = inst.category;
  for (std::size_t k = 1; k < scores.size(); ++k)
    if (scores[k] > scores[r.chosen_index]) r.chosen_index = k;
  r.correct = r.chosen_index == inst.correct_index;
  r.scores = std::move(scores);
  return r;
}

}  // namespace detail

struct ContrastiveEvaluation {
  double accuracy = 0;  // fraction in [0,1]
  std::vector<ContrastiveResult> results;
};

// Ranks candidates by (optionally length-normalized) log-probability; ties go
// to the lowest candidate index.
inline ContrastiveEvaluation contrastive_accuracy(const BatchScorer& scorer, const ContrastiveSet& set,
                                                  const ContextScheme& scheme, const BpeModel& bpe,
                                                  const ContrastiveOptions& opt = {}) {
  if (set.empty()) throw DataError("empty contrastive set");
  BpeSegmenter seg(bpe);
  ContrastiveEvaluation ev;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < set.size(); start += std::max<std::size_t>(1, opt.chunk)) {
    std::size_t end = std::min(set.size(), start + std::max<std::size_t>(1, opt.chunk));
    std::vector<ScoringItem> items;
    std::vector<std::size_t> offsets;
    for (std::size_t i = start; i < end; ++i) {
      const auto& inst = set[i];
      if (inst.candidates.size() < 2) throw DataError("contrastive instance " + std::to_string(i) + " has fewer than 2 candidates");
      if (inst.correct_index >= inst.candidates.size()) throw DataError("contrastive instance " + std::to_string(i) + ": correct index out of range");
      if (inst.distance < 1) throw DataError("contrastive instance " + std::to_string(i) + ": distance must be >= 1");
      offsets.push_back(items.size());
      auto its = contrastive_items(inst, scheme, seg);
      items.insert(items.end(), std::make_move_iterator(its.begin()), std::make_move_iterator(its.end()));
    }
    offsets.push_back(items.size());
    std::vector<double> scores;
    try {
      scores = scorer(items);
      if (scores.size() != items.size()) throw Error("scorer returned " + std::to_string(scores.size()) + " scores for " + std::to_string(items.size()) + " items");
    } catch (const std::exception&) {
      // Locate the failing instance.
      for (std::size_t i = start; i < end; ++i) {
        std::span<const ScoringItem> one(items.data() + offsets[i - start], offsets[i - start + 1] - offsets[i - start]);
        try {
          auto s = scorer(one);
          if (s.size() != one.size()) throw Error("wrong number of scores");
        } catch (const std::exception& e) {
          throw DataError("scoring failed on contrastive instance " + std::to_string(i) +
                          (set[i].doc_id.empty() ? "" : " (" + set[i].doc_id + ")") + ": " + e.what());
        }
      }
      throw;
    }
    for (std::size_t i = start; i < end; ++i) {
      std::vector<double> s(scores.begin() + static_cast<long>(offsets[i - start]),
                            scores.begin() + static_cast<long>(offsets[i - start + 1]));
      if (opt.length_normalize)
        for (std::size_t k = 0; k < s.size(); ++k)
          s[k] /= static_cast<double>(items[offsets[i - start] + k].output.size() + 1);
      auto r = detail::pick(i, set[i], std::move(s));
      correct += r.correct;
      ev.results.push_back(std::move(r));
    }
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(set.size());
  return ev;
}

inline ContrastiveEvaluation contrastive_accuracy(const Scorer& scorer, const ContrastiveSet& set,
                                                  const ContextScheme& scheme, const BpeModel& bpe,
                                                  const ContrastiveOptions& opt = {}) {
  return contrastive_accuracy(batch_scorer(scorer), set, scheme, bpe, opt);
}

struct AccuracyCount {
  std::size_t count = 0;
  std::size_t correct = 0;
  double accuracy() const { return count ? static_cast<double>(correct) / static_cast<double>(count) : 0.0; }
};

inline AccuracyCount overall(std::span<const ContrastiveResult> results) {
  AccuracyCount a;
  for (const auto& r : results) {
    ++a.count;
    a.correct += r.correct;
  }
  return a;
}

inline std::map<PhenomenonCategory, AccuracyCount> accuracy_by_category(std::span<const ContrastiveResult> results) {
  std::map<PhenomenonCategory, AccuracyCount> out;
  for (const auto& r : results) {
    auto& a = out[r.category];
    ++a.count;
    a.correct += r.correct;
  }
  return out;
}

inline std::vector<ContrastiveResult> filter_category(std::span<const ContrastiveResult> results,
                                                      PhenomenonCategory c) {
  std::vector<ContrastiveResult> out;
  for (const auto& r : results)
    if (r.category == c) out.push_back(r);
  return out;
}

struct DistanceBucket {
  std::size_t distance = 0;
  std::size_t count = 0;
  double share_percent = 0;
  double accuracy_percent = 0;
};

// One bucket per exact distance, ascending.
inline std::vector<DistanceBucket> accuracy_by_distance(std::span<const ContrastiveResult> results) {
  std::map<std::size_t, AccuracyCount> acc;
  for (const auto& r : results) {
    if (r.distance < 1) throw DataError("contrastive result with distance < 1");
    auto& a = acc[r.distance];
    ++a.count;
    a.correct += r.correct;
  }
  std::vector<DistanceBucket> out;
  for (const auto& [d, a] : acc)
    out.push_back({d, a.count, 100.0 * static_cast<double>(a.count) / static_cast<double>(results.size()),
                   100.0 * a.accuracy()});
  return out;
}

}  // namespace ctxmt::eval
