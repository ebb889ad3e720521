#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "ctxmt/bpe.hpp"
#include "ctxmt/nn/transformer.hpp"

namespace ctxmt::nn {

inline std::vector<int> encoder_input(std::span<const int> input) {
  std::vector<int> s(input.begin(), input.end());
  s.push_back(kEosId);
  return s;
}

inline std::vector<int> decoder_input(std::span<const int> output) {
  std::vector<int> s{kBosId};
  s.insert(s.end(), output.begin(), output.end());
  return s;
}

// Log-probabilities for every position of BOS+prefix: row j is the
// distribution of the token following prefix[0..j).
template <typename T>
Matrix<T> forward(const Transformer<T>& model, std::span<const int> input, std::span<const int> output_prefix) {
  model.check_length(input.size() + 1, "input");
  model.check_length(output_prefix.size() + 1, "output");
  Tape<T> tape(false);
  std::vector<int> src = encoder_input(input);
  std::vector<int> tgt = decoder_input(output_prefix);
  auto ps = PackedSequences::pack(std::span<const std::vector<int>>(&src, 1));
  auto pt = PackedSequences::pack(std::span<const std::vector<int>>(&tgt, 1));
  std::vector<char> mask;
  Var mem = model.encode(tape, ps, mask);
  Var logits = model.decode(tape, pt, mem, ps.segments, mask);
  return ops::log_softmax_rows(tape.value(logits));
}

struct ScoreRequest {
  std::span<const int> input;
  std::span<const int> output;
};

// Total log-probability of each output (EOS included, no length
// normalization), evaluated in packed chunks.
template <typename T>
std::vector<double> score_batch(const Transformer<T>& model, std::span<const ScoreRequest> requests,
                                std::size_t chunk = 32) {
  std::vector<double> scores(requests.size(), 0.0);
  for (std::size_t start = 0; start < requests.size(); start += chunk) {
    std::size_t end = std::min(requests.size(), start + chunk);
    std::vector<std::vector<int>> srcs, tgts;
    for (std::size_t k = start; k < end; ++k) {
      model.check_length(requests[k].input.size() + 1, "input");
      model.check_length(requests[k].output.size() + 1, "output");
      srcs.push_back(encoder_input(requests[k].input));
      tgts.push_back(decoder_input(requests[k].output));
    }
    Tape<T> tape(false);
    auto ps = PackedSequences::pack(srcs);
    auto pt = PackedSequences::pack(tgts);
    std::vector<char> mask;
    Var mem = model.encode(tape, ps, mask);
    Var logits = model.decode(tape, pt, mem, ps.segments, mask);
    Matrix<T> logp = ops::log_softmax_rows(tape.value(logits));
    for (std::size_t k = start; k < end; ++k) {
      const auto& seg = pt.segments[k - start];
      const auto& out = requests[k].output;
      double s = 0;
      for (Eigen::Index j = 0; j < seg.length; ++j) {
        int next = j < static_cast<Eigen::Index>(out.size()) ? out[static_cast<std::size_t>(j)] : kEosId;
        s += static_cast<double>(logp(seg.begin + j, next));
      }
      scores[k] = s;
    }
  }
  return scores;
}

template <typename T>
double score_sequence(const Transformer<T>& model, std::span<const int> input, std::span<const int> output) {
  ScoreRequest r{input, output};
  return score_batch(model, std::span<const ScoreRequest>(&r, 1))[0];
}

// GNMT length penalty ((5 + len) / 6)^0.6.
inline double length_penalty(std::size_t len) { return std::pow((5.0 + static_cast<double>(len)) / 6.0, 0.6); }

struct Hypothesis {
  std::vector<int> tokens;  // without BOS, ending in EOS once finished
  double log_prob = 0;
  double normalized() const { return log_prob / length_penalty(tokens.size()); }
};

namespace detail {

struct Candidate {
  double log_prob;
  std::size_t beam;
  int token;
};

// Higher score first; ties to the earlier beam, then the lower token id.
inline bool candidate_before(const Candidate& a, const Candidate& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  if (a.beam != b.beam) return a.beam < b.beam;
  return a.token < b.token;
}

}  // namespace detail

// Beam search maximizing length-normalized log-probability. Hypotheses still
// open at max_len are closed with EOS. For beam_size > 1 the greedy path is
// also decoded and kept as a finished candidate.
template <typename T>
Hypothesis translate(const Transformer<T>& model, std::span<const int> input, std::size_t beam_size,
                     std::size_t max_len) {
  if (beam_size < 1) throw ConfigError("beam_size must be >= 1");
  model.check_length(input.size() + 1, "input");
  max_len = std::min<std::size_t>(max_len, static_cast<std::size_t>(model.config().max_sequence_length) - 1);
  if (max_len == 0) max_len = 1;

  Tape<T> enc_tape(false);
  std::vector<int> src = encoder_input(input);
  auto ps = PackedSequences::pack(std::span<const std::vector<int>>(&src, 1));
  std::vector<char> mask;
  Var mem = model.encode(enc_tape, ps, mask);
  const Matrix<T>& memory = enc_tape.value(mem);

  auto step = [&](const std::vector<Hypothesis>& live) {
    std::vector<std::vector<int>> tgts;
    for (const auto& h : live) tgts.push_back(decoder_input(h.tokens));
    Tape<T> tape(false);
    auto pt = PackedSequences::pack(tgts);
    Var m = tape.constant(memory);
    std::vector<Segment> mem_segs(live.size(), ps.segments[0]);
    Var logits = model.decode(tape, pt, m, mem_segs, mask);
    const auto& lv = tape.value(logits);
    Matrix<T> last(static_cast<Eigen::Index>(live.size()), lv.cols());
    for (std::size_t b = 0; b < live.size(); ++b)
      last.row(static_cast<Eigen::Index>(b)) = lv.row(pt.segments[b].begin + pt.segments[b].length - 1);
    return ops::log_softmax_rows(last);
  };

  auto run = [&](std::size_t width) {
    std::vector<Hypothesis> live{Hypothesis{}};
    std::vector<Hypothesis> finished;
    for (std::size_t t = 0; t < max_len && !live.empty(); ++t) {
      auto logp = step(live);
      std::vector<detail::Candidate> cands;
      for (std::size_t b = 0; b < live.size(); ++b)
        for (Eigen::Index v = 0; v < logp.cols(); ++v)
          cands.push_back({live[b].log_prob + static_cast<double>(logp(static_cast<Eigen::Index>(b), v)), b,
                           static_cast<int>(v)});
      std::size_t keep = std::min(cands.size(), width);
      std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                        detail::candidate_before);
      std::vector<Hypothesis> next;
      for (std::size_t c = 0; c < keep; ++c) {
        Hypothesis h{live[cands[c].beam].tokens, cands[c].log_prob};
        h.tokens.push_back(cands[c].token);
        if (cands[c].token == kEosId) finished.push_back(std::move(h));
        else next.push_back(std::move(h));
      }
      live = std::move(next);
      if (finished.size() >= width) break;
    }
    // Close whatever hit the length limit.
    for (auto& h : live) {
      auto logp = step(std::vector<Hypothesis>{h});
      h.log_prob += static_cast<double>(logp(0, kEosId));
      h.tokens.push_back(kEosId);
      finished.push_back(std::move(h));
    }
    return finished;
  };

  auto finished = run(beam_size);
  if (beam_size > 1) {
    auto greedy = run(1);
    finished.insert(finished.end(), greedy.begin(), greedy.end());
  }
  const Hypothesis* best = nullptr;
  for (const auto& h : finished)
    if (!best || h.normalized() > best->normalized() ||
        (h.normalized() == best->normalized() && h.tokens < best->tokens))
      best = &h;
  return *best;
}

// Hypothesis tokens without the trailing EOS.
inline std::vector<int> strip_eos(std::vector<int> tokens) {
  if (!tokens.empty() && tokens.back() == kEosId) tokens.pop_back();
  return tokens;
}

}  // namespace ctxmt::nn
