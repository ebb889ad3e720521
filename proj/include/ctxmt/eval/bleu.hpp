#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ctxmt/error.hpp"
#include "ctxmt/eval/tokenizer_13a.hpp"
#include "ctxmt/text.hpp"

namespace ctxmt::eval {

inline constexpr int kMaxNgram = 4;

struct BleuConfig {
  int max_ngram = kMaxNgram;
  bool lowercase = false;
  bool tokenize = true;  // 13a

  std::string signature() const {
    return std::string("nrefs:1|case:") + (lowercase ? "lc" : "mixed") + "|eff:no|tok:" + (tokenize ? "13a" : "none") +
           "|smooth:exp";
  }
};

// Sufficient statistics of one or more segments.
struct BleuStats {
  std::array<long, kMaxNgram> matches{};
  std::array<long, kMaxNgram> totals{};
  long hyp_len = 0;
  long ref_len = 0;

  BleuStats& operator+=(const BleuStats& o) {
    for (int n = 0; n < kMaxNgram; ++n) {
      matches[n] += o.matches[n];
      totals[n] += o.totals[n];
    }
    hyp_len += o.hyp_len;
    ref_len += o.ref_len;
    return *this;
  }
};

struct BleuResult {
  double score = 0;  // 0..100
  std::array<double, kMaxNgram> precisions{};  // after smoothing, 0..1
  double brevity_penalty = 0;
  long hyp_len = 0;
  long ref_len = 0;
  std::string signature;
};

inline std::vector<std::string> bleu_tokens(std::string_view line, const BleuConfig& cfg) {
  std::string s(line);
  if (cfg.lowercase)
    for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return text::split_whitespace(cfg.tokenize ? tokenize_13a(s) : s);
}

inline BleuStats segment_stats(std::string_view hyp, std::string_view ref, const BleuConfig& cfg = {}) {
  if (cfg.max_ngram < 1 || cfg.max_ngram > kMaxNgram) throw ConfigError("max_ngram must be in 1..4");
  auto h = bleu_tokens(hyp, cfg);
  auto r = bleu_tokens(ref, cfg);
  BleuStats st;
  st.hyp_len = static_cast<long>(h.size());
  st.ref_len = static_cast<long>(r.size());
  for (int n = 1; n <= cfg.max_ngram; ++n) {
    std::map<std::vector<std::string>, long> ref_counts;
    for (std::size_t i = 0; i + n <= r.size(); ++i) ++ref_counts[{r.begin() + i, r.begin() + i + n}];
    std::map<std::vector<std::string>, long> hyp_counts;
    for (std::size_t i = 0; i + n <= h.size(); ++i) ++hyp_counts[{h.begin() + i, h.begin() + i + n}];
    long match = 0, total = 0;
    for (const auto& [g, c] : hyp_counts) {
      total += c;
      auto it = ref_counts.find(g);
      if (it != ref_counts.end()) match += std::min(c, it->second);
    }
    st.matches[n - 1] = match;
    st.totals[n - 1] = total;
  }
  return st;
}

// Clipped n-gram precisions with exponential smoothing: the k-th order that
// has no matches gets precision 1/2^k. An order with no hypothesis n-grams
// at all counts as 1.
inline BleuResult bleu_from_stats(const BleuStats& st, const BleuConfig& cfg = {}) {
  BleuResult r;
  r.hyp_len = st.hyp_len;
  r.ref_len = st.ref_len;
  r.signature = cfg.signature();
  if (st.hyp_len == 0) {
    r.brevity_penalty = 0;
    return r;
  }
  double log_sum = 0;
  int k = 0;
  for (int n = 0; n < cfg.max_ngram; ++n) {
    double p;
    if (st.totals[n] == 0) p = 1.0;
    else if (st.matches[n] == 0) p = std::ldexp(1.0, -(++k));
    else p = static_cast<double>(st.matches[n]) / static_cast<double>(st.totals[n]);
    r.precisions[n] = p;
    log_sum += std::log(p);
  }
  r.brevity_penalty =
      st.hyp_len < st.ref_len ? std::exp(1.0 - static_cast<double>(st.ref_len) / static_cast<double>(st.hyp_len)) : 1.0;
  r.score = 100.0 * r.brevity_penalty * std::exp(log_sum / cfg.max_ngram);
  return r;
}

inline std::vector<BleuStats> sentence_stats(std::span<const std::string> hyps, std::span<const std::string> refs,
                                             const BleuConfig& cfg = {}) {
  if (hyps.size() != refs.size())
    throw DataError("BLEU needs one reference per hypothesis (" + std::to_string(hyps.size()) + " hypotheses, " +
                    std::to_string(refs.size()) + " references)");
  if (hyps.empty()) throw DataError("BLEU over an empty test set");
  std::vector<BleuStats> out;
  out.reserve(hyps.size());
  for (std::size_t i = 0; i < hyps.size(); ++i) out.push_back(segment_stats(hyps[i], refs[i], cfg));
  return out;
}

inline BleuResult bleu(std::span<const std::string> hyps, std::span<const std::string> refs,
                       const BleuConfig& cfg = {}) {
  BleuStats total;
  for (const auto& s : sentence_stats(hyps, refs, cfg)) total += s;
  return bleu_from_stats(total, cfg);
}

}  // namespace ctxmt::eval
