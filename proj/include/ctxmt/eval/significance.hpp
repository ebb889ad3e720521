#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ctxmt/error.hpp"
#include "ctxmt/eval/bleu.hpp"
#include "ctxmt/eval/contrastive.hpp"

namespace ctxmt::eval {

struct SignificanceReport {
  std::string test;
  double statistic = 0;
  double p_value = 1;
  double alpha = 0.05;
  bool significant = false;
  // Paired bootstrap: which input (0 or 1) had the higher full-set BLEU.
  int better = 0;
};

inline SignificanceReport make_report(std::string test, double statistic, double p, double alpha, int better = 0) {
  p = std::clamp(p, 0.0, 1.0);
  return {std::move(test), statistic, p, alpha, p < alpha, better};
}

// P(X <= k) for X ~ Binomial(n, 1/2).
inline double binomial_half_cdf(long k, long n) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  if (n <= 1000) {
    double term = std::ldexp(1.0, static_cast<int>(-n));
    double sum = term;
    for (long i = 0; i < k; ++i) {
      term = term * static_cast<double>(n - i) / static_cast<double>(i + 1);
      sum += term;
    }
    return std::min(1.0, sum);
  }
  const double log_half_n = -static_cast<double>(n) * std::log(2.0);
  double mx = -INFINITY;
  std::vector<double> logs;
  for (long i = 0; i <= k; ++i) {
    double l = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) + log_half_n;
    logs.push_back(l);
    mx = std::max(mx, l);
  }
  double s = 0;
  for (double l : logs) s += std::exp(l - mx);
  return std::min(1.0, std::exp(mx + std::log(s)));
}

// Exact two-sided McNemar test on discordant counts b and c.
inline SignificanceReport mcnemar_exact(long b, long c, double alpha = 0.05) {
  if (b < 0 || c < 0) throw DataError("discordant counts must be non-negative");
  double p = b + c == 0 ? 1.0 : std::min(1.0, 2.0 * binomial_half_cdf(std::min(b, c), b + c));
  return make_report("mcnemar", static_cast<double>(b - c), p, alpha);
}

inline SignificanceReport mcnemar(std::span<const ContrastiveResult> a, std::span<const ContrastiveResult> b,
                                  double alpha = 0.05) {
  if (a.size() != b.size())
    throw DataError("McNemar needs aligned results (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  long nb = 0, nc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].instance != b[i].instance || a[i].correct_index != b[i].correct_index)
      throw DataError("McNemar results misaligned at position " + std::to_string(i));
    if (a[i].correct && !b[i].correct) ++nb;
    if (!a[i].correct && b[i].correct) ++nc;
  }
  return mcnemar_exact(nb, nc, alpha);
}

// Paired bootstrap resampling over sentences. A is the system with the higher
// full-set BLEU; p is the share of resamples in which A does not beat B.
inline SignificanceReport paired_bootstrap(std::span<const std::string> hyp_a, std::span<const std::string> hyp_b,
                                           std::span<const std::string> refs, std::size_t resamples = 1000,
                                           std::uint64_t seed = 12345, double alpha = 0.05,
                                           const BleuConfig& cfg = {}) {
  if (hyp_a.size() != refs.size() || hyp_b.size() != refs.size())
    throw DataError("paired bootstrap needs aligned hypothesis and reference lists");
  if (resamples < 100) throw ConfigError("paired bootstrap needs at least 100 resamples");
  auto sa = sentence_stats(hyp_a, refs, cfg);
  auto sb = sentence_stats(hyp_b, refs, cfg);
  BleuStats ta, tb;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    ta += sa[i];
    tb += sb[i];
  }
  double full_a = bleu_from_stats(ta, cfg).score, full_b = bleu_from_stats(tb, cfg).score;
  int better = full_b > full_a ? 1 : 0;
  const auto& first = better == 0 ? sa : sb;
  const auto& second = better == 0 ? sb : sa;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, refs.size() - 1);
  std::size_t fails = 0;
  for (std::size_t r = 0; r < resamples; ++r) {
    BleuStats x, y;
    for (std::size_t k = 0; k < refs.size(); ++k) {
      std::size_t i = pick(rng);
      x += first[i];
      y += second[i];
    }
    if (bleu_from_stats(x, cfg).score <= bleu_from_stats(y, cfg).score) ++fails;
  }
  return make_report("paired_bootstrap", std::abs(full_a - full_b),
                     static_cast<double>(fails) / static_cast<double>(resamples), alpha, better);
}

}  // namespace ctxmt::eval
