#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "ctxmt/nn/train.hpp"

namespace ctxmt::nn {

// Mean token cross-entropy of one example; fills parameter gradients when
// `with_grad` is set (previous gradients are cleared first).
template <typename T>
double example_loss(Transformer<T>& model, const EncodedExample& ex, bool with_grad) {
  const EncodedExample* batch[] = {&ex};
  const T weight = T(1) / static_cast<T>(ex.output.size() + 1);
  Tape<T> tape(with_grad);
  Var loss = batch_loss(tape, model, std::span<const EncodedExample* const>(batch, 1), weight, nullptr);
  if (with_grad) {
    for (auto& it : model.params().items()) it.tensor.ensure_grad().setZero();
    tape.backward(loss);
  }
  return static_cast<double>(tape.value(loss)(0, 0));
}

struct GradientCheckResult {
  double max_relative_error = 0;
  double max_abs_gradient = 0;  // over the checked entries
  std::size_t checked = 0;
};

struct GradientCheckOptions {
  double sample_fraction = 0.01;
  std::uint64_t seed = 0;
  double denominator_floor = 1e-6;
  // Applied to the analytic gradients before comparison (mutation testing).
  std::function<void(ParameterSet<double>&)> corrupt;
};

// Analytic gradients against central differences on a random sample of
// parameter entries. Relative error is |a - n| / max(|a| + |n|, floor).
inline GradientCheckResult gradient_check(Transformer<double>& model, const EncodedExample& ex, double epsilon,
                                          const GradientCheckOptions& opt = {}) {
  example_loss(model, ex, true);
  auto& params = model.params();
  if (opt.corrupt) opt.corrupt(params);

  struct Entry {
    std::size_t param;
    std::size_t offset;
  };
  std::vector<Entry> all;
  for (std::size_t p = 0; p < params.size(); ++p)
    for (std::size_t k = 0; k < params[p].size(); ++k) all.push_back({p, k});
  std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(opt.sample_fraction * all.size())));
  std::mt19937_64 rng(opt.seed);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(std::min(n, all.size()));

  GradientCheckResult r;
  for (const auto& e : all) {
    auto& t = params[e.param];
    double analytic = t.grad.data()[e.offset];
    double& x = t.value.data()[e.offset];
    const double saved = x;
    x = saved + epsilon;
    double up = example_loss(model, ex, false);
    x = saved - epsilon;
    double down = example_loss(model, ex, false);
    x = saved;
    double numeric = (up - down) / (2 * epsilon);
    double denom = std::max(std::abs(analytic) + std::abs(numeric), opt.denominator_floor);
    r.max_relative_error = std::max(r.max_relative_error, std::abs(analytic - numeric) / denom);
    r.max_abs_gradient = std::max(r.max_abs_gradient, std::abs(analytic));
    ++r.checked;
  }
  return r;
}

}  // namespace ctxmt::nn
