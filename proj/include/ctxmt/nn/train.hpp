#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ctxmt/bpe.hpp"
#include "ctxmt/contextize.hpp"
#include "ctxmt/error.hpp"
#include "ctxmt/nn/checkpoint.hpp"
#include "ctxmt/nn/inference.hpp"
#include "ctxmt/nn/transformer.hpp"
#include "ctxmt/text.hpp"

namespace ctxmt::nn {

struct EncodedExample {
  std::vector<int> input;
  std::vector<int> output;
};

inline std::vector<EncodedExample> encode_dataset(const std::vector<TrainingExample>& data, const Vocab& vocab) {
  std::vector<EncodedExample> out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back({encode_ids(ex.input, vocab), encode_ids(ex.output, vocab)});
  return out;
}

struct TrainConfig {
  double learning_rate = 3e-4;
  std::size_t batch_size = 32;
  std::size_t max_steps = 1000;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
  double gradient_clip_norm = 1.0;
  std::uint64_t rng_seed = 1;
  std::optional<ModelCheckpoint> init_from;

  void validate() const {
    if (!(learning_rate > 0) || batch_size == 0 || !(epsilon > 0) || !(gradient_clip_norm > 0))
      throw ConfigError("training hyperparameters must be positive");
    if (!(beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1)) throw ConfigError("Adam betas must lie in (0,1)");
  }
};

struct TrainResult {
  std::vector<double> losses;  // mean nats per output token, one per step
};

template <typename T>
class Adam {
 public:
  Adam(ParameterSet<T>& params, const TrainConfig& tc) : params_(params), tc_(tc) {
    for (const auto& it : params.items()) {
      m_.push_back(Matrix<T>::Zero(it.tensor.value.rows(), it.tensor.value.cols()));
      v_.push_back(m_.back());
    }
  }

  // Clips the global gradient norm, applies one update and clears gradients.
  void step() {
    ++t_;
    double sq = 0;
    for (auto& it : params_.items())
      if (it.tensor.has_grad()) sq += static_cast<double>(it.tensor.grad.squaredNorm());
    double norm = std::sqrt(sq);
    last_norm_ = norm;
    T clip = norm > tc_.gradient_clip_norm ? static_cast<T>(tc_.gradient_clip_norm / norm) : T(1);
    const T b1 = static_cast<T>(tc_.beta1), b2 = static_cast<T>(tc_.beta2);
    const T lr_t = static_cast<T>(tc_.learning_rate * std::sqrt(1 - std::pow(tc_.beta2, static_cast<double>(t_))) /
                                  (1 - std::pow(tc_.beta1, static_cast<double>(t_))));
    const T eps = static_cast<T>(tc_.epsilon);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i];
      if (!p.has_grad()) continue;
      auto g = p.grad.array() * clip;
      m_[i].array() = b1 * m_[i].array() + (1 - b1) * g;
      v_[i].array() = b2 * v_[i].array() + (1 - b2) * g.square();
      p.value.array() -= lr_t * m_[i].array() / (v_[i].array().sqrt() + eps);
      p.grad.setZero();
    }
  }

  double last_grad_norm() const { return last_norm_; }

 private:
  ParameterSet<T>& params_;
  const TrainConfig& tc_;
  std::vector<Matrix<T>> m_, v_;
  long t_ = 0;
  double last_norm_ = 0;
};

// Sum of token cross-entropies of a packed batch, scaled by `weight`.
template <typename T>
Var batch_loss(Tape<T>& tape, const Transformer<T>& model, std::span<const EncodedExample* const> batch, T weight,
               std::mt19937_64* dropout_rng, std::size_t* num_tokens = nullptr) {
  std::vector<std::vector<int>> srcs, tgts;
  std::vector<int> targets;
  for (const auto* ex : batch) {
    model.check_length(ex->input.size() + 1, "input");
    model.check_length(ex->output.size() + 1, "output");
    srcs.push_back(encoder_input(ex->input));
    tgts.push_back(decoder_input(ex->output));
    targets.insert(targets.end(), ex->output.begin(), ex->output.end());
    targets.push_back(kEosId);
  }
  if (num_tokens) *num_tokens = targets.size();
  auto ps = PackedSequences::pack(srcs);
  auto pt = PackedSequences::pack(tgts);
  std::vector<char> mask;
  Var mem = model.encode(tape, ps, mask, dropout_rng);
  Var logits = model.decode(tape, pt, mem, ps.segments, mask, dropout_rng);
  return ops::cross_entropy(tape, logits, std::span<const int>(targets), weight);
}

// Adam on teacher-forced cross-entropy over every output token (target
// context included). Batch order and dropout masks derive from tc.rng_seed.
template <typename T>
TrainResult train_model(Transformer<T>& model, std::span<const EncodedExample> data, const TrainConfig& tc,
                        const std::function<void(std::size_t, double)>& progress = {}) {
  tc.validate();
  TrainResult result;
  if (tc.max_steps == 0) return result;
  if (data.empty()) throw DataError("cannot train on an empty dataset");
  std::mt19937_64 order_rng(tc.rng_seed);
  std::mt19937_64 dropout_rng(tc.rng_seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  Adam<T> adam(model.params(), tc);
  model.params().zero_grad();

  for (std::size_t step = 1; step <= tc.max_steps; ++step) {
    std::vector<const EncodedExample*> batch;
    while (batch.size() < std::min(tc.batch_size, data.size())) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), order_rng);
        cursor = 0;
      }
      batch.push_back(&data[order[cursor++]]);
    }
    std::size_t tokens = 0;
    for (const auto* ex : batch) tokens += ex->output.size() + 1;
    Tape<T> tape(true);
    Var loss = batch_loss(tape, model, std::span<const EncodedExample* const>(batch),
                          T(1) / static_cast<T>(tokens), &dropout_rng);
    double value = static_cast<double>(tape.value(loss)(0, 0));
    if (!std::isfinite(value))
      throw NumericError("non-finite loss at step " + std::to_string(step), static_cast<long>(step));
    tape.backward(loss);
    adam.step();
    result.losses.push_back(value);
    if (progress) progress(step, value);
  }
  return result;
}

// Trains from tc.init_from when given (configuration and vocabulary must
// match), otherwise from a fresh initialization seeded by tc.rng_seed.
inline ModelCheckpoint train(const ModelConfig& config, const std::string& vocab_hash,
                             std::span<const EncodedExample> data, const TrainConfig& tc,
                             TrainResult* result_out = nullptr,
                             const std::function<void(std::size_t, double)>& progress = {}) {
  Transformer<float> model(config);
  if (tc.init_from) {
    if (tc.init_from->vocab_hash != vocab_hash)
      throw VocabMismatchError("init checkpoint vocabulary " + tc.init_from->vocab_hash +
                               " does not match dataset vocabulary " + vocab_hash);
    if (!(tc.init_from->config == config))
      throw ConfigError("init checkpoint configuration differs from the requested model configuration");
    load_parameters(model, *tc.init_from);
  } else {
    model.init(tc.rng_seed);
  }
  auto result = train_model(model, data, tc, progress);
  TrainingMeta meta{tc.max_steps, result.losses.empty() ? std::numeric_limits<double>::quiet_NaN() : result.losses.back(),
                    tc.rng_seed};
  if (tc.init_from) meta.steps += tc.init_from->meta.steps;
  if (result_out) *result_out = std::move(result);
  return to_checkpoint(model, vocab_hash, meta);
}

inline std::string render_loss_csv(const TrainResult& r) {
  std::string out = "step,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < r.losses.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f\n", i + 1, r.losses[i]);
    out += buf;
  }
  return out;
}

}  // namespace ctxmt::nn
