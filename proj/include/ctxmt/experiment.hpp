#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "ctxmt/contextize.hpp"
#include "ctxmt/error.hpp"
#include "ctxmt/nn/checkpoint.hpp"
#include "ctxmt/nn/train.hpp"
#include "ctxmt/synthetic.hpp"
#include "ctxmt/text.hpp"

namespace ctxmt {

// Back-translation settings: reverse is "copy", "lexicon" (synthetic
// language only) or "model" (sentence-level checkpoint trained tgt->src).
struct BtSettings {
  std::string reverse = "model";
  std::string checkpoint;  // for reverse == "model"
  double char_dropout = 0.0;
  std::uint64_t noise_seed = 7;
  std::size_t beam_size = 4;
};

struct ExperimentConfig {
  std::string work_dir = "work";
  std::string corpus_src, corpus_tgt;  // empty: use the synthetic corpus
  std::string contrastive_set;         // empty: synthetic set when present
  std::string monolingual;             // empty: target side of the train split
  bool use_synthetic = false;
  SyntheticConfig synthetic;
  std::array<double, 3> split{0.8, 0.1, 0.1};
  std::vector<std::string> schemes{"sentence", "nton", "tgt-nton", "src+tgt-nton"};
  std::size_t n = 4;
  std::size_t bpe_ops = 400;
  nn::ModelConfig model;
  nn::TrainConfig train;
  TargetContextMode mode = TargetContextMode::Reference;
  std::size_t beam_size = 4;
  std::size_t resamples = 1000;
  double alpha = 0.05;
  bool length_normalize = false;
  std::uint64_t rng_seed = 1;
  BtSettings bt;

  std::vector<ContextScheme> scheme_list() const {
    std::vector<ContextScheme> out;
    for (const auto& s : schemes) out.push_back(ContextScheme::make(parse_variant(s), n));
    return out;
  }
};

namespace detail {

// Sets `a.b.c` in a JSON object, creating intermediate objects.
inline void set_dotted(nlohmann::json& j, const std::string& key, const nlohmann::json& value) {
  nlohmann::json* cur = &j;
  std::size_t start = 0;
  while (true) {
    auto dot = key.find('.', start);
    std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("malformed override key '" + key + "'");
    if (dot == std::string::npos) {
      (*cur)[part] = value;
      return;
    }
    if (!cur->contains(part) || !(*cur)[part].is_object()) (*cur)[part] = nlohmann::json::object();
    cur = &(*cur)[part];
    start = dot + 1;
  }
}

template <typename V>
void read(const nlohmann::json& j, const char* key, V& out) {
  if (j.contains(key)) out = j.at(key).get<V>();
}

}  // namespace detail

// `key=value` with value parsed as JSON, falling back to a plain string.
inline void apply_override(nlohmann::json& j, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: " + assignment);
  std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::exception&) {
    value = raw;
  }
  detail::set_dotted(j, key, value);
}

inline SyntheticConfig synthetic_from_json(const nlohmann::json& j) {
  SyntheticConfig s;
  using detail::read;
  read(j, "num_documents", s.num_documents);
  read(j, "sentences_per_document", s.sentences_per_document);
  read(j, "source_vocab_size", s.source_vocab_size);
  read(j, "target_vocab_size", s.target_vocab_size);
  read(j, "min_sentence_length", s.min_sentence_length);
  read(j, "max_sentence_length", s.max_sentence_length);
  read(j, "max_distance", s.max_distance);
  read(j, "instance_rate", s.instance_rate);
  read(j, "rng_seed", s.rng_seed);
  if (j.contains("proportions")) {
    const auto& p = j.at("proportions");
    if (p.is_object()) {
      s.proportions = {p.value("TargetOnly", 0.0), p.value("BothSides", 0.0), p.value("SourceOnly", 0.0),
                       p.value("Combined", 0.0)};
    } else {
      auto v = p.get<std::vector<double>>();
      if (v.size() != 4) throw ConfigError("synthetic.proportions needs 4 values");
      std::copy(v.begin(), v.end(), s.proportions.begin());
    }
  }
  validate(s);
  return s;
}

inline nn::TrainConfig train_from_json(const nlohmann::json& j) {
  nn::TrainConfig t;
  using detail::read;
  read(j, "learning_rate", t.learning_rate);
  read(j, "batch_size", t.batch_size);
  read(j, "max_steps", t.max_steps);
  read(j, "beta1", t.beta1);
  read(j, "beta2", t.beta2);
  read(j, "epsilon", t.epsilon);
  read(j, "gradient_clip_norm", t.gradient_clip_norm);
  read(j, "rng_seed", t.rng_seed);
  t.validate();
  return t;
}

// Relative paths are resolved against `base_dir` (the config file's folder).
inline ExperimentConfig experiment_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  ExperimentConfig c;
  static const std::vector<std::string> kKnown{
      "work_dir", "corpus", "contrastive_set", "monolingual", "synthetic", "split", "schemes", "n",
      "bpe_ops", "model", "train", "mode", "beam_size", "resamples", "alpha", "length_normalize",
      "rng_seed", "bt"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (std::find(kKnown.begin(), kKnown.end(), k) == kKnown.end()) throw ConfigError("unknown config key '" + k + "'");
  auto resolve = [&](const std::string& p) {
    if (p.empty()) return p;
    std::filesystem::path path(p);
    return (path.is_absolute() || base_dir.empty() ? path : base_dir / path).lexically_normal().string();
  };
  try {
    using detail::read;
    read(j, "work_dir", c.work_dir);
    c.work_dir = resolve(c.work_dir);
    if (j.contains("corpus")) {
      c.corpus_src = resolve(j["corpus"].at("src").get<std::string>());
      c.corpus_tgt = resolve(j["corpus"].at("tgt").get<std::string>());
    }
    read(j, "contrastive_set", c.contrastive_set);
    c.contrastive_set = resolve(c.contrastive_set);
    read(j, "monolingual", c.monolingual);
    c.monolingual = resolve(c.monolingual);
    if (j.contains("synthetic")) {
      c.use_synthetic = true;
      c.synthetic = synthetic_from_json(j["synthetic"]);
    }
    if (j.contains("split")) {
      auto v = j["split"].get<std::vector<double>>();
      if (v.size() != 3) throw ConfigError("split needs three ratios");
      std::copy(v.begin(), v.end(), c.split.begin());
    }
    read(j, "schemes", c.schemes);
    read(j, "n", c.n);
    read(j, "bpe_ops", c.bpe_ops);
    if (j.contains("model")) {
      c.model = j["model"].get<nn::ModelConfig>();
    }
    if (j.contains("train")) c.train = train_from_json(j["train"]);
    if (j.contains("mode")) c.mode = parse_mode(j["mode"].get<std::string>());
    read(j, "beam_size", c.beam_size);
    read(j, "resamples", c.resamples);
    read(j, "alpha", c.alpha);
    read(j, "length_normalize", c.length_normalize);
    read(j, "rng_seed", c.rng_seed);
    if (j.contains("bt")) {
      const auto& b = j["bt"];
      read(b, "reverse", c.bt.reverse);
      read(b, "checkpoint", c.bt.checkpoint);
      c.bt.checkpoint = resolve(c.bt.checkpoint);
      read(b, "char_dropout", c.bt.char_dropout);
      read(b, "noise_seed", c.bt.noise_seed);
      read(b, "beam_size", c.bt.beam_size);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  if (c.schemes.empty()) throw ConfigError("scheme list is empty");
  c.scheme_list();  // validates names and n
  if (c.corpus_src.empty() && !c.use_synthetic)
    throw ConfigError("config needs either a corpus {src, tgt} or a synthetic block");
  if (c.beam_size < 1) throw ConfigError("beam_size must be >= 1");
  if (c.resamples < 100) throw ConfigError("resamples must be >= 100");
  if (!(c.alpha > 0 && c.alpha < 1)) throw ConfigError("alpha must lie in (0,1)");
  if (c.bt.reverse != "copy" && c.bt.reverse != "lexicon" && c.bt.reverse != "model")
    throw ConfigError("bt.reverse must be copy, lexicon or model");
  return c;
}

inline nlohmann::json load_config_json(const std::string& path, const std::vector<std::string>& overrides = {}) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  for (const auto& o : overrides) apply_override(j, o);
  return j;
}

inline ExperimentConfig load_experiment(const std::string& path, const std::vector<std::string>& overrides = {}) {
  return experiment_from_json(load_config_json(path, overrides), std::filesystem::path(path).parent_path());
}

}  // namespace ctxmt
