#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ctxmt/backtranslate.hpp"
#include "ctxmt/bpe.hpp"
#include "ctxmt/contextize.hpp"
#include "ctxmt/contrastive_set.hpp"
#include "ctxmt/corpus.hpp"
#include "ctxmt/error.hpp"
#include "ctxmt/eval/bleu.hpp"
#include "ctxmt/eval/contrastive.hpp"
#include "ctxmt/eval/parallel.hpp"
#include "ctxmt/eval/significance.hpp"
#include "ctxmt/experiment.hpp"
#include "ctxmt/nn/checkpoint.hpp"
#include "ctxmt/nn/train.hpp"
#include "ctxmt/synthetic.hpp"

namespace ctxmt::pipeline {

namespace fs = std::filesystem;

// Thread-safe line logger.
class Log {
 public:
  explicit Log(std::ostream* out = &std::cerr) : out_(out) {}
  void operator()(const std::string& line) const {
    if (!out_) return;
    std::lock_guard<std::mutex> lock(mu_);
    *out_ << line << '\n' << std::flush;
  }

 private:
  std::ostream* out_;
  mutable std::mutex mu_;
};

// On-disk layout under work_dir.
struct Layout {
  fs::path root;

  explicit Layout(const ExperimentConfig& c) : root(c.work_dir) {}

  fs::path synth_src() const { return root / "synth" / "corpus.src"; }
  fs::path synth_tgt() const { return root / "synth" / "corpus.tgt"; }
  fs::path synth_contrastive() const { return root / "synth" / "contrastive.jsonl"; }
  fs::path split(const std::string& part, const std::string& side) const { return root / "data" / (part + "." + side); }
  fs::path test_contrastive() const { return root / "data" / "test.contrastive.jsonl"; }
  fs::path bpe_merges() const { return root / "data" / "bpe.merges"; }
  fs::path bpe_vocab() const { return root / "data" / "bpe.vocab"; }
  fs::path dataset(const std::string& scheme, const std::string& part, const std::string& side) const {
    return root / "data" / scheme / (part + "." + side);
  }
  fs::path bt_prefix() const { return root / "bt" / "bt"; }
  fs::path checkpoint(const std::string& run) const { return root / "models" / (run + ".ckpt"); }
  fs::path loss_csv(const std::string& run) const { return root / "models" / (run + ".loss.csv"); }
  fs::path hypotheses(const std::string& run, TargetContextMode m) const {
    return root / "out" / (run + "." + std::string(mode_name(m)) + ".hyp");
  }
  fs::path report(const std::string& run) const { return root / "reports" / (run + ".json"); }
  fs::path reports_dir() const { return root / "reports"; }
};

inline std::string run_name(const ContextScheme& s, bool bt) { return s.name() + (bt ? ".bt" : ""); }

inline void ensure_parent(const fs::path& p) { fs::create_directories(p.parent_path()); }

inline void require_file(const fs::path& p, const std::string& hint) {
  if (!fs::exists(p)) throw ConfigError("missing " + p.string() + (hint.empty() ? "" : " (" + hint + ")"));
}

// Writes only when the content changes, so re-runs leave files untouched.
inline void write_if_changed(const fs::path& p, const std::string& content) {
  ensure_parent(p);
  if (fs::exists(p) && text::read_file(p.string()) == content) return;
  text::write_file(p.string(), content);
}

inline std::string render_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + '\n';
  return out;
}

// ---- synth ---------------------------------------------------------------

struct SynthSummary {
  std::map<PhenomenonCategory, std::size_t> per_category;
  std::map<std::size_t, std::size_t> per_distance;
  std::size_t instances = 0;
};

inline SynthSummary summarize(const ContrastiveSet& set) {
  SynthSummary s;
  for (auto c : kAllCategories) s.per_category[c] = 0;
  for (const auto& inst : set) {
    ++s.per_category[inst.category];
    ++s.per_distance[inst.distance];
  }
  s.instances = set.size();
  return s;
}

inline SynthSummary cmd_synth(const ExperimentConfig& cfg, const Log& log = Log()) {
  if (!cfg.use_synthetic) throw ConfigError("config has no synthetic block");
  Layout L(cfg);
  auto data = generate_synthetic(cfg.synthetic);
  ensure_parent(L.synth_src());
  write_if_changed(L.synth_src(), render_side(data.corpus, true));
  write_if_changed(L.synth_tgt(), render_side(data.corpus, false));
  write_if_changed(L.synth_contrastive(), render_contrastive_set(data.contrastive));
  auto s = summarize(data.contrastive);
  log("documents " + std::to_string(data.corpus.documents.size()) + ", sentence pairs " +
      std::to_string(data.corpus.num_pairs()) + ", instances " + std::to_string(s.instances));
  for (const auto& [c, k] : s.per_category) log("  category " + std::string(to_string(c)) + ": " + std::to_string(k));
  for (const auto& [d, k] : s.per_distance) log("  distance " + std::to_string(d) + ": " + std::to_string(k));
  return s;
}

// ---- prepare -------------------------------------------------------------

inline ParallelCorpus load_source_corpus(const ExperimentConfig& cfg) {
  Layout L(cfg);
  if (!cfg.corpus_src.empty()) {
    require_file(cfg.corpus_src, "corpus.src");
    require_file(cfg.corpus_tgt, "corpus.tgt");
    return load_corpus(cfg.corpus_src, cfg.corpus_tgt);
  }
  require_file(L.synth_src(), "run synth first");
  auto corpus = load_corpus(L.synth_src().string(), L.synth_tgt().string());
  return corpus;
}

struct PreparedData {
  BpeModel bpe;
  Vocab vocab;
  CorpusSplit split;
};

inline PreparedData cmd_prepare(const ExperimentConfig& cfg, const Log& log = Log()) {
  Layout L(cfg);
  auto corpus = load_source_corpus(cfg);
  PreparedData p;
  p.split = split_corpus(corpus, cfg.split, cfg.rng_seed);
  for (auto [part, c] : {std::pair<const char*, const ParallelCorpus*>{"train", &p.split.train},
                         {"dev", &p.split.dev}, {"test", &p.split.test}}) {
    write_if_changed(L.split(part, "src"), render_side(*c, true));
    write_if_changed(L.split(part, "tgt"), render_side(*c, false));
    // Document ids of the split, to map back to the source corpus.
    std::vector<std::string> ids;
    for (const auto& d : c->documents) ids.push_back(d.doc_id);
    write_if_changed(L.split(part, "ids"), render_lines(ids));
  }

  std::string contrastive = cfg.contrastive_set;
  if (contrastive.empty() && cfg.corpus_src.empty()) contrastive = L.synth_contrastive().string();
  if (!contrastive.empty()) {
    require_file(contrastive, "contrastive set");
    auto set = load_contrastive_set(contrastive);
    // Sets tied to the corpus keep only instances from test documents.
    bool located = !set.empty() && std::all_of(set.begin(), set.end(), [](const auto& i) { return !i.doc_id.empty(); });
    if (located) set = restrict_to(set, p.split.test);
    write_if_changed(L.test_contrastive(), render_contrastive_set(set));
  }

  p.bpe = learn_joint_bpe(p.split.train, cfg.bpe_ops);
  p.vocab = build_vocab(p.bpe);
  std::string merges = render_merges(p.bpe), vocab = render_vocab(p.vocab);
  if (fs::exists(L.bpe_vocab()) && text::read_file(L.bpe_vocab().string()) != vocab)
    throw VocabMismatchError("existing vocabulary " + L.bpe_vocab().string() + " (hash " +
                             text::fnv1a_hex(text::read_file(L.bpe_vocab().string())) +
                             ") differs from the one learned now (hash " + vocab_hash(p.vocab) +
                             "); remove the work directory to rebuild");
  write_if_changed(L.bpe_merges(), merges);
  write_if_changed(L.bpe_vocab(), vocab);

  for (const auto& scheme : cfg.scheme_list()) {
    for (auto [part, c] : {std::pair<const char*, const ParallelCorpus*>{"train", &p.split.train}, {"dev", &p.split.dev}}) {
      auto ds = build_dataset(*c, scheme, p.bpe);
      std::vector<std::string> in, out;
      for (const auto& ex : ds) {
        in.push_back(text::join(ex.input));
        out.push_back(text::join(ex.output));
      }
      write_if_changed(L.dataset(scheme.name(), part, "input"), render_lines(in));
      write_if_changed(L.dataset(scheme.name(), part, "output"), render_lines(out));
    }
    log("prepared " + scheme.name());
  }
  // Reverse (target to source) sentence-level data for back-translation.
  {
    std::vector<std::string> in, out;
    BpeSegmenter seg(p.bpe);
    for (const auto& d : p.split.train.documents)
      for (const auto& pr : d.pairs) {
        in.push_back(text::join(seg.apply(pr.target)));
        out.push_back(text::join(seg.apply(pr.source)));
      }
    write_if_changed(L.dataset("reverse", "train", "input"), render_lines(in));
    write_if_changed(L.dataset("reverse", "train", "output"), render_lines(out));
  }
  log("vocabulary " + std::to_string(p.vocab.size()) + " symbols, hash " + vocab_hash(p.vocab));
  return p;
}

struct Artifacts {
  BpeModel bpe;
  Vocab vocab;
  std::string hash;
};

inline Artifacts load_artifacts(const ExperimentConfig& cfg) {
  Layout L(cfg);
  require_file(L.bpe_merges(), "run prepare first");
  require_file(L.bpe_vocab(), "run prepare first");
  Artifacts a;
  a.bpe = load_bpe(L.bpe_merges().string(), L.bpe_vocab().string());
  a.vocab = load_vocab(L.bpe_vocab().string());
  a.hash = vocab_hash(a.vocab);
  return a;
}

// A prepared split with its original document ids.
inline ParallelCorpus load_split(const ExperimentConfig& cfg, const std::string& part) {
  Layout L(cfg);
  require_file(L.split(part, "src"), "run prepare first");
  auto corpus = load_corpus(L.split(part, "src").string(), L.split(part, "tgt").string());
  if (fs::exists(L.split(part, "ids"))) {
    auto ids = text::read_lines(L.split(part, "ids").string());
    if (ids.size() != corpus.documents.size())
      throw DataError(L.split(part, "ids").string() + " does not match the " + part + " split");
    for (std::size_t d = 0; d < ids.size(); ++d) corpus.documents[d].doc_id = ids[d];
  }
  return corpus;
}

inline nn::ModelConfig model_config(const ExperimentConfig& cfg, const Vocab& vocab) {
  nn::ModelConfig m = cfg.model;
  m.vocab_size = static_cast<int>(vocab.size());
  m.validate();
  return m;
}

// ---- train ---------------------------------------------------------------

struct TrainOptions {
  bool baseline_init = true;
  bool back_translated = false;
  bool reverse = false;  // sentence-level target-to-source model
};

inline nn::ModelCheckpoint cmd_train(const ExperimentConfig& cfg, const ContextScheme& scheme,
                                     const TrainOptions& opt = {}, const Log& log = Log()) {
  Layout L(cfg);
  auto art = load_artifacts(cfg);
  std::string data_name = opt.reverse ? "reverse" : scheme.name();
  std::string part = opt.back_translated ? "bt" : "train";
  std::string run = opt.reverse ? "reverse" : run_name(scheme, opt.back_translated);
  auto in_path = L.dataset(data_name, part, "input"), out_path = L.dataset(data_name, part, "output");
  require_file(in_path, opt.back_translated ? "run bt first" : "run prepare first");
  require_file(out_path, "");
  auto data = nn::encode_dataset(read_dataset(in_path.string(), out_path.string()), art.vocab);

  auto mc = model_config(cfg, art.vocab);
  nn::TrainConfig tc = cfg.train;
  if (!opt.reverse && scheme.variant != SchemeVariant::SentenceLevel && opt.baseline_init) {
    auto base = L.checkpoint("sentence");
    if (!fs::exists(base))
      throw ConfigError("no sentence-level baseline at " + base.string() +
                        "; train the 'sentence' scheme first or pass --no-baseline-init");
    tc.init_from = nn::load_checkpoint(base.string());
  }
  log("training " + run + " on " + std::to_string(data.size()) + " examples for " + std::to_string(tc.max_steps) +
      " steps" + (tc.init_from ? " (init: sentence baseline)" : ""));
  nn::TrainResult result;
  std::size_t every = std::max<std::size_t>(1, tc.max_steps / 10);
  auto ck = nn::train(mc, art.hash, data, tc, &result, [&](std::size_t step, double loss) {
    if (step % every == 0) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "  %s step %zu loss %.4f", run.c_str(), step, loss);
      log(buf);
    }
  });
  ensure_parent(L.checkpoint(run));
  nn::save_checkpoint(ck, L.checkpoint(run).string());
  text::write_file(L.loss_csv(run).string(), nn::render_loss_csv(result));
  return ck;
}

inline nn::Transformer<float> load_model(const ExperimentConfig& cfg, const std::string& run, const Artifacts& art) {
  Layout L(cfg);
  require_file(L.checkpoint(run), "train " + run + " first");
  auto ck = nn::load_checkpoint(L.checkpoint(run).string());
  if (ck.vocab_hash != art.hash)
    throw VocabMismatchError("checkpoint " + L.checkpoint(run).string() + " has vocabulary hash " + ck.vocab_hash +
                             " but the prepared vocabulary has hash " + art.hash);
  return nn::model_from_checkpoint<float>(ck);
}

// ---- translate -----------------------------------------------------------

inline eval::ParallelEvaluation cmd_translate(const ExperimentConfig& cfg, const ContextScheme& scheme,
                                              TargetContextMode mode, bool back_translated = false,
                                              const Log& log = Log()) {
  Layout L(cfg);
  auto art = load_artifacts(cfg);
  std::string run = run_name(scheme, back_translated);
  auto model = load_model(cfg, run, art);
  auto test = load_split(cfg, "test");
  eval::DecodeOptions opt;
  opt.beam_size = cfg.beam_size;
  auto ev = eval::evaluate_parallel(model, test, scheme, mode, art.bpe, art.vocab, opt);
  ensure_parent(L.hypotheses(run, mode));
  text::write_lines(L.hypotheses(run, mode).string(), ev.hypotheses);
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s (%s) BLEU %.2f", run.c_str(), std::string(mode_name(mode)).c_str(), ev.bleu.score);
  log(buf);
  return ev;
}

// ---- evaluate ------------------------------------------------------------

inline nlohmann::json bleu_json(const eval::BleuResult& b) {
  return {{"score", b.score},
          {"precisions", std::vector<double>(b.precisions.begin(), b.precisions.end())},
          {"brevity_penalty", b.brevity_penalty},
          {"hyp_len", b.hyp_len},
          {"ref_len", b.ref_len}};
}

inline std::vector<eval::ContrastiveResult> results_from_json(const nlohmann::json& report) {
  std::vector<eval::ContrastiveResult> out;
  if (!report.contains("contrastive")) return out;
  for (const auto& r : report["contrastive"]) {
    eval::ContrastiveResult x;
    x.instance = r.at("instance").get<std::size_t>();
    x.chosen_index = r.at("chosen").get<std::size_t>();
    x.correct_index = r.at("gold").get<std::size_t>();
    x.correct = x.chosen_index == x.correct_index;
    x.distance = r.at("distance").get<std::size_t>();
    x.category = parse_category(r.at("category").get<std::string>());
    out.push_back(x);
  }
  return out;
}

// BLEU (RF, plus MT when the scheme reads target context), contrastive
// accuracy with category and distance breakdowns.
inline nlohmann::json evaluate_run(const ExperimentConfig& cfg, const ContextScheme& scheme, bool back_translated,
                                   const Log& log = Log()) {
  Layout L(cfg);
  auto art = load_artifacts(cfg);
  std::string run = run_name(scheme, back_translated);
  auto model = load_model(cfg, run, art);
  nlohmann::json rep;
  rep["run"] = run;
  rep["scheme"] = scheme.name();
  rep["n"] = scheme.n;
  rep["data"] = back_translated ? "BT" : "PA";
  rep["vocab_hash"] = art.hash;
  rep["signature"] = eval::BleuConfig{}.signature();

  auto test = load_split(cfg, "test");
  eval::DecodeOptions opt;
  opt.beam_size = cfg.beam_size;
  std::vector<TargetContextMode> modes{TargetContextMode::Reference};
  if (scheme.target_context_in_input()) modes.push_back(TargetContextMode::MachineTranslated);
  for (auto m : modes) {
    auto ev = eval::evaluate_parallel(model, test, scheme, m, art.bpe, art.vocab, opt);
    ensure_parent(L.hypotheses(run, m));
    text::write_lines(L.hypotheses(run, m).string(), ev.hypotheses);
    std::string key = m == TargetContextMode::Reference ? "bleu" : "bleu_mt";
    rep[key] = ev.bleu.score;
    rep[key + "_detail"] = bleu_json(ev.bleu);
    rep["hypotheses"][std::string(mode_name(m))] = ev.hypotheses;
  }

  if (fs::exists(L.test_contrastive())) {
    auto set = load_contrastive_set(L.test_contrastive().string());
    if (!set.empty()) {
      eval::ContrastiveOptions copt;
      copt.length_normalize = cfg.length_normalize;
      auto ev = eval::contrastive_accuracy(eval::model_scorer(model, art.vocab), set, scheme, art.bpe, copt);
      rep["accuracy"] = ev.accuracy;
      for (const auto& [c, a] : eval::accuracy_by_category(ev.results))
        rep["per_category"][std::string(to_string(c))] = {{"count", a.count}, {"accuracy", a.accuracy()}};
      rep["per_distance"] = nlohmann::json::array();
      for (const auto& b : eval::accuracy_by_distance(ev.results))
        rep["per_distance"].push_back({{"distance", b.distance},
                                       {"count", b.count},
                                       {"share", b.share_percent},
                                       {"accuracy", b.accuracy_percent}});
      rep["contrastive"] = nlohmann::json::array();
      for (const auto& r : ev.results)
        rep["contrastive"].push_back({{"instance", r.instance},
                                      {"chosen", r.chosen_index},
                                      {"gold", r.correct_index},
                                      {"distance", r.distance},
                                      {"category", std::string(to_string(r.category))},
                                      {"scores", r.scores}});
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s BLEU %.2f%s accuracy %s", run.c_str(), rep["bleu"].get<double>(),
                rep.contains("bleu_mt") ? (" (MT " + std::to_string(rep["bleu_mt"].get<double>()).substr(0, 5) + ")").c_str() : "",
                rep.contains("accuracy") ? std::to_string(rep["accuracy"].get<double>()).substr(0, 6).c_str() : "n/a");
  log(buf);
  return rep;
}

// Paired bootstrap on RF hypotheses and McNemar on contrastive decisions.
inline nlohmann::json significance_entries(const nlohmann::json& a, const nlohmann::json& b,
                                           const std::vector<std::string>& refs, const ExperimentConfig& cfg) {
  nlohmann::json out = nlohmann::json::array();
  std::vector<std::string> pair{a.at("run").get<std::string>(), b.at("run").get<std::string>()};
  auto ha = a.at("hypotheses").at("rf").get<std::vector<std::string>>();
  auto hb = b.at("hypotheses").at("rf").get<std::vector<std::string>>();
  auto boot = eval::paired_bootstrap(ha, hb, refs, cfg.resamples, cfg.rng_seed, cfg.alpha);
  out.push_back({{"pair", pair},
                 {"test", boot.test},
                 {"p", boot.p_value},
                 {"statistic", boot.statistic},
                 {"better", pair[static_cast<std::size_t>(boot.better)]},
                 {"significant", boot.significant}});
  auto ra = results_from_json(a), rb = results_from_json(b);
  if (!ra.empty() && ra.size() == rb.size()) {
    auto mc = eval::mcnemar(ra, rb, cfg.alpha);
    out.push_back({{"pair", pair},
                   {"test", mc.test},
                   {"p", mc.p_value},
                   {"statistic", mc.statistic},
                   {"significant", mc.significant}});
  }
  return out;
}

inline std::vector<std::string> test_references(const ExperimentConfig& cfg) {
  Layout L(cfg);
  auto test = load_split(cfg, "test");
  std::vector<std::string> refs;
  for (const auto& d : test.documents)
    for (const auto& p : d.pairs) refs.push_back(p.target);
  return refs;
}

inline nlohmann::json read_report(const fs::path& p) {
  try {
    return nlohmann::json::parse(text::read_file(p.string()));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(p.string() + ": " + e.what());
  }
}

// Evaluates one run, adds significance against every other report already on
// disk (or the given ones) and writes the report.
inline nlohmann::json cmd_evaluate(const ExperimentConfig& cfg, const ContextScheme& scheme, bool back_translated,
                                   const std::vector<std::string>& other_reports = {}, const Log& log = Log()) {
  Layout L(cfg);
  auto rep = evaluate_run(cfg, scheme, back_translated, log);
  std::vector<fs::path> others;
  if (!other_reports.empty()) {
    for (const auto& p : other_reports) others.emplace_back(p);
  } else if (fs::exists(L.reports_dir())) {
    for (const auto& e : fs::directory_iterator(L.reports_dir()))
      if (e.path().extension() == ".json" && e.path() != L.report(rep["run"].get<std::string>()) &&
          e.path().filename() != "summary.json")
        others.push_back(e.path());
    std::sort(others.begin(), others.end());
  }
  rep["significance"] = nlohmann::json::array();
  auto refs = test_references(cfg);
  for (const auto& p : others) {
    auto other = read_report(p);
    if (other.value("vocab_hash", "") != rep["vocab_hash"]) continue;
    for (auto& e : significance_entries(rep, other, refs, cfg)) rep["significance"].push_back(e);
  }
  ensure_parent(L.report(rep["run"].get<std::string>()));
  text::write_file(L.report(rep["run"].get<std::string>()).string(), rep.dump(2));
  return rep;
}

// ---- bt ------------------------------------------------------------------

inline BtCorpus cmd_bt(const ExperimentConfig& cfg, const Log& log = Log()) {
  Layout L(cfg);
  auto art = load_artifacts(cfg);
  MonolingualCorpus mono;
  if (!cfg.monolingual.empty()) {
    require_file(cfg.monolingual, "monolingual corpus");
    mono = load_monolingual(cfg.monolingual);
  } else {
    mono = target_side(load_split(cfg, "train"));
  }
  std::shared_ptr<const ReverseTranslator> reverse;
  std::optional<nn::Transformer<float>> model;
  if (cfg.bt.reverse == "copy") {
    reverse = std::make_shared<CopyTranslator>();
  } else if (cfg.bt.reverse == "lexicon") {
    reverse = std::make_shared<LexiconTranslator>(
        SyntheticLexicon(cfg.synthetic.source_vocab_size, cfg.synthetic.target_vocab_size));
  } else {
    std::string path = cfg.bt.checkpoint.empty() ? L.checkpoint("reverse").string() : cfg.bt.checkpoint;
    require_file(path, "train the reverse model first (train --reverse)");
    auto ck = nn::load_checkpoint(path);
    if (ck.vocab_hash != art.hash)
      throw VocabMismatchError("reverse checkpoint hash " + ck.vocab_hash + " differs from vocabulary hash " + art.hash);
    model.emplace(nn::model_from_checkpoint<float>(ck));
    reverse = std::make_shared<ModelTranslator<float>>(*model, art.bpe, art.vocab, cfg.bt.beam_size);
  }
  if (cfg.bt.char_dropout > 0)
    reverse = std::make_shared<CharDropoutTranslator>(reverse, cfg.bt.char_dropout, cfg.bt.noise_seed);

  auto bt = back_translate(mono, *reverse);
  ensure_parent(L.bt_prefix());
  write_bt_corpus(bt, L.bt_prefix().string());
  for (const auto& scheme : cfg.scheme_list()) {
    auto ds = build_bt_dataset(bt, scheme, art.bpe);
    std::vector<std::string> in, out;
    for (const auto& ex : ds) {
      in.push_back(text::join(ex.input));
      out.push_back(text::join(ex.output));
    }
    write_if_changed(L.dataset(scheme.name(), "bt", "input"), render_lines(in));
    write_if_changed(L.dataset(scheme.name(), "bt", "output"), render_lines(out));
  }
  log("back-translated " + std::to_string(mono.num_sentences()) + " sentences in " +
      std::to_string(mono.documents.size()) + " documents");
  return bt;
}

// ---- report --------------------------------------------------------------

// Table of runs x {BLEU, ACC}. A "*" marks runs not significantly different
// from the best run of that column.
inline std::string cmd_report(const ExperimentConfig& cfg, std::vector<std::string> report_paths = {},
                              const Log& log = Log()) {
  Layout L(cfg);
  if (report_paths.empty() && fs::exists(L.reports_dir())) {
    for (const auto& e : fs::directory_iterator(L.reports_dir()))
      if (e.path().extension() == ".json" && e.path().filename() != "summary.json") report_paths.push_back(e.path().string());
    std::sort(report_paths.begin(), report_paths.end());
  }
  if (report_paths.empty()) throw ConfigError("no reports found; run evaluate first");
  std::vector<nlohmann::json> reps;
  for (const auto& p : report_paths) reps.push_back(read_report(p));
  auto refs = test_references(cfg);

  nlohmann::json summary;
  summary["significance"] = nlohmann::json::array();
  std::map<std::pair<std::size_t, std::size_t>, nlohmann::json> sig;
  for (std::size_t i = 0; i < reps.size(); ++i)
    for (std::size_t j = i + 1; j < reps.size(); ++j) {
      auto e = significance_entries(reps[i], reps[j], refs, cfg);
      sig[{i, j}] = e;
      for (auto& x : e) summary["significance"].push_back(x);
    }
  auto significant = [&](std::size_t a, std::size_t b, const std::string& test) {
    auto key = std::make_pair(std::min(a, b), std::max(a, b));
    for (const auto& e : sig[key])
      if (e["test"] == test) return e["significant"].get<bool>();
    return false;
  };
  auto best_of = [&](const std::string& key) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < reps.size(); ++i)
      if (reps[i].contains(key) && (!best || reps[i][key].get<double>() > reps[*best][key].get<double>())) best = i;
    return best;
  };
  auto best_bleu = best_of("bleu"), best_acc = best_of("accuracy");

  std::ostringstream t;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s %-4s %9s %9s %9s\n", "run", "data", "BLEU", "BLEU(MT)", "ACC");
  t << buf;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const auto& r = reps[i];
    auto mark = [&](const std::optional<std::size_t>& best, const char* test) {
      return best && (*best == i || !significant(i, *best, test)) ? "*" : " ";
    };
    std::string bleu = r.contains("bleu") ? std::to_string(r["bleu"].get<double>()).substr(0, 5) : "-";
    std::string mt = r.contains("bleu_mt") ? std::to_string(r["bleu_mt"].get<double>()).substr(0, 5) : "-";
    std::string acc = r.contains("accuracy") ? std::to_string(100 * r["accuracy"].get<double>()).substr(0, 5) : "-";
    std::snprintf(buf, sizeof buf, "%-22s %-4s %8s%s %9s %8s%s\n", r.value("run", "?").c_str(),
                  r.value("data", "PA").c_str(), bleu.c_str(), mark(best_bleu, "paired_bootstrap"), mt.c_str(),
                  acc.c_str(), r.contains("accuracy") ? mark(best_acc, "mcnemar") : " ");
    t << buf;
  }
  summary["table"] = t.str();
  ensure_parent(L.reports_dir() / "summary.json");
  text::write_file((L.reports_dir() / "summary.json").string(), summary.dump(2));
  log(t.str());
  return t.str();
}

}  // namespace ctxmt::pipeline
