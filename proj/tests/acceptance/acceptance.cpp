// Acceptance run: one PASS/FAIL line per criterion, exit code 1 if any fails.
// CTXMT_ACCEPTANCE_STEPS overrides the per-model step budget (default 16000)
// for quick local iterations.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ctxmt/backtranslate.hpp"
#include "ctxmt/bpe.hpp"
#include "ctxmt/contextize.hpp"
#include "ctxmt/eval/bleu.hpp"
#include "ctxmt/eval/contrastive.hpp"
#include "ctxmt/eval/parallel.hpp"
#include "ctxmt/eval/significance.hpp"
#include "ctxmt/eval/tokenizer_13a.hpp"
#include "ctxmt/nn/gradcheck.hpp"
#include "ctxmt/nn/inference.hpp"
#include "ctxmt/nn/train.hpp"
#include "ctxmt/synthetic.hpp"

using namespace ctxmt;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::vector<std::pair<int, bool>> g_summary;

void report(int id, const char* title, const Outcome& o) {
  std::printf("criterion %d (%s): %s%s%s\n", id, title, o.pass ? "PASS" : "FAIL", o.detail.empty() ? "" : " | ",
              o.detail.c_str());
  std::fflush(stdout);
  g_summary.emplace_back(id, o.pass);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---- 1 -------------------------------------------------------------------

Outcome scheme_oracle() {
  Outcome o;
  auto t0 = Clock::now();
  std::mt19937_64 rng(17);
  const std::string src_chars = "abcdefgh", tgt_chars = "pqrstuvw";
  auto word = [&](const std::string& chars) {
    std::string w;
    for (std::size_t k = 0, n = 1 + rng() % 5; k < n; ++k) w += chars[rng() % chars.size()];
    return w;
  };
  ParallelCorpus corpus;
  for (int d = 0; d < 50; ++d) {
    std::vector<std::string> s, t;
    for (std::size_t i = 0, len = 1 + rng() % 10; i < len; ++i) {
      std::string a, b;
      for (std::size_t k = 0, m = 1 + rng() % 6; k < m; ++k) a += (k ? " " : "") + word(src_chars);
      for (std::size_t k = 0, m = 1 + rng() % 6; k < m; ++k) b += (k ? " " : "") + word(tgt_chars);
      s.push_back(a), t.push_back(b);
    }
    corpus.documents.push_back(make_document("d" + std::to_string(d), s, t));
  }
  auto bpe = learn_joint_bpe(corpus, 60);
  std::size_t total = 0, good = 0;
  for (std::size_t n : {2, 3, 4})
    for (auto v : kAllVariants) {
      auto scheme = ContextScheme::make(v, n);
      for (const auto& doc : corpus.documents)
        for (std::size_t i = 0; i < doc.pairs.size(); ++i) {
          auto ex = build_example(doc, i, scheme, bpe);
          std::size_t c = v == SchemeVariant::SentenceLevel ? 0 : std::min(n - 1, i);
          bool both = v == SchemeVariant::SrcPlusTgtNToN || v == SchemeVariant::TgtPlusSrcNToN;
          bool ok = count_sep(ex.input) == (both ? 2 * c : c) &&
                    count_sep(ex.output) == (scheme.multi_output() ? c : 0) &&
                    extract_translation(ex.output, scheme) == text::normalize_whitespace(doc.pairs[i].target);
          ++total;
          good += ok;
        }
    }
  double secs = seconds_since(t0);
  o.check(good == total, "SEP formula / inverse on " + std::to_string(total - good) + " examples");
  o.check(secs < 5.0, "runtime");
  o.note(std::to_string(good) + "/" + std::to_string(total) + " examples, " + fmt("%.2fs", secs));
  return o;
}

// ---- 2 -------------------------------------------------------------------

Outcome bpe_round_trip() {
  Outcome o;
  auto t0 = Clock::now();
  SyntheticConfig sc;
  sc.num_documents = 200;
  auto corpus = generate_synthetic(sc).corpus;
  std::vector<BpeModel> models;
  for (std::size_t ops : {0, 10, 100}) models.push_back(learn_joint_bpe(corpus, ops));
  std::vector<BpeSegmenter> segs;
  for (const auto& m : models) segs.emplace_back(m);
  const auto& alphabet = models[0].alphabet;
  // Random lines over the known characters, with words from the corpus mixed in.
  std::vector<std::string> corpus_words;
  for (const auto& d : corpus.documents)
    for (const auto& p : d.pairs)
      for (const auto& w : text::split_whitespace(p.source + " " + p.target)) corpus_words.push_back(w);
  std::mt19937_64 rng(99);
  std::size_t round_trip_fail = 0, monotone_fail = 0;
  for (int line_no = 0; line_no < 10000; ++line_no) {
    std::string line;
    for (std::size_t k = 0, n = 1 + rng() % 12; k < n; ++k) {
      line += std::string(k ? (rng() % 5 ? " " : "  ") : (rng() % 7 ? "" : " "));
      if (rng() % 2) {
        line += corpus_words[rng() % corpus_words.size()];
      } else {
        for (std::size_t c = 0, m = 1 + rng() % 8; c < m; ++c) line += alphabet[rng() % alphabet.size()];
      }
    }
    std::size_t prev = SIZE_MAX;
    for (const auto& seg : segs) {
      auto toks = seg.apply(line);
      if (decode_bpe(toks) != text::normalize_whitespace(line)) ++round_trip_fail;
      if (toks.size() > prev) ++monotone_fail;
      prev = toks.size();
    }
  }
  double secs = seconds_since(t0);
  o.check(round_trip_fail == 0, std::to_string(round_trip_fail) + " round-trip mismatches");
  o.check(monotone_fail == 0, std::to_string(monotone_fail) + " monotonicity violations");
  o.check(secs < 30.0, "runtime");
  o.note("10000 lines x {0,10,100} ops, " + fmt("%.2fs", secs));
  return o;
}

// ---- 3 -------------------------------------------------------------------

Outcome bleu_oracle() {
  Outcome o;
  std::vector<std::string> h{"the cat sat on the mat .", "hello , world !", "x"};
  auto id = eval::bleu(h, h);
  o.check(id.score == 100.0, "identity " + fmt("%.17g", id.score));
  auto s = eval::bleu(std::vector<std::string>{"the the the the"}, std::vector<std::string>{"the cat"});
  o.check(std::abs(s.score - 25.0) < 1e-6, "clip/smooth case " + fmt("%.12g", s.score));
  auto bp = eval::bleu(std::vector<std::string>{"the"}, std::vector<std::string>{"the cat"});
  o.check(std::abs(bp.brevity_penalty - std::exp(-1.0)) < 1e-9, "brevity penalty " + fmt("%.12g", bp.brevity_penalty));
  auto in = text::read_lines(std::string(CTXMT_TEST_DATA) + "/tok13a.input");
  auto ex = text::read_lines(std::string(CTXMT_TEST_DATA) + "/tok13a.expected");
  std::size_t mismatches = in.size() == ex.size() ? 0 : 1;
  for (std::size_t i = 0; i < std::min(in.size(), ex.size()); ++i) mismatches += eval::tokenize_13a(in[i]) != ex[i];
  o.check(mismatches == 0 && !in.empty(), "13a golden lines " + std::to_string(mismatches));
  o.note("identity 100, clip case " + fmt("%.9f", s.score) + ", BP " + fmt("%.12f", bp.brevity_penalty) + ", " +
         std::to_string(in.size()) + " golden lines");
  return o;
}

// ---- 4 -------------------------------------------------------------------

Outcome statistics_oracle() {
  Outcome o;
  o.check(eval::mcnemar_exact(0, 0).p_value == 1.0, "McNemar (0,0)");
  o.check(eval::mcnemar_exact(10, 0).p_value == 0.001953125, "McNemar (10,0)");
  o.check(eval::mcnemar_exact(1, 1).p_value == 1.0, "McNemar (1,1)");
  std::vector<std::string> refs{"a b c d", "e f g h i", "j k", "l m n o", "p q r"};
  std::vector<std::string> other{"a b x d", "e f", "j k l", "x m n o", "p q"};
  std::vector<std::string> empty(refs.size(), "");
  auto same = eval::paired_bootstrap(other, other, refs, 1000, 5);
  auto dom = eval::paired_bootstrap(refs, empty, refs, 1000, 5);
  o.check(same.p_value == 1.0, "identical systems p " + fmt("%g", same.p_value));
  o.check(dom.p_value == 0.0, "dominant system p " + fmt("%g", dom.p_value));
  auto r1 = eval::paired_bootstrap(refs, other, refs, 1000, 5), r2 = eval::paired_bootstrap(refs, other, refs, 1000, 5);
  o.check(r1.p_value == r2.p_value, "bootstrap determinism");
  o.note("McNemar fixtures exact, bootstrap p(identical)=1, p(dominant)=0");
  return o;
}

// ---- 5 -------------------------------------------------------------------

Outcome gradient_check() {
  Outcome o;
  auto t0 = Clock::now();
  nn::ModelConfig c;
  c.d_model = 16;
  c.num_heads = 2;
  c.num_encoder_layers = 1;
  c.num_decoder_layers = 1;
  c.ff_dim = 32;
  c.max_sequence_length = 32;
  c.vocab_size = 20;
  c.dropout_rate = 0.0;
  nn::Transformer<double> m(c);
  m.init(2024);
  nn::EncodedExample ex{{5, 6, 7, 8, kSepId, 9, 10}, {11, 12, kSepId, 13, 14, 15}};
  nn::GradientCheckOptions opt;
  opt.sample_fraction = 0.01;
  opt.seed = 3;
  auto r = nn::gradient_check(m, ex, 1e-5, opt);
  double secs = seconds_since(t0);
  o.check(r.checked > 0, "no parameters sampled");
  o.check(r.max_relative_error < 1e-3, "max relative error");
  o.check(secs < 120.0, "runtime");
  o.note("max relative error " + fmt("%.3e", r.max_relative_error) + " over " + std::to_string(r.checked) +
         " parameters, " + fmt("%.2fs", secs));
  return o;
}

// ---- 6 -------------------------------------------------------------------

Outcome overfit() {
  Outcome o;
  nn::ModelConfig c;  // desk-scale defaults
  c.vocab_size = 24;
  std::vector<nn::EncodedExample> data{{{5, 6, 7, 8, 9}, {10, 11, 12, 13, 14, 15}}};
  nn::TrainConfig tc;
  tc.max_steps = 2000;
  tc.batch_size = 8;
  tc.learning_rate = 1e-3;
  nn::TrainResult res;
  std::size_t reached = 0;
  auto ck = nn::train(c, "overfit", data, tc, &res, [&](std::size_t step, double loss) {
    if (!reached && loss < 0.1) reached = step;
  });
  auto model = nn::model_from_checkpoint<float>(ck);
  auto corrupted = data[0].output;
  corrupted[3] = 20;
  double good = nn::score_sequence(model, data[0].input, data[0].output);
  double bad = nn::score_sequence(model, data[0].input, corrupted);
  o.check(reached > 0, "loss never below 0.1 nats/token");
  o.check(good > bad, "memorized output does not outrank the corruption");
  o.note("loss < 0.1 at step " + std::to_string(reached) + ", final " + fmt("%.4f", res.losses.back()) +
         ", score memorized " + fmt("%.3f", good) + " vs corrupted " + fmt("%.3f", bad));
  return o;
}

// ---- 7-10: synthetic experiment ------------------------------------------

struct System {
  ContextScheme scheme;
  nn::ModelCheckpoint ck;
  std::vector<eval::ContrastiveResult> results;
  std::map<PhenomenonCategory, double> acc;
  double seconds = 0;
};

struct Experiment {
  ParallelCorpus train, test;
  ContrastiveSet contrastive;
  BpeModel bpe;
  Vocab vocab;
  std::string hash;
  nn::ModelConfig model;
  nn::TrainConfig tc;
  std::size_t n = 4;
};

std::vector<eval::ContrastiveResult> only(const std::vector<eval::ContrastiveResult>& rs, PhenomenonCategory c) {
  return eval::filter_category(rs, c);
}

System train_and_score(const Experiment& e, SchemeVariant v, const ParallelCorpus& data,
                       const std::optional<nn::ModelCheckpoint>& init, const std::string& label) {
  System s;
  s.scheme = ContextScheme::make(v, e.n);
  auto t0 = Clock::now();
  auto ds = nn::encode_dataset(build_dataset(data, s.scheme, e.bpe), e.vocab);
  auto tc = e.tc;
  tc.init_from = init;
  nn::TrainResult res;
  s.ck = nn::train(e.model, e.hash, ds, tc, &res);
  auto model = nn::model_from_checkpoint<float>(s.ck);
  auto ev = eval::contrastive_accuracy(eval::model_scorer(model, e.vocab), e.contrastive, s.scheme, e.bpe);
  s.results = ev.results;
  for (const auto& [c, a] : eval::accuracy_by_category(ev.results)) s.acc[c] = a.accuracy();
  s.seconds = seconds_since(t0);
  std::printf("  trained %-18s %zu examples, final loss %.4f, %.0fs | overall %.3f", label.c_str(), ds.size(),
              res.losses.empty() ? 0.0 : res.losses.back(), s.seconds, ev.accuracy);
  for (auto c : kAllCategories) std::printf(" %s %.3f", std::string(to_string(c)).c_str(), s.acc[c]);
  std::printf("\n");
  std::fflush(stdout);
  return s;
}

std::string pts(double a) { return fmt("%.1f", 100 * a); }

}  // namespace

int main() {
  auto t_all = Clock::now();
  report(1, "scheme construction", scheme_oracle());
  report(2, "BPE round trip", bpe_round_trip());
  report(3, "BLEU oracle", bleu_oracle());
  report(4, "statistics oracles", statistics_oracle());
  report(5, "gradient check", gradient_check());
  report(6, "overfit sanity", overfit());

  std::size_t steps = 16000;
  if (const char* env = std::getenv("CTXMT_ACCEPTANCE_STEPS")) steps = std::strtoul(env, nullptr, 10);

  Experiment e;
  SyntheticConfig sc;
  sc.num_documents = 4000;
  sc.max_distance = 3;
  sc.rng_seed = 11;
  auto synth = generate_synthetic(sc);
  auto split = split_corpus(synth.corpus, {0.5, 0.05, 0.45}, 1);
  e.train = split.train;
  e.test = split.test;
  e.contrastive = restrict_to(synth.contrastive, e.test);
  e.bpe = learn_joint_bpe(e.train, 400);
  e.vocab = build_vocab(e.bpe);
  e.hash = vocab_hash(e.vocab);
  e.model.vocab_size = static_cast<int>(e.vocab.size());
  e.tc.max_steps = steps;
  e.tc.batch_size = 32;
  e.tc.learning_rate = 1e-3;
  std::map<PhenomenonCategory, std::size_t> per_cat;
  for (const auto& inst : e.contrastive) ++per_cat[inst.category];
  std::printf("synthetic experiment: %zu train / %zu test documents, %zu contrastive instances (", e.train.documents.size(),
              e.test.documents.size(), e.contrastive.size());
  for (auto c : kAllCategories) std::printf(" %s %zu", std::string(to_string(c)).c_str(), per_cat[c]);
  std::printf(" ), vocabulary %zu, %zu steps per model\n", e.vocab.size(), steps);

  auto base = train_and_score(e, SchemeVariant::SentenceLevel, e.train, std::nullopt, "sentence");
  std::map<SchemeVariant, System> sys;
  for (auto v : {SchemeVariant::NTo1, SchemeVariant::NToN, SchemeVariant::TgtNToN, SchemeVariant::SrcPlusTgtNToN})
    sys[v] = train_and_score(e, v, e.train, base.ck, std::string(variant_name(v)));
  sys[SchemeVariant::SentenceLevel] = base;
  const auto T = PhenomenonCategory::TargetOnly, S = PhenomenonCategory::SourceOnly, B = PhenomenonCategory::BothSides;
  auto acc = [&](SchemeVariant v, PhenomenonCategory c) { return sys[v].acc[c]; };
  using SV = SchemeVariant;

  // 7
  {
    Outcome o;
    o.check(acc(SV::TgtNToN, T) - acc(SV::NToN, T) >= 0.10, "TargetOnly tgt-nton - nton >= 10");
    o.check(acc(SV::SrcPlusTgtNToN, T) - acc(SV::NToN, T) >= 0.10, "TargetOnly src+tgt-nton - nton >= 10");
    o.check(std::abs(acc(SV::NTo1, T) - acc(SV::SentenceLevel, T)) <= 0.05, "TargetOnly |nto1 - sentence| <= 5");
    o.check(acc(SV::SrcPlusTgtNToN, S) >= acc(SV::TgtNToN, S), "SourceOnly src+tgt-nton >= tgt-nton");
    o.check(acc(SV::NToN, S) - acc(SV::SentenceLevel, S) >= 0.10, "SourceOnly nton - sentence >= 10");
    double best_b = 0;
    for (auto& [v, s] : sys) best_b = std::max(best_b, s.acc[B]);
    o.check(acc(SV::SrcPlusTgtNToN, B) >= best_b - 0.02, "BothSides src+tgt-nton within 2 of best");
    auto mc = eval::mcnemar(only(sys[SV::TgtNToN].results, T), only(sys[SV::NToN].results, T), 0.05);
    o.check(mc.significant, "McNemar TargetOnly tgt-nton vs nton");
    o.note("TargetOnly sent/nto1/nton/tgt/src+tgt " + pts(acc(SV::SentenceLevel, T)) + "/" + pts(acc(SV::NTo1, T)) +
           "/" + pts(acc(SV::NToN, T)) + "/" + pts(acc(SV::TgtNToN, T)) + "/" + pts(acc(SV::SrcPlusTgtNToN, T)));
    o.note("SourceOnly " + pts(acc(SV::SentenceLevel, S)) + "/" + pts(acc(SV::NTo1, S)) + "/" + pts(acc(SV::NToN, S)) +
           "/" + pts(acc(SV::TgtNToN, S)) + "/" + pts(acc(SV::SrcPlusTgtNToN, S)));
    o.note("BothSides " + pts(acc(SV::SentenceLevel, B)) + "/" + pts(acc(SV::NTo1, B)) + "/" + pts(acc(SV::NToN, B)) +
           "/" + pts(acc(SV::TgtNToN, B)) + "/" + pts(acc(SV::SrcPlusTgtNToN, B)));
    o.note("McNemar p " + fmt("%.3g", mc.p_value));
    report(7, "qualitative ordering", o);
  }

  // 8
  {
    Outcome o;
    double worst = 0;
    for (auto& [v, s] : sys) {
      double recombined = 0;
      for (const auto& b : eval::accuracy_by_distance(s.results)) recombined += b.share_percent * b.accuracy_percent / 1e4;
      worst = std::max(worst, std::abs(recombined - eval::overall(s.results).accuracy()));
    }
    o.check(worst <= 1e-9, "weighted recombination");
    auto st = eval::accuracy_by_distance(only(sys[SV::SrcPlusTgtNToN].results, T));
    auto nt = eval::accuracy_by_distance(only(sys[SV::NToN].results, T));
    std::string curve;
    for (std::size_t k = 0; k < st.size() && k < nt.size(); ++k) {
      curve += " d" + std::to_string(st[k].distance) + ": " + fmt("%.1f", st[k].accuracy_percent) + " vs " +
               fmt("%.1f", nt[k].accuracy_percent) + " (n=" + std::to_string(st[k].count) + ")";
      if (st[k].count >= 30) o.check(st[k].accuracy_percent >= nt[k].accuracy_percent, "non-crossing at d" + std::to_string(st[k].distance));
    }
    o.note("max recombination error " + fmt("%.1e", worst));
    o.note("TargetOnly src+tgt-nton vs nton by distance:" + curve);
    if (!st.empty() && !nt.empty()) {
      double deg_st = st.front().accuracy_percent - st.back().accuracy_percent;
      double deg_nt = nt.front().accuracy_percent - nt.back().accuracy_percent;
      bool margin = deg_st <= 0.5 * std::max(deg_nt, 0.0);
      o.note("degradation d1->d" + std::to_string(st.back().distance) + " src+tgt " + fmt("%.1f", deg_st) + " vs nton " +
             fmt("%.1f", deg_nt) + (margin ? " (half-degradation margin met)" : " (half-degradation margin not met)"));
    }
    report(8, "distance consistency", o);
  }

  // 9
  {
    auto run_bt = [&](std::shared_ptr<const ReverseTranslator> reverse, const std::string& tag) {
      auto noisy = std::make_shared<CharDropoutTranslator>(reverse, 0.1, 7);
      auto bt = back_translate(target_side(e.train), *noisy);
      std::map<SchemeVariant, System> out;
      for (auto v : {SV::NToN, SV::TgtNToN})
        out[v] = train_and_score(e, v, bt.corpus, base.ck, std::string(variant_name(v)) + " (BT " + tag + ")");
      double loss_n = acc(SV::NToN, T) - out[SV::NToN].acc[T];
      double loss_t = acc(SV::TgtNToN, T) - out[SV::TgtNToN].acc[T];
      return std::make_pair(loss_n, loss_t);
    };
    Outcome o;
    auto [ln, lt] = run_bt(std::make_shared<CopyTranslator>(), "copy");
    o.check(lt <= 0.5 * std::max(ln, 0.0), "tgt-nton TargetOnly loss <= half of nton's");
    o.note("copy reverse + char dropout 0.1: TargetOnly loss nton " + pts(ln) + ", tgt-nton " + pts(lt));
    auto [ln2, lt2] = run_bt(std::make_shared<LexiconTranslator>(SyntheticLexicon(sc.source_vocab_size, sc.target_vocab_size)),
                             "lexicon");
    o.note("for reference, word-level reverse lexicon + char dropout 0.1: nton " + pts(ln2) + ", tgt-nton " + pts(lt2) +
           (lt2 <= 0.5 * std::max(ln2, 0.0) ? " (ratio met)" : " (ratio not met)"));
    report(9, "back-translation asymmetry", o);
  }

  // 10
  {
    Outcome o;
    auto t0 = Clock::now();
    eval::DecodeOptions opt;
    opt.beam_size = 4;
    ParallelCorpus slice;
    slice.documents.assign(e.test.documents.begin(), e.test.documents.begin() + std::min<std::size_t>(250, e.test.documents.size()));
    std::set<std::string> target_only_docs;
    for (const auto& inst : e.contrastive)
      if (inst.category == PhenomenonCategory::TargetOnly) target_only_docs.insert(inst.doc_id);
    std::size_t first_diff = 0, later_diff = 0;
    for (auto v : {SV::SentenceLevel, SV::TgtNToN, SV::SrcPlusTgtNToN}) {
      auto model = nn::model_from_checkpoint<float>(sys[v].ck);
      auto rf = eval::evaluate_parallel(model, slice, sys[v].scheme, TargetContextMode::Reference, e.bpe, e.vocab, opt);
      auto mt = eval::evaluate_parallel(model, slice, sys[v].scheme, TargetContextMode::MachineTranslated, e.bpe, e.vocab, opt);
      std::size_t k = 0, firsts = 0, later = 0;
      std::vector<std::string> rf_rest, mt_rest, ref_rest;
      for (const auto& d : slice.documents)
        for (std::size_t i = 0; i < d.pairs.size(); ++i, ++k) {
          if (!target_only_docs.count(d.doc_id)) {
            rf_rest.push_back(rf.hypotheses[k]);
            mt_rest.push_back(mt.hypotheses[k]);
            ref_rest.push_back(rf.references[k]);
          }
          bool differ = rf.hypotheses[k] != mt.hypotheses[k];
          if (i == 0) firsts += differ;
          else later += differ;
        }
      first_diff += firsts;
      later_diff += later;
      if (v == SV::SentenceLevel) o.check(firsts + later == 0, "sentence-level hypotheses depend on the mode");
      else o.check(mt.bleu.score >= rf.bleu.score - 2.0, std::string(variant_name(v)) + " BLEU(MT) >= BLEU(RF) - 2");
      o.note(std::string(variant_name(v)) + " BLEU RF " + fmt("%.2f", rf.bleu.score) + " MT " + fmt("%.2f", mt.bleu.score) +
             ", differing hypotheses " + std::to_string(later) + ", without TargetOnly documents RF " +
             fmt("%.2f", eval::bleu(rf_rest, ref_rest).score) + " MT " + fmt("%.2f", eval::bleu(mt_rest, ref_rest).score));
    }
    o.check(first_diff == 0, "first sentences differ between modes");
    o.note(fmt("%.0fs", seconds_since(t0)));
    report(10, "RF/MT context", o);
  }

  double total = seconds_since(t_all);
  std::printf("total runtime %.1f min (budget 120)\n", total / 60);
  bool all = total < 7200;
  if (total >= 7200) std::printf("runtime budget exceeded\n");
  for (auto [id, ok] : g_summary) all &= ok;
  std::printf("%s\n", all ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL");
  return all ? 0 : 1;
}
