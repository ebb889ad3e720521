#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "ctxmt/bpe.hpp"
#include "ctxmt/contextize.hpp"
#include "ctxmt/corpus.hpp"
#include "ctxmt/error.hpp"
#include "ctxmt/eval/bleu.hpp"
#include "ctxmt/nn/inference.hpp"

namespace ctxmt::eval {

struct DecodeOptions {
  std::size_t beam_size = 4;
  std::size_t max_len = 0;  // 0: room for the copied context plus 2 * current length + 10
};

struct ParallelEvaluation {
  BleuResult bleu;
  std::vector<std::string> hypotheses;  // one per sentence, corpus order
  std::vector<std::string> references;
};

// Decodes one scheme-shaped input and returns the current-sentence text, cut
// to 2 * current source length + 10 tokens so machine-translated context
// cannot grow from sentence to sentence.
template <typename T>
std::string decode_current(const nn::Transformer<T>& model, const TokenSequence& input, const ContextScheme& scheme,
                           const Vocab& vocab, const std::vector<std::string>& symbols, const DecodeOptions& opt,
                           const std::string& marker) {
  const std::string sep(kSep);
  auto last_sep = std::find(input.rbegin(), input.rend(), sep);
  std::size_t current = static_cast<std::size_t>(last_sep - input.rbegin());
  std::size_t budget = 2 * current + 10;
  std::size_t max_len = opt.max_len;
  if (!max_len) {
    max_len = budget + (scheme.multi_output() ? input.size() - current : 0);
    max_len = std::min(max_len, static_cast<std::size_t>(model.config().max_sequence_length) - 1);
  }
  auto hyp = nn::translate(model, encode_ids(input, vocab), opt.beam_size, max_len);
  TokenSequence out = decode_ids(nn::strip_eos(hyp.tokens), symbols);
  if (scheme.multi_output()) {
    auto it = std::find(out.rbegin(), out.rend(), sep);
    out.erase(out.begin(), it.base());
  }
  if (out.size() > budget) out.resize(budget);
  return decode_bpe(out, marker);
}

// Translates every document left to right. In MachineTranslated mode the
// target context comes from the model's own earlier outputs.
template <typename T>
ParallelEvaluation evaluate_parallel(const nn::Transformer<T>& model, const ParallelCorpus& corpus,
                                     const ContextScheme& scheme, TargetContextMode mode, const BpeModel& bpe,
                                     const Vocab& vocab, const DecodeOptions& opt = {}) {
  if (static_cast<std::size_t>(model.config().vocab_size) != vocab.size())
    throw VocabMismatchError("model vocabulary size " + std::to_string(model.config().vocab_size) +
                             " differs from BPE vocabulary size " + std::to_string(vocab.size()));
  auto symbols = id_to_symbol(vocab);
  ParallelEvaluation ev;
  for (const auto& doc : corpus.documents) {
    std::vector<std::string> src_hist, ref_hist, mt_hist;
    for (const auto& pair : doc.pairs) {
      std::string hyp;
      try {
        auto input = assemble_inference_input(scheme, mode, src_hist, ref_hist, mt_hist, pair.source, bpe);
        hyp = decode_current(model, input, scheme, vocab, symbols, opt, bpe.continuation_marker);
      } catch (const Error& e) {
        throw DataError("decoding failed at document " + doc.doc_id + ", sentence " + std::to_string(pair.index) +
                        ": " + e.what());
      }
      src_hist.push_back(pair.source);
      ref_hist.push_back(pair.target);
      mt_hist.push_back(hyp);
      ev.hypotheses.push_back(hyp);
      ev.references.push_back(pair.target);
    }
  }
  ev.bleu = bleu(ev.hypotheses, ev.references);
  return ev;
}

}  // namespace ctxmt::eval
