#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxmt/bpe.hpp"
#include "ctxmt/corpus.hpp"
#include "ctxmt/error.hpp"
#include "ctxmt/text.hpp"

namespace ctxmt {

enum class SchemeVariant { SentenceLevel, NTo1, TgtNTo1, NToN, TgtNToN, SrcPlusTgtNToN, TgtPlusSrcNToN };

inline constexpr SchemeVariant kAllVariants[] = {
    SchemeVariant::SentenceLevel, SchemeVariant::NTo1,           SchemeVariant::TgtNTo1,
    SchemeVariant::NToN,          SchemeVariant::TgtNToN,        SchemeVariant::SrcPlusTgtNToN,
    SchemeVariant::TgtPlusSrcNToN};

inline std::string_view variant_name(SchemeVariant v) {
  switch (v) {
    case SchemeVariant::SentenceLevel: return "sentence";
    case SchemeVariant::NTo1: return "nto1";
    case SchemeVariant::TgtNTo1: return "tgt-nto1";
    case SchemeVariant::NToN: return "nton";
    case SchemeVariant::TgtNToN: return "tgt-nton";
    case SchemeVariant::SrcPlusTgtNToN: return "src+tgt-nton";
    case SchemeVariant::TgtPlusSrcNToN: return "tgt+src-nton";
  }
  return "?";
}

inline SchemeVariant parse_variant(std::string_view name) {
  for (auto v : kAllVariants)
    if (variant_name(v) == name) return v;
  throw ConfigError("unknown scheme '" + std::string(name) +
                    "' (expected sentence, nto1, tgt-nto1, nton, tgt-nton, src+tgt-nton, tgt+src-nton)");
}

struct ContextScheme {
  SchemeVariant variant = SchemeVariant::SentenceLevel;
  std::size_t n = 1;  // window size, current sentence included

  ContextScheme() = default;
  ContextScheme(SchemeVariant v, std::size_t window) : variant(v), n(window) {
    if (v == SchemeVariant::SentenceLevel && window != 1)
      throw ConfigError("sentence-level scheme requires n == 1");
    if (v != SchemeVariant::SentenceLevel && window < 2)
      throw ConfigError(std::string(variant_name(v)) + " requires n >= 2");
  }

  // Sentence-level ignores the requested window.
  static ContextScheme make(SchemeVariant v, std::size_t window) {
    return {v, v == SchemeVariant::SentenceLevel ? 1 : window};
  }

  bool source_context() const {
    return variant == SchemeVariant::NTo1 || variant == SchemeVariant::NToN ||
           variant == SchemeVariant::SrcPlusTgtNToN || variant == SchemeVariant::TgtPlusSrcNToN;
  }
  // Target-language context prepended on the input side.
  bool target_context_in_input() const {
    return variant == SchemeVariant::TgtNTo1 || variant == SchemeVariant::TgtNToN ||
           variant == SchemeVariant::SrcPlusTgtNToN || variant == SchemeVariant::TgtPlusSrcNToN;
  }
  bool multi_output() const {
    return variant == SchemeVariant::NToN || variant == SchemeVariant::TgtNToN ||
           variant == SchemeVariant::SrcPlusTgtNToN || variant == SchemeVariant::TgtPlusSrcNToN;
  }
  // Whether the assembled input depends on which target history is used.
  bool uses_target_history() const { return target_context_in_input() || multi_output(); }

  std::string name() const { return std::string(variant_name(variant)); }

  bool operator==(const ContextScheme&) const = default;
};

enum class TargetContextMode { Reference, MachineTranslated };

inline std::string_view mode_name(TargetContextMode m) {
  return m == TargetContextMode::Reference ? "rf" : "mt";
}

inline TargetContextMode parse_mode(std::string_view s) {
  if (s == "rf") return TargetContextMode::Reference;
  if (s == "mt") return TargetContextMode::MachineTranslated;
  throw ConfigError("unknown target-context mode '" + std::string(s) + "' (expected rf or mt)");
}

struct TrainingExample {
  TokenSequence input;
  TokenSequence output;
  std::string doc_id;
  std::size_t sentence_index = 0;
  std::size_t context_size_used = 0;
};

namespace detail {

inline void append_joined(TokenSequence& out, std::span<const TokenSequence> sentences) {
  for (const auto& s : sentences) {
    if (!out.empty()) out.emplace_back(kSep);
    out.insert(out.end(), s.begin(), s.end());
  }
}

}  // namespace detail

// Input side of a scheme from pre-tokenized context (oldest first, already cut
// to the window) and the current source sentence.
inline TokenSequence compose_input(const ContextScheme& scheme, std::span<const TokenSequence> source_ctx,
                                   std::span<const TokenSequence> target_ctx, const TokenSequence& current) {
  TokenSequence out;
  switch (scheme.variant) {
    case SchemeVariant::SentenceLevel:
      break;
    case SchemeVariant::NTo1:
    case SchemeVariant::NToN:
      detail::append_joined(out, source_ctx);
      break;
    case SchemeVariant::TgtNTo1:
    case SchemeVariant::TgtNToN:
      detail::append_joined(out, target_ctx);
      break;
    case SchemeVariant::SrcPlusTgtNToN:
      detail::append_joined(out, source_ctx);
      detail::append_joined(out, target_ctx);
      break;
    case SchemeVariant::TgtPlusSrcNToN:
      detail::append_joined(out, target_ctx);
      detail::append_joined(out, source_ctx);
      break;
  }
  detail::append_joined(out, std::span<const TokenSequence>(&current, 1));
  return out;
}

inline TokenSequence compose_output(const ContextScheme& scheme, std::span<const TokenSequence> target_ctx,
                                    const TokenSequence& current_target) {
  TokenSequence out;
  if (scheme.multi_output()) detail::append_joined(out, target_ctx);
  detail::append_joined(out, std::span<const TokenSequence>(&current_target, 1));
  return out;
}

// Per-document cache of segmented sentences.
struct TokenizedDocument {
  std::string doc_id;
  std::vector<TokenSequence> source, target;
};

inline TokenizedDocument tokenize_document(const Document& doc, const BpeSegmenter& seg) {
  TokenizedDocument td{doc.doc_id, {}, {}};
  for (const auto& p : doc.pairs) {
    td.source.push_back(seg.apply(p.source));
    td.target.push_back(seg.apply(p.target));
  }
  return td;
}

inline TrainingExample build_example(const TokenizedDocument& doc, std::size_t i, const ContextScheme& scheme) {
  if (i >= doc.source.size())
    throw DataError("sentence index " + std::to_string(i) + " out of range for document " + doc.doc_id);
  std::size_t c = std::min(scheme.n - 1, i);
  std::span<const TokenSequence> src_ctx(doc.source.data() + (i - c), c);
  std::span<const TokenSequence> tgt_ctx(doc.target.data() + (i - c), c);
  TrainingExample ex;
  ex.input = compose_input(scheme, src_ctx, tgt_ctx, doc.source[i]);
  ex.output = compose_output(scheme, tgt_ctx, doc.target[i]);
  ex.doc_id = doc.doc_id;
  ex.sentence_index = i;
  ex.context_size_used = c;
  return ex;
}

inline TrainingExample build_example(const Document& doc, std::size_t i, const ContextScheme& scheme,
                                     const BpeModel& bpe) {
  if (i >= doc.pairs.size())
    throw DataError("sentence index " + std::to_string(i) + " out of range for document " + doc.doc_id);
  return build_example(tokenize_document(doc, BpeSegmenter(bpe)), i, scheme);
}

inline std::vector<TrainingExample> build_dataset(const ParallelCorpus& corpus, const ContextScheme& scheme,
                                                  const BpeModel& bpe) {
  if (corpus.empty()) throw DataError("cannot build a dataset from an empty corpus");
  BpeSegmenter seg(bpe);
  std::vector<TrainingExample> out;
  out.reserve(corpus.num_pairs());
  for (const auto& doc : corpus.documents) {
    auto td = tokenize_document(doc, seg);
    for (std::size_t i = 0; i < td.source.size(); ++i) out.push_back(build_example(td, i, scheme));
  }
  return out;
}

// Scheme-shaped input for sentence i of a document at inference time. The
// histories hold every earlier sentence of the document, oldest first.
inline TokenSequence assemble_inference_input(const ContextScheme& scheme, TargetContextMode mode,
                                              const std::vector<std::string>& source_history,
                                              const std::vector<std::string>& reference_target_history,
                                              const std::vector<std::string>& mt_target_history,
                                              const std::string& current_source, const BpeModel& bpe) {
  BpeSegmenter seg(bpe);
  std::size_t c = std::min(scheme.n - 1, source_history.size());
  const bool mt = mode == TargetContextMode::MachineTranslated && scheme.target_context_in_input();
  const auto& tgt_hist = mt ? mt_target_history : reference_target_history;
  if (scheme.target_context_in_input() && tgt_hist.size() < c)
    throw DataError(std::string(mt ? "machine-translated" : "reference") + " target history has " +
                    std::to_string(tgt_hist.size()) + " sentences, scheme needs " + std::to_string(c));
  std::vector<TokenSequence> src_ctx, tgt_ctx;
  for (std::size_t k = source_history.size() - c; k < source_history.size(); ++k)
    src_ctx.push_back(seg.apply(source_history[k]));
  if (scheme.target_context_in_input())
    for (std::size_t k = tgt_hist.size() - c; k < tgt_hist.size(); ++k) tgt_ctx.push_back(seg.apply(tgt_hist[k]));
  else
    tgt_ctx.resize(c);
  return compose_input(scheme, src_ctx, tgt_ctx, seg.apply(current_source));
}

// Final-sentence text from a scheme-shaped output.
inline std::string extract_translation(const TokenSequence& output, const ContextScheme& scheme,
                                       std::string_view marker = "@@") {
  if (!scheme.multi_output()) return decode_bpe(output, marker);
  auto last = std::find(output.rbegin(), output.rend(), std::string(kSep));
  if (last == output.rend()) return decode_bpe(output, marker);
  TokenSequence tail(last.base(), output.end());
  return decode_bpe(tail, marker);
}

inline std::size_t count_sep(const TokenSequence& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), std::string(kSep)));
}

inline void write_dataset(const std::vector<TrainingExample>& data, const std::string& input_path,
                          const std::string& output_path) {
  std::vector<std::string> in, out;
  in.reserve(data.size());
  out.reserve(data.size());
  for (const auto& ex : data) {
    in.push_back(text::join(ex.input));
    out.push_back(text::join(ex.output));
  }
  text::write_lines(input_path, in);
  text::write_lines(output_path, out);
}

inline std::vector<TrainingExample> read_dataset(const std::string& input_path, const std::string& output_path) {
  auto in = text::read_lines(input_path);
  auto out = text::read_lines(output_path);
  if (in.size() != out.size()) throw DataError("dataset files " + input_path + " / " + output_path + " differ in length");
  std::vector<TrainingExample> data(in.size());
  for (std::size_t k = 0; k < in.size(); ++k) {
    data[k].input = text::split_whitespace(in[k]);
    data[k].output = text::split_whitespace(out[k]);
    data[k].sentence_index = k;
  }
  return data;
}

}  // namespace ctxmt
