#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ctxmt/corpus.hpp"
#include "ctxmt/error.hpp"
#include "ctxmt/text.hpp"

namespace ctxmt {

inline constexpr std::string_view kPad = "<PAD>";
inline constexpr std::string_view kUnk = "<UNK>";
inline constexpr std::string_view kBos = "<BOS>";
inline constexpr std::string_view kEos = "<EOS>";
inline constexpr std::string_view kSep = "<SEP>";

enum ReservedId : int { kPadId = 0, kUnkId = 1, kBosId = 2, kEosId = 3, kSepId = 4 };

inline const std::vector<std::string>& reserved_symbols() {
  static const std::vector<std::string> kReserved{std::string(kPad), std::string(kUnk),
                                                  std::string(kBos), std::string(kEos),
                                                  std::string(kSep)};
  return kReserved;
}

inline bool is_reserved(std::string_view s) {
  return s == kPad || s == kUnk || s == kBos || s == kEos || s == kSep;
}

using TokenSequence = std::vector<std::string>;
using SymbolPair = std::pair<std::string, std::string>;
using Vocab = std::map<std::string, int>;

struct BpeModel {
  std::vector<SymbolPair> merges;       // in learned order
  std::vector<std::string> alphabet;    // sorted base characters
  std::string continuation_marker = "@@";

  // Reserved symbols first, then every base character and merge output, each
  // in final and continuation form.
  std::vector<std::string> vocabulary() const {
    std::vector<std::string> out = reserved_symbols();
    std::set<std::string> seen(out.begin(), out.end());
    auto add = [&](const std::string& s) {
      for (auto form : {s, s + continuation_marker})
        if (seen.insert(form).second) out.push_back(form);
    };
    for (const auto& c : alphabet) add(c);
    for (const auto& [l, r] : merges) add(l + r);
    return out;
  }
};

namespace detail {

inline std::vector<std::string> merge_word(const std::vector<std::string>& word, const SymbolPair& p) {
  std::vector<std::string> out;
  out.reserve(word.size());
  for (std::size_t i = 0; i < word.size();) {
    if (i + 1 < word.size() && word[i] == p.first && word[i + 1] == p.second) {
      out.push_back(word[i] + word[i + 1]);
      i += 2;
    } else {
      out.push_back(word[i]);
      ++i;
    }
  }
  return out;
}

// Incremental pair statistics over a weighted word list.
class PairStats {
 public:
  void add_word(std::size_t idx, const std::vector<std::string>& w, long freq, long sign) {
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      SymbolPair p{w[i], w[i + 1]};
      adjust(p, sign * freq);
      if (sign > 0) where_[p].insert(idx);
    }
  }

  // Highest count, ties to the lexicographically smallest pair.
  bool best(SymbolPair& out, long& count) const {
    if (queue_.empty()) return false;
    count = -queue_.begin()->first;
    out = queue_.begin()->second;
    return true;
  }

  std::vector<std::size_t> words_with(const SymbolPair& p) const {
    auto it = where_.find(p);
    if (it == where_.end()) return {};
    return {it->second.begin(), it->second.end()};
  }

 private:
  void adjust(const SymbolPair& p, long delta) {
    long& c = counts_[p];
    if (c > 0) queue_.erase({-c, p});
    c += delta;
    if (c > 0) queue_.insert({-c, p});
    else counts_.erase(p);
  }

  std::map<SymbolPair, long> counts_;
  std::set<std::pair<long, SymbolPair>> queue_;
  std::map<SymbolPair, std::set<std::size_t>> where_;
};

}  // namespace detail

// Greedy joint BPE over the pooled word multiset of both corpus sides.
inline BpeModel learn_joint_bpe(const ParallelCorpus& corpus, std::size_t num_ops) {
  if (corpus.empty()) throw DataError("cannot learn BPE on an empty corpus");
  std::map<std::string, long> word_freq;
  for (const auto& doc : corpus.documents)
    for (const auto& p : doc.pairs)
      for (const auto* side : {&p.source, &p.target})
        for (auto& w : text::split_whitespace(*side))
          if (!is_reserved(w)) ++word_freq[w];

  BpeModel model;
  std::set<std::string> alphabet;
  std::vector<std::vector<std::string>> words;
  std::vector<long> freqs;
  for (const auto& [w, f] : word_freq) {
    auto chars = text::utf8_chars(w);
    alphabet.insert(chars.begin(), chars.end());
    words.push_back(std::move(chars));
    freqs.push_back(f);
  }
  model.alphabet.assign(alphabet.begin(), alphabet.end());

  detail::PairStats stats;
  for (std::size_t i = 0; i < words.size(); ++i) stats.add_word(i, words[i], freqs[i], +1);

  for (std::size_t op = 0; op < num_ops; ++op) {
    SymbolPair best;
    long count = 0;
    if (!stats.best(best, count) || count < 2) break;
    model.merges.push_back(best);
    for (std::size_t idx : stats.words_with(best)) {
      auto merged = detail::merge_word(words[idx], best);
      if (merged.size() == words[idx].size()) continue;
      stats.add_word(idx, words[idx], freqs[idx], -1);
      words[idx] = std::move(merged);
      stats.add_word(idx, words[idx], freqs[idx], +1);
    }
  }
  return model;
}

// Segments one word with the learned merges; lowest-ranked pair first.
class BpeSegmenter {
 public:
  explicit BpeSegmenter(const BpeModel& model) : model_(model) {
    for (std::size_t r = 0; r < model.merges.size(); ++r) rank_.emplace(model.merges[r], r);
    known_.insert(model.alphabet.begin(), model.alphabet.end());
  }

  void segment_word(const std::string& word, TokenSequence& out) const {
    std::vector<std::string> sym = text::utf8_chars(word);
    while (sym.size() > 1) {
      std::size_t best_rank = SIZE_MAX;
      const SymbolPair* best = nullptr;
      for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
        auto it = rank_.find({sym[i], sym[i + 1]});
        if (it != rank_.end() && it->second < best_rank) {
          best_rank = it->second;
          best = &it->first;
        }
      }
      if (!best) break;
      sym = detail::merge_word(sym, *best);
    }
    for (std::size_t i = 0; i < sym.size(); ++i) {
      if (sym[i].size() <= 4 && text::utf8_chars(sym[i]).size() == 1 && !known_.count(sym[i])) {
        out.emplace_back(kUnk);
        continue;
      }
      out.push_back(i + 1 < sym.size() ? sym[i] + model_.continuation_marker : sym[i]);
    }
  }

  TokenSequence apply(std::string_view line) const {
    TokenSequence out;
    for (const auto& w : text::split_whitespace(line)) {
      if (is_reserved(w)) out.push_back(w);
      else segment_word(w, out);
    }
    return out;
  }

 private:
  const BpeModel& model_;
  std::map<SymbolPair, std::size_t> rank_;
  std::set<std::string> known_;
};

inline TokenSequence apply_bpe(const BpeModel& model, std::string_view line) {
  return BpeSegmenter(model).apply(line);
}

inline std::string decode_bpe(const TokenSequence& tokens, std::string_view marker = "@@") {
  std::string out;
  bool glue = false;  // previous token carried the continuation marker
  for (const auto& t : tokens) {
    if (!out.empty() && !glue) out += ' ';
    if (!is_reserved(t) && t.size() > marker.size() &&
        std::string_view(t).substr(t.size() - marker.size()) == marker) {
      out.append(t, 0, t.size() - marker.size());
      glue = true;
    } else {
      out += t;
      glue = false;
    }
  }
  return out;
}

inline Vocab build_vocab(const BpeModel& model) {
  Vocab v;
  int id = 0;
  for (const auto& s : model.vocabulary()) v.emplace(s, id++);
  return v;
}

inline std::string render_vocab(const Vocab& vocab) {
  std::vector<std::pair<int, std::string>> by_id;
  for (const auto& [s, id] : vocab) by_id.emplace_back(id, s);
  std::sort(by_id.begin(), by_id.end());
  std::string out;
  for (const auto& [id, s] : by_id) out += s + "\t" + std::to_string(id) + "\n";
  return out;
}

inline std::string vocab_hash(const Vocab& vocab) { return text::fnv1a_hex(render_vocab(vocab)); }

inline std::string render_merges(const BpeModel& model) {
  std::string out = "#version: ctxmt-bpe 1 marker=" + model.continuation_marker + "\n";
  for (const auto& [l, r] : model.merges) out += l + " " + r + "\n";
  return out;
}

inline void save_bpe(const BpeModel& model, const std::string& merges_path, const std::string& vocab_path) {
  text::write_file(merges_path, render_merges(model));
  text::write_file(vocab_path, render_vocab(build_vocab(model)));
}

inline Vocab load_vocab(const std::string& path) {
  Vocab v;
  for (const auto& line : text::read_lines(path)) {
    if (line.empty()) continue;
    auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw DataError("malformed vocabulary line in " + path);
    v.emplace(line.substr(0, tab), std::stoi(line.substr(tab + 1)));
  }
  return v;
}

// The alphabet is recovered from the vocabulary's single-character symbols.
inline BpeModel load_bpe(const std::string& merges_path, const std::string& vocab_path) {
  BpeModel model;
  auto lines = text::read_lines(merges_path);
  if (lines.empty() || lines[0].rfind("#version", 0) != 0)
    throw DataError(merges_path + ": missing version header");
  if (auto m = lines[0].find("marker="); m != std::string::npos)
    model.continuation_marker = lines[0].substr(m + 7);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto parts = text::split_whitespace(lines[i]);
    if (parts.size() != 2) throw DataError(merges_path + ": malformed merge on line " + std::to_string(i + 1));
    model.merges.emplace_back(parts[0], parts[1]);
  }
  std::set<std::string> alphabet;
  for (const auto& [s, id] : load_vocab(vocab_path))
    if (!is_reserved(s) && text::utf8_chars(s).size() == 1) alphabet.insert(s);
  model.alphabet.assign(alphabet.begin(), alphabet.end());
  return model;
}

inline std::vector<int> encode_ids(const TokenSequence& tokens, const Vocab& vocab) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    auto it = vocab.find(t);
    ids.push_back(it == vocab.end() ? kUnkId : it->second);
  }
  return ids;
}

inline TokenSequence decode_ids(const std::vector<int>& ids, const std::vector<std::string>& id_to_symbol) {
  TokenSequence out;
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_symbol.size()) out.emplace_back(kUnk);
    else out.push_back(id_to_symbol[static_cast<std::size_t>(id)]);
  }
  return out;
}

inline std::vector<std::string> id_to_symbol(const Vocab& vocab) {
  std::vector<std::string> out(vocab.size());
  for (const auto& [s, id] : vocab) out.at(static_cast<std::size_t>(id)) = s;
  return out;
}

}  // namespace ctxmt
