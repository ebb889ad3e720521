#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ctxmt/error.hpp"
#include "ctxmt/text.hpp"

namespace ctxmt {

// Where the information needed to resolve an ambiguity lives.
enum class PhenomenonCategory { TargetOnly, BothSides, SourceOnly, Combined };

inline constexpr PhenomenonCategory kAllCategories[] = {
    PhenomenonCategory::TargetOnly, PhenomenonCategory::BothSides,
    PhenomenonCategory::SourceOnly, PhenomenonCategory::Combined};

inline std::string_view to_string(PhenomenonCategory c) {
  switch (c) {
    case PhenomenonCategory::TargetOnly: return "TargetOnly";
    case PhenomenonCategory::BothSides: return "BothSides";
    case PhenomenonCategory::SourceOnly: return "SourceOnly";
    case PhenomenonCategory::Combined: return "Combined";
  }
  return "?";
}

inline PhenomenonCategory parse_category(std::string_view s) {
  for (auto c : kAllCategories)
    if (to_string(c) == s) return c;
  throw DataError("unknown phenomenon category '" + std::string(s) + "'");
}

struct ContrastiveInstance {
  std::vector<std::string> source_context;  // oldest first
  std::vector<std::string> target_context;
  std::string source_current;
  std::vector<std::string> candidates;
  std::size_t correct_index = 0;
  std::size_t distance = 1;
  PhenomenonCategory category = PhenomenonCategory::TargetOnly;
  // Location in the generating corpus; empty/0 for externally loaded sets.
  std::string doc_id;
  std::size_t sentence_index = 0;
};

using ContrastiveSet = std::vector<ContrastiveInstance>;

inline void validate(const ContrastiveInstance& inst) {
  if (inst.candidates.size() < 2) throw DataError("contrastive instance needs >= 2 candidates");
  if (inst.correct_index >= inst.candidates.size()) throw DataError("correct index out of range");
  if (inst.source_context.size() != inst.target_context.size())
    throw DataError("source/target context lengths differ");
  if (inst.distance < 1 || inst.distance > inst.source_context.size())
    throw DataError("distance outside the context window");
}

inline nlohmann::json to_json(const ContrastiveInstance& inst) {
  nlohmann::json j;
  j["src_ctx"] = inst.source_context;
  j["tgt_ctx"] = inst.target_context;
  j["src"] = inst.source_current;
  j["candidates"] = inst.candidates;
  j["correct"] = inst.correct_index;
  j["distance"] = inst.distance;
  j["category"] = std::string(to_string(inst.category));
  if (!inst.doc_id.empty()) {
    j["doc"] = inst.doc_id;
    j["index"] = inst.sentence_index;
  }
  return j;
}

inline ContrastiveInstance instance_from_json(const nlohmann::json& j) {
  ContrastiveInstance inst;
  try {
    inst.source_context = j.at("src_ctx").get<std::vector<std::string>>();
    inst.target_context = j.at("tgt_ctx").get<std::vector<std::string>>();
    inst.source_current = j.at("src").get<std::string>();
    inst.candidates = j.at("candidates").get<std::vector<std::string>>();
    inst.correct_index = j.at("correct").get<std::size_t>();
    inst.distance = j.at("distance").get<std::size_t>();
    inst.category = parse_category(j.at("category").get<std::string>());
    if (j.contains("doc")) inst.doc_id = j["doc"].get<std::string>();
    if (j.contains("index")) inst.sentence_index = j["index"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed contrastive instance: ") + e.what());
  }
  validate(inst);
  return inst;
}

inline std::string render_contrastive_set(const ContrastiveSet& set) {
  std::string out;
  for (const auto& inst : set) {
    out += to_json(inst).dump();
    out += '\n';
  }
  return out;
}

inline void write_contrastive_set(const ContrastiveSet& set, const std::string& path) {
  text::write_file(path, render_contrastive_set(set));
}

inline ContrastiveSet load_contrastive_set(const std::string& path) {
  ContrastiveSet set;
  std::size_t line_no = 0;
  for (const auto& line : text::read_lines(path)) {
    ++line_no;
    if (text::is_blank(line)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    set.push_back(instance_from_json(j));
  }
  return set;
}

}  // namespace ctxmt
