#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfa/evaluation.hpp"

namespace rfa {

// Keyword tables driving extract_attributes(). Every phrase is matched on
// whole lower-cased tokens, so "co-channel" and "co channel" are the same
// phrase and "low" never matches inside "follow".
struct Lexicon {
  struct Keyword {
    std::string phrase;
    std::string value;  // attribute class, or family for labels
    bool operator==(const Keyword&) const = default;
  };
  struct TechLabel {
    std::string label;  // canonical spelling reported as raw_tech_label
    std::vector<std::string> phrases;
    std::string family;
    bool operator==(const TechLabel&) const = default;
  };

  std::vector<std::string> no_signal_phrases;
  std::vector<Keyword> temporal;
  std::vector<Keyword> occupancy;   // word forms; a parsed bandwidth wins
  std::vector<std::string> snr_anchors;
  std::vector<Keyword> snr_levels;  // only read next to an anchor
  std::vector<std::string> isolation_negations;  // "no overlap" -> isolated
  std::vector<Keyword> isolation;
  std::vector<std::string> singular_nouns;  // a lone "signal" implies one emitter
  std::vector<std::string> no_tech_phrases;
  std::vector<Keyword> family_words;
  std::vector<TechLabel> tech_labels;
  std::vector<std::string> location_words;   // "at 98 MHz" is a position, not a width
  std::vector<std::string> bandwidth_words;
  std::vector<std::string> settings_phrases;
  std::vector<std::string> grounded_words;

  static const Lexicon& defaults();
  static Lexicon load(const std::string& path);

  bool operator==(const Lexicon&) const = default;
};

void to_json(nlohmann::json& j, const Lexicon::Keyword& k);
void from_json(const nlohmann::json& j, Lexicon::Keyword& k);
void to_json(nlohmann::json& j, const Lexicon::TechLabel& t);
void from_json(const nlohmann::json& j, Lexicon::TechLabel& t);
void to_json(nlohmann::json& j, const Lexicon& lex);
void from_json(const nlohmann::json& j, Lexicon& lex);

// Deterministic keyword and number extraction. Never throws on content; the
// worst case is an all-unstated extraction.
AttributeExtraction extract_attributes(std::string_view response_text,
                                       const Lexicon& lexicon = Lexicon::defaults());

}  // namespace rfa
