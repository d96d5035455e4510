#include "rfa/extract.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>

#include "rfa/error.hpp"
#include "rfa/util.hpp"

namespace rfa {
namespace {

struct Token {
  std::string text;
  int clause = 0;
};

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

// Lower-cased alphanumeric runs, split where letters meet digits ("20MHz" ->
// "20", "mhz"). A '.' between digits stays in the number. Clause ids advance
// at punctuation that separates list items.
std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::string cur;
  int clause = 0;
  auto flush = [&] {
    if (!cur.empty()) out.push_back({std::move(cur), clause});
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
    const bool between_digits = i > 0 && i + 1 < text.size() && is_digit(text[i - 1]) && is_digit(text[i + 1]);
    if (is_alpha(c) || is_digit(c)) {
      if (!cur.empty() && (is_digit(c) != is_digit(cur.back())) && cur.back() != '.') flush();
      cur.push_back(c);
    } else if (c == '.' && between_digits && !cur.empty()) {
      cur.push_back(c);
    } else {
      flush();
      if (c == ';' || c == ',' || c == '(' || c == ')' || c == '.' || c == '!' || c == '?' || c == '\n' ||
          c == '+') {
        ++clause;
      }
    }
  }
  flush();
  return out;
}

std::vector<std::string> phrase_tokens(std::string_view phrase) {
  std::vector<std::string> out;
  for (auto& t : tokenize(phrase)) out.push_back(std::move(t.text));
  return out;
}

bool matches_at(const std::vector<Token>& toks, std::size_t pos, const std::vector<std::string>& phrase,
                const std::vector<bool>* masked) {
  if (phrase.empty() || pos + phrase.size() > toks.size()) return false;
  for (std::size_t k = 0; k < phrase.size(); ++k) {
    const auto& t = toks[pos + k];
    if (t.text != phrase[k] || t.clause != toks[pos].clause) return false;
    if (masked != nullptr && (*masked)[pos + k]) return false;
  }
  return true;
}

struct Match {
  std::size_t pos = std::numeric_limits<std::size_t>::max();
  std::size_t len = 0;
  std::size_t index = 0;  // which entry of the searched list
  bool found() const noexcept { return len > 0; }
};

// Earliest match; ties go to the longer phrase.
template <typename PhraseOf, typename List>
Match first_match(const std::vector<Token>& toks, const List& list, PhraseOf phrase_of,
                  const std::vector<bool>* masked = nullptr) {
  Match best;
  for (std::size_t idx = 0; idx < list.size(); ++idx) {
    for (const auto& phrase_text : phrase_of(list[idx])) {
      const auto phrase = phrase_tokens(phrase_text);
      for (std::size_t pos = 0; pos < toks.size() && pos <= best.pos; ++pos) {
        if (!matches_at(toks, pos, phrase, masked)) continue;
        if (pos < best.pos || phrase.size() > best.len) best = {pos, phrase.size(), idx};
        break;
      }
    }
  }
  return best;
}

auto single = [](const std::string& s) { return std::vector<std::string>{s}; };
auto keyword_phrase = [](const Lexicon::Keyword& k) { return std::vector<std::string>{k.phrase}; };
auto label_phrases = [](const Lexicon::TechLabel& t) { return t.phrases; };

bool contains_any(const std::vector<Token>& toks, const std::vector<std::string>& phrases) {
  return first_match(toks, phrases, single).found();
}

bool in_list(const std::vector<std::string>& list, const std::string& word) {
  return std::find(list.begin(), list.end(), word) != list.end();
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> unit_scale_to_mhz(const std::string& unit) {
  if (unit == "hz") return 1e-6;
  if (unit == "khz") return 1e-3;
  if (unit == "mhz") return 1.0;
  if (unit == "ghz") return 1e3;
  return std::nullopt;
}

std::optional<double> find_bandwidth(const std::vector<Token>& toks, const Lexicon& lex) {
  std::optional<double> fallback;
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    const auto value = parse_number(toks[i].text);
    const auto scale = unit_scale_to_mhz(toks[i + 1].text);
    if (!value || !scale || toks[i + 1].clause != toks[i].clause || !(*value > 0.0)) continue;
    bool location = false;
    for (std::size_t back = 1; back <= 2 && back <= i; ++back) {
      if (toks[i - back].clause == toks[i].clause && in_list(lex.location_words, toks[i - back].text)) {
        location = true;
      }
    }
    if (location) continue;
    const double mhz = *value * *scale;
    const bool described_as_width = std::any_of(toks.begin(), toks.end(), [&](const Token& t) {
      return t.clause == toks[i].clause && in_list(lex.bandwidth_words, t.text);
    });
    if (described_as_width) return mhz;
    if (!fallback) fallback = mhz;
  }
  return fallback;
}

std::optional<std::string> find_snr(const std::vector<Token>& toks, const Lexicon& lex) {
  std::vector<std::vector<std::string>> anchors;
  for (const auto& a : lex.snr_anchors) anchors.push_back(phrase_tokens(a));
  auto level_at = [&](std::size_t pos, int clause) -> std::optional<std::string> {
    if (pos >= toks.size() || toks[pos].clause != clause) return std::nullopt;
    for (const auto& k : lex.snr_levels) {
      if (toks[pos].text == k.phrase) return k.value;
    }
    return std::nullopt;
  };
  for (std::size_t pos = 0; pos < toks.size(); ++pos) {
    for (const auto& anchor : anchors) {
      if (!matches_at(toks, pos, anchor, nullptr)) continue;
      const int clause = toks[pos].clause;
      if (pos > 0) {
        if (auto v = level_at(pos - 1, clause)) return v;
      }
      const std::size_t after = pos + anchor.size();
      if (auto v = level_at(after, clause)) return v;
      // "SNR is high", "SNR of medium"
      if (after < toks.size() && (toks[after].text == "is" || toks[after].text == "of")) {
        if (auto v = level_at(after + 1, clause)) return v;
      }
    }
  }
  return std::nullopt;
}

std::optional<std::string> find_isolation(const std::vector<Token>& toks, const Lexicon& lex) {
  std::vector<bool> masked(toks.size(), false);
  std::optional<std::size_t> negation_pos;
  for (const auto& phrase_text : lex.isolation_negations) {
    const auto phrase = phrase_tokens(phrase_text);
    for (std::size_t pos = 0; pos < toks.size(); ++pos) {
      if (!matches_at(toks, pos, phrase, nullptr)) continue;
      for (std::size_t k = 0; k < phrase.size(); ++k) masked[pos + k] = true;
      if (!negation_pos || pos < *negation_pos) negation_pos = pos;
    }
  }
  const auto kw = first_match(toks, lex.isolation, keyword_phrase, &masked);
  if (kw.found() && (!negation_pos || kw.pos < *negation_pos)) return lex.isolation[kw.index].value;
  if (negation_pos) return std::string("isolated");
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (!masked[i] && in_list(lex.singular_nouns, toks[i].text)) return std::string("isolated");
  }
  return std::nullopt;
}

}  // namespace

AttributeExtraction extract_attributes(std::string_view response_text, const Lexicon& lex) {
  AttributeExtraction x;
  const auto toks = tokenize(response_text);
  if (toks.empty()) return x;

  if (contains_any(toks, lex.no_signal_phrases)) {
    x.claims_no_signal = true;
    return x;
  }

  if (auto m = first_match(toks, lex.temporal, keyword_phrase); m.found()) {
    x[Attribute::temporal] = lex.temporal[m.index].value;
  }

  x.bandwidth_mhz = find_bandwidth(toks, lex);
  if (x.bandwidth_mhz) {
    x[Attribute::occupancy] = std::string(classify_occupancy(*x.bandwidth_mhz));
  } else if (auto m = first_match(toks, lex.occupancy, keyword_phrase); m.found()) {
    x[Attribute::occupancy] = lex.occupancy[m.index].value;
  }

  x[Attribute::snr] = find_snr(toks, lex);
  x[Attribute::isolation] = find_isolation(toks, lex);

  if (!contains_any(toks, lex.no_tech_phrases)) {
    const auto label = first_match(toks, lex.tech_labels, label_phrases);
    const auto family = first_match(toks, lex.family_words, keyword_phrase);
    if (label.found()) x.raw_tech_label = lex.tech_labels[label.index].label;
    if (label.found() && (!family.found() || label.pos <= family.pos)) {
      x[Attribute::tech_family] = lex.tech_labels[label.index].family;
    } else if (family.found()) {
      x[Attribute::tech_family] = lex.family_words[family.index].value;
    }
  }

  x.references_settings = contains_any(toks, lex.settings_phrases);
  x.image_grounded_evidence = contains_any(toks, lex.grounded_words);
  return x;
}

// --- defaults and JSON -------------------------------------------------------

const Lexicon& Lexicon::defaults() {
  static const Lexicon lex = [] {
    Lexicon l;
    l.no_signal_phrases = {"no signal",           "no signals",         "no discernible signal",
                           "no discernible signals", "no visible signal", "no visible signals",
                           "no detectable signal", "no detectable signals", "nothing detected",
                           "no emissions"};
    l.temporal = {{"continuous", "continuous"}, {"continuously", "continuous"}, {"stream", "continuous"},
                  {"streaming", "continuous"},  {"cw", "continuous"},           {"steady", "continuous"},
                  {"constant", "continuous"},   {"sinusoidal", "continuous"},   {"persistent", "continuous"},
                  {"pulsed", "pulsed"},         {"pulse", "pulsed"},            {"pulses", "pulsed"},
                  {"pulsing", "pulsed"},        {"burst", "burst"},             {"bursts", "burst"},
                  {"bursty", "burst"},          {"intermittent", "burst"},      {"hopping", "burst"},
                  {"sporadic", "burst"},        {"packets", "burst"}};
    l.occupancy = {{"narrowband", "narrow"}, {"narrow band", "narrow"}, {"narrow", "narrow"},
                   {"medium band", "medium"}, {"medium bandwidth", "medium"}, {"moderate bandwidth", "medium"},
                   {"wideband", "wide"},     {"wide band", "wide"},     {"wide", "wide"},
                   {"broadband", "wide"},    {"full span", "wide"},     {"full band", "wide"}};
    l.snr_anchors = {"snr", "signal to noise", "signal to noise ratio", "power", "signal strength"};
    l.snr_levels = {{"low", "low"},       {"weak", "low"},         {"faint", "low"},   {"poor", "low"},
                    {"medium", "medium"}, {"moderate", "medium"},  {"mid", "medium"},  {"fair", "medium"},
                    {"high", "high"},     {"strong", "high"},      {"good", "high"},   {"excellent", "high"}};
    l.isolation_negations = {"no overlap",         "no overlapping",     "no co-channel interference",
                             "no interference",    "non-overlapping",    "not overlapping",
                             "without overlap",    "no other signals",   "no adjacent signals"};
    l.isolation = {{"overlap", "overlapping"},          {"overlapping", "overlapping"},
                   {"overlaps", "overlapping"},         {"interference", "overlapping"},
                   {"co-channel", "overlapping"},       {"two signals", "overlapping"},
                   {"three signals", "overlapping"},    {"multiple signals", "overlapping"},
                   {"several signals", "overlapping"},  {"multiple carriers", "overlapping"},
                   {"multiple emitters", "overlapping"}, {"isolated", "isolated"},
                   {"single", "isolated"},              {"one signal", "isolated"},
                   {"lone", "isolated"},                {"only one", "isolated"}};
    l.singular_nouns = {"signal", "carrier", "emitter", "transmitter", "tone"};
    l.no_tech_phrases = {"no technology", "unknown technology", "technology unknown", "unidentified technology"};
    l.family_words = {{"cellular", "cellular"}, {"ism", "ism"},           {"broadcast", "broadcast"},
                      {"broadcasting", "broadcast"}, {"radar", "radar"}};
    l.tech_labels = {{"5G NR", {"5g nr", "5g", "new radio"}, "cellular"},
                     {"LTE", {"lte", "4g"}, "cellular"},
                     {"GSM", {"gsm", "2g"}, "cellular"},
                     {"UMTS", {"umts", "wcdma", "3g"}, "cellular"},
                     {"DVB-S2", {"dvb-s2", "dvbs2"}, "broadcast"},
                     {"DVB-S", {"dvb-s"}, "broadcast"},
                     {"DVB-T", {"dvb-t", "dvb-t2"}, "broadcast"},
                     {"DAB", {"dab"}, "broadcast"},
                     {"FM", {"fm", "fm broadcast", "fm radio"}, "broadcast"},
                     {"Wi-Fi", {"wi-fi", "wifi", "wlan", "802.11"}, "ism"},
                     {"BLE", {"ble", "bluetooth low energy"}, "ism"},
                     {"Bluetooth", {"bluetooth"}, "ism"},
                     {"Zigbee", {"zigbee"}, "ism"},
                     {"LoRa", {"lora"}, "ism"},
                     {"OOK", {"ook", "on-off keying"}, "ism"},
                     {"FSK", {"fsk"}, "ism"},
                     {"Radar", {"radar"}, "radar"}};
    l.location_words = {"at", "centered", "centred", "center", "centre", "near", "frequency", "fc", "located"};
    l.bandwidth_words = {"bandwidth", "bw", "wide", "width", "span", "spans", "spanning", "occupies",
                         "occupying", "occupied", "occupancy", "channel", "band"};
    l.settings_phrases = {"sample rate", "sampling rate", "samplerate", "analyzer settings", "analyzer setting",
                          "settings", "configured", "configuration", "the prompt"};
    l.grounded_words = {"span",     "spans",    "spanning", "block",   "blocks",   "burst",    "bursts",
                        "contrast", "full",     "visible",  "visibly", "occupies", "occupying", "occupied",
                        "edges",    "bright",   "brighter", "stripe"};
    return l;
  }();
  return lex;
}

Lexicon Lexicon::load(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text_file(path)).get<Lexicon>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("lexicon '" + path + "': " + e.what());
  }
}

void to_json(nlohmann::json& j, const Lexicon::Keyword& k) { j = {{"phrase", k.phrase}, {"value", k.value}}; }

void from_json(const nlohmann::json& j, Lexicon::Keyword& k) {
  j.at("phrase").get_to(k.phrase);
  j.at("value").get_to(k.value);
}

void to_json(nlohmann::json& j, const Lexicon::TechLabel& t) {
  j = {{"label", t.label}, {"phrases", t.phrases}, {"family", t.family}};
}

void from_json(const nlohmann::json& j, Lexicon::TechLabel& t) {
  j.at("label").get_to(t.label);
  j.at("phrases").get_to(t.phrases);
  j.at("family").get_to(t.family);
}

void to_json(nlohmann::json& j, const Lexicon& l) {
  j = {{"no_signal_phrases", l.no_signal_phrases},
       {"temporal", l.temporal},
       {"occupancy", l.occupancy},
       {"snr_anchors", l.snr_anchors},
       {"snr_levels", l.snr_levels},
       {"isolation_negations", l.isolation_negations},
       {"isolation", l.isolation},
       {"singular_nouns", l.singular_nouns},
       {"no_tech_phrases", l.no_tech_phrases},
       {"family_words", l.family_words},
       {"tech_labels", l.tech_labels},
       {"location_words", l.location_words},
       {"bandwidth_words", l.bandwidth_words},
       {"settings_phrases", l.settings_phrases},
       {"grounded_words", l.grounded_words}};
}

void from_json(const nlohmann::json& j, Lexicon& l) {
  j.at("no_signal_phrases").get_to(l.no_signal_phrases);
  j.at("temporal").get_to(l.temporal);
  j.at("occupancy").get_to(l.occupancy);
  j.at("snr_anchors").get_to(l.snr_anchors);
  j.at("snr_levels").get_to(l.snr_levels);
  j.at("isolation_negations").get_to(l.isolation_negations);
  j.at("isolation").get_to(l.isolation);
  j.at("singular_nouns").get_to(l.singular_nouns);
  j.at("no_tech_phrases").get_to(l.no_tech_phrases);
  j.at("family_words").get_to(l.family_words);
  j.at("tech_labels").get_to(l.tech_labels);
  j.at("location_words").get_to(l.location_words);
  j.at("bandwidth_words").get_to(l.bandwidth_words);
  j.at("settings_phrases").get_to(l.settings_phrases);
  j.at("grounded_words").get_to(l.grounded_words);
  auto check = [](const std::vector<Lexicon::Keyword>& ks, Attribute a) {
    for (const auto& k : ks) {
      if (!is_attribute_class(a, k.value)) throw ConfigError("lexicon: '" + k.value + "' is not a class");
    }
  };
  check(l.temporal, Attribute::temporal);
  check(l.occupancy, Attribute::occupancy);
  check(l.snr_levels, Attribute::snr);
  check(l.isolation, Attribute::isolation);
  check(l.family_words, Attribute::tech_family);
  for (const auto& t : l.tech_labels) {
    if (!is_attribute_class(Attribute::tech_family, t.family)) {
      throw ConfigError("lexicon: label '" + t.label + "' has unknown family '" + t.family + "'");
    }
  }
}

}  // namespace rfa
