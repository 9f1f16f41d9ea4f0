#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "diegesis/core/text.hpp"
#include "diegesis/ingest/extractor.hpp"

namespace diegesis {

// Deterministic offline extractor: capitalized-name heuristics plus matching
// against seed profiles. Emits the same wire payloads a remote extractor
// would, so both go through one parsing path.
//
// Kind rules for a capitalized name sequence, first match wins:
//   1. equals a seed profile's canonical name or alias  -> character
//   2. starts with a title word (Captain, Professor, ...) -> character
//   3. preceded by a place preposition, optionally followed by "the"
//      ("in Paris", "into the Atlantic")                  -> location
//   4. preceded by an article ("on the Nautilus")         -> object
//   5. otherwise                                          -> character
class RuleBasedExtractor : public ExtractorClient {
 public:
  struct Mention {
    std::string name;
    EntityKind kind;
    bool operator==(const Mention&) const = default;
  };

  struct SentenceMentions {
    std::string sentence;
    std::vector<Mention> mentions;
  };

  explicit RuleBasedExtractor(std::vector<CharacterProfile> seed_profiles = {})
      : profiles_(std::move(seed_profiles)) {
    for (const auto& p : profiles_) {
      known_.insert(text::fold_key(p.canonical_name));
      for (const auto& a : p.aliases) known_.insert(text::fold_key(a));
    }
  }

  std::string extract(const ExtractionRequest& request) override {
    const Span& span = *request.span;
    switch (request.pass) {
      case ExtractionPass::entities: return entity_payload(span).dump();
      case ExtractionPass::relations: return relation_payload(span).dump();
      case ExtractionPass::events: return event_payload(span).dump();
    }
    return "{}";
  }

  // Mentions per sentence of a span, in reading order.
  std::vector<SentenceMentions> analyze(std::string_view span_text) const {
    std::vector<SentenceMentions> out;
    const auto sents = text::sentences(span_text);
    // Names seen capitalized mid-sentence anywhere in the span. A sentence's
    // first word is only taken as a name when it is known or appears here.
    std::set<std::string> mid_sentence;
    for (auto s : sents) {
      for (const auto& c : candidates(s)) {
        if (!c.sentence_initial) mid_sentence.insert(text::fold_key(c.name));
      }
    }
    for (auto s : sents) {
      SentenceMentions sm{std::string(s), {}};
      for (const auto& c : candidates(s)) {
        const auto key = text::fold_key(c.name);
        if (c.sentence_initial && c.word_count == 1 && !known_.count(key) &&
            !mid_sentence.count(key)) {
          continue;
        }
        Mention m{c.name, classify(c)};
        if (std::find(sm.mentions.begin(), sm.mentions.end(), m) == sm.mentions.end()) {
          sm.mentions.push_back(std::move(m));
        }
      }
      out.push_back(std::move(sm));
    }
    return out;
  }

 private:
  struct Candidate {
    std::string name;
    std::string first_word;
    std::string prev;       // word before the name, lowercased
    std::string prev_prev;  // word before that, lowercased
    std::size_t word_count = 0;
    bool sentence_initial = false;
  };

  static bool is_capitalized(std::string_view w) { return !w.empty() && w[0] >= 'A' && w[0] <= 'Z'; }

  static const std::set<std::string, std::less<>>& titles() {
    static const std::set<std::string, std::less<>> k = {
        "captain", "professor", "mr",     "mrs",   "miss",     "ms",     "dr",
        "doctor",  "sir",       "lady",   "lord",  "master",   "commander", "king",
        "queen",   "prince",    "princess", "father", "mother", "uncle",  "aunt",
        "madame",  "monsieur",  "mister", "colonel", "general", "admiral", "count"};
    return k;
  }

  static const std::set<std::string, std::less<>>& place_prepositions() {
    static const std::set<std::string, std::less<>> k = {
        "in",   "at",      "near",    "across", "into",  "through", "toward",
        "towards", "from", "to",      "under",  "beneath", "off",  "around", "beyond"};
    return k;
  }

  static std::vector<Candidate> candidates(std::string_view sentence) {
    const auto ws = text::words(sentence);
    std::vector<Candidate> out;
    std::size_t i = 0;
    while (i < ws.size()) {
      if (!is_capitalized(ws[i])) {
        ++i;
        continue;
      }
      std::size_t j = i + 1;
      while (j < ws.size() && is_capitalized(ws[j])) {
        const auto gap_begin = ws[j - 1].data() + ws[j - 1].size();
        const std::string_view gap(gap_begin, static_cast<std::size_t>(ws[j].data() - gap_begin));
        if (gap != " ") break;
        ++j;
      }
      // Drop leading capitalized function words ("The", "He", "But").
      std::size_t b = i;
      while (b < j && text::is_stopword(text::to_lower(ws[b]))) ++b;
      if (b < j) {
        Candidate c;
        const char* begin = ws[b].data();
        const char* end = ws[j - 1].data() + ws[j - 1].size();
        c.name = std::string(begin, static_cast<std::size_t>(end - begin));
        c.first_word = text::to_lower(ws[b]);
        c.word_count = j - b;
        c.sentence_initial = b == 0;
        if (b >= 1) c.prev = text::to_lower(ws[b - 1]);
        if (b >= 2) c.prev_prev = text::to_lower(ws[b - 2]);
        out.push_back(std::move(c));
      }
      i = j;
    }
    return out;
  }

  EntityKind classify(const Candidate& c) const {
    if (known_.count(text::fold_key(c.name))) return EntityKind::character;
    if (titles().count(c.first_word)) return EntityKind::character;
    const bool article = c.prev == "the" || c.prev == "a" || c.prev == "an";
    if (place_prepositions().count(c.prev)) return EntityKind::location;
    if (article && place_prepositions().count(c.prev_prev)) return EntityKind::location;
    if (article) return EntityKind::object;
    return EntityKind::character;
  }

  static std::string truncate_words(std::string_view s, std::size_t max_words) {
    const auto ws = text::words(s);
    std::vector<std::string> parts;
    for (std::size_t i = 0; i < ws.size() && i < max_words; ++i) parts.emplace_back(ws[i]);
    return text::join(parts, " ");
  }

  nlohmann::json entity_payload(const Span& span) const {
    nlohmann::json entities = nlohmann::json::array();
    std::set<std::string> seen;
    for (const auto& sm : analyze(span.text)) {
      for (const auto& m : sm.mentions) {
        if (!seen.insert(text::fold_key(m.name)).second) continue;
        entities.push_back({{"name", m.name},
                            {"kind", to_string(m.kind)},
                            {"description", text::collapse_whitespace(sm.sentence)}});
      }
    }
    nlohmann::json profiles = nlohmann::json::array();
    for (const auto& p : profiles_) {
      for (const auto& sm : analyze(span.text)) {
        bool hit = false;
        for (const auto& m : sm.mentions) {
          const auto key = text::fold_key(m.name);
          hit = hit || key == text::fold_key(p.canonical_name) ||
                std::any_of(p.aliases.begin(), p.aliases.end(),
                            [&](const std::string& a) { return text::fold_key(a) == key; });
        }
        if (hit) {
          profiles.push_back({{"canonical_name", p.canonical_name}});
          break;
        }
      }
    }
    return {{"entities", entities}, {"profiles", profiles}};
  }

  nlohmann::json relation_payload(const Span& span) const {
    nlohmann::json relations = nlohmann::json::array();
    for (const auto& sm : analyze(span.text)) {
      for (std::size_t i = 0; i + 1 < sm.mentions.size(); ++i) {
        relations.push_back({{"subject", sm.mentions[i].name},
                             {"object", sm.mentions[i + 1].name},
                             {"description", text::collapse_whitespace(sm.sentence)}});
      }
    }
    return {{"relations", relations}};
  }

  nlohmann::json event_payload(const Span& span) const {
    nlohmann::json events = nlohmann::json::array();
    nlohmann::json background = nlohmann::json::array();
    // Paragraphs are separated by blank lines inside the span.
    std::vector<std::string_view> paras;
    std::string_view rest = span.text;
    while (!rest.empty()) {
      std::size_t cut = std::string_view::npos;
      for (std::size_t i = 0; i + 1 < rest.size(); ++i) {
        if (rest[i] == '\n') {
          std::size_t k = i + 1;
          while (k < rest.size() && (rest[k] == ' ' || rest[k] == '\t' || rest[k] == '\r')) ++k;
          if (k < rest.size() && rest[k] == '\n') {
            cut = i;
            break;
          }
        }
      }
      const auto para = text::trim(rest.substr(0, cut));
      if (!para.empty()) paras.push_back(para);
      if (cut == std::string_view::npos) break;
      rest = rest.substr(cut + 1);
    }
    for (auto para : paras) {
      const auto sms = analyze(para);
      if (sms.empty()) continue;
      std::vector<std::string> participants;
      std::string first_other;
      for (const auto& sm : sms) {
        for (const auto& m : sm.mentions) {
          if (m.kind == EntityKind::character) {
            if (std::find(participants.begin(), participants.end(), m.name) == participants.end()) {
              participants.push_back(m.name);
            }
          } else if (first_other.empty()) {
            first_other = m.name;
          }
        }
      }
      const std::string first = text::collapse_whitespace(sms.front().sentence);
      if (!participants.empty()) {
        std::string summary = first;
        if (sms.size() > 1) summary += " " + text::collapse_whitespace(sms[1].sentence);
        events.push_back({{"title", truncate_words(first, 8)},
                          {"summary", summary},
                          {"participants", participants}});
      } else {
        background.push_back({{"topic", first_other.empty() ? truncate_words(first, 4) : first_other},
                              {"description", first},
                              {"time", ""}});
      }
    }
    return {{"events", events}, {"background", background}};
  }

  std::vector<CharacterProfile> profiles_;
  std::set<std::string> known_;
};

}  // namespace diegesis
