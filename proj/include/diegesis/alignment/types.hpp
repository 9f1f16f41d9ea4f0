#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "diegesis/core/error.hpp"
#include "diegesis/core/story_time.hpp"
#include "diegesis/retrieval/retrieve.hpp"

namespace diegesis {

enum class Tone { calm, tense, sarcastic, angry, curious, hostile };
enum class Intent { request_information, challenge, negotiate, small_talk };
enum class DatasetKind { persona, general_qa, temporal_adversarial, out_of_domain };
enum class NegFlaw { persona_drift, frame_break, wrong_event, spoiler_leak, ooc_answer };

inline constexpr std::size_t kToneCount = 6;
inline constexpr std::size_t kIntentCount = 4;

NLOHMANN_JSON_SERIALIZE_ENUM(Tone, {
                                       {Tone::calm, "calm"},
                                       {Tone::tense, "tense"},
                                       {Tone::sarcastic, "sarcastic"},
                                       {Tone::angry, "angry"},
                                       {Tone::curious, "curious"},
                                       {Tone::hostile, "hostile"},
                                   })

NLOHMANN_JSON_SERIALIZE_ENUM(Intent, {
                                         {Intent::request_information, "request_information"},
                                         {Intent::challenge, "challenge"},
                                         {Intent::negotiate, "negotiate"},
                                         {Intent::small_talk, "small_talk"},
                                     })

NLOHMANN_JSON_SERIALIZE_ENUM(DatasetKind, {
                                              {DatasetKind::persona, "persona"},
                                              {DatasetKind::general_qa, "general_qa"},
                                              {DatasetKind::temporal_adversarial, "temporal_adversarial"},
                                              {DatasetKind::out_of_domain, "out_of_domain"},
                                          })

NLOHMANN_JSON_SERIALIZE_ENUM(NegFlaw, {
                                          {NegFlaw::persona_drift, "persona_drift"},
                                          {NegFlaw::frame_break, "frame_break"},
                                          {NegFlaw::wrong_event, "wrong_event"},
                                          {NegFlaw::spoiler_leak, "spoiler_leak"},
                                          {NegFlaw::ooc_answer, "ooc_answer"},
                                      })

template <typename E>
std::string enum_name(E e) {
  return nlohmann::json(e).template get<std::string>();
}

// Parses an enum by its serialized name; unknown names are invalid_argument.
template <typename E>
E parse_enum(std::string_view name, std::string_view what) {
  const nlohmann::json j = std::string(name);
  const E value = j.get<E>();
  if (nlohmann::json(value) != j) {
    fail(ErrorKind::invalid_argument, "unknown " + std::string(what) + " '" + std::string(name) + "'");
  }
  return value;
}

inline bool flaw_allowed(DatasetKind kind, NegFlaw flaw) {
  switch (kind) {
    case DatasetKind::persona: return flaw == NegFlaw::persona_drift || flaw == NegFlaw::frame_break;
    case DatasetKind::general_qa: return flaw == NegFlaw::wrong_event;
    case DatasetKind::temporal_adversarial: return flaw == NegFlaw::spoiler_leak;
    case DatasetKind::out_of_domain: return flaw == NegFlaw::ooc_answer;
  }
  return false;
}

struct PromptSpec {
  std::string character;
  Ordinal t = 0;
  Tone tone = Tone::calm;
  Intent intent = Intent::request_information;
  std::uint64_t seed = 0;
  std::string text;

  bool operator==(const PromptSpec&) const = default;
};

// Reads an enum field, rejecting names outside the enum (nlohmann would
// otherwise map them silently to the first value).
template <typename E>
E get_enum(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_string()) fail(ErrorKind::parse, std::string(key) + " must be a string");
  try {
    return parse_enum<E>(v.get<std::string>(), key);
  } catch (const Error& e) {
    fail(ErrorKind::parse, e.what());
  }
}

inline void to_json(nlohmann::json& j, const PromptSpec& p) {
  j = {{"character", p.character}, {"t", p.t},       {"tone", p.tone},
       {"intent", p.intent},       {"seed", p.seed}, {"text", p.text}};
}

inline void from_json(const nlohmann::json& j, PromptSpec& p) {
  j.at("character").get_to(p.character);
  j.at("t").get_to(p.t);
  p.tone = get_enum<Tone>(j, "tone");
  p.intent = get_enum<Intent>(j, "intent");
  j.at("seed").get_to(p.seed);
  j.at("text").get_to(p.text);
}

// A Stage-2 question. Event ids refer to graph nodes: the target the question
// asks about and, for general_qa, the different event o_neg is grounded in.
struct CreQuestion {
  std::string character;
  Ordinal t = 0;
  std::string question;
  std::uint64_t seed = 0;
  std::optional<std::string> target_event;
  std::optional<Ordinal> target_anchor;
  std::optional<std::string> negative_event;
  std::optional<std::size_t> bank_index;  // out_of_domain only

  bool operator==(const CreQuestion&) const = default;
};

inline void to_json(nlohmann::json& j, const CreQuestion& q) {
  j = {{"character", q.character}, {"t", q.t}, {"question", q.question}, {"seed", q.seed}};
  if (q.target_event) j["target_event"] = *q.target_event;
  if (q.target_anchor) j["target_anchor"] = *q.target_anchor;
  if (q.negative_event) j["negative_event"] = *q.negative_event;
  if (q.bank_index) j["bank_index"] = *q.bank_index;
}

inline void from_json(const nlohmann::json& j, CreQuestion& q) {
  j.at("character").get_to(q.character);
  j.at("t").get_to(q.t);
  j.at("question").get_to(q.question);
  j.at("seed").get_to(q.seed);
  q.target_event = j.contains("target_event") ? std::optional(j.at("target_event").get<std::string>()) : std::nullopt;
  q.target_anchor = j.contains("target_anchor") ? std::optional(j.at("target_anchor").get<Ordinal>()) : std::nullopt;
  q.negative_event =
      j.contains("negative_event") ? std::optional(j.at("negative_event").get<std::string>()) : std::nullopt;
  q.bank_index = j.contains("bank_index") ? std::optional(j.at("bank_index").get<std::size_t>()) : std::nullopt;
}

struct PreferenceTuple {
  std::variant<PromptSpec, CreQuestion> prompt;  // PromptSpec iff dataset_kind == persona
  std::string o_pos;
  std::string o_neg;
  DatasetKind dataset_kind = DatasetKind::persona;
  NegFlaw neg_flaw = NegFlaw::persona_drift;
  std::optional<ContextBundle> context;

  bool operator==(const PreferenceTuple&) const = default;

  Ordinal t() const {
    return std::visit([](const auto& p) { return p.t; }, prompt);
  }
  const std::string& character() const {
    return std::visit([](const auto& p) -> const std::string& { return p.character; }, prompt);
  }
  const std::string& question() const {
    if (const auto* p = std::get_if<PromptSpec>(&prompt)) return p->text;
    return std::get<CreQuestion>(prompt).question;
  }
};

inline void to_json(nlohmann::json& j, const PreferenceTuple& t) {
  j = {{"dataset_kind", t.dataset_kind}, {"o_pos", t.o_pos}, {"o_neg", t.o_neg}, {"neg_flaw", t.neg_flaw}};
  std::visit([&](const auto& p) { j["prompt"] = p; }, t.prompt);
  j["context"] = t.context ? nlohmann::json(*t.context) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json& j, PreferenceTuple& t) {
  t.dataset_kind = get_enum<DatasetKind>(j, "dataset_kind");
  j.at("o_pos").get_to(t.o_pos);
  j.at("o_neg").get_to(t.o_neg);
  t.neg_flaw = get_enum<NegFlaw>(j, "neg_flaw");
  if (t.dataset_kind == DatasetKind::persona) {
    t.prompt = j.at("prompt").get<PromptSpec>();
  } else {
    t.prompt = j.at("prompt").get<CreQuestion>();
  }
  const auto& c = j.at("context");
  t.context = c.is_null() ? std::nullopt : std::optional(c.get<ContextBundle>());
}

}  // namespace diegesis
