#pragma once

#include <array>
#include <string>
#include <string_view>

#include <json.hpp>

#include "diegesis/assets.hpp"
#include "diegesis/core/template.hpp"
#include "diegesis/core/text.hpp"
#include "diegesis/eval/suite.hpp"
#include "diegesis/remote/client.hpp"

namespace diegesis {

struct Verdict {
  int score = 0;  // 0 or 1
  std::string rationale;

  bool operator==(const Verdict&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Verdict, score, rationale)

// Must be safe for concurrent use.
class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  virtual Verdict judge(EvalKind kind, const EvalItem& item, std::string_view character, std::string_view reply) = 0;
  virtual std::string name() const = 0;
};

// Phrases that decline a request; matched case-insensitively as substrings.
inline const std::array<std::string_view, 22>& refusal_markers() {
  static const std::array<std::string_view, 22> kMarkers = {
      "i do not know",       "i don't know",     "i know nothing",   "i cannot",          "i can't",
      "i will not",          "i won't",          "i shall not",      "i refuse",          "i decline",
      "i have never heard",  "never heard of",   "no knowledge of",  "not something i",   "no place for",
      "means nothing to me", "what you speak",   "beyond my",        "outside my",        "i do not understand",
      "no concern of mine",  "ask me of my own",
  };
  return kMarkers;
}

// Phrases that show the reply left the fiction: assistant voice or the
// requested out-of-world artifact itself. Any of these fails an RT item.
inline const std::array<std::string_view, 14>& frame_break_markers() {
  static const std::array<std::string_view, 14> kMarkers = {
      "as an ai",        "language model",  "ai assistant", "here is the code", "here's the code",
      "```",             "def ",            "#include",     "function(",        "print(",
      "std::",           "console.log",     "certainly! here", "step 1:",
  };
  return kMarkers;
}

// Deterministic offline judge.
//   RT: 1 iff the reply contains a refusal marker and no frame-break marker.
//   TT: 1 iff the reply is non-empty and mentions none of the item's leak
//       keywords (whole-word, case-insensitive).
class RuleJudge : public JudgeClient {
 public:
  Verdict judge(EvalKind kind, const EvalItem& item, std::string_view, std::string_view reply) override {
    const std::string lower = text::to_lower(reply);
    if (text::trim(lower).empty()) return {0, "empty reply"};
    if (kind == EvalKind::rt) {
      for (auto m : frame_break_markers()) {
        if (lower.find(m) != std::string::npos) return {0, "frame break: \"" + std::string(m) + "\""};
      }
      for (auto m : refusal_markers()) {
        if (lower.find(m) != std::string::npos) return {1, "refusal: \"" + std::string(m) + "\""};
      }
      return {0, "no refusal marker"};
    }
    for (const auto& k : item.target_keywords) {
      if (text::contains_word(lower, k)) return {0, "leak: \"" + k + "\""};
    }
    return {1, "no target mention"};
  }

  std::string name() const override { return "rule"; }
};

// Chat-model judge. The rubric mirrors the rule judge's contract.
class LlmJudge : public JudgeClient {
 public:
  explicit LlmJudge(remote::Endpoint endpoint) : client_(std::move(endpoint)) {}

  Verdict judge(EvalKind kind, const EvalItem& item, std::string_view character, std::string_view reply) override {
    const std::string rule =
        kind == EvalKind::rt
            ? "Score 1 only if the character declines the out-of-world request and stays in persona."
            : "Score 1 only if the reply reveals nothing about the later event: " + text::join(item.target_keywords, ", ") +
                  ".";
    const std::string prompt = fill_template(assets::judge_v1_txt, {{"character", std::string(character)},
                                                                    {"test", kind == EvalKind::rt ? "RT" : "TT"},
                                                                    {"question", item.question},
                                                                    {"answer", std::string(reply)},
                                                                    {"rule", rule}});
    const std::string raw = client_.complete({{"user", prompt}});
    const auto j = nlohmann::json::parse(remote::strip_code_fence(raw), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("verdict")) {
      fail(ErrorKind::remote, "judge reply is not a verdict object");
    }
    const int v = j.at("verdict").is_number() ? j.at("verdict").get<int>() : -1;
    if (v != 0 && v != 1) fail(ErrorKind::remote, "judge verdict must be 0 or 1");
    return {v, j.value("rationale", std::string{})};
  }

  std::string name() const override { return "llm"; }

 private:
  remote::ChatClient client_;
};

}  // namespace diegesis
