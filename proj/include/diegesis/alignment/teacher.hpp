#pragma once

#include <array>
#include <string>

#include "diegesis/alignment/types.hpp"
#include "diegesis/assets.hpp"
#include "diegesis/core/template.hpp"
#include "diegesis/core/text.hpp"
#include "diegesis/ingest/profile_text.hpp"
#include "diegesis/remote/client.hpp"

namespace diegesis {

// What a teacher reply must look like. The template teacher expands these
// directly; the remote teacher turns them into written instructions.
enum class ReplyStyle {
  in_character,     // ideal persona reply
  persona_drift,    // generic assistant voice
  frame_break,      // steps out of the fiction
  recollection,     // in-character account of the context event
  feigned_ignorance,  // in-character refusal to discuss the future
  factual_answer,   // plain correct answer from the context
  ooc_rejection,    // in-character refusal of an out-of-world request
};

struct TeacherRequest {
  enum class Task { user_prompt, reply } task = Task::reply;
  const CharacterProfile* profile = nullptr;
  StoryTime time;
  Tone tone = Tone::calm;
  Intent intent = Intent::request_information;
  std::string question;  // the user message being answered
  std::string context;   // grounding text for recollection / factual_answer
  ReplyStyle style = ReplyStyle::in_character;
  std::uint64_t seed = 0;
};

// Must be safe to call concurrently.
class TeacherClient {
 public:
  virtual ~TeacherClient() = default;
  virtual std::string generate(const TeacherRequest& request) = 0;
};

inline std::string style_instruction(ReplyStyle style) {
  switch (style) {
    case ReplyStyle::in_character:
      return "Reply fully in character, in the requested tone, drawing on the profile and the story so far.";
    case ReplyStyle::persona_drift:
      return "Reply as a generic AI assistant would, dropping the character's voice. Begin with \"As an AI assistant\".";
    case ReplyStyle::frame_break:
      return "Break the fictional frame and say you are only playing a role. Begin with \"As an AI assistant\".";
    case ReplyStyle::recollection:
      return "Reply in character, recalling exactly the event described in the context and nothing else.";
    case ReplyStyle::feigned_ignorance:
      return "The user asks about something that has not happened yet. Reply in character that you know nothing of it.";
    case ReplyStyle::factual_answer:
      return "Answer the question directly and correctly from the context, without role-play.";
    case ReplyStyle::ooc_rejection:
      return "The request lies outside the story world. Decline it in character, staying in your own voice.";
  }
  return {};
}

namespace detail {

inline const char* tone_opener(Tone tone) {
  switch (tone) {
    case Tone::calm: return "Tell me, quietly:";
    case Tone::tense: return "There is no time, answer me now:";
    case Tone::sarcastic: return "Oh, how marvellous.";
    case Tone::angry: return "Enough of this!";
    case Tone::curious: return "I have always wondered:";
    case Tone::hostile: return "I do not trust you.";
  }
  return "";
}

inline const char* tone_adverb(Tone tone) {
  switch (tone) {
    case Tone::calm: return "calmly";
    case Tone::tense: return "in haste";
    case Tone::sarcastic: return "with a sneer";
    case Tone::angry: return "in anger";
    case Tone::curious: return "with curiosity";
    case Tone::hostile: return "as an enemy";
  }
  return "";
}

// Two phrasings per intent; {{name}} and {{time}} are template slots.
inline const std::array<const char*, 2>& intent_lines(Intent intent) {
  static const std::array<const char*, 2> kInfo = {"What weighs on your mind at {{time}}, {{name}}?",
                                                   "What can you tell me about where things stand at {{time}}?"};
  static const std::array<const char*, 2> kChallenge = {"Why should anyone believe you are right, {{name}}?",
                                                        "Prove to me that your choices at {{time}} make sense."};
  static const std::array<const char*, 2> kNegotiate = {"What would you want from me in exchange for your help?",
                                                        "Name your price, {{name}}, and I may help you at {{time}}."};
  static const std::array<const char*, 2> kSmallTalk = {"How do you pass the hours at {{time}}?",
                                                        "Do you ever rest, {{name}}?"};
  switch (intent) {
    case Intent::request_information: return kInfo;
    case Intent::challenge: return kChallenge;
    case Intent::negotiate: return kNegotiate;
    case Intent::small_talk: return kSmallTalk;
  }
  return kInfo;
}

inline const char* intent_reply(Intent intent) {
  switch (intent) {
    case Intent::request_information: return "You want to know my mind, and I will share what I choose.";
    case Intent::challenge: return "You doubt me, yet I have never needed your belief.";
    case Intent::negotiate: return "You wish to bargain, so hear my terms.";
    case Intent::small_talk: return "Idle words, but I will humour you.";
  }
  return "";
}

}  // namespace detail

// Deterministic offline teacher: fixed templates chosen by the request seed.
//   in_character  "<Attribute> as I am, I answer you <tone adverb>. <intent reply>
//                  At this moment my purpose is <drive at t>."
//   persona_drift "As an AI assistant, I can describe <name>: ..."
//   frame_break   "As an AI assistant, I should point out that I am not really <name>; ..."
class TemplateTeacher : public TeacherClient {
 public:
  std::string generate(const TeacherRequest& r) override {
    if (!r.profile) fail(ErrorKind::invalid_argument, "teacher request without a profile");
    const auto& p = *r.profile;
    const std::string& name = p.canonical_name;
    if (r.task == TeacherRequest::Task::user_prompt) {
      const auto& lines = detail::intent_lines(r.intent);
      const std::string line =
          fill_template(lines[r.seed % lines.size()], {{"name", name}, {"time", r.time.label}});
      return std::string(detail::tone_opener(r.tone)) + " " + line;
    }
    switch (r.style) {
      case ReplyStyle::in_character: {
        std::string out = attribute_phrase(p, r.seed) + " as I am, I answer you " + detail::tone_adverb(r.tone) +
                          ". " + detail::intent_reply(r.intent);
        if (const Drive* d = p.drive_at(r.time.ordinal)) out += " At this moment my purpose is " + d->description + ".";
        return out;
      }
      case ReplyStyle::persona_drift:
        return "As an AI assistant, I can describe " + name + " for you: a character who is " +
               (p.core_attributes.empty() ? std::string("complex") : text::join(p.core_attributes, ", ")) +
               ". Let me know if you need anything else.";
      case ReplyStyle::frame_break:
        return "As an AI assistant, I should point out that I am not really " + name +
               "; this is only a fictional role-play.";
      case ReplyStyle::recollection:
        return attribute_phrase(p, r.seed) + " as I am, I remember it well. " + r.context;
      case ReplyStyle::feigned_ignorance:
        return "I do not know of what you speak. Nothing of the kind has happened, as far as I, " + name +
               ", can tell.";
      case ReplyStyle::factual_answer:
        return r.context;
      case ReplyStyle::ooc_rejection:
        return "I know nothing of such things. I am " + name +
               ", and my world has no place for them; ask me of my own affairs instead.";
    }
    return {};
  }

  static std::string attribute_phrase(const CharacterProfile& p, std::uint64_t seed) {
    if (p.core_attributes.empty()) return p.canonical_name;
    return text::capitalize(p.core_attributes[seed % p.core_attributes.size()]);
  }
};

// Chat-completions teacher using the bundled prompt templates.
class RemoteTeacher : public TeacherClient {
 public:
  explicit RemoteTeacher(remote::Endpoint endpoint) : client_(std::move(endpoint)) {}

  std::string generate(const TeacherRequest& r) override {
    if (!r.profile) fail(ErrorKind::invalid_argument, "teacher request without a profile");
    std::string reply;
    if (r.task == TeacherRequest::Task::user_prompt) {
      const std::string sys = fill_template(assets::teacher_prompt_v1_txt, {{"character", r.profile->canonical_name},
                                                                            {"time_label", r.time.label},
                                                                            {"tone", enum_name(r.tone)},
                                                                            {"intent", enum_name(r.intent)}});
      reply = client_.complete({{"system", sys}, {"user", "Write the message."}});
    } else {
      const std::string sys = fill_template(
          assets::teacher_response_v1_txt,
          {{"character", r.profile->canonical_name},
           {"profile", render_profile(*r.profile, r.time.ordinal)},
           {"time_label", r.time.label},
           {"context", r.context.empty() ? std::string() : "Context:\n" + r.context},
           {"instruction", style_instruction(r.style) + " Tone: " + enum_name(r.tone) + "."}});
      reply = client_.complete({{"system", sys}, {"user", r.question}});
    }
    return std::string(text::trim(reply));
  }

 private:
  remote::ChatClient client_;
};

}  // namespace diegesis
