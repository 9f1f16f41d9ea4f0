#pragma once

#include <string>
#include <vector>

#include "diegesis/alignment/ood_bank.hpp"
#include "diegesis/alignment/teacher.hpp"
#include "diegesis/alignment/types.hpp"
#include "diegesis/core/parallel.hpp"
#include "diegesis/core/rng.hpp"
#include "diegesis/graph/graph.hpp"
#include "diegesis/retrieval/retrieve.hpp"

namespace diegesis {

struct GenOptions {
  std::size_t parallelism = 1;
};

struct PromptBatch {
  std::vector<PromptSpec> prompts;
  std::vector<std::string> warnings;
};

struct Dataset {
  std::vector<PreferenceTuple> tuples;
  std::vector<std::string> warnings;
};

namespace detail {

// Calls the teacher, retrying once on a client error.
inline std::optional<std::string> ask_teacher(TeacherClient& teacher, const TeacherRequest& req,
                                              std::string* error) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      return teacher.generate(req);
    } catch (const Error& e) {
      *error = e.what();
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Prompt i sits at story time i mod T; its tone and intent come from
// SeededStream(seed + i), so any prompt can be regenerated on its own.
inline PromptBatch gen_persona_prompts(const CharacterProfile& profile, const std::vector<StoryTime>& timeline,
                                       std::size_t n, std::uint64_t seed, TeacherClient& teacher,
                                       const GenOptions& options = {}) {
  if (n == 0) fail(ErrorKind::invalid_argument, "n must be at least 1");
  if (timeline.empty()) fail(ErrorKind::invalid_argument, "timeline is empty");
  struct Slot {
    std::optional<PromptSpec> prompt;
    std::string warning;
  };
  auto slots = parallel_map(n, options.parallelism, [&](std::size_t i) {
    SeededStream rng(seed + i);
    PromptSpec p;
    p.character = profile.canonical_name;
    p.t = timeline[i % timeline.size()].ordinal;
    p.tone = static_cast<Tone>(rng.index(kToneCount));
    p.intent = static_cast<Intent>(rng.index(kIntentCount));
    p.seed = seed + i;
    TeacherRequest req;
    req.task = TeacherRequest::Task::user_prompt;
    req.profile = &profile;
    req.time = timeline[i % timeline.size()];
    req.tone = p.tone;
    req.intent = p.intent;
    req.seed = p.seed;
    std::string err;
    auto text = detail::ask_teacher(teacher, req, &err);
    if (!text || text->empty()) return Slot{std::nullopt, "prompt " + std::to_string(i) + " skipped: " + err};
    p.text = std::move(*text);
    return Slot{std::move(p), {}};
  });
  PromptBatch batch;
  for (auto& s : slots) {
    if (s.prompt) batch.prompts.push_back(std::move(*s.prompt));
    if (!s.warning.empty()) batch.warnings.push_back(std::move(s.warning));
  }
  return batch;
}

struct PairOutcome {
  std::optional<PreferenceTuple> tuple;
  std::string warning;
};

// o_pos is the in-character reply; o_neg carries persona_drift for even seeds
// and frame_break for odd ones. An o_neg equal to o_pos is requested once more
// and the pair is dropped if it still matches.
inline PairOutcome gen_preference_pair(const PromptSpec& prompt, const CharacterProfile& profile,
                                       const StoryTime& time, TeacherClient& teacher) {
  TeacherRequest req;
  req.profile = &profile;
  req.time = time;
  req.tone = prompt.tone;
  req.intent = prompt.intent;
  req.question = prompt.text;
  req.seed = prompt.seed;
  const NegFlaw flaw = prompt.seed % 2 == 0 ? NegFlaw::persona_drift : NegFlaw::frame_break;

  std::string err;
  req.style = ReplyStyle::in_character;
  auto pos = detail::ask_teacher(teacher, req, &err);
  if (!pos) return {std::nullopt, "teacher failed: " + err};
  req.style = flaw == NegFlaw::persona_drift ? ReplyStyle::persona_drift : ReplyStyle::frame_break;
  std::optional<std::string> neg;
  for (int attempt = 0; attempt < 2; ++attempt) {
    neg = detail::ask_teacher(teacher, req, &err);
    if (!neg) return {std::nullopt, "teacher failed: " + err};
    if (*neg != *pos) break;
  }
  if (*neg == *pos) return {std::nullopt, "pair for seed " + std::to_string(prompt.seed) + " dropped: o_pos equals o_neg"};
  return {PreferenceTuple{prompt, std::move(*pos), std::move(*neg), DatasetKind::persona, flaw, std::nullopt}, {}};
}

// Persona prompts for one character turned into preference pairs.
inline Dataset gen_persona_dataset(const DiegeticGraph& graph, const std::string& character, std::size_t n,
                                   std::uint64_t seed, TeacherClient& teacher, const GenOptions& options = {}) {
  const CharacterProfile* profile = graph.find_profile(character);
  if (!profile) fail(ErrorKind::not_found, "unknown character '" + character + "'");
  auto batch = gen_persona_prompts(*profile, graph.timeline(), n, seed, teacher, options);
  Dataset out;
  out.warnings = std::move(batch.warnings);
  auto pairs = parallel_map(batch.prompts.size(), options.parallelism, [&](std::size_t i) {
    const auto& p = batch.prompts[i];
    return gen_preference_pair(p, *profile, graph.story_time(p.t), teacher);
  });
  for (auto& pr : pairs) {
    if (pr.tuple) out.tuples.push_back(std::move(*pr.tuple));
    if (!pr.warning.empty()) out.warnings.push_back(std::move(pr.warning));
  }
  return out;
}

// How the story time of a CRE question is chosen.
struct TimePolicy {
  enum class Mode { uniform, fixed } mode = Mode::uniform;
  Ordinal fixed_t = 0;

  static TimePolicy uniform() { return {}; }
  static TimePolicy fixed(Ordinal t) { return {Mode::fixed, t}; }
};

// Question phrasings about a named event.
inline std::string event_question(std::string_view title, std::size_t variant) {
  static const std::array<const char*, 4> kForms = {
      "What do you know about \"{{title}}\"?",
      "Tell me what happened in \"{{title}}\".",
      "How did you feel during \"{{title}}\"?",
      "Describe \"{{title}}\" to me in your own words.",
  };
  return fill_template(kForms[variant % kForms.size()], {{"title", std::string(title)}});
}

namespace detail {

inline std::vector<const GraphNode*> event_nodes(const DiegeticGraph& g) {
  std::vector<const GraphNode*> out;
  for (const auto& n : g.nodes()) {
    if (n.kind == NodeKind::event) out.push_back(&n);
  }
  return out;
}

inline std::string event_fact(const GraphNode& e) {
  return e.description.empty() ? e.name + "." : e.description;
}

template <typename Pred>
std::vector<const GraphNode*> filter_events(const std::vector<const GraphNode*>& events, Pred pred) {
  std::vector<const GraphNode*> out;
  for (const auto* e : events) {
    if (pred(*e)) out.push_back(e);
  }
  return out;
}

}  // namespace detail

// Stage-2 preference data.
//   general_qa            o_pos recalls event E (anchor <= t), o_neg recalls a
//                         different event E'            -> wrong_event
//   temporal_adversarial  asks about E with anchor > t; o_pos feigns ignorance,
//                         o_neg answers from E's summary -> spoiler_leak
//   out_of_domain         a question-bank request; o_pos declines in character,
//                         o_neg answers it               -> ooc_answer
// Tuple i is drawn from SeededStream(seed + i). Under the uniform policy t is
// uniform over the ordinals that admit a valid question.
inline Dataset gen_cre_dataset(const DiegeticGraph& graph, DatasetKind kind, std::size_t n, TimePolicy policy,
                               std::uint64_t seed, TeacherClient& teacher, const GenOptions& options = {}) {
  if (kind == DatasetKind::persona) fail(ErrorKind::invalid_argument, "persona data comes from gen_persona_dataset");
  if (graph.profiles().empty()) fail(ErrorKind::invalid_argument, "graph has no character profiles");
  if (policy.mode == TimePolicy::Mode::fixed && !graph.valid_time(policy.fixed_t)) {
    fail(ErrorKind::invalid_argument, "fixed story time " + std::to_string(policy.fixed_t) + " is not on the timeline");
  }
  const auto events = detail::event_nodes(graph);
  const Ordinal T = graph.time_count();
  Ordinal max_anchor = 0;
  for (const auto* e : events) max_anchor = std::max(max_anchor, *e->anchor);

  if (kind == DatasetKind::general_qa) {
    if (events.size() < 2) {
      fail(ErrorKind::invalid_argument,
           "general_qa needs at least 2 events, graph has " + std::to_string(events.size()));
    }
    if (policy.mode == TimePolicy::Mode::fixed &&
        detail::filter_events(events, [&](const GraphNode& e) { return *e.anchor <= policy.fixed_t; }).empty()) {
      fail(ErrorKind::invalid_argument,
           "general_qa needs an event at or before t=" + std::to_string(policy.fixed_t) + ", found 0");
    }
  }
  if (kind == DatasetKind::temporal_adversarial) {
    const Ordinal t0 = policy.mode == TimePolicy::Mode::fixed ? policy.fixed_t : 0;
    if (events.empty() || max_anchor <= t0) {
      fail(ErrorKind::invalid_argument,
           "temporal_adversarial needs an event after t=" + std::to_string(t0) + ", found 0");
    }
  }

  auto one = [&](std::size_t i) -> PairOutcome {
    const std::uint64_t s = seed + i;
    SeededStream rng(s);
    const CharacterProfile& profile = graph.profiles()[rng.index(graph.profiles().size())];
    CreQuestion q;
    q.character = profile.canonical_name;
    q.seed = s;
    TeacherRequest req;
    req.profile = &profile;
    req.seed = s;
    PreferenceTuple tuple;
    tuple.dataset_kind = kind;
    ReplyStyle pos_style{}, neg_style{};
    std::string pos_context, neg_context;

    switch (kind) {
      case DatasetKind::general_qa: {
        const GraphNode* e = nullptr;
        if (policy.mode == TimePolicy::Mode::fixed) {
          q.t = policy.fixed_t;
          const auto known = detail::filter_events(events, [&](const GraphNode& x) { return *x.anchor <= q.t; });
          e = known[rng.index(known.size())];
        } else {
          e = events[rng.index(events.size())];
          q.t = *e->anchor + rng.index(T - *e->anchor);
        }
        const auto others = detail::filter_events(events, [&](const GraphNode& x) { return &x != e; });
        const GraphNode* alt = others[rng.index(others.size())];
        q.target_event = e->node_id;
        q.target_anchor = *e->anchor;
        q.negative_event = alt->node_id;
        q.question = event_question(e->name, rng.index(4));
        tuple.neg_flaw = NegFlaw::wrong_event;
        pos_style = neg_style = ReplyStyle::recollection;
        pos_context = detail::event_fact(*e);
        neg_context = detail::event_fact(*alt);
        break;
      }
      case DatasetKind::temporal_adversarial: {
        q.t = policy.mode == TimePolicy::Mode::fixed ? policy.fixed_t : rng.index(max_anchor);
        const auto future = detail::filter_events(events, [&](const GraphNode& x) { return *x.anchor > q.t; });
        const GraphNode* e = future[rng.index(future.size())];
        q.target_event = e->node_id;
        q.target_anchor = *e->anchor;
        q.question = event_question(e->name, rng.index(4));
        tuple.neg_flaw = NegFlaw::spoiler_leak;
        pos_style = ReplyStyle::feigned_ignorance;
        neg_style = ReplyStyle::factual_answer;
        neg_context = detail::event_fact(*e);
        break;
      }
      case DatasetKind::out_of_domain: {
        q.t = policy.mode == TimePolicy::Mode::fixed ? policy.fixed_t : rng.index(T);
        const auto& bank = ood_bank();
        q.bank_index = rng.index(bank.size());
        q.question = bank[*q.bank_index].question;
        tuple.neg_flaw = NegFlaw::ooc_answer;
        pos_style = ReplyStyle::ooc_rejection;
        neg_style = ReplyStyle::factual_answer;
        neg_context = bank[*q.bank_index].answer;
        break;
      }
      case DatasetKind::persona: break;
    }

    req.time = graph.story_time(q.t);
    req.question = q.question;
    std::string err;
    req.style = pos_style;
    req.context = pos_context;
    auto pos = detail::ask_teacher(teacher, req, &err);
    if (!pos) return {std::nullopt, "tuple " + std::to_string(i) + " skipped: " + err};
    req.style = neg_style;
    req.context = neg_context;
    std::optional<std::string> neg;
    for (int attempt = 0; attempt < 2; ++attempt) {
      neg = detail::ask_teacher(teacher, req, &err);
      if (!neg) return {std::nullopt, "tuple " + std::to_string(i) + " skipped: " + err};
      if (*neg != *pos) break;
    }
    if (*neg == *pos) return {std::nullopt, "tuple " + std::to_string(i) + " dropped: o_pos equals o_neg"};
    tuple.prompt = std::move(q);
    tuple.o_pos = std::move(*pos);
    tuple.o_neg = std::move(*neg);
    return {std::move(tuple), {}};
  };

  Dataset out;
  for (auto& r : parallel_map(n, options.parallelism, one)) {
    if (r.tuple) out.tuples.push_back(std::move(*r.tuple));
    if (!r.warning.empty()) out.warnings.push_back(std::move(r.warning));
  }
  return out;
}

// Stores the gated retrieval context for the tuple's question at its t.
inline PreferenceTuple attach_context(PreferenceTuple tuple, const DiegeticGraph& graph, const Embedder& embedder,
                                      AnalyzerClient* analyzer, std::size_t k, std::size_t pool = 32) {
  RetrievalConfig cfg;
  cfg.k = k;
  cfg.pool = pool;
  tuple.context = retrieve(graph, tuple.question(), tuple.t(), tuple.character(), embedder, analyzer, cfg);
  return tuple;
}

// Every invariant violation of a tuple, empty when valid. With a graph, event
// references and story times are checked against it too.
inline std::vector<std::string> check_tuple(const PreferenceTuple& t, const DiegeticGraph* graph = nullptr) {
  std::vector<std::string> bad;
  if (t.o_pos.empty() || t.o_neg.empty()) bad.push_back("empty response");
  if (t.o_pos == t.o_neg) bad.push_back("o_pos equals o_neg");
  if (!flaw_allowed(t.dataset_kind, t.neg_flaw)) {
    bad.push_back("neg_flaw " + enum_name(t.neg_flaw) + " not allowed for " + enum_name(t.dataset_kind));
  }
  const bool persona_prompt = std::holds_alternative<PromptSpec>(t.prompt);
  if (persona_prompt != (t.dataset_kind == DatasetKind::persona)) bad.push_back("prompt type does not match dataset_kind");
  if (t.question().empty()) bad.push_back("empty prompt text");
  if (graph && !graph->valid_time(t.t())) bad.push_back("t not on the timeline");
  if (graph && !graph->find_profile(t.character())) bad.push_back("unknown character " + t.character());

  if (const auto* q = std::get_if<CreQuestion>(&t.prompt)) {
    auto check_event = [&](const std::optional<std::string>& id, const char* what) -> const GraphNode* {
      if (!id) {
        bad.push_back(std::string("missing ") + what);
        return nullptr;
      }
      if (!graph) return nullptr;
      const GraphNode* n = graph->find_node(*id);
      if (!n || n->kind != NodeKind::event) bad.push_back(std::string(what) + " is not an event: " + *id);
      return n;
    };
    if (t.dataset_kind == DatasetKind::general_qa) {
      const auto* e = check_event(q->target_event, "target_event");
      check_event(q->negative_event, "negative_event");
      if (q->target_event && q->negative_event && *q->target_event == *q->negative_event) {
        bad.push_back("negative_event equals target_event");
      }
      if (!q->target_anchor || *q->target_anchor > q->t) bad.push_back("general_qa target is not in the past");
      if (e && e->anchor != q->target_anchor) bad.push_back("target_anchor disagrees with the graph");
    }
    if (t.dataset_kind == DatasetKind::temporal_adversarial) {
      const auto* e = check_event(q->target_event, "target_event");
      if (!q->target_anchor || *q->target_anchor <= q->t) bad.push_back("temporal_adversarial target is not in the future");
      if (e && e->anchor != q->target_anchor) bad.push_back("target_anchor disagrees with the graph");
    }
    if (t.dataset_kind == DatasetKind::out_of_domain) {
      if (!q->bank_index || *q->bank_index >= ood_bank().size()) bad.push_back("bank_index out of range");
    }
  }
  if (t.context) {
    if (t.context->t_star != t.t()) bad.push_back("context t_star differs from tuple t");
    for (const auto& item : t.context->items) {
      if (item.anchor > t.t()) bad.push_back("context item " + item.item_id + " is anchored after t");
    }
  }
  return bad;
}

}  // namespace diegesis
