#pragma once

#include <cstddef>
#include <future>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "diegesis/core/error.hpp"
#include "diegesis/core/text.hpp"
#include "diegesis/ingest/report.hpp"
#include "diegesis/ingest/segment.hpp"
#include "diegesis/ingest/types.hpp"
#include "diegesis/remote/client.hpp"

namespace diegesis {

enum class ExtractionPass { entities, relations, events };

inline const char* to_string(ExtractionPass p) {
  switch (p) {
    case ExtractionPass::entities: return "entities";
    case ExtractionPass::relations: return "relations";
    case ExtractionPass::events: return "events";
  }
  return "entities";
}

struct ExtractionRequest {
  ExtractionPass pass = ExtractionPass::entities;
  const Span* span = nullptr;
  std::string time_label;  // default story-time label for records in this span
};

// One call per span per pass. Implementations return the raw JSON payload:
//   entities pass:  {"entities": [...], "profiles": [...]}
//   relations pass: {"relations": [...]}
//   events pass:    {"events": [...], "background": [...]}
// Records carry an optional "time" label instead of an ordinal; ordinals are
// assigned by run_extractor in order of first appearance.
class ExtractorClient {
 public:
  virtual ~ExtractorClient() = default;
  virtual std::string extract(const ExtractionRequest& request) = 0;
};

struct ExtractionResult {
  ExtractionBundle bundle;
  ValidationReport report;
  std::size_t calls = 0;
};

struct ExtractorOptions {
  std::size_t parallelism = 1;  // concurrent spans; results merge in span order
  std::vector<CharacterProfile> seed_profiles;
};

namespace detail {

struct SpanPayloads {
  std::vector<std::optional<nlohmann::json>> payloads;  // one per pass
  std::vector<Issue> errors;
  std::vector<Issue> warnings;
  std::size_t calls = 0;
};

inline std::string span_locator(const Span& s, ExtractionPass p) {
  return "spans[" + s.span_id + "]." + to_string(p);
}

inline SpanPayloads call_passes(ExtractorClient& client, const Span& span,
                                const std::string& time_label) {
  SpanPayloads out;
  for (auto pass : {ExtractionPass::entities, ExtractionPass::relations, ExtractionPass::events}) {
    const ExtractionRequest req{pass, &span, time_label};
    std::optional<nlohmann::json> payload;
    try {
      for (int attempt = 0; attempt < 2 && !payload; ++attempt) {
        ++out.calls;
        const std::string raw = client.extract(req);
        auto parsed = nlohmann::json::parse(remote::strip_code_fence(raw), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) payload = std::move(parsed);
      }
      if (!payload) {
        out.warnings.push_back({span_locator(span, pass), "unparseable_response",
                                "extractor response was not a JSON object after one retry"});
      }
    } catch (const Error& e) {
      out.errors.push_back({span_locator(span, pass), "extractor_failure", e.what()});
    }
    out.payloads.push_back(std::move(payload));
  }
  return out;
}

class TimelineBuilder {
 public:
  Ordinal ordinal(const std::string& label) {
    auto it = index_.find(label);
    if (it != index_.end()) return it->second;
    const Ordinal o = labels_.size();
    index_.emplace(label, o);
    labels_.push_back(label);
    return o;
  }

  std::vector<StoryTime> timeline() const {
    std::vector<StoryTime> out;
    for (std::size_t i = 0; i < labels_.size(); ++i) out.push_back({i, labels_[i]});
    return out;
  }

 private:
  std::map<std::string, Ordinal> index_;
  std::vector<std::string> labels_;
};

inline void merge_profile(std::vector<CharacterProfile>& profiles, CharacterProfile incoming) {
  for (auto& p : profiles) {
    if (text::fold_key(p.canonical_name) != text::fold_key(incoming.canonical_name)) continue;
    auto add_unique = [](std::vector<std::string>& into, const std::vector<std::string>& from) {
      for (const auto& v : from) {
        bool seen = false;
        for (const auto& x : into) seen = seen || text::fold_key(x) == text::fold_key(v);
        if (!seen) into.push_back(v);
      }
    };
    add_unique(p.aliases, incoming.aliases);
    add_unique(p.core_attributes, incoming.core_attributes);
    if (p.origin.empty()) p.origin = incoming.origin;
    for (auto& d : incoming.drives) {
      if (std::find(p.drives.begin(), p.drives.end(), d) == p.drives.end()) p.drives.push_back(d);
    }
    for (auto& r : incoming.relationships) {
      if (std::find(p.relationships.begin(), p.relationships.end(), r) == p.relationships.end()) {
        p.relationships.push_back(r);
      }
    }
    std::stable_sort(p.drives.begin(), p.drives.end(),
                     [](const Drive& a, const Drive& b) { return a.valid_from < b.valid_from; });
    return;
  }
  profiles.push_back(std::move(incoming));
}

}  // namespace detail

inline std::string default_time_label(const Chapter& chapter) {
  return chapter.heading.empty() ? "Chapter " + std::to_string(chapter.index + 1) : chapter.heading;
}

// Runs the three extraction passes over every span and assembles a bundle.
// Story-time labels become timeline ordinals in order of first appearance.
inline ExtractionResult run_extractor(const std::vector<Span>& spans,
                                      const std::vector<Chapter>& chapters,
                                      ExtractorClient& client,
                                      const ExtractorOptions& options = {}) {
  ExtractionResult result;
  if (spans.empty()) {
    result.bundle.profiles = options.seed_profiles;
    return result;
  }
  auto label_for = [&](const Span& s) {
    for (const auto& c : chapters) {
      if (c.index == s.chapter_index) return default_time_label(c);
    }
    return "Chapter " + std::to_string(s.chapter_index + 1);
  };

  std::vector<detail::SpanPayloads> per_span(spans.size());
  const std::size_t width = std::max<std::size_t>(1, options.parallelism);
  for (std::size_t base = 0; base < spans.size(); base += width) {
    const std::size_t end = std::min(spans.size(), base + width);
    if (width == 1) {
      per_span[base] = detail::call_passes(client, spans[base], label_for(spans[base]));
      continue;
    }
    std::vector<std::future<detail::SpanPayloads>> futures;
    for (std::size_t i = base; i < end; ++i) {
      futures.push_back(std::async(std::launch::async, [&, i] {
        return detail::call_passes(client, spans[i], label_for(spans[i]));
      }));
    }
    for (std::size_t i = base; i < end; ++i) per_span[i] = futures[i - base].get();
  }

  detail::TimelineBuilder timeline;
  auto& bundle = result.bundle;
  bundle.profiles = options.seed_profiles;
  auto& report = result.report;

  for (std::size_t si = 0; si < spans.size(); ++si) {
    const Span& span = spans[si];
    auto& sp = per_span[si];
    result.calls += sp.calls;
    report.errors.insert(report.errors.end(), sp.errors.begin(), sp.errors.end());
    report.warnings.insert(report.warnings.end(), sp.warnings.begin(), sp.warnings.end());
    const std::string default_label = label_for(span);
    auto time_of = [&](const nlohmann::json& rec) {
      const auto label = rec.contains("time") && rec["time"].is_string()
                             ? rec["time"].get<std::string>()
                             : default_label;
      return timeline.ordinal(label.empty() ? default_label : label);
    };
    auto drop = [&](ExtractionPass pass, const std::string& what, std::size_t idx,
                    const std::string& why) {
      report.warnings.push_back({detail::span_locator(span, pass) + "." + what + "[" +
                                     std::to_string(idx) + "]",
                                 "schema_invalid_record", why});
    };
    // Make sure the span's own label is on the timeline even if it yields
    // nothing, so chapter order is preserved.
    timeline.ordinal(default_label);

    if (const auto& p = sp.payloads[0]) {
      const auto entities = p->value("entities", nlohmann::json::array());
      for (std::size_t i = 0; entities.is_array() && i < entities.size(); ++i) {
        try {
          const auto& rec = entities[i];
          EntityRecord e;
          e.name = rec.at("name").get<std::string>();
          e.kind = rec.at("kind").get<EntityKind>();
          const auto kind = rec.at("kind").get<std::string>();
          if (kind != "character" && kind != "location" && kind != "object") {
            throw std::runtime_error("unknown entity kind '" + kind + "'");
          }
          e.description = rec.value("description", std::string{});
          e.span_id = span.span_id;
          e.story_time = time_of(rec);
          if (text::trim(e.name).empty()) throw std::runtime_error("empty entity name");
          bundle.entities.push_back(std::move(e));
        } catch (const std::exception& ex) {
          drop(ExtractionPass::entities, "entities", i, ex.what());
        }
      }
      const auto profiles = p->value("profiles", nlohmann::json::array());
      for (std::size_t i = 0; profiles.is_array() && i < profiles.size(); ++i) {
        try {
          auto rec = profiles[i];
          // Drives may name their story time by label.
          if (rec.contains("drives") && rec["drives"].is_array()) {
            for (auto& d : rec["drives"]) {
              if (!d.contains("valid_from")) d["valid_from"] = time_of(d);
            }
          }
          detail::merge_profile(bundle.profiles, rec.get<CharacterProfile>());
        } catch (const std::exception& ex) {
          drop(ExtractionPass::entities, "profiles", i, ex.what());
        }
      }
    }

    if (const auto& p = sp.payloads[1]) {
      const auto relations = p->value("relations", nlohmann::json::array());
      for (std::size_t i = 0; relations.is_array() && i < relations.size(); ++i) {
        try {
          const auto& rec = relations[i];
          RelationRecord r;
          r.subjects = detail::names_from_json(rec.at("subject"));
          r.objects = detail::names_from_json(rec.at("object"));
          r.description = rec.value("description", std::string{});
          r.span_id = span.span_id;
          r.story_time = time_of(rec);
          bundle.relations.push_back(std::move(r));
        } catch (const std::exception& ex) {
          drop(ExtractionPass::relations, "relations", i, ex.what());
        }
      }
    }

    if (const auto& p = sp.payloads[2]) {
      const auto events = p->value("events", nlohmann::json::array());
      for (std::size_t i = 0; events.is_array() && i < events.size(); ++i) {
        try {
          const auto& rec = events[i];
          EventRecord e;
          e.title = rec.at("title").get<std::string>();
          e.summary = rec.value("summary", std::string{});
          e.participants = rec.value("participants", std::vector<std::string>{});
          e.story_time = time_of(rec);
          e.span_id = span.span_id;
          if (text::trim(e.title).empty()) throw std::runtime_error("empty event title");
          bundle.events.push_back(std::move(e));
        } catch (const std::exception& ex) {
          drop(ExtractionPass::events, "events", i, ex.what());
        }
      }
      const auto background = p->value("background", nlohmann::json::array());
      for (std::size_t i = 0; background.is_array() && i < background.size(); ++i) {
        try {
          const auto& rec = background[i];
          BackgroundRecord b;
          b.topic = rec.at("topic").get<std::string>();
          b.description = rec.value("description", std::string{});
          if (rec.contains("time")) b.story_time = time_of(rec);
          bundle.background.push_back(std::move(b));
        } catch (const std::exception& ex) {
          drop(ExtractionPass::events, "background", i, ex.what());
        }
      }
    }
  }
  bundle.timeline = timeline.timeline();
  return result;
}

}  // namespace diegesis
