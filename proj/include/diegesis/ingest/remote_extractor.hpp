#pragma once

#include <string>

#include "diegesis/assets.hpp"
#include "diegesis/core/template.hpp"
#include "diegesis/ingest/extractor.hpp"
#include "diegesis/remote/client.hpp"

namespace diegesis {

// Extractor backed by a chat-completions endpoint. One request per span per
// pass; the pass's versioned prompt template is the system message and the
// span text is the user message.
class RemoteExtractor : public ExtractorClient {
 public:
  explicit RemoteExtractor(remote::Endpoint endpoint) : client_(std::move(endpoint)) {}

  std::string extract(const ExtractionRequest& request) override {
    std::string_view tmpl;
    switch (request.pass) {
      case ExtractionPass::entities: tmpl = assets::extract_entities_v1_txt; break;
      case ExtractionPass::relations: tmpl = assets::extract_relations_v1_txt; break;
      case ExtractionPass::events: tmpl = assets::extract_events_v1_txt; break;
    }
    const std::string system = fill_template(tmpl, {{"time_label", request.time_label}});
    return client_.complete({{"system", system}, {"user", request.span->text}});
  }

 private:
  remote::ChatClient client_;
};

}  // namespace diegesis
