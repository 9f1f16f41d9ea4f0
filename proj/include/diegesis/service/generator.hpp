#pragma once

#include <functional>
#include <string>

#include "diegesis/remote/client.hpp"
#include "diegesis/service/types.hpp"

namespace diegesis {

struct GenerationRequest {
  AssembledPrompt prompt;
  Ordinal t_current = 0;
  std::size_t context_items = 0;
  std::string user_text;
};

using DeltaSink = std::function<void(std::string_view)>;

// Produces one character reply, reporting text chunks in order through
// on_delta and returning the full text. Must be safe for concurrent use.
class GeneratorClient {
 public:
  virtual ~GeneratorClient() = default;
  virtual std::string generate(const GenerationRequest& request, const DeltaSink& on_delta) = 0;
};

// Offline stand-in. Replies
//   "[<character> @ t=<t> | context items: <n>] You said: <user text>"
// and streams it word by word, so tests can read the gated context size.
class EchoGenerator : public GeneratorClient {
 public:
  std::string generate(const GenerationRequest& r, const DeltaSink& on_delta) override {
    const std::string text = "[" + r.prompt.character + " @ t=" + std::to_string(r.t_current) +
                             " | context items: " + std::to_string(r.context_items) + "] You said: " + r.user_text;
    std::size_t start = 0;
    while (start < text.size()) {
      std::size_t end = text.find(' ', start);
      end = end == std::string::npos ? text.size() : end + 1;
      if (on_delta) on_delta(std::string_view(text).substr(start, end - start));
      start = end;
    }
    return text;
  }
};

// Streams from a chat-completions endpoint; the adapter id is sent as the
// model name.
class RemoteGenerator : public GeneratorClient {
 public:
  explicit RemoteGenerator(remote::Endpoint endpoint) : client_(std::move(endpoint)) {}

  std::string generate(const GenerationRequest& r, const DeltaSink& on_delta) override {
    const auto& p = r.prompt;
    std::string system = p.system_block;
    if (!p.context_block.empty()) system += "\nWhat you know so far:\n" + p.context_block;
    if (!p.history_block.empty()) system += "\nConversation so far:\n" + p.history_block;
    return client_.stream({{"system", system}, {"user", p.user_block}}, on_delta, p.adapter_id);
  }

 private:
  remote::ChatClient client_;
};

}  // namespace diegesis
