#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "diegesis/core/error.hpp"
#include "diegesis/core/text.hpp"
#include "diegesis/remote/sse.hpp"

namespace diegesis::remote {

// Process-wide switch set by `--offline`. While on, constructing any network
// client throws, so an offline run cannot reach the network by accident.
inline std::atomic<bool>& offline_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

inline void set_offline(bool offline) { offline_flag().store(offline); }
inline bool is_offline() { return offline_flag().load(); }

struct Endpoint {
  std::string base_url;  // e.g. http://localhost:8000/v1
  std::string api_key;
  std::string model;
  std::chrono::seconds timeout{120};
  int retries = 1;
};

inline std::string env_or(const char* name, std::string fallback = {}) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

// Reads DIEGESIS_<ROLE>_URL, DIEGESIS_<ROLE>_MODEL and DIEGESIS_<ROLE>_KEY,
// falling back to DIEGESIS_API_KEY for the key. ROLE is upper-cased.
inline Endpoint endpoint_from_env(std::string_view role) {
  std::string upper(role);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  const std::string prefix = "DIEGESIS_" + upper + "_";
  Endpoint ep;
  ep.base_url = env_or((prefix + "URL").c_str());
  ep.model = env_or((prefix + "MODEL").c_str(), "default");
  ep.api_key = env_or((prefix + "KEY").c_str(), env_or("DIEGESIS_API_KEY"));
  return ep;
}

struct ChatMessage {
  std::string role;
  std::string content;
};

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

inline SplitUrl split_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    fail(ErrorKind::config, "endpoint URL must include a scheme: " + std::string(url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = std::string(url.substr(0, path_start));
  if (path_start != std::string_view::npos) {
    out.prefix = std::string(url.substr(path_start));
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  }
  return out;
}

}  // namespace detail

// Minimal client for chat-completions and embeddings style HTTP endpoints.
class ChatClient {
 public:
  explicit ChatClient(Endpoint endpoint) : endpoint_(std::move(endpoint)) {
    if (is_offline()) {
      fail(ErrorKind::config, "network client requested while offline");
    }
    if (endpoint_.base_url.empty()) {
      fail(ErrorKind::config, "endpoint URL is not configured");
    }
    url_ = detail::split_url(endpoint_.base_url);
  }

  const Endpoint& endpoint() const { return endpoint_; }

  std::string complete(const std::vector<ChatMessage>& messages,
                       std::string_view model_override = {}) const {
    nlohmann::json body = request_body(messages, model_override, false);
    const nlohmann::json reply = post_json("/chat/completions", body);
    try {
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::remote, std::string("malformed chat completion: ") + e.what());
    }
  }

  // Streams a chat completion, forwarding each content delta in order.
  // Returns the concatenated text.
  std::string stream(const std::vector<ChatMessage>& messages,
                     const std::function<void(std::string_view)>& on_delta,
                     std::string_view model_override = {}) const {
    nlohmann::json body = request_body(messages, model_override, true);
    auto client = make_client();
    httplib::Request req;
    req.method = "POST";
    req.path = url_.prefix + "/chat/completions";
    req.headers = headers();
    req.set_header("Content-Type", "application/json");
    req.set_header("Accept", "text/event-stream");
    req.body = body.dump();
    SseParser parser;
    std::string full;
    std::string failure;
    req.content_receiver = [&](const char* data, std::size_t len, std::uint64_t, std::uint64_t) {
      for (const auto& ev : parser.feed(std::string_view(data, len))) {
        if (ev.data == "[DONE]") continue;
        const auto parsed = nlohmann::json::parse(ev.data, nullptr, false);
        if (parsed.is_discarded()) {
          failure = "unparseable stream chunk";
          return false;
        }
        const auto& choices = parsed.value("choices", nlohmann::json::array());
        if (choices.empty()) continue;
        const auto delta = choices[0].value("delta", nlohmann::json::object()).value("content", std::string{});
        if (!delta.empty()) {
          full += delta;
          on_delta(delta);
        }
      }
      return true;
    };
    auto res = client.send(req);
    if (!failure.empty()) fail(ErrorKind::remote, failure);
    if (!res) fail(ErrorKind::remote, "request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
      fail(ErrorKind::remote, "endpoint returned HTTP " + std::to_string(res->status));
    }
    return full;
  }

  std::vector<double> embed(std::string_view input) const {
    nlohmann::json body = {{"model", endpoint_.model}, {"input", std::string(input)}};
    const nlohmann::json reply = post_json("/embeddings", body);
    try {
      return reply.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::remote, std::string("malformed embedding response: ") + e.what());
    }
  }

 private:
  nlohmann::json request_body(const std::vector<ChatMessage>& messages,
                              std::string_view model_override, bool stream) const {
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    nlohmann::json body = {
        {"model", model_override.empty() ? endpoint_.model : std::string(model_override)},
        {"messages", std::move(msgs)},
        {"temperature", 0},
    };
    if (stream) body["stream"] = true;
    return body;
  }

  httplib::Headers headers() const {
    httplib::Headers h;
    if (!endpoint_.api_key.empty()) h.emplace("Authorization", "Bearer " + endpoint_.api_key);
    return h;
  }

  httplib::Client make_client() const {
    httplib::Client client(url_.origin);
    client.set_connection_timeout(endpoint_.timeout);
    client.set_read_timeout(endpoint_.timeout);
    client.set_write_timeout(endpoint_.timeout);
    return client;
  }

  nlohmann::json post_json(const std::string& path, const nlohmann::json& body) const {
    std::string last_error;
    for (int attempt = 0; attempt <= endpoint_.retries; ++attempt) {
      auto client = make_client();
      auto res = client.Post(url_.prefix + path, headers(), body.dump(), "application/json");
      if (!res) {
        last_error = "request failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "endpoint returned HTTP " + std::to_string(res->status);
        if (res->status < 500) break;
        continue;
      }
      auto parsed = nlohmann::json::parse(res->body, nullptr, false);
      if (parsed.is_discarded()) {
        last_error = "endpoint returned non-JSON body";
        continue;
      }
      return parsed;
    }
    fail(ErrorKind::remote, last_error);
  }

  Endpoint endpoint_;
  detail::SplitUrl url_;
};

// Strips a ```json fence some chat models wrap around structured replies.
inline std::string_view strip_code_fence(std::string_view s) {
  s = text::trim(s);
  if (s.substr(0, 3) == "```") {
    const auto nl = s.find('\n');
    const auto end = s.rfind("```");
    if (nl != std::string_view::npos && end != std::string_view::npos && end > nl) {
      return text::trim(s.substr(nl + 1, end - nl - 1));
    }
  }
  return s;
}

}  // namespace diegesis::remote
