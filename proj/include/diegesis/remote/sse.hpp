#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace diegesis::remote {

struct SseEvent {
  std::string event = "message";
  std::string data;

  bool operator==(const SseEvent&) const = default;
};

inline std::string format_sse(std::string_view event, std::string_view data) {
  std::string out = "event: ";
  out.append(event);
  out.append("\n");
  // Multi-line payloads become one data field per line.
  std::size_t start = 0;
  while (true) {
    const auto nl = data.find('\n', start);
    out.append("data: ");
    out.append(data.substr(start, nl == std::string_view::npos ? data.size() - start : nl - start));
    out.append("\n");
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  out.append("\n");
  return out;
}

// Incremental server-sent-events decoder. Bytes may arrive split at any
// position; complete events are returned as soon as their blank line lands.
class SseParser {
 public:
  std::vector<SseEvent> feed(std::string_view bytes) {
    buffer_.append(bytes);
    std::vector<SseEvent> out;
    std::size_t pos = 0;
    while (true) {
      const auto nl = buffer_.find('\n', pos);
      if (nl == std::string::npos) break;
      std::string_view line(buffer_.data() + pos, nl - pos);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      pos = nl + 1;
      if (line.empty()) {
        if (has_data_) out.push_back(current_);
        current_ = SseEvent{};
        has_data_ = false;
        continue;
      }
      if (line.front() == ':') continue;
      const auto colon = line.find(':');
      std::string_view field = line.substr(0, colon);
      std::string_view value = colon == std::string_view::npos ? std::string_view{} : line.substr(colon + 1);
      if (!value.empty() && value.front() == ' ') value.remove_prefix(1);
      if (field == "event") {
        current_.event = std::string(value);
      } else if (field == "data") {
        if (has_data_) current_.data.push_back('\n');
        current_.data.append(value);
        has_data_ = true;
      }
    }
    buffer_.erase(0, pos);
    return out;
  }

 private:
  std::string buffer_;
  SseEvent current_;
  bool has_data_ = false;
};

}  // namespace diegesis::remote
