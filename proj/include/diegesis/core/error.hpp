#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace diegesis {

enum class ErrorKind {
  invalid_argument,  // caller supplied something malformed or out of range
  not_found,         // unknown id (novel, session, node, character)
  conflict,          // e.g. a second in-flight turn on one session
  parse,             // corrupt file or payload
  version,           // unsupported file format version
  build,             // graph construction failed
  remote,            // network client failure
  config,            // CLI / environment misconfiguration
  io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::parse: return "parse";
    case ErrorKind::version: return "version";
    case ErrorKind::build: return "build";
    case ErrorKind::remote: return "remote";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> byte_offset = std::nullopt)
      : std::runtime_error(message), kind_(kind), byte_offset_(byte_offset) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Set for parse errors raised while reading a file or payload.
  std::optional<std::size_t> byte_offset() const noexcept { return byte_offset_; }

  // HTTP status class the service layer maps this error onto.
  int http_status() const noexcept {
    switch (kind_) {
      case ErrorKind::invalid_argument:
      case ErrorKind::parse:
      case ErrorKind::version:
      case ErrorKind::build: return 400;
      case ErrorKind::not_found: return 404;
      case ErrorKind::conflict: return 409;
      case ErrorKind::remote: return 502;
      default: return 500;
    }
  }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> byte_offset_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace diegesis
