#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "diegesis/core/error.hpp"

namespace diegesis {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes through a sibling temp file and renames, so readers never observe
// a half-written file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) fail(ErrorKind::io, "write failed for " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::io, "cannot rename into " + path.string() + ": " + ec.message());
}

// Parses JSON, converting library errors into ErrorKind::parse with the byte
// offset of the failure.
inline nlohmann::json parse_json(std::string_view text, std::string_view what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::parse,
                std::string(what) + ": parse error at byte " + std::to_string(e.byte) + ": " +
                    e.what(),
                e.byte);
  }
}

// Runs a from_json conversion, reporting schema mismatches as parse errors.
template <typename T>
T decode_json(const nlohmann::json& j, std::string_view what) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string(what) + ": schema mismatch: " + e.what());
  }
}

// Canonical text: sorted keys (nlohmann objects are ordered maps), two-space
// indent, trailing newline.
inline std::string canonical_dump(const nlohmann::json& j) {
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

}  // namespace diegesis
