#pragma once

#include <filesystem>
#include <string>

#include "diegesis/core/json_io.hpp"
#include "diegesis/ingest/types.hpp"

namespace diegesis {

inline std::string serialize_bundle(const ExtractionBundle& bundle) {
  return canonical_dump(nlohmann::json(bundle));
}

inline ExtractionBundle parse_bundle(std::string_view text) {
  return decode_json<ExtractionBundle>(parse_json(text, "bundle"), "bundle");
}

inline void save_bundle(const ExtractionBundle& bundle, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_bundle(bundle));
}

inline ExtractionBundle load_bundle(const std::filesystem::path& path) {
  return parse_bundle(read_file(path));
}

}  // namespace diegesis
