#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "diegesis/alignment/types.hpp"
#include "diegesis/core/json_io.hpp"

namespace diegesis {

// jsonl: one PreferenceTuple per line, keys sorted, readable by read_dataset.
// dpo:   one {"prompt", "chosen", "rejected", "dataset_kind", "neg_flaw"}
//        record per line for external preference trainers (write only).
enum class DatasetFormat { jsonl, dpo };

inline std::string dpo_prompt(const PreferenceTuple& t) {
  std::string out;
  if (t.context && !t.context->items.empty()) {
    out += "Context:\n";
    for (const auto& item : t.context->items) out += "- [t=" + std::to_string(item.anchor) + "] " + item.text + "\n";
    out += "\n";
  }
  out += t.character() + " is asked: " + t.question();
  return out;
}

inline std::string dataset_line(const PreferenceTuple& t, DatasetFormat format) {
  nlohmann::json j;
  if (format == DatasetFormat::jsonl) {
    j = t;
  } else {
    j = {{"prompt", dpo_prompt(t)},
         {"chosen", t.o_pos},
         {"rejected", t.o_neg},
         {"dataset_kind", t.dataset_kind},
         {"neg_flaw", t.neg_flaw}};
  }
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

inline std::string serialize_dataset(const std::vector<PreferenceTuple>& tuples,
                                     DatasetFormat format = DatasetFormat::jsonl) {
  std::string out;
  for (const auto& t : tuples) out += dataset_line(t, format) + "\n";
  return out;
}

inline void export_dataset(const std::vector<PreferenceTuple>& tuples, const std::filesystem::path& path,
                           DatasetFormat format = DatasetFormat::jsonl) {
  write_file_atomic(path, serialize_dataset(tuples, format));
}

// Parses jsonl text; errors name the 1-based line.
inline std::vector<PreferenceTuple> parse_dataset(std::string_view text) {
  std::vector<PreferenceTuple> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    ++line_no;
    pos = nl + 1;
    if (text::trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) fail(ErrorKind::parse, "line " + std::to_string(line_no) + ": malformed JSON");
    try {
      out.push_back(j.get<PreferenceTuple>());
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::parse, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorKind::parse, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<PreferenceTuple> read_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path));
}

}  // namespace diegesis
