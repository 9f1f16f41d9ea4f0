#pragma once

#include <string>
#include <vector>

#include "diegesis/assets.hpp"
#include "diegesis/core/error.hpp"
#include "diegesis/core/text.hpp"

namespace diegesis {

// One frame-breaking request with a correct real-world answer.
struct OodItem {
  std::string question;
  std::string answer;
};

// Parses "question<TAB>answer" lines; '#' lines and blank lines are skipped.
inline std::vector<OodItem> parse_ood_bank(std::string_view tsv) {
  std::vector<OodItem> items;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= tsv.size()) {
    std::size_t nl = tsv.find('\n', pos);
    if (nl == std::string_view::npos) nl = tsv.size();
    const std::string_view line = text::trim(tsv.substr(pos, nl - pos));
    ++line_no;
    pos = nl + 1;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) {
      fail(ErrorKind::parse, "question bank line " + std::to_string(line_no) + ": expected question<TAB>answer");
    }
    items.push_back({std::string(text::trim(line.substr(0, tab))), std::string(text::trim(line.substr(tab + 1)))});
  }
  return items;
}

inline const std::vector<OodItem>& ood_bank() {
  static const std::vector<OodItem> kBank = parse_ood_bank(assets::ood_questions_v1_tsv);
  return kBank;
}

}  // namespace diegesis
