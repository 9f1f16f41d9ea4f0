#pragma once

#include <map>
#include <string>
#include <string_view>

namespace diegesis {

// Replaces every {{key}} with its value. Unknown keys are left in place.
inline std::string fill_template(std::string_view tmpl,
                                 const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(tmpl.substr(pos, open - pos));
    const auto key = tmpl.substr(open + 2, close - open - 2);
    const auto it = values.find(key);
    if (it != values.end()) {
      out.append(it->second);
    } else {
      out.append(tmpl.substr(open, close + 2 - open));
    }
    pos = close + 2;
  }
  out.append(tmpl.substr(pos));
  return out;
}

}  // namespace diegesis
