#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace diegesis {

struct Issue {
  std::string locator;  // e.g. "relations[3]"
  std::string rule;
  std::string message;

  bool operator==(const Issue&) const = default;
};

struct ValidationReport {
  std::vector<Issue> errors;
  std::vector<Issue> warnings;

  bool ok() const { return errors.empty(); }
  bool operator==(const ValidationReport&) const = default;
};

inline void to_json(nlohmann::json& j, const Issue& i) {
  j = {{"locator", i.locator}, {"rule", i.rule}, {"message", i.message}};
}

inline void to_json(nlohmann::json& j, const ValidationReport& r) {
  j = {{"errors", r.errors}, {"warnings", r.warnings}};
}

}  // namespace diegesis
