#include <string>
#include <vector>

#include "adaconv/error.hpp"
#include "adaconv/experiments.hpp"
#include "adaconv/serialization.hpp"
#include "presets_data.hpp"

namespace adaconv {
namespace {

const Json& preset_table() {
  static const Json table = Json::parse(detail::kPresetsJson).at("presets");
  return table;
}

}  // namespace

SweepSpec preset(std::string_view id) {
  for (const Json& entry : preset_table()) {
    if (entry.at("id").get<std::string>() == id) return sweep_spec_from_json(entry);
  }
  throw UsageError("unknown preset '" + std::string(id) + "'");
}

std::vector<std::string> preset_ids() {
  std::vector<std::string> ids;
  for (const Json& entry : preset_table()) ids.push_back(entry.at("id").get<std::string>());
  return ids;
}

}  // namespace adaconv
