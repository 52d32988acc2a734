#pragma once

// Externalized detection tables shared by the CLI and the browser extension.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "formscope/model.hpp"
#include "json.hpp"

namespace formscope {

inline constexpr std::string_view kRulesFormat = "formscope-rules/1";

struct DetectionRules {
  std::string meta_config_url_prefix = "connect.facebook.net/signals/config/";
  std::string google_config_host = "googletagmanager.com";
  std::map<std::string, TagKind> google_tag_prefixes;
  std::map<Provider, std::vector<std::string>> collection_urls;
  // Wire token -> field. Must be injective.
  std::map<std::string, PiiField> abbreviation_map;
  std::string automatic_key = "udff";
  std::string manual_key = "ud";
  std::string first_party_filename_marker = "googletagmanager";
  // Any one of these must appear in a first-party tag body, next to a
  // recognizable tag ID, for it to count as a Google Tag configuration.
  std::vector<std::string> first_party_probe_markers;

  static DetectionRules defaults();

  // Throws Error when the abbreviation map is not injective, a provider has
  // no collection URLs, or a tag prefix maps outside the known table.
  void validate() const;

  std::optional<PiiField> field_for_token(std::string_view token) const;
  std::string token_for_field(PiiField field) const;

  friend bool operator==(const DetectionRules&, const DetectionRules&) = default;
};

nlohmann::json rules_to_json(const DetectionRules& rules);
DetectionRules rules_from_json(const nlohmann::json& j);
DetectionRules load_rules(const std::string& path);

}  // namespace formscope
