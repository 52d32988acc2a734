#include "formscope/rules.hpp"

#include <set>

#include "formscope/json_io.hpp"

namespace formscope {

using nlohmann::json;

DetectionRules DetectionRules::defaults() {
  DetectionRules rules;
  rules.google_tag_prefixes = {
      {"AW", TagKind::kAds},
      {"DC", TagKind::kFloodlight},
      {"G", TagKind::kGa4},
      {"GT", TagKind::kGa4},
      {"UA", TagKind::kUniversalAnalytics},
  };
  rules.collection_urls = {
      {Provider::kMeta,
       {"facebook.com/privacy_sandbox/register/trigger", "facebook.com/tr"}},
      {Provider::kGoogle,
       {"googleadservices.com/pagead/conversion", "google.com/ccm/form-data/",
        "analytics.google.com/g/collect", "google.com/pagead/form-data/"}},
  };
  // Only "em" and the unabbreviated "external_id" are attested on the wire;
  // the rest follow Meta's advanced-matching parameter names.
  rules.abbreviation_map = {
      {"em", PiiField::kEmail},
      {"ph", PiiField::kPhoneNumber},
      {"fn", PiiField::kFirstName},
      {"ln", PiiField::kLastName},
      {"ct", PiiField::kCity},
      {"st", PiiField::kState},
      {"zp", PiiField::kZipCode},
      {"ge", PiiField::kGender},
      {"country", PiiField::kCountry},
      {"db", PiiField::kDateOfBirth},
      {"external_id", PiiField::kExternalId},
  };
  rules.first_party_probe_markers = {"google_tag_manager",
                                     "googletagmanager.com/gtag/destination"};
  return rules;
}

void DetectionRules::validate() const {
  std::set<PiiField> targets;
  for (const auto& [token, field] : abbreviation_map) {
    if (token.empty()) throw Error("rules: empty abbreviation token");
    if (!targets.insert(field).second) {
      throw Error("rules: abbreviation map is not injective (" +
                  std::string(to_string(field)) + " mapped twice)");
    }
  }
  for (Provider provider : kAllProviders) {
    auto it = collection_urls.find(provider);
    if (it == collection_urls.end() || it->second.empty()) {
      throw Error("rules: no collection URLs for " +
                  std::string(to_string(provider)));
    }
  }
  for (const auto& [prefix, kind] : google_tag_prefixes) {
    if (google_tag_kind_for_prefix(prefix) != kind) {
      throw Error("rules: tag prefix '" + prefix +
                  "' does not map to its product");
    }
  }
  if (meta_config_url_prefix.empty() || google_config_host.empty() ||
      automatic_key.empty() || manual_key.empty()) {
    throw Error("rules: required key is empty");
  }
  if (first_party_probe_markers.empty()) {
    throw Error("rules: first-party probe needs at least one marker");
  }
}

std::optional<PiiField> DetectionRules::field_for_token(
    std::string_view token) const {
  auto it = abbreviation_map.find(std::string(token));
  if (it == abbreviation_map.end()) return std::nullopt;
  return it->second;
}

std::string DetectionRules::token_for_field(PiiField field) const {
  for (const auto& [token, mapped] : abbreviation_map) {
    if (mapped == field) return token;
  }
  return std::string(to_string(field));
}

json rules_to_json(const DetectionRules& rules) {
  json prefixes = json::object();
  for (const auto& [prefix, kind] : rules.google_tag_prefixes) {
    prefixes[prefix] = to_string(kind);
  }
  json collection = json::object();
  for (const auto& [provider, urls] : rules.collection_urls) {
    collection[std::string(to_string(provider))] = urls;
  }
  json abbreviations = json::object();
  for (const auto& [token, field] : rules.abbreviation_map) {
    abbreviations[token] = to_string(field);
  }
  return json{{"format", kRulesFormat},
              {"meta_config_url_prefix", rules.meta_config_url_prefix},
              {"google_config_host", rules.google_config_host},
              {"google_tag_prefixes", prefixes},
              {"collection_urls", collection},
              {"abbreviation_map", abbreviations},
              {"automatic_key", rules.automatic_key},
              {"manual_key", rules.manual_key},
              {"first_party_filename_marker", rules.first_party_filename_marker},
              {"first_party_probe_markers", rules.first_party_probe_markers}};
}

DetectionRules rules_from_json(const json& j) {
  if (j.value("format", std::string{}) != kRulesFormat) {
    throw Error("rules file is not " + std::string(kRulesFormat));
  }
  DetectionRules rules = DetectionRules::defaults();
  try {
    rules.meta_config_url_prefix =
        j.value("meta_config_url_prefix", rules.meta_config_url_prefix);
    rules.google_config_host =
        j.value("google_config_host", rules.google_config_host);
    if (j.contains("google_tag_prefixes")) {
      rules.google_tag_prefixes.clear();
      for (const auto& [prefix, kind] : j["google_tag_prefixes"].items()) {
        auto parsed = parse_tag_kind(kind.get<std::string>());
        if (!parsed) throw Error("rules: unknown tag kind for " + prefix);
        rules.google_tag_prefixes[prefix] = *parsed;
      }
    }
    if (j.contains("collection_urls")) {
      rules.collection_urls.clear();
      for (const auto& [name, urls] : j["collection_urls"].items()) {
        auto provider = parse_provider(name);
        if (!provider) throw Error("rules: unknown provider '" + name + "'");
        rules.collection_urls[*provider] = urls.get<std::vector<std::string>>();
      }
    }
    if (j.contains("abbreviation_map")) {
      rules.abbreviation_map.clear();
      for (const auto& [token, name] : j["abbreviation_map"].items()) {
        auto field = parse_pii_field(name.get<std::string>());
        if (!field) throw Error("rules: unknown PII field for '" + token + "'");
        rules.abbreviation_map[token] = *field;
      }
    }
    rules.automatic_key = j.value("automatic_key", rules.automatic_key);
    rules.manual_key = j.value("manual_key", rules.manual_key);
    rules.first_party_filename_marker = j.value(
        "first_party_filename_marker", rules.first_party_filename_marker);
    rules.first_party_probe_markers = j.value(
        "first_party_probe_markers", rules.first_party_probe_markers);
  } catch (const json::exception& e) {
    throw Error(std::string("rules file: ") + e.what());
  }
  rules.validate();
  return rules;
}

DetectionRules load_rules(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error("rules file '" + path + "' is not valid JSON: " + e.what());
  }
  return rules_from_json(j);
}

}  // namespace formscope
