#include "formscope/json_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace formscope {

using nlohmann::json;

namespace {

template <typename T, typename Parser>
T parse_enum(const json& j, Parser parser, std::string_view what) {
  const auto& text = j.get_ref<const std::string&>();
  auto value = parser(text);
  if (!value) throw Error("unknown " + std::string(what) + " '" + text + "'");
  return *value;
}

}  // namespace

json to_json(const PiiFieldSet& fields) {
  json out = json::array();
  for (PiiField field : fields) out.push_back(std::string(to_string(field)));
  return out;
}

PiiFieldSet pii_fields_from_json(const json& j) {
  PiiFieldSet fields;
  for (const auto& item : j) {
    fields.insert(parse_enum<PiiField>(item, parse_pii_field, "PII field"));
  }
  return fields;
}

void to_json(json& j, const SiteRecord& site) {
  j = json{{"domain", site.domain},
           {"rank", site.rank},
           {"vertical", site.vertical.label()}};
}

void from_json(const json& j, SiteRecord& site) {
  site.domain = j.at("domain").get<std::string>();
  site.rank = j.at("rank").get<std::int64_t>();
  site.vertical = Vertical::from_raw(j.at("vertical").get<std::string>());
}

void to_json(json& j, const ParseWarning& warning) {
  j = json{{"site", warning.site},
           {"url", warning.url},
           {"reason", warning.reason}};
}

void from_json(const json& j, ParseWarning& warning) {
  warning.site = j.at("site").get<std::string>();
  warning.url = j.at("url").get<std::string>();
  warning.reason = j.at("reason").get<std::string>();
}

void to_json(json& j, const TrackerInstallation& installation) {
  j = json{{"provider", to_string(installation.provider)},
           {"tracker_id", installation.tracker_id},
           {"tag_kind", to_string(installation.tag_kind)},
           {"first_party_mode", installation.first_party_mode},
           {"source_url", installation.source_url}};
}

void from_json(const json& j, TrackerInstallation& installation) {
  installation.provider =
      parse_enum<Provider>(j.at("provider"), parse_provider, "provider");
  installation.tracker_id = j.at("tracker_id").get<std::string>();
  installation.tag_kind =
      parse_enum<TagKind>(j.at("tag_kind"), parse_tag_kind, "tag kind");
  installation.first_party_mode = j.at("first_party_mode").get<bool>();
  installation.source_url = j.at("source_url").get<std::string>();
}

void to_json(json& j, const PixelConfiguration& config) {
  j = json{{"pixel_id", config.pixel_id},
           {"selected_match_keys", to_json(config.selected_match_keys)},
           {"automatic_matching_enabled", config.automatic_matching_enabled},
           {"raw_excerpt", config.raw_excerpt}};
}

void from_json(const json& j, PixelConfiguration& config) {
  config.pixel_id = j.at("pixel_id").get<std::string>();
  config.selected_match_keys =
      pii_fields_from_json(j.at("selected_match_keys"));
  config.automatic_matching_enabled =
      j.at("automatic_matching_enabled").get<bool>();
  config.raw_excerpt = j.value("raw_excerpt", std::string{});
}

void to_json(json& j, const FdcEvent& event) {
  json digests = json::object();
  for (const auto& [field, digest] : event.matched_digests) {
    digests[std::string(to_string(field))] = digest;
  }
  j = json{{"provider", to_string(event.provider)},
           {"mode", to_string(event.mode)},
           {"matched_fields", to_json(event.matched_fields)},
           {"request_url", event.request_url},
           {"matched_digests", digests}};
}

void from_json(const json& j, FdcEvent& event) {
  event.provider =
      parse_enum<Provider>(j.at("provider"), parse_provider, "provider");
  event.mode =
      parse_enum<CollectionMode>(j.at("mode"), parse_collection_mode, "mode");
  event.matched_fields = pii_fields_from_json(j.at("matched_fields"));
  event.request_url = j.at("request_url").get<std::string>();
  event.matched_digests.clear();
  for (const auto& [name, digest] : j.at("matched_digests").items()) {
    auto field = parse_pii_field(name);
    if (!field) throw Error("unknown PII field '" + name + "'");
    event.matched_digests[*field] = digest.get<std::string>();
  }
}

void to_json(json& j, const ProviderVerdict& verdict) {
  json modes = json::array();
  for (auto mode : verdict.fdc_modes) modes.push_back(to_string(mode));
  j = json{{"installed", verdict.installed},
           {"installations", verdict.installations},
           {"configured", verdict.configured},
           {"config_fields", to_json(verdict.config_fields)},
           {"configurations", verdict.configurations},
           {"config_conflict", verdict.config_conflict},
           {"fdc", verdict.fdc},
           {"fdc_fields", to_json(verdict.fdc_fields)},
           {"fdc_modes", modes},
           {"fdc_events", verdict.fdc_events}};
}

void from_json(const json& j, ProviderVerdict& verdict) {
  verdict.installed = j.at("installed").get<bool>();
  verdict.installations =
      j.value("installations", std::vector<TrackerInstallation>{});
  verdict.configured = j.value("configured", false);
  verdict.config_fields = pii_fields_from_json(j.value("config_fields", json::array()));
  verdict.configurations =
      j.value("configurations", std::vector<PixelConfiguration>{});
  verdict.config_conflict = j.value("config_conflict", false);
  verdict.fdc = j.at("fdc").get<bool>();
  verdict.fdc_fields = pii_fields_from_json(j.value("fdc_fields", json::array()));
  verdict.fdc_modes.clear();
  for (const auto& mode : j.value("fdc_modes", json::array())) {
    verdict.fdc_modes.insert(
        parse_enum<CollectionMode>(mode, parse_collection_mode, "mode"));
  }
  verdict.fdc_events = j.value("fdc_events", std::vector<FdcEvent>{});
}

void to_json(json& j, const SiteVerdict& verdict) {
  j = json{{"format", kVerdictFormat},
           {"site", verdict.site},
           {"meta", verdict.meta},
           {"google", verdict.google},
           {"visits_used", verdict.visits_used},
           {"diagnostics", verdict.diagnostics}};
}

void from_json(const json& j, SiteVerdict& verdict) {
  if (j.value("format", std::string{}) != kVerdictFormat) {
    throw Error("verdict record is not " + std::string(kVerdictFormat));
  }
  verdict.site = j.at("site").get<SiteRecord>();
  verdict.meta = j.at("meta").get<ProviderVerdict>();
  verdict.google = j.at("google").get<ProviderVerdict>();
  verdict.visits_used = j.value("visits_used", 1);
  verdict.diagnostics = j.value("diagnostics", std::vector<ParseWarning>{});
}

std::string serialize_verdicts(const std::vector<SiteVerdict>& verdicts) {
  std::vector<const SiteVerdict*> ordered;
  for (const auto& verdict : verdicts) ordered.push_back(&verdict);
  std::stable_sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) {
    return a->site.domain < b->site.domain;
  });
  std::string out;
  for (const auto* verdict : ordered) {
    out += json(*verdict).dump(-1, ' ', false,
                               json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

void write_verdicts(const std::string& path,
                    const std::vector<SiteVerdict>& verdicts) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write verdicts to '" + path + "'");
  out << serialize_verdicts(verdicts);
}

std::vector<SiteVerdict> parse_verdicts(std::istream& in) {
  std::vector<SiteVerdict> verdicts;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      verdicts.push_back(json::parse(line).get<SiteVerdict>());
    } catch (const std::exception& e) {
      throw Error("verdict line " + std::to_string(line_number) + ": " +
                  e.what());
    }
  }
  return verdicts;
}

std::vector<SiteVerdict> read_verdicts(const std::string& path) {
  std::istringstream in(read_file(path));
  return parse_verdicts(in);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace formscope
