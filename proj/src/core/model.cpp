#include "formscope/model.hpp"

#include <algorithm>
#include <cctype>

namespace formscope {
namespace {

constexpr std::array<std::string_view, 11> kPiiFieldNames = {
    "email",   "phone_number", "first_name", "last_name",
    "city",    "state",        "zip_code",   "gender",
    "country", "date_of_birth", "external_id",
};

template <typename T>
void sort_unique(std::vector<T>& items) {
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
}

template <typename T>
void append(std::vector<T>& into, const std::vector<T>& from) {
  into.insert(into.end(), from.begin(), from.end());
}

}  // namespace

std::string_view to_string(PiiField field) {
  return kPiiFieldNames[static_cast<std::size_t>(field)];
}

std::optional<PiiField> parse_pii_field(std::string_view name) {
  for (std::size_t i = 0; i < kPiiFieldNames.size(); ++i) {
    if (kPiiFieldNames[i] == name) return static_cast<PiiField>(i);
  }
  return std::nullopt;
}

PiiFieldSet all_pii_fields() {
  return PiiFieldSet(kAllPiiFields.begin(), kAllPiiFields.end());
}

std::string_view to_string(Provider provider) {
  return provider == Provider::kMeta ? "meta" : "google";
}

std::optional<Provider> parse_provider(std::string_view name) {
  if (name == "meta") return Provider::kMeta;
  if (name == "google") return Provider::kGoogle;
  return std::nullopt;
}

std::string_view to_string(CollectionMode mode) {
  switch (mode) {
    case CollectionMode::kAutomatic: return "automatic";
    case CollectionMode::kManual: return "manual";
    case CollectionMode::kUnknown: return "unknown";
  }
  return "unknown";
}

std::optional<CollectionMode> parse_collection_mode(std::string_view name) {
  if (name == "automatic") return CollectionMode::kAutomatic;
  if (name == "manual") return CollectionMode::kManual;
  if (name == "unknown") return CollectionMode::kUnknown;
  return std::nullopt;
}

std::string_view to_string(TagKind kind) {
  switch (kind) {
    case TagKind::kPixel: return "pixel";
    case TagKind::kAds: return "ads";
    case TagKind::kFloodlight: return "floodlight";
    case TagKind::kGa4: return "ga4";
    case TagKind::kUniversalAnalytics: return "universal_analytics";
  }
  return "pixel";
}

std::optional<TagKind> parse_tag_kind(std::string_view name) {
  for (auto kind : {TagKind::kPixel, TagKind::kAds, TagKind::kFloodlight,
                    TagKind::kGa4, TagKind::kUniversalAnalytics}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

std::optional<TagKind> google_tag_kind_for_prefix(std::string_view prefix) {
  if (prefix == "AW") return TagKind::kAds;
  if (prefix == "DC") return TagKind::kFloodlight;
  if (prefix == "G" || prefix == "GT") return TagKind::kGa4;
  if (prefix == "UA") return TagKind::kUniversalAnalytics;
  return std::nullopt;
}

std::string google_tag_prefix(std::string_view tag_id) {
  auto dash = tag_id.find('-');
  if (dash == std::string_view::npos) return {};
  return std::string(tag_id.substr(0, dash));
}

Vertical Vertical::from_raw(std::string_view raw) {
  std::string lowered;
  for (char c : raw) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      lowered += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (lowered == "health") return health();
  if (lowered == "finance") return finance();
  constexpr std::string_view kPrefix = "non_sensitive:";
  if (lowered.starts_with(kPrefix)) lowered.erase(0, kPrefix.size());
  if (lowered.empty()) throw Error("empty vertical");
  return non_sensitive(lowered);
}

std::string Vertical::label() const {
  switch (kind_) {
    case Kind::kHealth: return "health";
    case Kind::kFinance: return "finance";
    case Kind::kNonSensitive: return "non_sensitive:" + category_;
  }
  return {};
}

void validate_site(const SiteRecord& site) {
  if (site.domain.empty()) throw Error("site domain is empty");
  if (site.domain.find("://") != std::string::npos) {
    throw Error("site domain '" + site.domain + "' must not carry a scheme");
  }
  for (char c : site.domain) {
    auto uc = static_cast<unsigned char>(c);
    if (std::isupper(uc)) {
      throw Error("site domain '" + site.domain + "' must be lowercase");
    }
    if (std::isspace(uc) || c == '/' || c == '?' || c == '#') {
      throw Error("site domain '" + site.domain + "' is not a hostname");
    }
  }
  if (site.rank <= 0) {
    throw Error("site '" + site.domain + "' has non-positive rank");
  }
}

std::string_view to_string(Initiator initiator) {
  return initiator == Initiator::kTopDocument ? "top_document" : "subframe";
}

std::optional<Initiator> parse_initiator(std::string_view name) {
  if (name == "top_document") return Initiator::kTopDocument;
  if (name == "subframe") return Initiator::kSubframe;
  return std::nullopt;
}

std::string_view to_string(VisitOutcome outcome) {
  switch (outcome) {
    case VisitOutcome::kOk: return "ok";
    case VisitOutcome::kUnreachable: return "unreachable";
    case VisitOutcome::kTimeout: return "timeout";
    case VisitOutcome::kBotSuspected: return "bot_suspected";
  }
  return "ok";
}

std::optional<VisitOutcome> parse_visit_outcome(std::string_view name) {
  for (auto outcome : {VisitOutcome::kOk, VisitOutcome::kUnreachable,
                       VisitOutcome::kTimeout, VisitOutcome::kBotSuspected}) {
    if (to_string(outcome) == name) return outcome;
  }
  return std::nullopt;
}

std::set<std::string> ProviderVerdict::tracker_ids() const {
  std::set<std::string> ids;
  for (const auto& installation : installations) {
    ids.insert(installation.tracker_id);
  }
  return ids;
}

void canonicalize(ProviderVerdict& verdict) {
  sort_unique(verdict.installations);
  sort_unique(verdict.configurations);
  sort_unique(verdict.fdc_events);

  verdict.installed = verdict.installed || !verdict.installations.empty();

  std::map<std::string, PiiFieldSet> keys_by_pixel;
  for (const auto& config : verdict.configurations) {
    keys_by_pixel[config.pixel_id].insert(config.selected_match_keys.begin(),
                                          config.selected_match_keys.end());
    if (config.automatic_matching_enabled) {
      verdict.configured = true;
      verdict.config_fields.insert(config.selected_match_keys.begin(),
                                   config.selected_match_keys.end());
    }
  }
  std::set<PiiFieldSet> distinct_key_sets;
  for (const auto& [pixel, keys] : keys_by_pixel) distinct_key_sets.insert(keys);
  if (distinct_key_sets.size() > 1) verdict.config_conflict = true;

  for (const auto& event : verdict.fdc_events) {
    verdict.fdc = true;
    verdict.fdc_fields.insert(event.matched_fields.begin(),
                              event.matched_fields.end());
    verdict.fdc_modes.insert(event.mode);
  }
}

void canonicalize(SiteVerdict& verdict) {
  canonicalize(verdict.meta);
  canonicalize(verdict.google);
  sort_unique(verdict.diagnostics);
}

SiteVerdict merge_verdicts(std::span<const SiteVerdict> visit_verdicts) {
  if (visit_verdicts.empty()) {
    throw Error("merge_verdicts: at least one verdict is required");
  }
  SiteVerdict merged;
  merged.site = visit_verdicts.front().site;
  merged.visits_used = 0;
  for (const auto& visit : visit_verdicts) {
    if (visit.site.domain != merged.site.domain) {
      throw Error("merge_verdicts: mixed sites '" + merged.site.domain +
                  "' and '" + visit.site.domain + "'");
    }
    merged.site = std::min(merged.site, visit.site);
    merged.visits_used += visit.visits_used;
    for (Provider provider : kAllProviders) {
      const ProviderVerdict& from = visit.of(provider);
      ProviderVerdict& into = merged.of(provider);
      into.installed = into.installed || from.installed;
      into.configured = into.configured || from.configured;
      into.config_conflict = into.config_conflict || from.config_conflict;
      into.fdc = into.fdc || from.fdc;
      into.config_fields.insert(from.config_fields.begin(),
                                from.config_fields.end());
      into.fdc_fields.insert(from.fdc_fields.begin(), from.fdc_fields.end());
      into.fdc_modes.insert(from.fdc_modes.begin(), from.fdc_modes.end());
      append(into.installations, from.installations);
      append(into.configurations, from.configurations);
      append(into.fdc_events, from.fdc_events);
    }
    append(merged.diagnostics, visit.diagnostics);
  }
  canonicalize(merged);
  return merged;
}

}  // namespace formscope
