#pragma once

// Domain types shared by every formscope module, plus the verdict merge.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace formscope {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The eleven PII categories a Meta Pixel can be configured to match.
enum class PiiField : std::uint8_t {
  kEmail,
  kPhoneNumber,
  kFirstName,
  kLastName,
  kCity,
  kState,
  kZipCode,
  kGender,
  kCountry,
  kDateOfBirth,
  kExternalId,
};

inline constexpr std::array<PiiField, 11> kAllPiiFields = {
    PiiField::kEmail,     PiiField::kPhoneNumber, PiiField::kFirstName,
    PiiField::kLastName,  PiiField::kCity,        PiiField::kState,
    PiiField::kZipCode,   PiiField::kGender,      PiiField::kCountry,
    PiiField::kDateOfBirth, PiiField::kExternalId,
};

// Fields present on the injected form.
inline constexpr std::array<PiiField, 7> kFormFields = {
    PiiField::kEmail, PiiField::kPhoneNumber, PiiField::kFirstName,
    PiiField::kLastName, PiiField::kCity, PiiField::kState,
    PiiField::kZipCode,
};

using PiiFieldSet = std::set<PiiField>;

std::string_view to_string(PiiField field);
std::optional<PiiField> parse_pii_field(std::string_view name);
PiiFieldSet all_pii_fields();

enum class Provider : std::uint8_t { kMeta, kGoogle };
inline constexpr std::array<Provider, 2> kAllProviders = {Provider::kMeta,
                                                          Provider::kGoogle};
std::string_view to_string(Provider provider);
std::optional<Provider> parse_provider(std::string_view name);

enum class CollectionMode : std::uint8_t { kAutomatic, kManual, kUnknown };
std::string_view to_string(CollectionMode mode);
std::optional<CollectionMode> parse_collection_mode(std::string_view name);

enum class TagKind : std::uint8_t {
  kPixel,
  kAds,
  kFloodlight,
  kGa4,
  kUniversalAnalytics,
};
std::string_view to_string(TagKind kind);
std::optional<TagKind> parse_tag_kind(std::string_view name);

// AW -> ads, DC -> floodlight, G/GT -> ga4, UA -> universal_analytics.
// Any other prefix yields nullopt.
std::optional<TagKind> google_tag_kind_for_prefix(std::string_view prefix);

// Leading letters of a tag ID up to the first '-' ("AW-777" -> "AW").
std::string google_tag_prefix(std::string_view tag_id);

class Vertical {
 public:
  enum class Kind : std::uint8_t { kHealth, kFinance, kNonSensitive };

  Vertical() = default;
  static Vertical health() { return Vertical(Kind::kHealth, {}); }
  static Vertical finance() { return Vertical(Kind::kFinance, {}); }
  static Vertical non_sensitive(std::string category) {
    return Vertical(Kind::kNonSensitive, std::move(category));
  }

  // Maps a raw category ("health", "Finance", "shopping") to a vertical.
  // Also accepts the rendered label form "non_sensitive:<category>".
  static Vertical from_raw(std::string_view raw);

  Kind kind() const { return kind_; }
  const std::string& category() const { return category_; }
  bool is_sensitive() const { return kind_ != Kind::kNonSensitive; }
  std::string label() const;

  friend auto operator<=>(const Vertical&, const Vertical&) = default;

 private:
  Vertical(Kind kind, std::string category)
      : kind_(kind), category_(std::move(category)) {}

  Kind kind_ = Kind::kNonSensitive;
  std::string category_;
};

struct SiteRecord {
  std::string domain;
  std::int64_t rank = 0;
  Vertical vertical;

  friend auto operator<=>(const SiteRecord&, const SiteRecord&) = default;
};

// Throws Error unless the domain is non-empty, lowercase and scheme-free and
// the rank is positive.
void validate_site(const SiteRecord& site);

enum class Initiator : std::uint8_t { kTopDocument, kSubframe };
std::string_view to_string(Initiator initiator);
std::optional<Initiator> parse_initiator(std::string_view name);

struct QueryParam {
  std::string key;
  std::string value;

  friend auto operator<=>(const QueryParam&, const QueryParam&) = default;
};

struct NetworkRequest {
  std::string method;
  std::string url;
  std::vector<QueryParam> query_params;  // decoded, in wire order
  std::string body;
  Initiator initiator = Initiator::kTopDocument;
  std::int64_t timestamp_ms = 0;

  friend auto operator<=>(const NetworkRequest&,
                          const NetworkRequest&) = default;
};

enum class VisitOutcome : std::uint8_t {
  kOk,
  kUnreachable,
  kTimeout,
  kBotSuspected,
};
std::string_view to_string(VisitOutcome outcome);
std::optional<VisitOutcome> parse_visit_outcome(std::string_view name);

struct ParseWarning {
  std::string site;
  std::string url;
  std::string reason;

  friend auto operator<=>(const ParseWarning&, const ParseWarning&) = default;
};

struct VisitCapture {
  SiteRecord site;
  int visit_index = 1;
  std::vector<NetworkRequest> requests;
  std::map<std::string, std::string> scripts;  // url -> script text
  bool form_injected = false;
  VisitOutcome outcome = VisitOutcome::kOk;
  std::vector<ParseWarning> diagnostics;

  friend bool operator==(const VisitCapture&, const VisitCapture&) = default;
};

struct TrackerInstallation {
  Provider provider = Provider::kMeta;
  std::string tracker_id;
  TagKind tag_kind = TagKind::kPixel;
  bool first_party_mode = false;
  std::string source_url;

  friend auto operator<=>(const TrackerInstallation&,
                          const TrackerInstallation&) = default;
};

struct PixelConfiguration {
  std::string pixel_id;
  PiiFieldSet selected_match_keys;
  bool automatic_matching_enabled = false;
  std::string raw_excerpt;

  friend auto operator<=>(const PixelConfiguration&,
                          const PixelConfiguration&) = default;
};

struct FdcEvent {
  Provider provider = Provider::kMeta;
  CollectionMode mode = CollectionMode::kUnknown;
  PiiFieldSet matched_fields;
  std::string request_url;
  std::map<PiiField, std::string> matched_digests;

  friend auto operator<=>(const FdcEvent&, const FdcEvent&) = default;
};

// One provider's slice of a site verdict. Collections are kept sorted and
// unique so that merging is a plain set union.
struct ProviderVerdict {
  bool installed = false;
  std::vector<TrackerInstallation> installations;
  bool configured = false;  // Meta only (static analysis)
  PiiFieldSet config_fields;
  std::vector<PixelConfiguration> configurations;
  bool config_conflict = false;  // pixels disagree on their match keys
  bool fdc = false;
  PiiFieldSet fdc_fields;
  std::set<CollectionMode> fdc_modes;
  std::vector<FdcEvent> fdc_events;

  // Distinct tracker IDs across all installations.
  std::set<std::string> tracker_ids() const;

  friend bool operator==(const ProviderVerdict&,
                         const ProviderVerdict&) = default;
};

struct SiteVerdict {
  SiteRecord site;
  ProviderVerdict meta;
  ProviderVerdict google;
  int visits_used = 1;
  std::vector<ParseWarning> diagnostics;

  ProviderVerdict& of(Provider provider) {
    return provider == Provider::kMeta ? meta : google;
  }
  const ProviderVerdict& of(Provider provider) const {
    return provider == Provider::kMeta ? meta : google;
  }
  bool any_installed() const { return meta.installed || google.installed; }
  bool any_fdc() const { return meta.fdc || google.fdc; }

  friend bool operator==(const SiteVerdict&, const SiteVerdict&) = default;
};

// Sorts and deduplicates the collections of a verdict and recomputes the
// derived flags (configured, conflict) from them.
void canonicalize(ProviderVerdict& verdict);
void canonicalize(SiteVerdict& verdict);

// "Ever observed" merge across visits of one site: booleans OR, sets union,
// visits_used summed. Throws Error on empty input or mixed sites.
SiteVerdict merge_verdicts(std::span<const SiteVerdict> visit_verdicts);

}  // namespace formscope
