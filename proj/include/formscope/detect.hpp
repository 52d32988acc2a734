#pragma once

// Installation detection, form-data-collection (FDC) detection and Meta
// Pixel configuration parsing over a single visit capture.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "formscope/model.hpp"
#include "formscope/pii_hash.hpp"
#include "formscope/rules.hpp"

namespace formscope {

// Detectors append problems here instead of throwing.
using Diagnostics = std::vector<ParseWarning>;

std::vector<TrackerInstallation> detect_meta_installations(
    const VisitCapture& capture, const DetectionRules& rules,
    Diagnostics& diagnostics);

std::vector<TrackerInstallation> detect_google_installations(
    const VisitCapture& capture, const DetectionRules& rules,
    Diagnostics& diagnostics);

// Body test for first-party Google tag files: a tag ID with a known prefix
// plus one of the rules' bootstrap markers. Returns the first tag ID found.
std::optional<std::string> probe_first_party_tag(std::string_view body,
                                                 const DetectionRules& rules);

struct MetaParamClass {
  CollectionMode mode = CollectionMode::kUnknown;
  std::optional<PiiField> field;
  bool unmapped_token = false;  // bracketed token not in the abbreviation map

  friend bool operator==(const MetaParamClass&, const MetaParamClass&) = default;
};

// "udff[<abbr>]" -> automatic, "ud[<abbr>]" -> manual, else unknown.
MetaParamClass classify_meta_param(std::string_view key,
                                   const DetectionRules& rules);

std::vector<FdcEvent> detect_fdc_events(const VisitCapture& capture,
                                        const PlaceholderIdentity& identity,
                                        const DetectionRules& rules,
                                        Diagnostics& diagnostics);

// Throws Error carrying the raw excerpt when the selectedMatchKeys token is
// present but the list after it cannot be parsed.
PixelConfiguration parse_meta_pixel_config(std::string_view script,
                                           std::string_view source_url,
                                           const DetectionRules& rules);

// True iff every one of the eleven fields is selected.
bool is_default_configuration(const PixelConfiguration& config);

// Composes all detectors into the verdict for one visit.
SiteVerdict analyze_visit(const VisitCapture& capture,
                          const PlaceholderIdentity& identity,
                          const DetectionRules& rules);

}  // namespace formscope
