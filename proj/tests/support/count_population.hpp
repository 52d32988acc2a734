#pragma once

// Builds a population of site verdicts that reproduces a given set of
// reference counts exactly, so that the aggregation can be checked end to
// end against the percentages printed alongside those counts.

#include <cstdint>
#include <string>
#include <vector>

#include "formscope/model.hpp"

namespace formscope::testing {

struct SubsetCounts {
  std::int64_t both = 11083, both_google_fdc = 2401, both_meta_fdc = 6949;
  std::int64_t both_both_fdc = 1712;
  std::int64_t google_only = 18054, google_only_fdc = 976;
  std::int64_t meta_only = 226, meta_only_fdc = 100;
  std::int64_t neither = 10787;
  std::int64_t meta_configured = 7849;
};

inline SiteVerdict blank_site(std::int64_t index) {
  SiteVerdict v;
  v.site = {"site" + std::to_string(index) + ".test", index + 1,
            index % 3 == 0   ? Vertical::health()
            : index % 3 == 1 ? Vertical::finance()
                             : Vertical::non_sensitive("news")};
  return v;
}

inline void add_meta(SiteVerdict& v, bool configured, bool fdc) {
  v.meta.installations.push_back({Provider::kMeta, "101", TagKind::kPixel, false, "u"});
  if (configured) {
    v.meta.configurations.push_back({"101", {PiiField::kEmail}, true, "x"});
  }
  if (fdc) {
    v.meta.fdc_events.push_back({Provider::kMeta, CollectionMode::kAutomatic,
                                 {PiiField::kEmail}, "u", {{PiiField::kEmail, "d"}}});
  }
}

inline void add_google(SiteVerdict& v, bool fdc) {
  v.google.installations.push_back({Provider::kGoogle, "AW-1", TagKind::kAds, false, "u"});
  if (fdc) {
    v.google.fdc_events.push_back({Provider::kGoogle, CollectionMode::kAutomatic,
                                   {PiiField::kEmail}, "u", {{PiiField::kEmail, "d"}}});
  }
}

// Meta configuration is spread over the Meta sites in order; it does not
// enter any of the subset or overview counts except "configured".
inline std::vector<SiteVerdict> population_from_counts(const SubsetCounts& c) {
  std::vector<SiteVerdict> out;
  std::int64_t index = 0, configured_left = c.meta_configured;
  auto next_configured = [&] {
    if (configured_left == 0) return false;
    --configured_left;
    return true;
  };
  // Both: the first both_both_fdc sites carry both collections, then the
  // remaining Google and Meta collections follow on disjoint sites.
  const std::int64_t google_alone = c.both_google_fdc - c.both_both_fdc;
  const std::int64_t meta_alone = c.both_meta_fdc - c.both_both_fdc;
  for (std::int64_t i = 0; i < c.both; ++i) {
    SiteVerdict v = blank_site(index++);
    bool g = i < c.both_google_fdc;
    bool m = i < c.both_both_fdc ||
             (i >= c.both_both_fdc + google_alone && i < c.both_both_fdc + google_alone + meta_alone);
    add_google(v, g);
    add_meta(v, next_configured(), m);
    canonicalize(v);
    out.push_back(std::move(v));
  }
  for (std::int64_t i = 0; i < c.google_only; ++i) {
    SiteVerdict v = blank_site(index++);
    add_google(v, i < c.google_only_fdc);
    canonicalize(v);
    out.push_back(std::move(v));
  }
  for (std::int64_t i = 0; i < c.meta_only; ++i) {
    SiteVerdict v = blank_site(index++);
    add_meta(v, next_configured(), i < c.meta_only_fdc);
    canonicalize(v);
    out.push_back(std::move(v));
  }
  for (std::int64_t i = 0; i < c.neither; ++i) out.push_back(blank_site(index++));
  return out;
}

}  // namespace formscope::testing
