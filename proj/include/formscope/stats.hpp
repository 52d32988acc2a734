#pragma once

// Aggregate tables over merged site verdicts, plus the validation-sampling
// arithmetic.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "formscope/model.hpp"

namespace formscope {

// A count over a denominator. Percentages are rendered with one decimal,
// rounding half up, computed in integer arithmetic so that no binary
// floating-point artefact can move a .x5 boundary.
struct Share {
  std::int64_t count = 0;
  std::int64_t denominator = 0;

  // "72.6", or "n/a" for a zero denominator.
  std::string percent() const;
  friend bool operator==(const Share&, const Share&) = default;
};

std::string format_percent(std::int64_t count, std::int64_t denominator);

struct ProviderRow {
  Share installed;         // of all sites
  Share configured;        // of all sites (Meta only)
  Share configured_of_installed;
  Share fdc;               // of all sites
  Share fdc_of_installed;
  friend bool operator==(const ProviderRow&, const ProviderRow&) = default;
};

struct OverviewTable {
  std::int64_t total_sites = 0;
  ProviderRow google;
  ProviderRow meta;
  ProviderRow any;  // union of the two providers
  friend bool operator==(const OverviewTable&, const OverviewTable&) = default;
};

struct VerticalRow {
  std::string vertical;  // "non_sensitive", "health", "finance", "total"
  std::int64_t sites = 0;
  Share google_installed;  // of the vertical's sites
  Share google_fdc;        // of the vertical's Google installations
  Share meta_installed;
  Share meta_fdc;
  friend bool operator==(const VerticalRow&, const VerticalRow&) = default;
};

struct SubsetRow {
  std::string subset;  // "both", "google_only", "meta_only"
  std::int64_t sites = 0;
  Share google_fdc;  // zero denominator when the provider is absent
  Share meta_fdc;
  friend bool operator==(const SubsetRow&, const SubsetRow&) = default;
};

struct SubsetTable {
  std::vector<SubsetRow> rows;
  std::int64_t neither = 0;
  std::int64_t both_fdc = 0;  // sites with Google FDC and Meta FDC
  friend bool operator==(const SubsetTable&, const SubsetTable&) = default;
};

// A reporting group of one or more PII fields. A custom configuration
// counts toward a group when it selects any member.
struct FieldGroup {
  std::string label;
  PiiFieldSet members;
};
const std::vector<FieldGroup>& field_groups();

struct FieldRow {
  std::string label;
  Share custom;    // custom configurations selecting the group, of all
  Share combined;  // default + custom, of all
  friend bool operator==(const FieldRow&, const FieldRow&) = default;
};

struct FieldTable {
  std::int64_t sites = 0;  // single-pixel configured sites
  Share default_share;
  std::vector<FieldRow> rows;
  friend bool operator==(const FieldTable&, const FieldTable&) = default;
};

// Count-level input to the field table, for when per-site verdicts are not
// at hand. group_custom_counts is keyed by FieldGroup label.
FieldTable field_table_from_counts(
    std::int64_t sites, std::int64_t default_count,
    const std::map<std::string, std::int64_t>& group_custom_counts);

struct SummaryTables {
  bool empty = true;  // set when there were no verdicts at all
  OverviewTable overview;
  std::vector<VerticalRow> verticals;
  SubsetTable subsets;
  FieldTable fields;
  friend bool operator==(const SummaryTables&, const SummaryTables&) = default;
};

// Throws Error if a domain appears twice.
SummaryTables aggregate(std::span<const SiteVerdict> verdicts);
OverviewTable overview(std::span<const SiteVerdict> verdicts);
std::vector<VerticalRow> vertical_breakdown(std::span<const SiteVerdict> verdicts);
SubsetTable subset_breakdown(std::span<const SiteVerdict> verdicts);
// Restricted to sites with exactly one Meta pixel whose configuration
// enables automatic matching.
FieldTable field_breakdown(std::span<const SiteVerdict> verdicts);

inline constexpr double kZ95 = 1.959964;

// Finite-population sample size for estimating a proportion. Throws Error
// for a non-positive population or a margin/confidence outside (0, 1).
std::int64_t sample_size(std::int64_t population, double confidence = 0.95,
                         double margin = 0.05, double p_hat = 0.5);

// Two-sided normal quantile for a confidence level; 0.95 maps to kZ95.
double z_for_confidence(double confidence);

// Uniform draw of n sites without replacement. The result keeps the
// population's order. Throws Error when n exceeds the population.
std::vector<SiteRecord> draw_sample(std::span<const SiteRecord> population,
                                    std::size_t n, std::uint64_t seed);

}  // namespace formscope
