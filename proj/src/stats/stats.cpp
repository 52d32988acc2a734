#include "formscope/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace formscope {

std::string format_percent(std::int64_t count, std::int64_t denominator) {
  if (denominator <= 0) return "n/a";
  // tenths = round_half_up(count * 1000 / denominator)
  std::int64_t tenths = (count * 2000 + denominator) / (2 * denominator);
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

std::string Share::percent() const { return format_percent(count, denominator); }

namespace {

void check_unique(std::span<const SiteVerdict> verdicts) {
  std::set<std::string> seen;
  for (const auto& v : verdicts) {
    if (!seen.insert(v.site.domain).second) {
      throw Error("duplicate verdict for " + v.site.domain +
                  "; merge visits before aggregating");
    }
  }
}

ProviderRow provider_row(std::int64_t total, std::int64_t installed,
                         std::int64_t configured, std::int64_t fdc) {
  return ProviderRow{{installed, total},
                     {configured, total},
                     {configured, installed},
                     {fdc, total},
                     {fdc, installed}};
}

VerticalRow vertical_row(std::string label,
                         std::span<const SiteVerdict> verdicts,
                         auto&& include) {
  VerticalRow row;
  row.vertical = std::move(label);
  std::int64_t g = 0, gf = 0, m = 0, mf = 0;
  for (const auto& v : verdicts) {
    if (!include(v)) continue;
    ++row.sites;
    if (v.google.installed) {
      ++g;
      if (v.google.fdc) ++gf;
    }
    if (v.meta.installed) {
      ++m;
      if (v.meta.fdc) ++mf;
    }
  }
  row.google_installed = {g, row.sites};
  row.google_fdc = {gf, g};
  row.meta_installed = {m, row.sites};
  row.meta_fdc = {mf, m};
  return row;
}

}  // namespace

OverviewTable overview(std::span<const SiteVerdict> verdicts) {
  check_unique(verdicts);
  std::int64_t total = static_cast<std::int64_t>(verdicts.size());
  std::int64_t g = 0, gf = 0, m = 0, mc = 0, mf = 0, any = 0, anyf = 0;
  for (const auto& v : verdicts) {
    g += v.google.installed;
    gf += v.google.installed && v.google.fdc;
    m += v.meta.installed;
    mc += v.meta.installed && v.meta.configured;
    mf += v.meta.installed && v.meta.fdc;
    any += v.any_installed();
    anyf += (v.google.installed && v.google.fdc) ||
            (v.meta.installed && v.meta.fdc);
  }
  OverviewTable table;
  table.total_sites = total;
  table.google = provider_row(total, g, 0, gf);
  table.google.configured = {};
  table.google.configured_of_installed = {};
  table.meta = provider_row(total, m, mc, mf);
  table.any = provider_row(total, any, 0, anyf);
  table.any.configured = {};
  table.any.configured_of_installed = {};
  return table;
}

std::vector<VerticalRow> vertical_breakdown(
    std::span<const SiteVerdict> verdicts) {
  check_unique(verdicts);
  using Kind = Vertical::Kind;
  auto of_kind = [](Kind kind) {
    return [kind](const SiteVerdict& v) { return v.site.vertical.kind() == kind; };
  };
  return {
      vertical_row("non_sensitive", verdicts, of_kind(Kind::kNonSensitive)),
      vertical_row("health", verdicts, of_kind(Kind::kHealth)),
      vertical_row("finance", verdicts, of_kind(Kind::kFinance)),
      vertical_row("total", verdicts, [](const SiteVerdict&) { return true; }),
  };
}

SubsetTable subset_breakdown(std::span<const SiteVerdict> verdicts) {
  check_unique(verdicts);
  SubsetTable table;
  SubsetRow both{"both", 0, {}, {}};
  SubsetRow google_only{"google_only", 0, {}, {}};
  SubsetRow meta_only{"meta_only", 0, {}, {}};
  for (const auto& v : verdicts) {
    bool g = v.google.installed, m = v.meta.installed;
    bool gf = g && v.google.fdc, mf = m && v.meta.fdc;
    SubsetRow* row = nullptr;
    if (g && m) {
      row = &both;
    } else if (g) {
      row = &google_only;
    } else if (m) {
      row = &meta_only;
    } else {
      ++table.neither;
      continue;
    }
    ++row->sites;
    if (g) {
      ++row->google_fdc.denominator;
      row->google_fdc.count += gf;
    }
    if (m) {
      ++row->meta_fdc.denominator;
      row->meta_fdc.count += mf;
    }
    table.both_fdc += gf && mf;
  }
  table.rows = {both, google_only, meta_only};
  return table;
}

const std::vector<FieldGroup>& field_groups() {
  using F = PiiField;
  static const std::vector<FieldGroup> groups = {
      {"email", {F::kEmail}},
      {"first_and_last_name", {F::kFirstName, F::kLastName}},
      {"phone_number", {F::kPhoneNumber}},
      {"city_state_zip", {F::kCity, F::kState, F::kZipCode}},
      {"gender", {F::kGender}},
      {"external_id", {F::kExternalId}},
      {"date_of_birth", {F::kDateOfBirth}},
      {"country", {F::kCountry}},
  };
  return groups;
}

FieldTable field_table_from_counts(
    std::int64_t sites, std::int64_t default_count,
    const std::map<std::string, std::int64_t>& group_custom_counts) {
  if (default_count < 0 || default_count > sites) {
    throw Error("field table: default count outside [0, sites]");
  }
  FieldTable table;
  table.sites = sites;
  table.default_share = {default_count, sites};
  for (const auto& group : field_groups()) {
    auto it = group_custom_counts.find(group.label);
    std::int64_t custom = it == group_custom_counts.end() ? 0 : it->second;
    if (custom < 0 || custom > sites - default_count) {
      throw Error("field table: custom count for " + group.label +
                  " exceeds the custom configurations");
    }
    table.rows.push_back(
        {group.label, {custom, sites}, {default_count + custom, sites}});
  }
  return table;
}

FieldTable field_breakdown(std::span<const SiteVerdict> verdicts) {
  check_unique(verdicts);
  std::int64_t sites = 0, defaults = 0;
  std::map<std::string, std::int64_t> custom;
  const PiiFieldSet all = all_pii_fields();
  for (const auto& v : verdicts) {
    if (!v.meta.configured || v.meta.tracker_ids().size() != 1) continue;
    ++sites;
    if (v.meta.config_fields == all) {
      ++defaults;
      continue;
    }
    for (const auto& group : field_groups()) {
      bool any = std::any_of(group.members.begin(), group.members.end(),
                             [&](PiiField f) { return v.meta.config_fields.count(f) > 0; });
      if (any) ++custom[group.label];
    }
  }
  return field_table_from_counts(sites, defaults, custom);
}

SummaryTables aggregate(std::span<const SiteVerdict> verdicts) {
  SummaryTables tables;
  tables.empty = verdicts.empty();
  tables.overview = overview(verdicts);
  tables.verticals = vertical_breakdown(verdicts);
  tables.subsets = subset_breakdown(verdicts);
  tables.fields = field_breakdown(verdicts);
  return tables;
}

double z_for_confidence(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error("confidence must lie in (0, 1)");
  }
  if (std::abs(confidence - 0.95) < 1e-12) return kZ95;
  // Solve erfc(z / sqrt 2) = 1 - confidence by bisection.
  double target = 1.0 - confidence;
  double lo = 0.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    double mid = (lo + hi) / 2;
    if (std::erfc(mid / std::sqrt(2.0)) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return (lo + hi) / 2;
}

std::int64_t sample_size(std::int64_t population, double confidence,
                         double margin, double p_hat) {
  if (population < 1) throw Error("population must be at least 1");
  if (!(margin > 0.0 && margin < 1.0)) throw Error("margin must lie in (0, 1)");
  if (!(p_hat >= 0.0 && p_hat <= 1.0)) throw Error("p_hat must lie in [0, 1]");
  double z = z_for_confidence(confidence);
  double n0 = z * z * p_hat * (1.0 - p_hat) / (margin * margin);
  double n = n0 / (1.0 + (n0 - 1.0) / static_cast<double>(population));
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(n)));
}

std::vector<SiteRecord> draw_sample(std::span<const SiteRecord> population,
                                    std::size_t n, std::uint64_t seed) {
  if (n > population.size()) {
    throw Error("sample of " + std::to_string(n) + " exceeds population of " +
                std::to_string(population.size()));
  }
  // Selection sampling: each item is taken with probability
  // needed / remaining, which yields a uniform n-subset in input order.
  std::mt19937_64 rng(seed);
  std::vector<SiteRecord> out;
  out.reserve(n);
  std::size_t remaining = population.size();
  for (const auto& site : population) {
    std::size_t needed = n - out.size();
    if (needed == 0) break;
    std::uniform_int_distribution<std::size_t> pick(0, remaining - 1);
    if (pick(rng) < needed) out.push_back(site);
    --remaining;
  }
  return out;
}

}  // namespace formscope
