#include <random>
#include <set>

#include "count_population.hpp"
#include "doctest.h"
#include "formscope/stats.hpp"

using namespace formscope;

TEST_CASE("percent formatting rounds half up without float error") {
  CHECK(format_percent(29137, 40150) == "72.6");
  CHECK(format_percent(1, 8) == "12.5");
  CHECK(format_percent(1, 16) == "6.3");  // 6.25 rounds up
  CHECK(format_percent(1, 3) == "33.3");
  CHECK(format_percent(2, 3) == "66.7");
  CHECK(format_percent(0, 5) == "0.0");
  CHECK(format_percent(5, 5) == "100.0");
  CHECK(format_percent(3, 0) == "n/a");
  CHECK(Share{7, 0}.percent() == "n/a");
}

TEST_CASE("percent formatting agrees with exact rational rounding") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 5000; ++i) {
    std::int64_t d = std::uniform_int_distribution<std::int64_t>(1, 100000)(rng);
    std::int64_t n = std::uniform_int_distribution<std::int64_t>(0, d)(rng);
    // tenths = floor((2000n + d) / 2d), the half-up rounding of 1000n/d.
    std::int64_t tenths = (2000 * n + d) / (2 * d);
    std::string want = std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
    CHECK(format_percent(n, d) == want);
  }
}

TEST_CASE("overview and subset tables reproduce the reference percentages") {
  auto sites = testing::population_from_counts({});
  auto t = aggregate(sites);
  REQUIRE_FALSE(t.empty);
  const auto& o = t.overview;
  CHECK(o.total_sites == 40150);
  CHECK(o.google.installed.count == 29137);
  CHECK(o.google.installed.percent() == "72.6");
  CHECK(o.google.fdc.count == 3377);
  CHECK(o.google.fdc.percent() == "8.4");
  CHECK(o.google.fdc_of_installed.percent() == "11.6");
  CHECK(o.meta.installed.count == 11309);
  CHECK(o.meta.installed.percent() == "28.2");
  CHECK(o.meta.configured.count == 7849);
  CHECK(o.meta.configured.percent() == "19.5");
  CHECK(o.meta.configured_of_installed.percent() == "69.4");
  CHECK(o.meta.fdc.count == 7049);
  CHECK(o.meta.fdc.percent() == "17.6");
  CHECK(o.meta.fdc_of_installed.percent() == "62.3");
  CHECK(o.any.installed.count == 29363);
  CHECK(o.any.installed.percent() == "73.1");
  CHECK(o.any.fdc.count == 8714);
  CHECK(o.any.fdc.percent() == "21.7");
  CHECK(o.any.fdc_of_installed.percent() == "29.7");

  const auto& s = t.subsets;
  REQUIRE(s.rows.size() == 3);
  CHECK(s.rows[0].subset == "both");
  CHECK(s.rows[0].sites == 11083);
  CHECK(s.rows[0].google_fdc.percent() == "21.7");
  CHECK(s.rows[0].meta_fdc.percent() == "62.7");
  CHECK(s.rows[1].subset == "google_only");
  CHECK(s.rows[1].sites == 18054);
  CHECK(s.rows[1].google_fdc.percent() == "5.4");
  CHECK(s.rows[1].meta_fdc.percent() == "n/a");
  CHECK(s.rows[2].subset == "meta_only");
  CHECK(s.rows[2].sites == 226);
  CHECK(s.rows[2].google_fdc.percent() == "n/a");
  CHECK(s.rows[2].meta_fdc.percent() == "44.2");
  CHECK(s.neither == 10787);
  CHECK(s.both_fdc == 1712);
}

TEST_CASE("subset rows partition the installed sites") {
  std::mt19937_64 rng(4);
  for (int round = 0; round < 20; ++round) {
    std::vector<SiteVerdict> sites;
    int n = std::uniform_int_distribution<int>(0, 400)(rng);
    for (int i = 0; i < n; ++i) {
      SiteVerdict v = testing::blank_site(i);
      auto coin = [&] { return (rng() & 1) == 1; };
      if (coin()) testing::add_google(v, coin());
      if (coin()) testing::add_meta(v, coin(), coin());
      canonicalize(v);
      sites.push_back(v);
    }
    auto t = aggregate(sites);
    CHECK(t.empty == sites.empty());
    std::int64_t sum = t.subsets.neither;
    for (const auto& row : t.subsets.rows) sum += row.sites;
    CHECK(sum == n);
    CHECK(t.overview.any.installed.count == n - t.subsets.neither);
    CHECK(t.overview.any.fdc.count ==
          t.overview.google.fdc.count + t.overview.meta.fdc.count - t.subsets.both_fdc);
    std::int64_t vertical_sites = 0;
    for (const auto& row : t.verticals) {
      if (row.vertical != "total") vertical_sites += row.sites;
    }
    CHECK(vertical_sites == n);
  }
}

TEST_CASE("aggregation rejects duplicate domains") {
  std::vector<SiteVerdict> sites{testing::blank_site(1), testing::blank_site(1)};
  CHECK_THROWS_AS(aggregate(sites), Error);
}

TEST_CASE("field table: default plus custom equals combined") {
  auto table = field_table_from_counts(
      1000, 513,
      {{"email", 482}, {"first_and_last_name", 424}, {"phone_number", 422},
       {"city_state_zip", 385}, {"gender", 370}, {"external_id", 54},
       {"date_of_birth", 50}, {"country", 46}});
  CHECK(table.default_share.percent() == "51.3");
  REQUIRE(table.rows.size() == 8);
  CHECK(table.rows[0].custom.percent() == "48.2");
  CHECK(table.rows[0].combined.percent() == "99.5");
  CHECK(table.rows[1].combined.percent() == "93.7");
  CHECK(table.rows[2].combined.percent() == "93.5");
  for (const auto& row : table.rows) {
    CHECK(row.combined.count == table.default_share.count + row.custom.count);
  }
  CHECK_THROWS_AS(field_table_from_counts(1000, 513, {{"email", 488}}), Error);
  CHECK_THROWS_AS(field_table_from_counts(10, 11, {}), Error);
}

TEST_CASE("field breakdown counts single-pixel configured sites") {
  std::vector<SiteVerdict> sites;
  auto configured = [&](int i, PiiFieldSet keys, int pixels = 1) {
    SiteVerdict v = testing::blank_site(i);
    for (int p = 0; p < pixels; ++p) {
      std::string id = std::to_string(500 + p);
      v.meta.installations.push_back({Provider::kMeta, id, TagKind::kPixel, false, "u"});
      v.meta.configurations.push_back({id, keys, !keys.empty(), "x"});
    }
    canonicalize(v);
    sites.push_back(v);
  };
  configured(0, all_pii_fields());
  configured(1, {PiiField::kFirstName});
  configured(2, {PiiField::kZipCode, PiiField::kEmail});
  configured(3, {PiiField::kEmail}, 2);  // two pixels: excluded
  configured(4, {});                      // not configured: excluded
  auto t = field_breakdown(sites);
  CHECK(t.sites == 3);
  CHECK(t.default_share.count == 1);
  auto row = [&](const std::string& label) {
    for (const auto& r : t.rows) {
      if (r.label == label) return r;
    }
    FAIL("missing row " << label);
    return FieldRow{};
  };
  CHECK(row("email").custom.count == 1);
  CHECK(row("first_and_last_name").custom.count == 1);
  CHECK(row("city_state_zip").custom.count == 1);
  CHECK(row("country").custom.count == 0);
  CHECK(row("country").combined.count == 1);
}

TEST_CASE("validation sample sizes") {
  CHECK(sample_size(11013) == 372);
  CHECK(sample_size(4260) == 353);
  CHECK(sample_size(28841) == 380);
  CHECK(sample_size(25760) == 379);
  CHECK(sample_size(1) == 1);
  CHECK(z_for_confidence(0.95) == doctest::Approx(kZ95).epsilon(1e-6));
  CHECK(z_for_confidence(0.99) == doctest::Approx(2.575829).epsilon(1e-5));
  CHECK_THROWS_AS(sample_size(0), Error);
  CHECK_THROWS_AS(sample_size(100, 1.0), Error);
  CHECK_THROWS_AS(sample_size(100, 0.95, 0.0), Error);
}

TEST_CASE("sample size never exceeds the population and grows with it") {
  std::int64_t previous = 0;
  for (std::int64_t n = 1; n < 5000; n += 7) {
    std::int64_t s = sample_size(n);
    CHECK(s <= n);
    CHECK(s >= previous);
    previous = s;
  }
}

TEST_CASE("draw_sample is a seeded, order-preserving subset") {
  std::vector<SiteRecord> population;
  for (int i = 0; i < 500; ++i) {
    population.push_back({"s" + std::to_string(1000 + i) + ".test", i + 1, {}});
  }
  auto a = draw_sample(population, 40, 17);
  auto b = draw_sample(population, 40, 17);
  CHECK(a == b);
  CHECK(a.size() == 40);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::set<SiteRecord>(a.begin(), a.end()).size() == 40);
  CHECK(draw_sample(population, 500, 3) == population);
  CHECK(draw_sample(population, 0, 3).empty());
  CHECK_THROWS_AS(draw_sample(population, 501, 3), Error);

  // Every site should be picked about 40/500 of the time.
  std::vector<int> hits(population.size());
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    for (const auto& s : draw_sample(population, 40, seed)) hits[s.rank - 1]++;
  }
  for (int h : hits) {
    CHECK(h > 100);
    CHECK(h < 230);
  }
}
