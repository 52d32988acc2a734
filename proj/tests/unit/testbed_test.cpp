#include <set>

#include "doctest.h"
#include "formscope/detect.hpp"
#include "formscope/testbed.hpp"
#include "httplib.h"

using namespace formscope;

namespace {

SiteSpec meta_site(std::string domain, std::optional<PiiFieldSet> keys) {
  SiteSpec s;
  s.domain = std::move(domain);
  s.vertical = Vertical::health();
  PixelSpec p;
  p.provider = Provider::kMeta;
  p.tracker_id = "4242";
  p.selected_match_keys = std::move(keys);
  s.pixels.push_back(p);
  return s;
}

SiteSpec google_site(std::string domain, std::string id, bool collects) {
  SiteSpec s;
  s.domain = std::move(domain);
  s.vertical = Vertical::finance();
  PixelSpec p;
  p.provider = Provider::kGoogle;
  p.tracker_id = std::move(id);
  if (collects) p.selected_match_keys = PiiFieldSet{PiiField::kEmail};
  s.pixels.push_back(p);
  return s;
}

const std::string kConfigUrl = "https://connect.facebook.net/signals/config/4242";

}  // namespace

TEST_CASE("spec validation") {
  CHECK_NOTHROW(validate_spec(meta_site("a.test", PiiFieldSet{PiiField::kEmail})));
  CHECK_NOTHROW(validate_spec(google_site("b.test", "G-ABC123", true)));

  auto bad_id = meta_site("a.test", std::nullopt);
  bad_id.pixels[0].tracker_id = "px-1";
  CHECK_THROWS_AS(validate_spec(bad_id), Error);

  auto twice = meta_site("a.test", std::nullopt);
  twice.pixels.push_back(twice.pixels[0]);
  CHECK_THROWS_AS(validate_spec(twice), Error);

  // Keys with no form counterpart could never produce collection.
  CHECK_THROWS_AS(validate_spec(meta_site("a.test", PiiFieldSet{PiiField::kGender})), Error);

  auto first_party_meta = meta_site("a.test", std::nullopt);
  first_party_meta.pixels[0].first_party_mode = true;
  CHECK_THROWS_AS(validate_spec(first_party_meta), Error);

  CHECK_THROWS_AS(validate_spec(google_site("b.test", "GTM-XYZ", false)), Error);
  auto google_phone = google_site("b.test", "AW-1", false);
  google_phone.pixels[0].selected_match_keys = PiiFieldSet{PiiField::kPhoneNumber};
  CHECK_THROWS_AS(validate_spec(google_phone), Error);

  auto slow = meta_site("a.test", std::nullopt);
  slow.failure = FailureMode::kSlowLoad;
  CHECK_THROWS_AS(validate_spec(slow), Error);
  slow.latency_ms = 100;
  CHECK_NOTHROW(validate_spec(slow));
  CHECK_THROWS_AS(validate_spec(meta_site("Bad.test", std::nullopt)), Error);
}

TEST_CASE("generated corpora are seeded, valid and varied") {
  CorpusOptions opts;
  opts.sites = 40;
  opts.seed = 3;
  auto a = generate_corpus(opts);
  CHECK(a == generate_corpus(opts));
  CHECK(a.size() == 40);
  opts.seed = 4;
  CHECK(a != generate_corpus(opts));

  std::set<std::string> domains;
  std::set<PageShape> shapes;
  std::set<FailureMode> failures;
  bool meta = false, google = false, both = false, none = false, first_party = false,
       decoys = false;
  for (const auto& s : a) {
    CHECK_NOTHROW(validate_spec(s));
    CHECK(domains.insert(s.domain).second);
    shapes.insert(s.shape);
    failures.insert(s.failure);
    bool m = false, g = false;
    for (const auto& p : s.pixels) {
      (p.provider == Provider::kMeta ? m : g) = true;
      first_party |= p.first_party_mode;
    }
    meta |= m && !g;
    google |= g && !m;
    both |= m && g;
    none |= !m && !g;
    decoys |= s.decoys;
  }
  CHECK(meta);
  CHECK(google);
  CHECK(both);
  CHECK(none);
  CHECK(first_party);
  CHECK(decoys);
  CHECK(shapes.size() == 3);
  CHECK(failures.count(FailureMode::kUnreachable));
  CHECK(failures.count(FailureMode::kFailFirstVisit));
  CHECK(failures.count(FailureMode::kSlowLoad));

  opts.include_unreachable = opts.include_fail_first = false;
  for (const auto& s : generate_corpus(opts)) {
    CHECK(s.failure != FailureMode::kUnreachable);
    CHECK(s.failure != FailureMode::kFailFirstVisit);
  }
}

TEST_CASE("corpus JSON round-trip") {
  auto corpus = generate_corpus({});
  auto j = corpus_to_json(corpus);
  CHECK(j["format"] == std::string(kCorpusFormat));
  CHECK(corpus_from_json(j) == corpus);
  auto wrong = j;
  wrong["format"] = "formscope-corpus/0";
  CHECK_THROWS_AS(corpus_from_json(wrong), Error);
  auto dup = j;
  dup["sites"].push_back(dup["sites"][0]);
  CHECK_THROWS_AS(corpus_from_json(dup), Error);
}

TEST_CASE("served pixel configs parse back to their keys for every key subset") {
  const auto& rules = DetectionRules::defaults();
  const auto all = all_pii_fields();
  const std::vector<PiiField> fields(all.begin(), all.end());
  REQUIRE(fields.size() == 11);
  for (bool plain : {false, true}) {
    for (unsigned mask = 0; mask < (1u << fields.size()); ++mask) {
      PixelSpec pixel;
      pixel.tracker_id = "4242";
      PiiFieldSet keys;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (mask & (1u << i)) keys.insert(fields[i]);
      }
      pixel.selected_match_keys = keys;
      auto config = parse_meta_pixel_config(meta_config_script(pixel, plain), kConfigUrl, rules);
      CHECK(config.pixel_id == "4242");
      CHECK(config.selected_match_keys == keys);
      CHECK(config.automatic_matching_enabled == !keys.empty());
      CHECK(is_default_configuration(config) == (keys == all));
    }
    PixelSpec absent;
    absent.tracker_id = "4242";
    auto config = parse_meta_pixel_config(meta_config_script(absent, plain), kConfigUrl, rules);
    CHECK_FALSE(config.automatic_matching_enabled);
  }
}

TEST_CASE("meta wire tokens agree with the detection rules") {
  const auto& rules = DetectionRules::defaults();
  for (PiiField f : all_pii_fields()) CHECK(rules.token_for_field(f) == meta_token(f));
}

TEST_CASE("expected verdicts") {
  auto e = expected_verdict(meta_site("a.test", PiiFieldSet{PiiField::kEmail, PiiField::kGender}));
  CHECK(e.meta_ids == std::set<std::string>{"4242"});
  CHECK(e.meta_configured);
  CHECK(e.meta_config_fields.size() == 2);
  CHECK(e.meta_fdc_fields == PiiFieldSet{PiiField::kEmail});
  CHECK(e.meta_modes == std::set<CollectionMode>{CollectionMode::kAutomatic});

  auto manual_only = meta_site("a.test", PiiFieldSet{});
  manual_only.pixels[0].manual_keys = {PiiField::kPhoneNumber};
  e = expected_verdict(manual_only);
  CHECK_FALSE(e.meta_configured);
  CHECK(e.meta_fdc);
  CHECK(e.meta_modes == std::set<CollectionMode>{CollectionMode::kManual});

  e = expected_verdict(google_site("b.test", "DC-77", true));
  CHECK(e.google_fdc);
  CHECK(e.google_tags.count({"DC-77", TagKind::kFloodlight, false}));

  auto gone = google_site("b.test", "AW-1", true);
  gone.failure = FailureMode::kUnreachable;
  e = expected_verdict(gone);
  CHECK(e.google_tags.empty());
  CHECK_FALSE(e.google_fdc);

  SiteVerdict empty;
  empty.site = {"b.test", 1, Vertical::finance()};
  CHECK(verdict_mismatches(e, empty).empty());
  CHECK_FALSE(verdict_mismatches(expected_verdict(google_site("b.test", "AW-1", true)), empty)
                  .empty());
}

TEST_CASE("expected hits follow the specs") {
  std::vector<SiteSpec> corpus{meta_site("a.test", PiiFieldSet{PiiField::kEmail}),
                               google_site("b.test", "AW-9", true),
                               google_site("c.test", "AW-8", false)};
  auto hits = expected_hits(corpus);
  std::set<std::string> sites;
  for (const auto& h : hits) {
    sites.insert(h.site);
    CHECK_FALSE(h.fields.empty());
  }
  CHECK(sites == std::set<std::string>{"a.test", "b.test"});
  auto diff = ledger_diff({}, corpus);
  CHECK(diff.missing.size() == hits.size());
  CHECK_FALSE(diff.describe().empty());
}

TEST_CASE("the server answers per host and records collection hits") {
  auto fail_first = meta_site("clinic.test", PiiFieldSet{PiiField::kEmail});
  fail_first.failure = FailureMode::kFailFirstVisit;
  auto unreachable = google_site("gone.test", "AW-5", true);
  unreachable.failure = FailureMode::kUnreachable;
  std::vector<SiteSpec> corpus{fail_first, unreachable};
  const auto identity = default_identity();
  Testbed bed(corpus, identity);
  bed.start();
  REQUIRE(bed.port() > 0);

  httplib::SSLClient client("127.0.0.1", bed.port());
  client.enable_server_certificate_verification(false);
  auto get = [&](const std::string& host, const std::string& target) {
    return client.Get(target, httplib::Headers{{"Host", host}});
  };

  auto first = get("clinic.test", "/");
  REQUIRE(first);
  CHECK(first->status == 503);
  auto second = get("www.clinic.test", "/");
  REQUIRE(second);
  CHECK(second->status == 200);
  CHECK(second->body.find("fbevents.js") != std::string::npos);
  CHECK(bed.document_requests("clinic.test") == 2);

  auto config = get("connect.facebook.net", "/signals/config/4242?v=2.9");
  REQUIRE(config);
  CHECK(config->status == 200);
  CHECK(get("connect.facebook.net", "/signals/config/999")->status == 404);
  CHECK(get("unknown.test", "/")->status == 404);

  const std::string digest = identity.digest(Provider::kMeta, PiiField::kEmail);
  auto hit = get("www.facebook.com", "/tr/?id=4242&ev=PageView&dl=https%3A%2F%2Fclinic.test%2F"
                                     "&udff%5Bem%5D=" + digest);
  REQUIRE(hit);
  CHECK(hit->status == 200);
  get("www.facebook.com", "/tr/?id=4242&ev=PageView&dl=https%3A%2F%2Fclinic.test%2F&udff%5Bph%5D=00");
  auto entries = bed.ledger().entries();
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].site == "clinic.test");
  CHECK(entries[0].tracker_id == "4242");
  CHECK(entries[0].fields.at(CollectionMode::kAutomatic) == PiiFieldSet{PiiField::kEmail});
  CHECK(entries[0].digests_valid);
  CHECK_FALSE(entries[1].digests_valid);

  auto diff = ledger_diff(entries, corpus);
  CHECK(diff.missing.empty());
  CHECK(diff.invalid_digests.size() == 1);
  CHECK(diff.unexpected.size() == 1);  // the phone hit was never configured

  std::string rules = bed.resolver_rules();
  CHECK(rules.find("MAP gone.test 127.0.0.1:" + std::to_string(bed.dead_port())) !=
        std::string::npos);
  CHECK(rules.ends_with("MAP * 127.0.0.1:" + std::to_string(bed.port())));
  bed.stop();
}
