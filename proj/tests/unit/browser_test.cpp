// Drives a real headless browser against the local testbed. Exits with 77
// (reported as skipped) when no browser is installed.

#include <cstdlib>
#include <filesystem>

#include "doctest.h"
#include "formscope/capture.hpp"
#include "formscope/testbed_run.hpp"

using namespace formscope;
namespace fs = std::filesystem;

namespace {

std::string browser_or_skip() {
  std::string browser = find_browser();
  if (browser.empty()) {
    MESSAGE("no browser found; set FORMSCOPE_CHROME to run these tests");
    std::exit(77);
  }
  return browser;
}

PixelSpec meta_pixel(std::string id, std::optional<PiiFieldSet> keys, PiiFieldSet manual = {}) {
  PixelSpec p;
  p.provider = Provider::kMeta;
  p.tracker_id = std::move(id);
  p.selected_match_keys = std::move(keys);
  p.manual_keys = std::move(manual);
  return p;
}

PixelSpec google_tag(std::string id, bool collects, bool first_party = false) {
  PixelSpec p;
  p.provider = Provider::kGoogle;
  p.tracker_id = std::move(id);
  if (collects) p.selected_match_keys = PiiFieldSet{PiiField::kEmail};
  p.first_party_mode = first_party;
  return p;
}

SiteSpec spec(std::string domain, std::int64_t rank, std::vector<PixelSpec> pixels,
              PageShape shape = PageShape::kAnchor) {
  SiteSpec s;
  s.domain = std::move(domain);
  s.rank = rank;
  s.vertical = rank % 2 ? Vertical::health() : Vertical::finance();
  s.pixels = std::move(pixels);
  s.shape = shape;
  return s;
}

std::vector<SiteSpec> small_corpus() {
  std::vector<SiteSpec> c;
  c.push_back(spec("both.test", 1, {meta_pixel("1001", all_pii_fields()), google_tag("G-B0TH01", true)}));
  c.push_back(spec("metacustom.test", 2,
                   {meta_pixel("1002", PiiFieldSet{PiiField::kEmail, PiiField::kPhoneNumber})},
                   PageShape::kNativeForm));
  c.push_back(spec("manual.test", 3, {meta_pixel("1003", PiiFieldSet{}, {PiiField::kEmail})},
                   PageShape::kDegenerate));
  c.push_back(spec("googlefp.test", 4, {google_tag("AW-1004", true, true)}));
  c.push_back(spec("quiet.test", 5, {meta_pixel("1005", std::nullopt), google_tag("DC-1005", false)}));
  auto retry = spec("retry.test", 6, {meta_pixel("1006", PiiFieldSet{PiiField::kEmail}),
                                      google_tag("AW-1006", true)});
  retry.failure = FailureMode::kFailFirstVisit;
  c.push_back(retry);
  auto gone = spec("gone.test", 7, {google_tag("AW-1007", true)});
  gone.failure = FailureMode::kUnreachable;
  c.push_back(gone);
  auto decoy = spec("decoy.test", 8, {google_tag("G-DEC0Y8", false)});
  decoy.decoys = true;
  c.push_back(decoy);
  return c;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("formscope-browser-" + tag + "-" + std::to_string(::getpid()))) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

TestbedRunOptions options(const std::string& browser, const fs::path& out) {
  TestbedRunOptions o;
  o.browser = browser;
  o.out_dir = out.string();
  o.policy.concurrency = 3;
  o.policy.quiet_period_s = 2;
  o.policy.page_timeout_s = 30;
  return o;
}

}  // namespace

TEST_CASE("a small testbed campaign matches ground truth") {
  const std::string browser = browser_or_skip();
  const auto identity = default_identity();
  Testbed bed(small_corpus(), identity);
  bed.start();
  TempDir dir("small");
  auto run = run_testbed_campaign(bed, identity, DetectionRules::defaults(), options(browser, dir.path));
  for (const auto& check : run.checks) {
    INFO(check.domain);
    for (const auto& m : check.mismatches) MESSAGE(m);
    CHECK(check.mismatches.empty());
    CHECK(check.coherent);
  }
  INFO(run.ledger.describe());
  CHECK(run.ledger.empty());
  CHECK(run.all_match());
  CHECK(run.visits_for("both.test") == 1);
  CHECK(run.visits_for("retry.test") == 2);
  CHECK(run.visits_for("metacustom.test") == 3);
  CHECK(run.visits_for("gone.test") == 3);

  auto first = load_capture(capture_path(dir.path.string(), "retry.test", 1));
  CHECK(first.outcome == VisitOutcome::kUnreachable);
  auto gone = load_capture(capture_path(dir.path.string(), "gone.test", 1));
  CHECK(gone.outcome == VisitOutcome::kUnreachable);
  auto both = load_capture(capture_path(dir.path.string(), "both.test", 1));
  CHECK(both.outcome == VisitOutcome::kOk);
  CHECK(both.form_injected);
  bed.stop();
}

TEST_CASE("a page slower than the timeout is recorded as a timeout") {
  const std::string browser = browser_or_skip();
  const auto identity = default_identity();
  auto slow = spec("slow.test", 1, {meta_pixel("2001", PiiFieldSet{PiiField::kEmail})});
  slow.failure = FailureMode::kSlowLoad;
  slow.latency_ms = 8000;
  Testbed bed({slow}, identity);
  bed.start();
  TempDir dir("slow");
  auto o = options(browser, dir.path);
  o.policy.page_timeout_s = 3;
  o.policy.max_visits = 1;
  auto run = run_testbed_campaign(bed, identity, DetectionRules::defaults(), o);
  REQUIRE(run.campaign.log.size() == 1);
  CHECK(run.campaign.log[0].outcome == VisitOutcome::kTimeout);
  CHECK(run.campaign.quarantined.empty());
  bed.stop();
}

TEST_CASE("an interrupted browser campaign resumes without rewriting captures") {
  const std::string browser = browser_or_skip();
  const auto identity = default_identity();
  Testbed bed(small_corpus(), identity);
  bed.start();
  TempDir dir("resume");
  auto o = options(browser, dir.path);
  o.policy.concurrency = 1;
  o.stop_after = 3;
  auto part = run_testbed_campaign(bed, identity, DetectionRules::defaults(), o);
  CHECK(part.campaign.interrupted);
  CHECK(part.campaign.visits_performed == 3);
  std::map<std::string, fs::file_time_type> stamps;
  for (const auto& e : fs::recursive_directory_iterator(dir.path)) {
    if (e.path().extension() == ".capture") stamps[e.path().string()] = e.last_write_time();
  }
  CHECK(stamps.size() == 3);

  o.stop_after = 0;
  o.policy.concurrency = 3;
  auto rest = run_testbed_campaign(bed, identity, DetectionRules::defaults(), o);
  CHECK_FALSE(rest.campaign.interrupted);
  CHECK(rest.all_match());
  for (const auto& [path, stamp] : stamps) CHECK(fs::last_write_time(path) == stamp);
  int replayed = 0;
  for (const auto& rec : rest.campaign.log) replayed += rec.replayed;
  CHECK(replayed == 3);
  bed.stop();
}
