#pragma once

// Browser visits with form injection, the revisit scheduler and the
// campaign runner that persists captures and merged verdicts.

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "formscope/cdp.hpp"
#include "formscope/model.hpp"
#include "formscope/pii_hash.hpp"
#include "formscope/rules.hpp"

namespace formscope {

struct CrawlPolicy {
  int page_timeout_s = 180;
  int max_visits = 3;
  int concurrency = 1;
  // A visit ends early after this long without network activity once the
  // form has been injected.
  int quiet_period_s = 10;
  int restart_every = 50;  // visits per browser before it is relaunched
  int max_crashes = 3;     // crashes before a site is quarantined
  std::string url_scheme = "https";

  // Throws Error on non-positive limits or an unknown scheme.
  void validate() const;
};

// Script evaluated in the top document after load. Builds a form with the
// seven identity inputs under the first div or span (the body when there
// is none), fills in the raw values and clicks submit. Evaluates to true
// when the form was placed and false inside a frame.
std::string build_injection_script(const PlaceholderIdentity& identity);

// Lowercased page text that looks like an anti-bot interstitial.
bool looks_like_challenge(std::string_view title, std::string_view text);

// One visit through a browser reachable at a DevTools endpoint. Opens a
// fresh browser context per visit so no state carries over.
VisitCapture visit_site(const std::string& browser_endpoint,
                        const SiteRecord& site, int visit_index,
                        const CrawlPolicy& policy,
                        const PlaceholderIdentity& identity);

struct SiteProgress {
  int visits_done = 0;
  std::array<bool, 2> fdc_seen{};  // indexed by Provider
  std::optional<VisitOutcome> last_outcome;

  bool seen(Provider p) const { return fdc_seen[static_cast<int>(p)]; }
};

struct ScheduleDecision {
  bool revisit = false;
  std::vector<Provider> justified_by;  // providers still lacking FDC
};

// Revisit while visits remain and some provider has not shown FDC yet.
// Providers with FDC never justify another visit.
ScheduleDecision schedule_next(const SiteProgress& progress,
                               const CrawlPolicy& policy);

// Folds one visit verdict into the progress. fdc_seen only ever turns on.
void record_visit(SiteProgress& progress, const SiteVerdict& verdict,
                  VisitOutcome outcome);

// Visits one site. Implementations may throw to signal a crash; the
// campaign then re-queues the site.
class SiteVisitor {
 public:
  virtual ~SiteVisitor() = default;
  virtual VisitCapture visit(const SiteRecord& site, int visit_index) = 0;
};

using VisitorFactory = std::function<std::unique_ptr<SiteVisitor>(int worker)>;

// Visitor backed by a DevTools browser. With an endpoint it attaches to an
// externally managed browser; otherwise it launches its own and relaunches
// it every policy.restart_every visits and after a crash.
std::unique_ptr<SiteVisitor> make_browser_visitor(
    const CrawlPolicy& policy, const PlaceholderIdentity& identity,
    std::string browser_endpoint, BrowserOptions launch);

struct ScheduleRecord {
  std::string site;
  int visit = 0;
  VisitOutcome outcome = VisitOutcome::kOk;
  bool revisit = false;
  std::vector<Provider> justified_by;
  std::array<bool, 2> fdc_seen{};
  bool replayed = false;  // rebuilt from a persisted capture on resume
};

struct QuarantineRecord {
  std::string site;
  int crashes = 0;
  std::string last_error;
};

struct CampaignOptions {
  std::string out_dir;
  // Stop handing out work once this many visits have completed in this run
  // (0 = no limit). Used to simulate an interruption.
  std::size_t stop_after = 0;
};

struct CampaignResult {
  std::vector<SiteVerdict> verdicts;  // sorted by domain
  std::vector<ScheduleRecord> log;
  std::vector<QuarantineRecord> quarantined;
  std::size_t visits_performed = 0;  // in this run, excluding replays
  bool interrupted = false;
};

// Runs every site until the scheduler is done with it. Captures go to
// <out>/<domain>/visit-<n>.capture and are never rewritten; existing ones
// are replayed first so an interrupted campaign resumes where it stopped.
// Also writes campaign-log.jsonl, quarantine.jsonl and verdicts.jsonl.
CampaignResult run_campaign(const std::vector<SiteRecord>& sites,
                            const CrawlPolicy& policy,
                            const PlaceholderIdentity& identity,
                            const DetectionRules& rules,
                            const VisitorFactory& factory,
                            const CampaignOptions& options);

// Re-analyzes every <dir>/<domain>/visit-<n>.capture and merges per site,
// sorted by domain. Throws Error when dir is not a directory.
std::vector<SiteVerdict> analyze_captures(const std::string& dir,
                                          const PlaceholderIdentity& identity,
                                          const DetectionRules& rules);

// Path of a visit's capture file under a campaign directory.
std::string capture_path(const std::string& out_dir, const std::string& domain,
                         int visit_index);

// Writes a file that must not exist yet, atomically. Throws Error if it
// does or on I/O failure.
void write_new_file(const std::string& path, const std::string& contents);

}  // namespace formscope
