#include "formscope/testbed_run.hpp"

#include <algorithm>
#include <map>

namespace formscope {

bool TestbedRunResult::all_match() const {
  if (!ledger.empty() || campaign.interrupted || !campaign.quarantined.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const SiteCheck& c) {
    return c.mismatches.empty() && c.coherent;
  });
}

int TestbedRunResult::visits_for(const std::string& domain) const {
  for (const SiteCheck& c : checks) {
    if (c.domain == domain) return c.visits;
  }
  return 0;
}

TestbedRunResult run_testbed_campaign(Testbed& testbed, const PlaceholderIdentity& identity,
                                      const DetectionRules& rules,
                                      const TestbedRunOptions& options) {
  const auto start = Clock::now();
  BrowserOptions launch;
  launch.executable = options.browser.empty() ? find_browser() : options.browser;
  if (launch.executable.empty()) throw Error("no browser found; set FORMSCOPE_CHROME");
  launch.host_resolver_rules = testbed.resolver_rules();
  launch.ignore_certificate_errors = true;

  std::vector<SiteRecord> sites;
  for (const SiteSpec& spec : testbed.corpus()) sites.push_back(site_record(spec));

  CampaignOptions campaign;
  campaign.out_dir = options.out_dir;
  campaign.stop_after = options.stop_after;
  const CrawlPolicy& policy = options.policy;
  TestbedRunResult result;
  result.campaign = run_campaign(
      sites, policy, identity, rules,
      [&](int) { return make_browser_visitor(policy, identity, "", launch); }, campaign);

  std::map<std::string, const SiteVerdict*> by_domain;
  for (const SiteVerdict& v : result.campaign.verdicts) by_domain[v.site.domain] = &v;
  std::map<std::string, int> visits;
  for (const ScheduleRecord& r : result.campaign.log) visits[r.site] = std::max(visits[r.site], r.visit);

  for (const SiteSpec& spec : testbed.corpus()) {
    SiteCheck check;
    check.domain = spec.domain;
    check.visits = visits[spec.domain];
    auto it = by_domain.find(spec.domain);
    if (it == by_domain.end()) {
      check.mismatches.push_back("no verdict");
    } else {
      const SiteVerdict& v = *it->second;
      check.mismatches = verdict_mismatches(expected_verdict(spec), v);
      check.coherent =
          v.meta.configured == (v.meta.fdc_modes.count(CollectionMode::kAutomatic) > 0);
    }
    result.checks.push_back(std::move(check));
  }
  result.ledger = ledger_diff(testbed.ledger().entries(), testbed.corpus());
  result.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

}  // namespace formscope
