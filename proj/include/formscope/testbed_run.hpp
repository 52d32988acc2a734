#pragma once

// Runs a crawl campaign against a local testbed and checks the merged
// verdicts against the corpus ground truth.

#include <string>
#include <vector>

#include "formscope/crawl.hpp"
#include "formscope/testbed.hpp"

namespace formscope {

struct TestbedRunOptions {
  CrawlPolicy policy;
  std::string out_dir;
  std::string browser;  // executable; find_browser() when empty
  std::size_t stop_after = 0;
};

struct SiteCheck {
  std::string domain;
  int visits = 0;
  std::vector<std::string> mismatches;
  // Meta configured <=> Meta automatic FDC observed.
  bool coherent = true;
};

struct TestbedRunResult {
  CampaignResult campaign;
  LedgerDiff ledger;
  std::vector<SiteCheck> checks;  // one per corpus site, corpus order
  double seconds = 0;

  bool all_match() const;
  int visits_for(const std::string& domain) const;
};

// The testbed must be started. Visits go through browsers launched with the
// testbed's resolver rules.
TestbedRunResult run_testbed_campaign(Testbed& testbed, const PlaceholderIdentity& identity,
                                      const DetectionRules& rules,
                                      const TestbedRunOptions& options);

}  // namespace formscope
