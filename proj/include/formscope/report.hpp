#pragma once

// Compliance screening, disclosure letters and report rendering.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "formscope/model.hpp"
#include "formscope/regression.hpp"
#include "formscope/stats.hpp"

namespace formscope {

struct ViolationRecord {
  SiteRecord site;  // vertical is health or finance
  Provider provider = Provider::kMeta;
  std::vector<TrackerInstallation> installations;
  PiiFieldSet config_fields;
  std::vector<FdcEvent> fdc_events;  // never empty
  std::string contact_email;         // filled in by the operator
};

// One record per (sensitive site, provider with FDC). Verticals come from
// `sites` when the domain is listed there, else from the verdict.
std::vector<ViolationRecord> compliance_screen(
    std::span<const SiteVerdict> verdicts, std::span<const SiteRecord> sites);

// Values the operator supplies for a letter.
struct LetterContext {
  std::string name_affiliation;
  std::string signer_name;
};

// Placeholders every template has to contain.
const std::vector<std::string>& required_placeholders();

// Fills {{placeholder}} slots. Throws Error naming the first required
// placeholder that the template lacks, or the first slot without a value.
std::string render_notification(const ViolationRecord& violation,
                                 std::string_view letter_template,
                                 const LetterContext& context);

// Google letters disclose "emails"; Meta letters disclose visitor data
// including emails.
std::string data_description(Provider provider);

enum class ReportFormat { kMarkdown, kCsv };
// Accepts "md", "markdown" and "csv"; throws Error for anything else.
ReportFormat parse_report_format(std::string_view name);

struct NamedFit {
  std::string title;
  RegressionFit fit;
};

struct ReportInput {
  SummaryTables tables;
  std::vector<NamedFit> fits;
  std::optional<double> dropped_feature_correlation;
};

std::string render_report(const ReportInput& input, ReportFormat format);

}  // namespace formscope
