#include "formscope/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace formscope {

std::vector<ViolationRecord> compliance_screen(
    std::span<const SiteVerdict> verdicts, std::span<const SiteRecord> sites) {
  std::map<std::string, Vertical> listed;
  for (const auto& site : sites) listed[site.domain] = site.vertical;

  std::vector<ViolationRecord> out;
  for (const auto& v : verdicts) {
    SiteRecord site = v.site;
    if (auto it = listed.find(site.domain); it != listed.end()) {
      site.vertical = it->second;
    }
    if (!site.vertical.is_sensitive()) continue;
    for (Provider provider : kAllProviders) {
      const ProviderVerdict& pv = v.of(provider);
      if (!pv.fdc || pv.fdc_events.empty()) continue;
      ViolationRecord record;
      record.site = site;
      record.provider = provider;
      record.installations = pv.installations;
      record.config_fields = pv.config_fields;
      record.fdc_events = pv.fdc_events;
      out.push_back(std::move(record));
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.site.domain, a.provider) < std::tie(b.site.domain, b.provider);
  });
  return out;
}

const std::vector<std::string>& required_placeholders() {
  static const std::vector<std::string> names = {
      "name_affiliation", "vertical", "provider", "tracker_id",
      "data_description"};
  return names;
}

std::string data_description(Provider provider) {
  return provider == Provider::kGoogle ? "emails"
                                       : "visitor data, including emails";
}

std::string render_notification(const ViolationRecord& violation,
                                 std::string_view letter_template,
                                 const LetterContext& context) {
  for (const auto& name : required_placeholders()) {
    if (letter_template.find("{{" + name + "}}") == std::string_view::npos) {
      throw Error("template lacks the {{" + name + "}} placeholder");
    }
  }
  std::string ids;
  std::set<std::string> seen;
  for (const auto& installation : violation.installations) {
    if (!seen.insert(installation.tracker_id).second) continue;
    if (!ids.empty()) ids += ", ";
    ids += installation.tracker_id;
  }
  std::map<std::string, std::string> values = {
      {"name_affiliation", context.name_affiliation},
      {"signer_name", context.signer_name},
      {"vertical", violation.site.vertical.kind() == Vertical::Kind::kHealth
                       ? "health"
                       : "finance"},
      {"provider",
       violation.provider == Provider::kMeta ? "Meta" : "Google"},
      {"tracker_id", ids},
      {"data_description", data_description(violation.provider)},
      {"site", violation.site.domain},
      {"contact_email", violation.contact_email},
  };

  std::string out;
  std::size_t pos = 0;
  while (true) {
    std::size_t open = letter_template.find("{{", pos);
    if (open == std::string_view::npos) break;
    std::size_t close = letter_template.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw Error("template has an unterminated placeholder");
    }
    out.append(letter_template.substr(pos, open - pos));
    std::string name(letter_template.substr(open + 2, close - open - 2));
    auto it = values.find(name);
    if (it == values.end()) throw Error("unknown placeholder {{" + name + "}}");
    if (it->second.empty()) throw Error("no value for placeholder {{" + name + "}}");
    out += it->second;
    pos = close + 2;
  }
  out.append(letter_template.substr(pos));
  return out;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "md" || name == "markdown") return ReportFormat::kMarkdown;
  if (name == "csv") return ReportFormat::kCsv;
  throw Error("unknown report format '" + std::string(name) + "'");
}

namespace {

std::string num(double value, const char* fmt = "%.4f") {
  if (std::isnan(value)) return "n/a";
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, fmt, value);
  return buffer;
}

std::string pvalue(double p) {
  if (std::isnan(p)) return "n/a";
  if (p < 0.001) return "<0.001";
  return num(p, "%.3f");
}

class Markdown {
 public:
  void heading(const std::string& text) { out_ << "\n## " << text << "\n\n"; }
  void header(const std::vector<std::string>& cells) {
    row(cells);
    out_ << '|';
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? " ---: |" : " --- |");
    out_ << '\n';
    width_ = cells.size();
  }
  void row(const std::vector<std::string>& cells) {
    out_ << '|';
    for (const auto& c : cells) out_ << ' ' << c << " |";
    out_ << '\n';
  }
  void no_data() {
    std::vector<std::string> cells(width_, "");
    cells[0] = "no data";
    row(cells);
  }
  std::ostringstream& raw() { return out_; }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
  std::size_t width_ = 1;
};

std::string count_or_dash(const Share& s) {
  return s.denominator == 0 && s.count == 0 ? "-" : std::to_string(s.count);
}

std::string pct(const Share& s) {
  return s.denominator == 0 ? "-" : s.percent() + "%";
}

std::string render_markdown(const ReportInput& input) {
  const SummaryTables& t = input.tables;
  Markdown md;
  md.raw() << "# formscope report\n";

  md.heading("Installations and form data collection");
  md.raw() << "Sites: " << t.overview.total_sites << "\n\n";
  md.header({"Provider", "Installed", "% sites", "Configured", "% sites",
             "% installed", "FDC", "% sites", "% installed"});
  if (t.empty) {
    md.no_data();
  } else {
    auto provider = [&](const std::string& name, const ProviderRow& r,
                        bool has_config) {
      md.row({name, std::to_string(r.installed.count), pct(r.installed),
              has_config ? std::to_string(r.configured.count) : "-",
              has_config ? pct(r.configured) : "-",
              has_config ? pct(r.configured_of_installed) : "-",
              std::to_string(r.fdc.count), pct(r.fdc), pct(r.fdc_of_installed)});
    };
    provider("Google", t.overview.google, false);
    provider("Meta", t.overview.meta, true);
    provider("Google or Meta", t.overview.any, false);
  }

  md.heading("By vertical");
  md.header({"Vertical", "Sites", "Google installed", "% vertical",
             "Google FDC % installed", "Meta installed", "% vertical",
             "Meta FDC % installed"});
  if (t.empty) {
    md.no_data();
  } else {
    for (const auto& r : t.verticals) {
      md.row({r.vertical, std::to_string(r.sites),
              std::to_string(r.google_installed.count), pct(r.google_installed),
              pct(r.google_fdc), std::to_string(r.meta_installed.count),
              pct(r.meta_installed), pct(r.meta_fdc)});
    }
  }

  md.heading("By tracker subset");
  md.header({"Subset", "Sites", "Google FDC", "Meta FDC"});
  if (t.empty) {
    md.no_data();
  } else {
    for (const auto& r : t.subsets.rows) {
      md.row({r.subset, std::to_string(r.sites), pct(r.google_fdc),
              pct(r.meta_fdc)});
    }
    md.raw() << "\nNeither tracker: " << t.subsets.neither
             << ". Both providers collecting: " << t.subsets.both_fdc << ".\n";
  }

  md.heading("Meta match-key configurations (single-pixel sites)");
  md.raw() << "Sites: " << t.fields.sites << "\n\n";
  md.header({"Fields", "Custom", "% custom", "Default + custom", "% combined"});
  if (t.fields.sites == 0) {
    md.no_data();
  } else {
    md.row({"default (all fields)", "-", "-",
            std::to_string(t.fields.default_share.count),
            pct(t.fields.default_share)});
    for (const auto& r : t.fields.rows) {
      md.row({r.label, count_or_dash(r.custom), pct(r.custom),
              std::to_string(r.combined.count), pct(r.combined)});
    }
  }

  if (!input.fits.empty()) {
    for (const auto& named : input.fits) {
      const RegressionFit& fit = named.fit;
      md.heading("Logistic regression: " + named.title);
      md.raw() << "Observations: " << fit.observations
               << ". Pseudo R-squared (McFadden): " << num(fit.pseudo_r2)
               << ". Iterations: " << fit.iterations << ". Converged: "
               << (fit.converged ? "yes" : "no") << ".\n";
      if (!fit.diagnostic.empty()) md.raw() << "Note: " << fit.diagnostic << "\n";
      md.raw() << '\n';
      md.header({"Feature", "Coefficient", "OR", "SE", "p", "95% CI"});
      for (const auto& c : fit.coefficients) {
        md.row({c.name, num(c.beta), num(c.odds_ratio, "%.3f"), num(c.std_error),
                pvalue(c.p_value),
                "[" + num(c.ci_low, "%.3f") + ", " + num(c.ci_high, "%.3f") + "]"});
      }
    }
  }
  if (input.dropped_feature_correlation) {
    md.raw() << "\nMeta FDC is left out of the Google model: its Pearson "
                "correlation with having a Meta pixel is "
             << num(*input.dropped_feature_correlation, "%.2f") << ".\n";
  }
  md.raw() << "\nPercentages are rounded half up to one decimal. "
              "Confidence intervals and p-values are Wald; pseudo "
              "R-squared is McFadden's.\n";
  return md.str();
}

class Csv {
 public:
  Csv() { out_ << "table,row,metric,value\n"; }
  void put(const std::string& table, const std::string& row,
           const std::string& metric, const std::string& value) {
    out_ << table << ',' << quote(row) << ',' << metric << ',' << value << '\n';
  }
  void share(const std::string& table, const std::string& row,
             const std::string& metric, const Share& s) {
    put(table, row, metric + "_count", std::to_string(s.count));
    put(table, row, metric + "_denominator", std::to_string(s.denominator));
    put(table, row, metric + "_percent", s.percent());
  }
  std::string str() const { return out_.str(); }

 private:
  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + '"';
  }
  std::ostringstream out_;
};

std::string render_csv(const ReportInput& input) {
  const SummaryTables& t = input.tables;
  Csv csv;
  if (t.empty) csv.put("overview", "no data", "sites", "0");
  csv.put("overview", "all", "sites", std::to_string(t.overview.total_sites));
  auto provider = [&](const std::string& name, const ProviderRow& r) {
    csv.share("overview", name, "installed", r.installed);
    if (name == "meta") {
      csv.share("overview", name, "configured", r.configured);
      csv.share("overview", name, "configured_of_installed",
                r.configured_of_installed);
    }
    csv.share("overview", name, "fdc", r.fdc);
    csv.share("overview", name, "fdc_of_installed", r.fdc_of_installed);
  };
  provider("google", t.overview.google);
  provider("meta", t.overview.meta);
  provider("any", t.overview.any);
  for (const auto& r : t.verticals) {
    csv.put("vertical", r.vertical, "sites", std::to_string(r.sites));
    csv.share("vertical", r.vertical, "google_installed", r.google_installed);
    csv.share("vertical", r.vertical, "google_fdc", r.google_fdc);
    csv.share("vertical", r.vertical, "meta_installed", r.meta_installed);
    csv.share("vertical", r.vertical, "meta_fdc", r.meta_fdc);
  }
  for (const auto& r : t.subsets.rows) {
    csv.put("subset", r.subset, "sites", std::to_string(r.sites));
    csv.share("subset", r.subset, "google_fdc", r.google_fdc);
    csv.share("subset", r.subset, "meta_fdc", r.meta_fdc);
  }
  csv.put("subset", "neither", "sites", std::to_string(t.subsets.neither));
  csv.put("subset", "both_fdc", "sites", std::to_string(t.subsets.both_fdc));
  csv.put("fields", "all", "sites", std::to_string(t.fields.sites));
  csv.share("fields", "default", "share", t.fields.default_share);
  for (const auto& r : t.fields.rows) {
    csv.share("fields", r.label, "custom", r.custom);
    csv.share("fields", r.label, "combined", r.combined);
  }
  for (const auto& named : input.fits) {
    const std::string table = "regression:" + named.title;
    csv.put(table, "fit", "observations", std::to_string(named.fit.observations));
    csv.put(table, "fit", "pseudo_r2", num(named.fit.pseudo_r2, "%.6f"));
    csv.put(table, "fit", "converged", named.fit.converged ? "true" : "false");
    for (const auto& c : named.fit.coefficients) {
      csv.put(table, c.name, "beta", num(c.beta, "%.6f"));
      csv.put(table, c.name, "odds_ratio", num(c.odds_ratio, "%.6f"));
      csv.put(table, c.name, "std_error", num(c.std_error, "%.6f"));
      csv.put(table, c.name, "p_value", num(c.p_value, "%.6g"));
      csv.put(table, c.name, "ci_low", num(c.ci_low, "%.6f"));
      csv.put(table, c.name, "ci_high", num(c.ci_high, "%.6f"));
    }
  }
  if (input.dropped_feature_correlation) {
    csv.put("regression", "dropped_feature", "pearson",
            num(*input.dropped_feature_correlation, "%.6f"));
  }
  return csv.str();
}

}  // namespace

std::string render_report(const ReportInput& input, ReportFormat format) {
  return format == ReportFormat::kMarkdown ? render_markdown(input)
                                           : render_csv(input);
}

}  // namespace formscope
