// formscope command line: crawl, analyze, report, notify and the local
// testbed.

#include <csignal>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "formscope/capture.hpp"
#include "formscope/crawl.hpp"
#include "formscope/detect.hpp"
#include "formscope/json_io.hpp"
#include "formscope/report.hpp"
#include "formscope/stats.hpp"
#include "formscope/testbed.hpp"
#include "formscope/testbed_run.hpp"

namespace fs = std::filesystem;
using namespace formscope;
using nlohmann::json;

namespace {

std::atomic<bool> g_interrupted{false};

PlaceholderIdentity identity_from(const std::string& path) {
  return path.empty() ? default_identity() : load_identity(path);
}

DetectionRules rules_from(const std::string& path) {
  DetectionRules rules = path.empty() ? DetectionRules::defaults() : load_rules(path);
  rules.validate();
  return rules;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write " + path);
}

std::vector<NamedFit> fit_models(const std::vector<SiteVerdict>& verdicts,
                                 std::vector<std::string>& notes) {
  std::vector<NamedFit> fits;
  for (auto [model, title] : {std::pair{RegressionModel::kMeta, "Meta FDC"},
                              std::pair{RegressionModel::kGoogle, "Google FDC"}}) {
    RegressionDataset data = build_dataset(verdicts, model);
    try {
      fits.push_back({title, fit_logistic(data.features, data.outcome, data.feature_names)});
    } catch (const Error& e) {
      notes.push_back(std::string(title) + " model not fitted: " + e.what());
    }
  }
  return fits;
}

std::string format_fit(const NamedFit& named) {
  std::ostringstream out;
  const RegressionFit& fit = named.fit;
  out << named.title << " (n=" << fit.observations << ", pseudo R2 " << std::fixed
      << std::setprecision(4) << fit.pseudo_r2 << ", iterations " << fit.iterations
      << (fit.converged ? "" : ", NOT converged: " + fit.diagnostic) << ")\n";
  out << std::left << std::setw(18) << "term" << std::right << std::setw(10) << "beta"
      << std::setw(10) << "se" << std::setw(10) << "OR" << std::setw(20) << "95% CI"
      << std::setw(12) << "p" << '\n';
  for (const Coefficient& c : fit.coefficients) {
    std::ostringstream ci;
    ci << std::fixed << std::setprecision(3) << "[" << c.ci_low << ", " << c.ci_high << "]";
    out << std::left << std::setw(18) << c.name << std::right << std::fixed
        << std::setprecision(4) << std::setw(10) << c.beta << std::setw(10) << c.std_error
        << std::setw(10) << c.odds_ratio << std::setw(20) << ci.str() << std::setw(12)
        << std::scientific << std::setprecision(3) << c.p_value << '\n';
  }
  return out.str();
}

std::vector<SiteRecord> optional_sites(const std::string& path) {
  return path.empty() ? std::vector<SiteRecord>{} : load_site_list(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detects Meta Pixel and Google Tag form-data collection on websites."};
  app.require_subcommand(1);

  std::string identity_path, rules_path;
  app.add_option("--identity", identity_path, "placeholder identity key-value file");
  app.add_option("--rules", rules_path, "detection rules (formscope-rules/1)");

  // scan
  auto* scan = app.add_subcommand("scan", "visit sites with a browser and persist captures");
  std::string scan_input, scan_out, scan_endpoint, scan_browser, scan_resolver;
  CrawlPolicy policy;
  std::size_t scan_stop_after = 0;
  bool scan_ignore_cert = false;
  scan->add_option("--input", scan_input, "site list CSV (domain,rank,vertical)")->required();
  scan->add_option("--out", scan_out, "campaign directory")->required();
  scan->add_option("--max-visits", policy.max_visits, "visits per site at most");
  scan->add_option("--page-timeout", policy.page_timeout_s, "seconds per visit");
  scan->add_option("--concurrency", policy.concurrency, "parallel workers");
  scan->add_option("--quiet-period", policy.quiet_period_s,
                   "end a visit after this many idle seconds post-injection");
  scan->add_option("--restart-every", policy.restart_every, "visits per launched browser");
  scan->add_option("--browser-endpoint", scan_endpoint,
                   "ws:// DevTools endpoint of an already running browser");
  scan->add_option("--browser", scan_browser, "browser executable to launch");
  scan->add_option("--host-resolver-rules", scan_resolver, "passed to launched browsers");
  scan->add_flag("--ignore-certificate-errors", scan_ignore_cert, "for local testbeds");
  scan->add_option("--scheme", policy.url_scheme, "https or http");
  scan->add_option("--stop-after", scan_stop_after, "stop after this many visits (resumable)");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "turn captures into merged site verdicts");
  std::string analyze_dir, analyze_out;
  analyze->add_option("--captures", analyze_dir, "campaign directory")->required();
  analyze->add_option("--out", analyze_out, "verdicts file (JSON lines)")->required();

  // report
  auto* report = app.add_subcommand("report", "summary tables and regression models");
  std::string report_verdicts, report_format = "md", report_out;
  report->add_option("--verdicts", report_verdicts)->required();
  report->add_option("--format", report_format, "md or csv");
  report->add_option("--out", report_out, "output file (stdout by default)");

  // samplesize
  auto* samplesize = app.add_subcommand("samplesize", "validation sample size for a population");
  std::int64_t population = 0;
  double confidence = 0.95, margin = 0.05, p_hat = 0.5;
  std::string sample_from, sample_out;
  std::uint64_t sample_seed = 1;
  samplesize->add_option("--population", population, "population size");
  samplesize->add_option("--confidence", confidence);
  samplesize->add_option("--margin", margin);
  samplesize->add_option("--p", p_hat, "expected proportion");
  samplesize->add_option("--draw-from", sample_from, "site list to draw the sample from");
  samplesize->add_option("--seed", sample_seed);
  samplesize->add_option("--out", sample_out, "where to write the drawn sample");

  // regress
  auto* regress = app.add_subcommand("regress", "fit the Meta and Google FDC models");
  std::string regress_verdicts;
  regress->add_option("--verdicts", regress_verdicts)->required();

  // notify
  auto* notify = app.add_subcommand("notify", "screen sensitive sites and draft letters");
  std::string notify_verdicts, notify_sites, notify_template = "data/notification_template.txt",
                                             notify_out, notify_contacts;
  LetterContext letter;
  notify->add_option("--verdicts", notify_verdicts)->required();
  notify->add_option("--sites", notify_sites, "site list with verticals");
  notify->add_option("--template", notify_template);
  notify->add_option("--contacts", notify_contacts, "CSV domain,email");
  notify->add_option("--name-affiliation", letter.name_affiliation)->required();
  notify->add_option("--signer", letter.signer_name)->required();
  notify->add_option("--out-dir", notify_out)->required();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "convert external traffic archives to captures");
  std::string har_path, ingest_out, ingest_domain, ingest_vertical = "unknown";
  std::int64_t ingest_rank = 1;
  int ingest_visit = 1;
  bool ingest_injected = false;
  ingest->add_option("--from-har", har_path, "HAR 1.2 file")->required();
  ingest->add_option("--domain", ingest_domain)->required();
  ingest->add_option("--rank", ingest_rank);
  ingest->add_option("--vertical", ingest_vertical);
  ingest->add_option("--visit", ingest_visit);
  ingest->add_flag("--form-injected", ingest_injected);
  ingest->add_option("--out", ingest_out, "capture file")->required();

  // export-rules
  auto* export_rules = app.add_subcommand("export-rules", "write the detection rules file");
  std::string rules_out;
  export_rules->add_option("--out", rules_out);

  // export-identity
  auto* export_identity = app.add_subcommand("export-identity", "write the identity file");
  std::string identity_out;
  export_identity->add_option("--out", identity_out);

  // testbed
  auto* testbed = app.add_subcommand("testbed", "local tracker simulation");
  testbed->require_subcommand(1);
  auto* tb_generate = testbed->add_subcommand("generate", "write a generated corpus");
  CorpusOptions corpus_options;
  std::string corpus_out;
  tb_generate->add_option("--sites", corpus_options.sites);
  tb_generate->add_option("--seed", corpus_options.seed);
  tb_generate->add_option("--out", corpus_out);

  auto* tb_serve = testbed->add_subcommand("serve", "serve a corpus until interrupted");
  std::string corpus_path;
  TestbedOptions tb_options;
  tb_serve->add_option("--corpus", corpus_path, "corpus file (generated when absent)");
  tb_serve->add_option("--port", tb_options.port);
  tb_serve->add_flag("--plain-config", tb_options.plain_config, "unminified config scripts");

  auto* tb_run = testbed->add_subcommand("run", "crawl a corpus and compare with ground truth");
  TestbedRunOptions run_options;
  run_options.policy.quiet_period_s = 3;
  run_options.policy.page_timeout_s = 60;
  run_options.policy.concurrency = 4;
  tb_run->add_option("--corpus", corpus_path, "corpus file (generated when absent)");
  tb_run->add_option("--sites", corpus_options.sites, "generated corpus size");
  tb_run->add_option("--seed", corpus_options.seed);
  tb_run->add_option("--out", run_options.out_dir)->required();
  tb_run->add_option("--browser", run_options.browser);
  tb_run->add_option("--concurrency", run_options.policy.concurrency);
  tb_run->add_option("--max-visits", run_options.policy.max_visits);
  tb_run->add_option("--page-timeout", run_options.policy.page_timeout_s);
  tb_run->add_option("--quiet-period", run_options.policy.quiet_period_s);
  tb_run->add_option("--stop-after", run_options.stop_after);
  tb_run->add_flag("--plain-config", tb_options.plain_config);

  auto* tb_conformance =
      testbed->add_subcommand("export-conformance", "config scripts with their expected parse");
  std::string conformance_out;
  tb_conformance->add_option("--out", conformance_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*scan) {
      const PlaceholderIdentity identity = identity_from(identity_path);
      const DetectionRules rules = rules_from(rules_path);
      std::vector<SiteRecord> sites = load_site_list(scan_input);
      BrowserOptions launch;
      if (scan_endpoint.empty()) {
        launch.executable = scan_browser.empty() ? find_browser() : scan_browser;
        if (launch.executable.empty()) {
          throw Error("no browser found; pass --browser, --browser-endpoint or set FORMSCOPE_CHROME");
        }
      }
      launch.host_resolver_rules = scan_resolver;
      launch.ignore_certificate_errors = scan_ignore_cert;
      CampaignOptions options{scan_out, scan_stop_after};
      CampaignResult result = run_campaign(
          sites, policy, identity, rules,
          [&](int) { return make_browser_visitor(policy, identity, scan_endpoint, launch); },
          options);
      std::cerr << "visits: " << result.visits_performed << ", sites with verdicts: "
                << result.verdicts.size() << ", quarantined: " << result.quarantined.size()
                << (result.interrupted ? " (stopped early; rerun to resume)" : "") << '\n';
      return 0;
    }
    if (*analyze) {
      auto verdicts =
          analyze_captures(analyze_dir, identity_from(identity_path), rules_from(rules_path));
      write_verdicts(analyze_out, verdicts);
      std::cerr << "wrote " << verdicts.size() << " verdicts\n";
      return 0;
    }
    if (*report) {
      auto verdicts = read_verdicts(report_verdicts);
      ReportInput input;
      input.tables = aggregate(verdicts);
      std::vector<std::string> notes;
      input.fits = fit_models(verdicts, notes);
      if (double r = dropped_feature_correlation(verdicts); !std::isnan(r)) {
        input.dropped_feature_correlation = r;
      }
      write_text(report_out, render_report(input, parse_report_format(report_format)));
      for (const auto& note : notes) std::cerr << note << '\n';
      return 0;
    }
    if (*samplesize) {
      if (!sample_from.empty()) {
        auto sites = load_site_list(sample_from);
        auto n = sample_size(static_cast<std::int64_t>(sites.size()), confidence, margin, p_hat);
        auto sample = draw_sample(sites, static_cast<std::size_t>(n), sample_seed);
        write_text(sample_out, serialize_site_list(sample));
        std::cerr << "drew " << n << " of " << sites.size() << " sites\n";
        return 0;
      }
      if (population <= 0) throw Error("give --population or --draw-from");
      std::cout << sample_size(population, confidence, margin, p_hat) << '\n';
      return 0;
    }
    if (*regress) {
      auto verdicts = read_verdicts(regress_verdicts);
      std::vector<std::string> notes;
      for (const auto& fit : fit_models(verdicts, notes)) std::cout << format_fit(fit) << '\n';
      if (double r = dropped_feature_correlation(verdicts); !std::isnan(r)) {
        std::cout << "correlation of Meta pixel and Meta FDC among Google sites: " << std::fixed
                  << std::setprecision(3) << r << '\n';
      }
      for (const auto& note : notes) std::cerr << note << '\n';
      return 0;
    }
    if (*notify) {
      auto verdicts = read_verdicts(notify_verdicts);
      auto sites = optional_sites(notify_sites);
      std::map<std::string, std::string> contacts;
      if (!notify_contacts.empty()) {
        std::istringstream in(read_file(notify_contacts));
        std::string line;
        while (std::getline(in, line)) {
          auto comma = line.find(',');
          if (comma == std::string::npos || line.starts_with("domain,")) continue;
          contacts[line.substr(0, comma)] = line.substr(comma + 1);
        }
      }
      const std::string letter_template = read_file(notify_template);
      fs::create_directories(notify_out);
      auto violations = compliance_screen(verdicts, sites);
      json index = json::array();
      for (auto& v : violations) {
        if (auto it = contacts.find(v.site.domain); it != contacts.end()) v.contact_email = it->second;
        std::string name = v.site.domain + "-" + std::string(to_string(v.provider)) + ".txt";
        write_text((fs::path(notify_out) / name).string(),
                   render_notification(v, letter_template, letter));
        index.push_back({{"site", v.site.domain},
                         {"vertical", v.site.vertical.label()},
                         {"provider", to_string(v.provider)},
                         {"letter", name}});
      }
      write_text((fs::path(notify_out) / "index.json").string(), index.dump(2) + "\n");
      std::cerr << violations.size() << " letters\n";
      return 0;
    }
    if (*ingest) {
      SiteRecord site{ingest_domain, ingest_rank, Vertical::from_raw(ingest_vertical)};
      VisitCapture capture = import_har(read_file(har_path), site, ingest_visit, ingest_injected);
      write_text(ingest_out, serialize_capture(capture));
      std::cerr << capture.requests.size() << " requests, " << capture.scripts.size()
                << " scripts, " << capture.diagnostics.size() << " diagnostics\n";
      return 0;
    }
    if (*export_rules) {
      write_text(rules_out, rules_to_json(rules_from(rules_path)).dump(2) + "\n");
      return 0;
    }
    if (*export_identity) {
      write_text(identity_out, serialize_identity(identity_from(identity_path)));
      return 0;
    }
    if (*tb_generate) {
      write_text(corpus_out, corpus_to_json(generate_corpus(corpus_options)).dump(2) + "\n");
      return 0;
    }
    if (*tb_serve) {
      auto corpus = corpus_path.empty() ? generate_corpus(corpus_options) : load_corpus(corpus_path);
      Testbed bed(corpus, identity_from(identity_path), tb_options);
      bed.start();
      std::cout << "serving " << corpus.size() << " sites on port " << bed.port() << '\n'
                << "--host-resolver-rules=\"" << bed.resolver_rules() << "\"\n"
                << std::flush;
      std::signal(SIGINT, [](int) { g_interrupted = true; });
      std::signal(SIGTERM, [](int) { g_interrupted = true; });
      while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(200));
      bed.stop();
      std::cout << bed.ledger().size() << " collection hits recorded\n";
      return 0;
    }
    if (*tb_run) {
      auto corpus = corpus_path.empty() ? generate_corpus(corpus_options) : load_corpus(corpus_path);
      const PlaceholderIdentity identity = identity_from(identity_path);
      Testbed bed(corpus, identity, tb_options);
      bed.start();
      TestbedRunResult result =
          run_testbed_campaign(bed, identity, rules_from(rules_path), run_options);
      bed.stop();
      for (const SiteCheck& c : result.checks) {
        std::cout << (c.mismatches.empty() && c.coherent ? "ok   " : "FAIL ") << c.domain
                  << " visits=" << c.visits;
        for (const auto& m : c.mismatches) std::cout << " | " << m;
        if (!c.coherent) std::cout << " | configured and automatic FDC disagree";
        std::cout << '\n';
      }
      if (!result.ledger.empty()) std::cout << result.ledger.describe();
      std::cout << (result.all_match() ? "all sites match" : "MISMATCHES") << " ("
                << std::fixed << std::setprecision(1) << result.seconds << " s)\n";
      return result.all_match() ? 0 : 1;
    }
    if (*tb_conformance) {
      const DetectionRules rules = rules_from(rules_path);
      fs::create_directories(conformance_out);
      json cases = json::array();
      int n = 0;
      for (const SiteSpec& spec : generate_corpus({})) {
        for (const PixelSpec& pixel : spec.pixels) {
          if (pixel.provider != Provider::kMeta) continue;
          for (bool plain : {false, true}) {
            std::string body = meta_config_script(pixel, plain);
            std::string name = "config-" + std::to_string(++n) + ".js";
            write_text((fs::path(conformance_out) / name).string(), body);
            json expected;
            try {
              PixelConfiguration c = parse_meta_pixel_config(
                  body, "https://connect.facebook.net/signals/config/" + pixel.tracker_id, rules);
              expected = {{"pixel_id", c.pixel_id},
                          {"automatic_matching_enabled", c.automatic_matching_enabled},
                          {"selected_match_keys", to_json(c.selected_match_keys)}};
            } catch (const Error& e) {
              expected = {{"error", e.what()}};
            }
            cases.push_back({{"file", name}, {"site", spec.domain}, {"expected", expected}});
          }
        }
      }
      json manifest{{"format", "formscope-conformance/1"},
                    {"rules_format", std::string(kRulesFormat)},
                    {"cases", cases}};
      write_text((fs::path(conformance_out) / "manifest.json").string(), manifest.dump(2) + "\n");
      std::cerr << cases.size() << " conformance cases\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "formscope: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
