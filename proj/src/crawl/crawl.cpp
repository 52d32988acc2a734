#include "formscope/crawl.hpp"

#include <unistd.h>

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <thread>

#include "formscope/capture.hpp"
#include "formscope/detect.hpp"
#include "formscope/json_io.hpp"
#include "json.hpp"

namespace formscope {

using nlohmann::json;
namespace fs = std::filesystem;

void CrawlPolicy::validate() const {
  if (page_timeout_s <= 0) throw Error("page timeout must be positive");
  if (max_visits < 1) throw Error("max visits must be at least 1");
  if (concurrency < 1) throw Error("concurrency must be at least 1");
  if (quiet_period_s <= 0) throw Error("quiet period must be positive");
  if (restart_every < 1) throw Error("browser restart cadence must be at least 1");
  if (max_crashes < 1) throw Error("crash limit must be at least 1");
  if (url_scheme != "https" && url_scheme != "http") {
    throw Error("unsupported url scheme: " + url_scheme);
  }
}

std::string build_injection_script(const PlaceholderIdentity& identity) {
  struct Input {
    PiiField field;
    const char* name;
    const char* type;
    const char* autocomplete;
  };
  static constexpr Input kInputs[] = {
      {PiiField::kEmail, "email", "email", "email"},
      {PiiField::kPhoneNumber, "phone", "tel", "tel"},
      {PiiField::kFirstName, "first_name", "text", "given-name"},
      {PiiField::kLastName, "last_name", "text", "family-name"},
      {PiiField::kCity, "city", "text", "address-level2"},
      {PiiField::kState, "state", "text", "address-level1"},
      {PiiField::kZipCode, "zip", "text", "postal-code"},
  };
  json fields = json::array();
  for (const Input& in : kInputs) {
    fields.push_back({in.name, in.type, in.autocomplete, identity.at(in.field).raw});
  }
  std::string script = R"JS((function () {
  if (window.top !== window) return false;
  if (document.getElementById('formscope-form')) return true;
  var host = document.querySelector('div, span') || document.body || document.documentElement;
  var form = document.createElement('form');
  form.id = 'formscope-form';
  form.method = 'post';
  form.action = '#';
  var fields = )JS";
  script += fields.dump();
  script += R"JS(;
  for (var i = 0; i < fields.length; i++) {
    var input = document.createElement('input');
    input.name = fields[i][0];
    input.id = 'formscope-' + fields[i][0];
    input.type = fields[i][1];
    input.setAttribute('autocomplete', fields[i][2]);
    form.appendChild(input);
  }
  var submit = document.createElement('button');
  submit.type = 'submit';
  submit.textContent = 'Submit';
  form.appendChild(submit);
  form.addEventListener('submit', function (ev) { ev.preventDefault(); });
  host.appendChild(form);
  for (var j = 0; j < fields.length; j++) {
    var el = form.elements[fields[j][0]];
    el.focus();
    el.value = fields[j][3];
    el.dispatchEvent(new Event('input', {bubbles: true}));
    el.dispatchEvent(new Event('change', {bubbles: true}));
  }
  setTimeout(function () { submit.click(); }, 250);
  return true;
})())JS";
  return script;
}

bool looks_like_challenge(std::string_view title, std::string_view text) {
  static constexpr std::string_view kMarkers[] = {
      "captcha",          "cf-challenge",         "challenge-platform",
      "just a moment",    "attention required",   "verify you are human",
      "are you a robot",  "unusual traffic",      "checking your browser",
      "ddos protection",  "bot detection",
  };
  std::string haystack;
  haystack.reserve(title.size() + text.size() + 1);
  for (char c : title) haystack += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  haystack += '\n';
  for (char c : text) haystack += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return std::any_of(std::begin(kMarkers), std::end(kMarkers), [&](std::string_view m) {
    return haystack.find(m) != std::string::npos;
  });
}

namespace {

constexpr auto kCommandTimeout = std::chrono::seconds(15);
constexpr std::size_t kMaxScriptBytes = 8u * 1024 * 1024;

Deadline soon() { return Clock::now() + kCommandTimeout; }

struct SeenRequest {
  std::string request_id;
  std::string method;
  std::string url;
  std::string body;
  bool has_post_data = false;
  bool subframe = false;
  std::int64_t timestamp_ms = 0;
};

std::string post_data_of(const json& request) {
  if (auto it = request.find("postData"); it != request.end() && it->is_string()) {
    return it->get<std::string>();
  }
  std::string out;
  if (auto it = request.find("postDataEntries"); it != request.end() && it->is_array()) {
    for (const json& entry : *it) {
      if (entry.contains("bytes")) out += base64_decode(entry["bytes"].get<std::string>());
    }
  }
  return out;
}

// Records the traffic of one page. Everything happens on the caller's
// thread through the page connection.
class PageRecorder {
 public:
  PageRecorder(CdpConnection& page, Clock::time_point start)
      : page_(page), start_(start), last_activity_(start) {}

  void set_main_frame(std::string frame) { main_frame_ = std::move(frame); }
  bool loaded() const { return loaded_; }
  int document_status() const { return document_status_; }
  Clock::time_point last_activity() const { return last_activity_; }
  void touch() { last_activity_ = Clock::now(); }

  // Handles one event; false when none arrived before the deadline.
  bool pump(Deadline deadline) {
    auto event = page_.next_event(deadline);
    if (!event) return false;
    handle(*event);
    return true;
  }

  void collect_bodies(VisitCapture& capture, Deadline budget) {
    for (auto& [request_id, url] : scripts_) {
      if (!finished_.count(request_id) || Clock::now() >= budget) continue;
      try {
        json r = page_.call("Network.getResponseBody", {{"requestId", request_id}},
                            std::min(budget, soon()));
        std::string body = r.value("body", "");
        if (r.value("base64Encoded", false)) body = base64_decode(body);
        if (body.size() <= kMaxScriptBytes) capture.scripts[url] = std::move(body);
      } catch (const CdpError& e) {
        if (!page_.is_open()) throw;
        capture.diagnostics.push_back({capture.site.domain, url,
                                       std::string("script body unavailable: ") + e.what()});
      }
    }
    for (SeenRequest& r : requests_) {
      if (!r.has_post_data || !r.body.empty() || Clock::now() >= budget) continue;
      if (last_index_[r.request_id] != &r - requests_.data()) continue;
      try {
        json pd = page_.call("Network.getRequestPostData", {{"requestId", r.request_id}},
                             std::min(budget, soon()));
        r.body = pd.value("postData", "");
      } catch (const CdpError&) {
        if (!page_.is_open()) throw;
      }
    }
    for (const SeenRequest& r : requests_) {
      NetworkRequest out;
      if (make_request(r.method, r.url, r.body,
                       r.subframe ? Initiator::kSubframe : Initiator::kTopDocument,
                       r.timestamp_ms, out)) {
        capture.requests.push_back(std::move(out));
      }
    }
    // Bodies whose request URL was not kept (data: and the like) would
    // break the capture invariant.
    std::set<std::string> urls;
    for (const auto& r : capture.requests) urls.insert(r.url);
    std::erase_if(capture.scripts, [&](const auto& kv) { return !urls.count(kv.first); });
  }

 private:
  void handle(const json& event) {
    const std::string method = event.value("method", "");
    const json& params = event.contains("params") ? event["params"] : json::object();
    if (method.starts_with("Network.")) last_activity_ = Clock::now();
    if (method == "Network.requestWillBeSent") {
      const json& request = params["request"];
      SeenRequest r;
      r.request_id = params.value("requestId", "");
      r.method = request.value("method", "GET");
      r.url = request.value("url", "");
      r.has_post_data = request.value("hasPostData", false);
      r.body = post_data_of(request);
      r.subframe = !main_frame_.empty() && params.value("frameId", main_frame_) != main_frame_;
      r.timestamp_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           Clock::now() - start_).count();
      last_index_[r.request_id] = static_cast<std::ptrdiff_t>(requests_.size());
      requests_.push_back(std::move(r));
    } else if (method == "Network.responseReceived") {
      const std::string type = params.value("type", "");
      const std::string id = params.value("requestId", "");
      if (type == "Script") scripts_[id] = params["response"].value("url", "");
      if (type == "Document" && params.value("frameId", "") == main_frame_) {
        document_status_ = params["response"].value("status", 0);
      }
    } else if (method == "Network.loadingFinished") {
      finished_.insert(params.value("requestId", ""));
    } else if (method == "Page.loadEventFired") {
      loaded_ = true;
    }
  }

  CdpConnection& page_;
  Clock::time_point start_;
  Clock::time_point last_activity_;
  std::string main_frame_;
  bool loaded_ = false;
  int document_status_ = 0;
  std::vector<SeenRequest> requests_;
  std::map<std::string, std::ptrdiff_t> last_index_;
  std::map<std::string, std::string> scripts_;  // request id -> response url
  std::set<std::string> finished_;
};

// Closes the target and its context even when the visit throws.
class TargetGuard {
 public:
  TargetGuard(CdpConnection& browser, std::string context, std::string target)
      : browser_(browser), context_(std::move(context)), target_(std::move(target)) {}
  ~TargetGuard() {
    try {
      if (!browser_.is_open()) return;
      browser_.call("Target.closeTarget", {{"targetId", target_}}, soon());
      browser_.call("Target.disposeBrowserContext", {{"browserContextId", context_}}, soon());
    } catch (const std::exception&) {
      // The browser is gone or already cleaned up.
    }
  }

 private:
  CdpConnection& browser_;
  std::string context_;
  std::string target_;
};

}  // namespace

VisitCapture visit_site(const std::string& browser_endpoint, const SiteRecord& site,
                        int visit_index, const CrawlPolicy& policy,
                        const PlaceholderIdentity& identity) {
  VisitCapture capture;
  capture.site = site;
  capture.visit_index = visit_index;
  const auto start = Clock::now();
  const Deadline visit_deadline = start + std::chrono::seconds(policy.page_timeout_s);
  const auto quiet = std::chrono::seconds(policy.quiet_period_s);

  CdpConnection browser(browser_endpoint, soon());
  std::string context =
      browser.call("Target.createBrowserContext", {{"disposeOnDetach", true}}, soon())
          .value("browserContextId", "");
  std::string target = browser
                           .call("Target.createTarget",
                                 {{"url", "about:blank"}, {"browserContextId", context}},
                                 soon())
                           .value("targetId", "");
  TargetGuard guard(browser, context, target);

  CdpConnection page(page_endpoint(browser_endpoint, target), soon());
  page.call("Network.enable", {{"maxPostDataSize", 1 << 20}}, soon());
  page.call("Network.setCacheDisabled", {{"cacheDisabled", true}}, soon());
  page.call("Page.enable", json::object(), soon());
  PageRecorder recorder(page, start);

  const std::string url = policy.url_scheme + "://" + site.domain + "/";
  json nav;
  try {
    nav = page.call("Page.navigate", {{"url", url}}, visit_deadline);
  } catch (const CdpError&) {
    if (!page.is_open() || Clock::now() < visit_deadline) throw;
    capture.outcome = VisitOutcome::kTimeout;
    recorder.collect_bodies(capture, soon());
    return capture;
  }
  if (auto err = nav.value("errorText", ""); !err.empty()) {
    capture.outcome = VisitOutcome::kUnreachable;
    capture.diagnostics.push_back({site.domain, url, "navigation failed: " + err});
    return capture;
  }
  recorder.set_main_frame(nav.value("frameId", ""));

  while (!recorder.loaded() && Clock::now() < visit_deadline) {
    recorder.pump(visit_deadline);
  }
  if (!recorder.loaded()) {
    capture.outcome = VisitOutcome::kTimeout;
    recorder.collect_bodies(capture, soon());
    return capture;
  }
  if (recorder.document_status() >= 500) {
    capture.outcome = VisitOutcome::kUnreachable;
    capture.diagnostics.push_back(
        {site.domain, url,
         "document answered HTTP " + std::to_string(recorder.document_status())});
    return capture;
  }

  json probe = page.call(
      "Runtime.evaluate",
      {{"expression",
        "JSON.stringify([document.title || '', ((document.body && document.body.innerText) "
        "|| '').slice(0, 4000)])"},
       {"returnByValue", true}},
      soon());
  try {
    json texts = json::parse(probe["result"].value("value", "[\"\",\"\"]"));
    if (looks_like_challenge(texts[0].get<std::string>(), texts[1].get<std::string>())) {
      capture.outcome = VisitOutcome::kBotSuspected;
      capture.diagnostics.push_back(
          {site.domain, url, "challenge-page markers found (heuristic, best effort)"});
    }
  } catch (const json::exception&) {
  }

  json injected = page.call(
      "Runtime.evaluate",
      {{"expression", build_injection_script(identity)}, {"returnByValue", true}}, soon());
  capture.form_injected = injected["result"].value("value", false);
  if (!capture.form_injected) {
    capture.diagnostics.push_back({site.domain, url, "form injection did not run"});
  }

  recorder.touch();
  while (Clock::now() < visit_deadline) {
    Deadline until = std::min(visit_deadline, recorder.last_activity() + quiet);
    if (!recorder.pump(until) && Clock::now() >= recorder.last_activity() + quiet) break;
  }
  recorder.collect_bodies(capture, soon());
  return capture;
}

ScheduleDecision schedule_next(const SiteProgress& progress, const CrawlPolicy& policy) {
  ScheduleDecision decision;
  if (progress.visits_done >= policy.max_visits) return decision;
  for (Provider p : kAllProviders) {
    if (!progress.seen(p)) decision.justified_by.push_back(p);
  }
  decision.revisit = !decision.justified_by.empty();
  return decision;
}

void record_visit(SiteProgress& progress, const SiteVerdict& verdict, VisitOutcome outcome) {
  ++progress.visits_done;
  for (Provider p : kAllProviders) {
    if (verdict.of(p).fdc) progress.fdc_seen[static_cast<int>(p)] = true;
  }
  progress.last_outcome = outcome;
}

namespace {

class BrowserVisitor : public SiteVisitor {
 public:
  BrowserVisitor(CrawlPolicy policy, PlaceholderIdentity identity, std::string endpoint,
                 BrowserOptions launch)
      : policy_(std::move(policy)),
        identity_(std::move(identity)),
        endpoint_(std::move(endpoint)),
        browser_(std::move(launch)) {}

  VisitCapture visit(const SiteRecord& site, int visit_index) override {
    if (!endpoint_.empty()) {
      return visit_site(endpoint_, site, visit_index, policy_, identity_);
    }
    if (browser_.running() && visits_since_start_ >= policy_.restart_every) browser_.stop();
    if (!browser_.running()) {
      browser_.start();
      visits_since_start_ = 0;
    }
    ++visits_since_start_;
    try {
      return visit_site(browser_.endpoint(), site, visit_index, policy_, identity_);
    } catch (...) {
      browser_.stop();
      throw;
    }
  }

 private:
  CrawlPolicy policy_;
  PlaceholderIdentity identity_;
  std::string endpoint_;
  BrowserProcess browser_;
  int visits_since_start_ = 0;
};

json log_line(const ScheduleRecord& r) {
  json justified = json::array();
  for (Provider p : r.justified_by) justified.push_back(std::string(to_string(p)));
  return {{"site", r.site},
          {"visit", r.visit},
          {"outcome", std::string(to_string(r.outcome))},
          {"decision", r.revisit ? "revisit" : "done"},
          {"justified_by", justified},
          {"fdc_seen", {{"meta", r.fdc_seen[0]}, {"google", r.fdc_seen[1]}}}};
}

void append_line(const fs::path& path, const json& line) {
  std::ofstream out(path, std::ios::app);
  out << line.dump() << '\n';
  out.flush();
  if (!out) throw Error("cannot append to " + path.string());
}

}  // namespace

std::unique_ptr<SiteVisitor> make_browser_visitor(const CrawlPolicy& policy,
                                                  const PlaceholderIdentity& identity,
                                                  std::string browser_endpoint,
                                                  BrowserOptions launch) {
  return std::make_unique<BrowserVisitor>(policy, identity, std::move(browser_endpoint),
                                          std::move(launch));
}

std::string capture_path(const std::string& out_dir, const std::string& domain,
                         int visit_index) {
  return (fs::path(out_dir) / domain / ("visit-" + std::to_string(visit_index) + ".capture"))
      .string();
}

void write_new_file(const std::string& path, const std::string& contents) {
  static std::atomic<unsigned> counter{0};
  fs::path target(path);
  fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << contents;
    out.flush();
    if (!out) throw Error("cannot write " + tmp.string());
  }
  // link() refuses to replace an existing file, unlike rename().
  int rc = ::link(tmp.c_str(), target.c_str());
  int err = errno;
  fs::remove(tmp);
  if (rc != 0) {
    throw Error((err == EEXIST ? "refusing to overwrite " : "cannot create ") + path);
  }
}

CampaignResult run_campaign(const std::vector<SiteRecord>& sites, const CrawlPolicy& policy,
                            const PlaceholderIdentity& identity, const DetectionRules& rules,
                            const VisitorFactory& factory, const CampaignOptions& options) {
  policy.validate();
  if (options.out_dir.empty()) throw Error("campaign needs an output directory");
  struct Slot {
    SiteRecord site;
    SiteProgress progress;
    std::vector<SiteVerdict> verdicts;
    int crashes = 0;
    bool done = false;
    bool quarantined = false;
  };
  std::vector<Slot> slots;
  std::set<std::string> domains;
  for (const SiteRecord& s : sites) {
    validate_site(s);
    if (!domains.insert(s.domain).second) throw Error("duplicate site: " + s.domain);
    slots.push_back({s, {}, {}, 0, false, false});
  }

  const fs::path out(options.out_dir);
  fs::create_directories(out);
  const fs::path log_path = out / "campaign-log.jsonl";
  const fs::path quarantine_path = out / "quarantine.jsonl";
  CampaignResult result;

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < slots.size(); ++i) index[slots[i].site.domain] = i;
  if (fs::exists(quarantine_path)) {
    std::ifstream in(quarantine_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      QuarantineRecord q{j.at("site"), j.value("crashes", 0), j.value("last_error", "")};
      if (auto it = index.find(q.site); it != index.end()) {
        slots[it->second].quarantined = true;
        result.quarantined.push_back(q);
      }
    }
  }

  // Replay what an earlier run already persisted.
  for (Slot& slot : slots) {
    for (int n = 1; !slot.done && n <= policy.max_visits; ++n) {
      std::string path = capture_path(options.out_dir, slot.site.domain, n);
      if (!fs::exists(path)) break;
      VisitCapture capture = load_capture(path);
      SiteVerdict verdict = analyze_visit(capture, identity, rules);
      record_visit(slot.progress, verdict, capture.outcome);
      slot.verdicts.push_back(std::move(verdict));
      ScheduleDecision d = schedule_next(slot.progress, policy);
      result.log.push_back({slot.site.domain, n, capture.outcome, d.revisit, d.justified_by,
                            slot.progress.fdc_seen, true});
      slot.done = !d.revisit;
    }
  }

  std::mutex mutex;
  std::condition_variable cv;
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i].done && !slots[i].quarantined) queue.push_back(i);
  }
  std::size_t in_flight = 0;
  bool stopping = false;
  std::exception_ptr fatal;

  auto worker = [&](int worker_id) {
    std::unique_ptr<SiteVisitor> visitor;
    for (;;) {
      std::size_t i;
      int visit_index;
      {
        std::unique_lock lock(mutex);
        cv.wait(lock, [&] { return stopping || !queue.empty() || in_flight == 0; });
        if (stopping || queue.empty()) return;
        i = queue.front();
        queue.pop_front();
        ++in_flight;
        visit_index = slots[i].progress.visits_done + 1;
      }
      const SiteRecord& site = slots[i].site;
      std::optional<VisitCapture> capture;
      std::string error;
      try {
        if (!visitor) visitor = factory(worker_id);
        capture = visitor->visit(site, visit_index);
        capture->site = site;
        capture->visit_index = visit_index;
        write_new_file(capture_path(options.out_dir, site.domain, visit_index),
                       serialize_capture(*capture));
      } catch (const std::exception& e) {
        capture.reset();
        error = e.what();
      } catch (...) {
        capture.reset();
        error = "unknown failure";
      }
      std::optional<SiteVerdict> verdict;
      if (capture) verdict = analyze_visit(*capture, identity, rules);

      std::lock_guard lock(mutex);
      --in_flight;
      Slot& slot = slots[i];
      try {
        if (!verdict) {
          if (++slot.crashes >= policy.max_crashes) {
            slot.quarantined = true;
            QuarantineRecord q{site.domain, slot.crashes, error};
            append_line(quarantine_path,
                        {{"site", q.site}, {"crashes", q.crashes}, {"last_error", q.last_error}});
            result.quarantined.push_back(std::move(q));
          } else {
            queue.push_back(i);
          }
        } else {
          record_visit(slot.progress, *verdict, capture->outcome);
          slot.verdicts.push_back(std::move(*verdict));
          ScheduleDecision d = schedule_next(slot.progress, policy);
          ScheduleRecord record{site.domain, visit_index, capture->outcome, d.revisit,
                                d.justified_by, slot.progress.fdc_seen, false};
          append_line(log_path, log_line(record));
          result.log.push_back(std::move(record));
          ++result.visits_performed;
          if (d.revisit) {
            queue.push_back(i);
          } else {
            slot.done = true;
          }
          if (options.stop_after && result.visits_performed >= options.stop_after) {
            stopping = true;
          }
        }
      } catch (...) {
        fatal = std::current_exception();
        stopping = true;
      }
      cv.notify_all();
    }
  };

  std::vector<std::thread> workers;
  const std::size_t count = std::min<std::size_t>(policy.concurrency, queue.size());
  for (std::size_t w = 0; w < count; ++w) workers.emplace_back(worker, static_cast<int>(w));
  for (auto& t : workers) t.join();
  if (fatal) std::rethrow_exception(fatal);

  for (Slot& slot : slots) {
    if (!slot.done && !slot.quarantined) result.interrupted = true;
    if (slot.verdicts.empty()) continue;
    SiteVerdict merged = merge_verdicts(slot.verdicts);
    if (slot.quarantined) {
      merged.diagnostics.push_back({slot.site.domain, "", "site quarantined after repeated crashes"});
      canonicalize(merged);
    }
    result.verdicts.push_back(std::move(merged));
  }
  std::sort(result.verdicts.begin(), result.verdicts.end(),
            [](const SiteVerdict& a, const SiteVerdict& b) { return a.site.domain < b.site.domain; });

  const fs::path verdicts_path = out / "verdicts.jsonl";
  const fs::path tmp = out / "verdicts.jsonl.tmp";
  write_verdicts(tmp.string(), result.verdicts);
  fs::rename(tmp, verdicts_path);
  return result;
}

namespace {

// <dir>/<domain>/visit-<n>.capture, grouped by domain in visit order.
std::map<std::string, std::vector<fs::path>> find_captures(const std::string& dir) {
  static const std::regex kName(R"(visit-(\d+)\.capture)");
  std::map<std::string, std::map<int, fs::path>> found;
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir);
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::smatch m;
    std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, kName)) continue;
    found[entry.path().parent_path().filename().string()][std::stoi(m[1])] = entry.path();
  }
  std::map<std::string, std::vector<fs::path>> out;
  for (auto& [domain, visits] : found) {
    for (auto& [n, path] : visits) out[domain].push_back(path);
  }
  return out;
}

}  // namespace

std::vector<SiteVerdict> analyze_captures(const std::string& dir,
                                          const PlaceholderIdentity& identity,
                                          const DetectionRules& rules) {
  std::vector<SiteVerdict> verdicts;
  for (const auto& [domain, paths] : find_captures(dir)) {
    std::vector<SiteVerdict> visits;
    for (const auto& path : paths) {
      visits.push_back(analyze_visit(load_capture(path.string()), identity, rules));
    }
    verdicts.push_back(merge_verdicts(visits));
  }
  return verdicts;
}

}  // namespace formscope
