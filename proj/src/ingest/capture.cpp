#include "formscope/capture.hpp"

#include <charconv>
#include <ctime>
#include <set>
#include <sstream>
#include <tuple>

#include "formscope/json_io.hpp"
#include "formscope/pii_hash.hpp"
#include "formscope/url.hpp"

namespace formscope {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front())))
    text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
    text.remove_suffix(1);
  return text;
}

std::vector<std::string> split_csv_row(std::string_view row) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    auto comma = row.find(',', start);
    cells.emplace_back(trim(row.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool valid_utf8(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    auto c = static_cast<unsigned char>(text[i]);
    int extra = c < 0x80 ? 0 : (c >> 5) == 0x6 ? 1 : (c >> 4) == 0xe ? 2
                         : (c >> 3) == 0x1e ? 3 : -1;
    if (extra < 0) return false;
    for (int k = 1; k <= extra; ++k) {
      if (i + k >= text.size()) return false;
      if ((static_cast<unsigned char>(text[i + k]) >> 6) != 0x2) return false;
    }
    i += static_cast<std::size_t>(extra) + 1;
  }
  return true;
}

json encode_bytes(const std::string& bytes) {
  if (valid_utf8(bytes)) return bytes;
  return json{{"base64", base64_encode(bytes)}};
}

std::string decode_bytes(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  return base64_decode(j.at("base64").get<std::string>());
}

// Milliseconds since the epoch for "YYYY-MM-DDTHH:MM:SS(.fff)(Z|+hh:mm)".
std::optional<std::int64_t> parse_iso8601_ms(std::string_view text) {
  std::tm tm{};
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (std::sscanf(std::string(text).c_str(), "%4d-%2d-%2dT%2d:%2d:%2d", &year,
                  &month, &day, &hour, &minute, &second) != 6) {
    return std::nullopt;
  }
  tm.tm_year = year - 1900;
  tm.tm_mon = month - 1;
  tm.tm_mday = day;
  tm.tm_hour = hour;
  tm.tm_min = minute;
  tm.tm_sec = second;
  std::int64_t ms = static_cast<std::int64_t>(timegm(&tm)) * 1000;
  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    int scale = 100;
    for (++pos; pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])); ++pos) {
      ms += (text[pos] - '0') * scale;
      scale /= 10;
    }
  }
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    int oh = 0, om = 0;
    if (std::sscanf(std::string(text.substr(pos + 1)).c_str(), "%2d:%2d", &oh,
                    &om) >= 1) {
      std::int64_t offset = (oh * 60 + om) * 60'000LL;
      ms += text[pos] == '+' ? -offset : offset;
    }
  }
  return ms;
}

bool looks_like_script(const json& response, std::string_view url) {
  std::string mime;
  if (response.contains("content")) {
    mime = response["content"].value("mimeType", std::string{});
  }
  if (mime.find("javascript") != std::string::npos ||
      mime.find("ecmascript") != std::string::npos) {
    return true;
  }
  auto parsed = parse_url(url);
  return parsed && parsed->path.ends_with(".js");
}

}  // namespace

std::vector<SiteRecord> parse_site_list(std::string_view text) {
  std::vector<SiteRecord> sites;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_number = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split_csv_row(line);
    auto fail = [&](const std::string& why) {
      return Error("site list line " + std::to_string(line_number) + ": " + why);
    };
    if (!header_seen) {
      if (cells != std::vector<std::string>{"domain", "rank", "vertical"}) {
        throw fail("expected header 'domain,rank,vertical'");
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != 3) throw fail("expected 3 columns");
    SiteRecord site;
    site.domain = cells[0];
    auto [ptr, ec] = std::from_chars(cells[1].data(),
                                     cells[1].data() + cells[1].size(),
                                     site.rank);
    if (ec != std::errc() || ptr != cells[1].data() + cells[1].size()) {
      throw fail("rank '" + cells[1] + "' is not an integer");
    }
    try {
      site.vertical = Vertical::from_raw(cells[2]);
      validate_site(site);
    } catch (const Error& e) {
      throw fail(e.what());
    }
    if (!seen.insert(site.domain).second) {
      throw fail("duplicate domain '" + site.domain + "'");
    }
    sites.push_back(std::move(site));
  }
  if (!header_seen) throw Error("site list is empty (no header)");
  return sites;
}

std::vector<SiteRecord> load_site_list(const std::string& path) {
  return parse_site_list(read_file(path));
}

std::string serialize_site_list(const std::vector<SiteRecord>& sites) {
  std::string out = "domain,rank,vertical\n";
  for (const auto& site : sites) {
    std::string vertical = site.vertical.kind() == Vertical::Kind::kNonSensitive
                               ? site.vertical.category()
                               : site.vertical.label();
    out += site.domain + "," + std::to_string(site.rank) + "," + vertical + "\n";
  }
  return out;
}

bool make_request(std::string_view method, std::string_view url,
                  std::string body, Initiator initiator,
                  std::int64_t timestamp_ms, NetworkRequest& out) {
  auto parsed = parse_url(url);
  if (!parsed) return false;
  out.method = std::string(method);
  out.url = std::string(url);
  out.query_params = parse_query(parsed->query);
  out.body = std::move(body);
  out.initiator = initiator;
  out.timestamp_ms = timestamp_ms;
  return true;
}

VisitCapture parse_capture(std::string_view archive) {
  json doc;
  try {
    doc = json::parse(archive);
  } catch (const json::exception& e) {
    throw Error(std::string("capture archive is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", std::string{}) != kCaptureFormat) {
    throw Error("capture archive is not " + std::string(kCaptureFormat));
  }
  VisitCapture capture;
  try {
    capture.site = doc.at("site").get<SiteRecord>();
    capture.visit_index = doc.value("visit_index", 1);
    capture.form_injected = doc.value("form_injected", false);
    auto outcome =
        parse_visit_outcome(doc.value("outcome", std::string("ok")));
    if (!outcome) throw Error("unknown visit outcome");
    capture.outcome = *outcome;
    capture.diagnostics =
        doc.value("diagnostics", std::vector<ParseWarning>{});
  } catch (const json::exception& e) {
    throw Error(std::string("capture archive header: ") + e.what());
  }
  if (capture.visit_index < 1) throw Error("capture visit_index must be >= 1");

  auto warn = [&](std::string url, std::string reason) {
    capture.diagnostics.push_back(
        {capture.site.domain, std::move(url), std::move(reason)});
  };

  std::set<std::string> urls;
  for (const auto& entry : doc.value("entries", json::array())) {
    try {
      std::string url = entry.at("url").get<std::string>();
      auto initiator = parse_initiator(
          entry.value("initiator", std::string("top_document")));
      NetworkRequest request;
      if (!initiator ||
          !make_request(entry.value("method", std::string("GET")), url,
                        entry.contains("body") ? decode_bytes(entry["body"])
                                               : std::string{},
                        *initiator, entry.value("timestamp_ms", std::int64_t{0}),
                        request)) {
        warn(url, "entry skipped: unusable url or initiator");
        continue;
      }
      if (entry.contains("query")) {
        request.query_params.clear();
        for (const auto& pair : entry["query"]) {
          request.query_params.push_back(
              {pair.at(0).get<std::string>(), pair.at(1).get<std::string>()});
        }
      }
      urls.insert(request.url);
      capture.requests.push_back(std::move(request));
    } catch (const std::exception& e) {
      warn(entry.is_object() ? entry.value("url", std::string{}) : std::string{},
           std::string("entry skipped: ") + e.what());
    }
  }
  const json scripts = doc.value("scripts", json::object());
  for (const auto& [url, body] : scripts.items()) {
    if (!urls.count(url)) {
      warn(url, "script body without a matching request dropped");
      continue;
    }
    try {
      capture.scripts[url] = decode_bytes(body);
    } catch (const std::exception& e) {
      warn(url, std::string("script body skipped: ") + e.what());
    }
  }
  return capture;
}

VisitCapture load_capture(const std::string& path) {
  return parse_capture(read_file(path));
}

std::string serialize_capture(const VisitCapture& capture) {
  json entries = json::array();
  for (const auto& request : capture.requests) {
    json query = json::array();
    for (const auto& param : request.query_params) {
      query.push_back(json::array({param.key, param.value}));
    }
    json entry{{"url", request.url},
               {"method", request.method},
               {"query", query},
               {"initiator", to_string(request.initiator)},
               {"timestamp_ms", request.timestamp_ms}};
    if (!request.body.empty()) entry["body"] = encode_bytes(request.body);
    entries.push_back(std::move(entry));
  }
  json scripts = json::object();
  for (const auto& [url, text] : capture.scripts) {
    scripts[url] = encode_bytes(text);
  }
  json doc{{"format", kCaptureFormat},
           {"site", capture.site},
           {"visit_index", capture.visit_index},
           {"form_injected", capture.form_injected},
           {"outcome", to_string(capture.outcome)},
           {"entries", entries},
           {"scripts", scripts},
           {"diagnostics", capture.diagnostics}};
  return doc.dump(1, ' ', false, json::error_handler_t::replace) + "\n";
}

std::vector<NetworkRequest> dedupe_requests(
    const std::vector<NetworkRequest>& requests) {
  std::set<std::tuple<std::string, std::string, std::string, std::int64_t>>
      seen;
  std::vector<NetworkRequest> out;
  for (const auto& request : requests) {
    auto key = std::make_tuple(request.method, request.url,
                               sha256_hex(request.body),
                               request.timestamp_ms / 1000);
    if (seen.insert(std::move(key)).second) out.push_back(request);
  }
  return out;
}

VisitCapture import_har(std::string_view har, const SiteRecord& site,
                        int visit_index, bool form_injected) {
  json doc;
  try {
    doc = json::parse(har);
  } catch (const json::exception& e) {
    throw Error(std::string("HAR is not valid JSON: ") + e.what());
  }
  if (!doc.contains("log") || !doc["log"].contains("entries")) {
    throw Error("HAR document has no log.entries");
  }
  VisitCapture capture;
  capture.site = site;
  capture.visit_index = visit_index;
  capture.form_injected = form_injected;

  const auto& entries = doc["log"]["entries"];
  std::optional<std::int64_t> origin;
  for (const auto& entry : entries) {
    if (!entry.contains("startedDateTime")) continue;
    auto ms = parse_iso8601_ms(entry["startedDateTime"].get<std::string>());
    if (ms && (!origin || *ms < *origin)) origin = ms;
  }

  for (const auto& entry : entries) {
    const json& request = entry.value("request", json::object());
    std::string url = request.value("url", std::string{});
    std::string body;
    if (request.contains("postData")) {
      body = request["postData"].value("text", std::string{});
    }
    std::int64_t timestamp = 0;
    if (entry.contains("startedDateTime") && origin) {
      auto ms = parse_iso8601_ms(entry["startedDateTime"].get<std::string>());
      if (ms) timestamp = *ms - *origin;
    }
    Initiator initiator = Initiator::kTopDocument;
    if (entry.contains("_initiator_frame") &&
        entry["_initiator_frame"] == "subframe") {
      initiator = Initiator::kSubframe;
    }
    NetworkRequest parsed;
    if (!make_request(request.value("method", std::string("GET")), url,
                      std::move(body), initiator, timestamp, parsed)) {
      capture.diagnostics.push_back(
          {site.domain, url, "HAR entry skipped: unusable url"});
      continue;
    }
    capture.requests.push_back(std::move(parsed));

    const json& response = entry.value("response", json::object());
    if (looks_like_script(response, url) && response.contains("content") &&
        response["content"].contains("text")) {
      std::string text = response["content"]["text"].get<std::string>();
      if (response["content"].value("encoding", std::string{}) == "base64") {
        text = base64_decode(text);
      }
      capture.scripts[url] = std::move(text);
    }
  }
  capture.requests = dedupe_requests(capture.requests);
  return capture;
}

}  // namespace formscope
