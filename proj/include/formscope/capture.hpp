#pragma once

// Site lists and per-visit capture archives.

#include <string>
#include <string_view>
#include <vector>

#include "formscope/model.hpp"

namespace formscope {

inline constexpr std::string_view kCaptureFormat = "formscope-capture/1";

// CSV with the header "domain,rank,vertical". Throws Error naming the line
// of the first malformed row or duplicated domain.
std::vector<SiteRecord> parse_site_list(std::string_view text);
std::vector<SiteRecord> load_site_list(const std::string& path);
std::string serialize_site_list(const std::vector<SiteRecord>& sites);

// Throws Error when the archive is not JSON, carries another format tag or
// lacks required fields. Entries with unusable URLs are dropped and recorded
// as diagnostics; so are script bodies without a matching request.
VisitCapture parse_capture(std::string_view archive);
VisitCapture load_capture(const std::string& path);
std::string serialize_capture(const VisitCapture& capture);

// Builds the request record for a URL as seen on the wire, decoding the
// query once. Returns false when the URL is not usable.
bool make_request(std::string_view method, std::string_view url,
                  std::string body, Initiator initiator,
                  std::int64_t timestamp_ms, NetworkRequest& out);

// Collapses requests that agree on method, URL, body digest and the
// one-second timestamp bucket. Keeps the first occurrence.
std::vector<NetworkRequest> dedupe_requests(
    const std::vector<NetworkRequest>& requests);

// Lossy import of a HAR 1.2 document: request method/url/postData and
// timing become entries; JavaScript response bodies become scripts.
VisitCapture import_har(std::string_view har, const SiteRecord& site,
                        int visit_index, bool form_injected);

}  // namespace formscope
