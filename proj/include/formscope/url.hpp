#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "formscope/model.hpp"

namespace formscope {

struct Url {
  std::string scheme;  // lowercase
  std::string host;    // lowercase, no port
  int port = 0;        // 0 when absent
  std::string path;    // starts with '/'
  std::string query;   // raw, without '?'
};

// Parses absolute http(s)/ws(s) URLs and scheme-relative "//host/..." forms.
// Returns nullopt for anything else.
std::optional<Url> parse_url(std::string_view text);

// Percent-decodes; '+' becomes a space when plus_as_space is set. Malformed
// escapes are kept literally.
std::string percent_decode(std::string_view text, bool plus_as_space = true);
std::string percent_encode(std::string_view text);

// application/x-www-form-urlencoded pairs in order. Keys without '=' get an
// empty value.
std::vector<QueryParam> parse_query(std::string_view query);

// True when host equals domain or is a subdomain of it.
bool host_matches(std::string_view host, std::string_view domain);

// Pattern form "host/path-prefix" as used by the detection rules. The host
// part matches subdomains; the path part matches on segment boundaries
// unless the pattern ends in '/'.
bool matches_host_path_prefix(const Url& url, std::string_view pattern);

std::string last_path_segment(std::string_view path);

}  // namespace formscope
