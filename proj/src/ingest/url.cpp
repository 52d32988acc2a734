#include "formscope/url.hpp"

#include <cctype>
#include <charconv>

namespace formscope {
namespace {

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

bool valid_host(std::string_view host) {
  if (host.empty()) return false;
  for (char c : host) {
    auto uc = static_cast<unsigned char>(c);
    if (!(std::isalnum(uc) || c == '-' || c == '.' || c == '_' || c == '[' ||
          c == ']' || c == ':')) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::optional<Url> parse_url(std::string_view text) {
  Url url;
  std::string_view rest;
  if (text.starts_with("//")) {
    url.scheme = "https";
    rest = text.substr(2);
  } else {
    auto colon = text.find("://");
    if (colon == std::string_view::npos) return std::nullopt;
    url.scheme = lowercase(text.substr(0, colon));
    if (url.scheme != "http" && url.scheme != "https" && url.scheme != "ws" &&
        url.scheme != "wss") {
      return std::nullopt;
    }
    rest = text.substr(colon + 3);
  }
  if (auto hash = rest.find('#'); hash != std::string_view::npos) {
    rest = rest.substr(0, hash);
  }
  auto authority_end = rest.find_first_of("/?");
  std::string_view authority = rest.substr(0, authority_end);
  std::string_view tail =
      authority_end == std::string_view::npos ? "" : rest.substr(authority_end);
  if (auto at = authority.rfind('@'); at != std::string_view::npos) {
    authority = authority.substr(at + 1);
  }
  std::string_view host = authority;
  if (auto colon = authority.rfind(':');
      colon != std::string_view::npos && authority.find(']') == std::string_view::npos) {
    host = authority.substr(0, colon);
    auto port_text = authority.substr(colon + 1);
    int port = 0;
    auto [ptr, ec] = std::from_chars(port_text.data(),
                                     port_text.data() + port_text.size(), port);
    if (ec != std::errc() || ptr != port_text.data() + port_text.size() ||
        port <= 0 || port > 65535) {
      return std::nullopt;
    }
    url.port = port;
  }
  if (!valid_host(host)) return std::nullopt;
  url.host = lowercase(host);
  auto question = tail.find('?');
  url.path = std::string(tail.substr(0, question));
  if (url.path.empty()) url.path = "/";
  if (question != std::string_view::npos) {
    url.query = std::string(tail.substr(question + 1));
  }
  for (char c : url.path) {
    if (std::isspace(static_cast<unsigned char>(c))) return std::nullopt;
  }
  return url;
}

std::string percent_decode(std::string_view text, bool plus_as_space) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '%' && i + 2 < text.size()) {
      int hi = hex_value(text[i + 1]);
      int lo = hex_value(text[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out += static_cast<char>(hi * 16 + lo);
        i += 2;
        continue;
      }
    }
    out += (c == '+' && plus_as_space) ? ' ' : c;
  }
  return out;
}

std::string percent_encode(std::string_view text) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (char c : text) {
    auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += c;
    } else {
      out += '%';
      out += kHex[uc >> 4];
      out += kHex[uc & 0x0f];
    }
  }
  return out;
}

std::vector<QueryParam> parse_query(std::string_view query) {
  std::vector<QueryParam> params;
  std::size_t start = 0;
  while (start <= query.size()) {
    auto end = query.find('&', start);
    if (end == std::string_view::npos) end = query.size();
    std::string_view pair = query.substr(start, end - start);
    if (!pair.empty()) {
      auto eq = pair.find('=');
      QueryParam param;
      param.key = percent_decode(pair.substr(0, eq));
      if (eq != std::string_view::npos) {
        param.value = percent_decode(pair.substr(eq + 1));
      }
      params.push_back(std::move(param));
    }
    start = end + 1;
  }
  return params;
}

bool host_matches(std::string_view host, std::string_view domain) {
  if (host == domain) return true;
  return host.size() > domain.size() && host.ends_with(domain) &&
         host[host.size() - domain.size() - 1] == '.';
}

bool matches_host_path_prefix(const Url& url, std::string_view pattern) {
  auto slash = pattern.find('/');
  std::string_view host = pattern.substr(0, slash);
  std::string_view path =
      slash == std::string_view::npos ? "/" : pattern.substr(slash);
  if (!host_matches(url.host, host)) return false;
  if (path == "/") return true;
  if (path.ends_with('/')) {
    return url.path.starts_with(path) ||
           url.path == path.substr(0, path.size() - 1);
  }
  if (!url.path.starts_with(path)) return false;
  return url.path.size() == path.size() || url.path[path.size()] == '/';
}

std::string last_path_segment(std::string_view path) {
  while (path.ends_with('/')) path.remove_suffix(1);
  auto slash = path.rfind('/');
  return std::string(slash == std::string_view::npos ? path
                                                     : path.substr(slash + 1));
}

}  // namespace formscope
