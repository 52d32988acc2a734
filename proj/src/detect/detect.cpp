#include "formscope/detect.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <set>

#include "formscope/url.hpp"

namespace formscope {
namespace {

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

bool all_digits(std::string_view text) {
  return !text.empty() && std::all_of(text.begin(), text.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c));
  });
}

std::string query_value(const NetworkRequest& request, std::string_view key) {
  for (const auto& param : request.query_params) {
    if (param.key == key) return param.value;
  }
  return {};
}

std::optional<std::string> meta_pixel_id_from_url(const Url& url,
                                                  const DetectionRules& rules) {
  std::string_view prefix = rules.meta_config_url_prefix;
  auto slash = prefix.find('/');
  std::string path_prefix(slash == std::string_view::npos ? "/"
                                                          : prefix.substr(slash));
  if (!path_prefix.ends_with('/')) path_prefix += '/';
  if (!url.path.starts_with(path_prefix)) return std::nullopt;
  std::string rest = url.path.substr(path_prefix.size());
  return rest.substr(0, rest.find('/'));
}

bool is_meta_config_url(const Url& url, const DetectionRules& rules) {
  std::string pattern = rules.meta_config_url_prefix;
  if (!pattern.ends_with('/')) pattern += '/';
  return matches_host_path_prefix(url, pattern) ||
         matches_host_path_prefix(
             url, std::string_view(pattern).substr(0, pattern.size() - 1));
}

// Fields of `provider` whose identity digest occurs in the haystack.
std::map<PiiField, std::string> find_digests(
    std::string_view haystack, Provider provider,
    const PlaceholderIdentity& identity) {
  std::map<PiiField, std::string> found;
  if (haystack.size() < 64) return found;
  std::string lowered = lowercase(haystack);
  for (const auto& [field, value] : identity.values()) {
    const std::string& digest =
        provider == Provider::kMeta ? value.meta_digest : value.google_digest;
    if (lowered.find(digest) != std::string::npos) found[field] = digest;
  }
  return found;
}

struct EventBuilder {
  std::map<CollectionMode, FdcEvent> by_mode;

  void add(Provider provider, CollectionMode mode, PiiField field,
           const std::string& digest, const std::string& url) {
    FdcEvent& event = by_mode[mode];
    event.provider = provider;
    event.mode = mode;
    event.request_url = url;
    event.matched_fields.insert(field);
    event.matched_digests[field] = digest;
  }

  void flush(std::vector<FdcEvent>& out) {
    for (auto& [mode, event] : by_mode) out.push_back(std::move(event));
    by_mode.clear();
  }
};

std::string excerpt_around(std::string_view text, std::size_t begin,
                           std::size_t end) {
  std::size_t from = begin > 40 ? begin - 40 : 0;
  std::size_t to = std::min(text.size(), end + 40);
  return std::string(text.substr(from, to - from));
}

// Parses a bracketed list of quoted strings starting at `pos` (which may
// point at separators such as `":` or `=` before the '['). Returns the
// position one past ']' or npos on malformed input.
std::size_t parse_string_list(std::string_view text, std::size_t pos,
                              std::vector<std::string>& items) {
  while (pos < text.size() &&
         (text[pos] == '"' || text[pos] == '\'' || text[pos] == ':' ||
          text[pos] == '=' || text[pos] == '\\' ||
          std::isspace(static_cast<unsigned char>(text[pos])))) {
    ++pos;
  }
  if (pos >= text.size() || text[pos] != '[') return std::string_view::npos;
  ++pos;
  bool expect_item = true;
  while (pos < text.size()) {
    char c = text[pos];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else if (c == ']') {
      return pos + 1;
    } else if (c == ',' && !expect_item) {
      expect_item = true;
      ++pos;
    } else if ((c == '"' || c == '\'') && expect_item) {
      // Quotes may themselves be escaped when the config is embedded in a
      // string literal; a backslash before the closing quote is tolerated.
      char quote = c;
      std::string item;
      ++pos;
      while (pos < text.size() && text[pos] != quote) {
        if (text[pos] == '\\' && pos + 1 < text.size() && text[pos + 1] != quote) {
          ++pos;
        }
        if (text[pos] != '\\') item += text[pos];
        ++pos;
      }
      if (pos >= text.size()) return std::string_view::npos;
      ++pos;
      items.push_back(std::move(item));
      expect_item = false;
    } else if (c == '\\' && pos + 1 < text.size() &&
               (text[pos + 1] == '"' || text[pos + 1] == '\'')) {
      ++pos;  // escaped quote opening an item
    } else {
      return std::string_view::npos;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::vector<TrackerInstallation> detect_meta_installations(
    const VisitCapture& capture, const DetectionRules& rules,
    Diagnostics& diagnostics) {
  std::map<std::string, TrackerInstallation> by_id;
  for (const auto& request : capture.requests) {
    if (request.method != "GET") continue;
    auto url = parse_url(request.url);
    if (!url || !is_meta_config_url(*url, rules)) continue;
    auto id = meta_pixel_id_from_url(*url, rules);
    if (!id || id->empty()) {
      diagnostics.push_back({capture.site.domain, request.url,
                             "Meta config request without a pixel ID"});
      continue;
    }
    if (!all_digits(*id)) {
      diagnostics.push_back({capture.site.domain, request.url,
                             "Meta pixel ID '" + *id + "' is not numeric"});
      continue;
    }
    if (by_id.count(*id)) continue;
    by_id[*id] = TrackerInstallation{Provider::kMeta, *id, TagKind::kPixel,
                                     false, request.url};
  }
  std::vector<TrackerInstallation> out;
  for (auto& [id, installation] : by_id) out.push_back(std::move(installation));
  return out;
}

std::optional<std::string> probe_first_party_tag(std::string_view body,
                                                 const DetectionRules& rules) {
  bool has_marker = std::any_of(
      rules.first_party_probe_markers.begin(),
      rules.first_party_probe_markers.end(),
      [&](const std::string& marker) { return body.find(marker) != std::string_view::npos; });
  if (!has_marker) return std::nullopt;
  static const std::regex kTagId(R"(\b([A-Z]{1,3})-[A-Z0-9][A-Z0-9-]*)");
  std::string text(body);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kTagId);
       it != std::sregex_iterator(); ++it) {
    if (rules.google_tag_prefixes.count((*it)[1].str())) return it->str();
  }
  return std::nullopt;
}

std::vector<TrackerInstallation> detect_google_installations(
    const VisitCapture& capture, const DetectionRules& rules,
    Diagnostics& diagnostics) {
  std::map<std::pair<std::string, bool>, TrackerInstallation> by_id;
  auto add = [&](const std::string& id, bool first_party,
                 const std::string& url) {
    auto kind_it = rules.google_tag_prefixes.find(google_tag_prefix(id));
    if (kind_it == rules.google_tag_prefixes.end()) {
      diagnostics.push_back({capture.site.domain, url,
                             "Google tag ID '" + id +
                                 "' has an unrecognized prefix"});
      return;
    }
    auto key = std::make_pair(id, first_party);
    if (by_id.count(key)) return;
    by_id[key] = TrackerInstallation{Provider::kGoogle, id, kind_it->second,
                                     first_party, url};
  };

  for (const auto& request : capture.requests) {
    if (request.method != "GET") continue;
    auto url = parse_url(request.url);
    if (!url) continue;
    if (host_matches(url->host, rules.google_config_host)) {
      std::string id = query_value(request, "id");
      if (id.empty()) {
        diagnostics.push_back({capture.site.domain, request.url,
                               "Google tag request without an id parameter"});
        continue;
      }
      add(id, false, request.url);
      continue;
    }
    if (last_path_segment(url->path).find(rules.first_party_filename_marker) ==
        std::string::npos) {
      continue;
    }
    auto script = capture.scripts.find(request.url);
    if (script == capture.scripts.end()) {
      diagnostics.push_back({capture.site.domain, request.url,
                             "first-party tag candidate without a body"});
      continue;
    }
    auto probed = probe_first_party_tag(script->second, rules);
    if (!probed) continue;
    std::string id = query_value(request, "id");
    if (id.empty() ||
        !rules.google_tag_prefixes.count(google_tag_prefix(id))) {
      id = *probed;
    }
    add(id, true, request.url);
  }
  std::vector<TrackerInstallation> out;
  for (auto& [key, installation] : by_id) out.push_back(std::move(installation));
  return out;
}

MetaParamClass classify_meta_param(std::string_view key,
                                   const DetectionRules& rules) {
  MetaParamClass result;
  auto open = key.find('[');
  if (open == std::string_view::npos || !key.ends_with(']')) return result;
  std::string_view head = key.substr(0, open);
  std::string_view token = key.substr(open + 1, key.size() - open - 2);
  if (head == rules.automatic_key) {
    result.mode = CollectionMode::kAutomatic;
  } else if (head == rules.manual_key) {
    result.mode = CollectionMode::kManual;
  } else {
    return result;
  }
  result.field = rules.field_for_token(token);
  result.unmapped_token = !result.field.has_value();
  return result;
}

std::vector<FdcEvent> detect_fdc_events(const VisitCapture& capture,
                                        const PlaceholderIdentity& identity,
                                        const DetectionRules& rules,
                                        Diagnostics& diagnostics) {
  std::vector<FdcEvent> events;
  for (const auto& request : capture.requests) {
    auto url = parse_url(request.url);
    if (!url) continue;
    for (Provider provider : kAllProviders) {
      auto urls_it = rules.collection_urls.find(provider);
      if (urls_it == rules.collection_urls.end()) continue;
      bool listed = std::any_of(
          urls_it->second.begin(), urls_it->second.end(),
          [&](const std::string& pattern) {
            return matches_host_path_prefix(*url, pattern);
          });
      if (!listed) continue;

      EventBuilder builder;
      std::vector<QueryParam> pairs = request.query_params;
      std::vector<QueryParam> body_pairs;
      if (!request.body.empty() &&
          request.body.find('=') != std::string::npos) {
        body_pairs = parse_query(request.body);
      }
      pairs.insert(pairs.end(), body_pairs.begin(), body_pairs.end());

      for (const auto& param : pairs) {
        auto digests = find_digests(param.value, provider, identity);
        if (digests.empty()) continue;
        if (provider == Provider::kGoogle) {
          for (const auto& [field, digest] : digests) {
            builder.add(provider, CollectionMode::kUnknown, field, digest,
                        request.url);
          }
          continue;
        }
        MetaParamClass cls = classify_meta_param(param.key, rules);
        if (cls.field && digests.count(*cls.field)) {
          builder.add(provider, cls.mode, *cls.field, digests[*cls.field],
                      request.url);
          continue;
        }
        std::string reason;
        if (cls.mode == CollectionMode::kUnknown) {
          reason = "placeholder digest under unmapped key '" + param.key + "'";
        } else if (cls.unmapped_token) {
          reason = "unknown match-key token in '" + param.key + "'";
        } else {
          reason = "key '" + param.key +
                   "' carries the digest of a different field";
        }
        diagnostics.push_back({capture.site.domain, request.url, reason});
        CollectionMode mode =
            cls.field ? CollectionMode::kUnknown : cls.mode;
        for (const auto& [field, digest] : digests) {
          builder.add(provider, mode, field, digest, request.url);
        }
      }

      if (builder.by_mode.empty() && !request.body.empty()) {
        auto digests = find_digests(request.body, provider, identity);
        if (!digests.empty() && provider == Provider::kMeta) {
          diagnostics.push_back({capture.site.domain, request.url,
                                 "placeholder digest in an unstructured body"});
        }
        for (const auto& [field, digest] : digests) {
          builder.add(provider, CollectionMode::kUnknown, field, digest,
                      request.url);
        }
      }
      builder.flush(events);
    }
  }
  return events;
}

PixelConfiguration parse_meta_pixel_config(std::string_view script,
                                           std::string_view source_url,
                                           const DetectionRules& rules) {
  PixelConfiguration config;
  if (auto url = parse_url(source_url)) {
    config.pixel_id = meta_pixel_id_from_url(*url, rules).value_or("");
  }
  constexpr std::string_view kToken = "selectedMatchKeys";
  std::size_t pos = script.find(kToken);
  std::vector<std::string> unmapped;
  while (pos != std::string_view::npos) {
    std::vector<std::string> items;
    std::size_t end = parse_string_list(script, pos + kToken.size(), items);
    if (end == std::string_view::npos) {
      std::size_t tail = std::min(script.size(), pos + kToken.size() + 80);
      throw Error("selectedMatchKeys list is unparseable near: " +
                  excerpt_around(script, pos, tail));
    }
    if (config.raw_excerpt.empty()) {
      config.raw_excerpt = std::string(script.substr(pos, end - pos));
    }
    for (const auto& item : items) {
      if (auto field = rules.field_for_token(item)) {
        config.selected_match_keys.insert(*field);
      } else {
        unmapped.push_back(item);
      }
    }
    pos = script.find(kToken, end);
  }
  config.automatic_matching_enabled = !config.selected_match_keys.empty();
  if (!unmapped.empty() && config.selected_match_keys.empty()) {
    throw Error("selectedMatchKeys lists only unknown tokens: " +
                config.raw_excerpt);
  }
  return config;
}

bool is_default_configuration(const PixelConfiguration& config) {
  return config.selected_match_keys == all_pii_fields();
}

SiteVerdict analyze_visit(const VisitCapture& capture,
                          const PlaceholderIdentity& identity,
                          const DetectionRules& rules) {
  SiteVerdict verdict;
  verdict.site = capture.site;
  verdict.visits_used = 1;
  Diagnostics diagnostics = capture.diagnostics;

  verdict.meta.installations =
      detect_meta_installations(capture, rules, diagnostics);
  verdict.google.installations =
      detect_google_installations(capture, rules, diagnostics);

  std::set<std::string> meta_ids = verdict.meta.tracker_ids();
  for (const auto& request : capture.requests) {
    if (request.method != "GET") continue;
    auto url = parse_url(request.url);
    if (!url || !is_meta_config_url(*url, rules)) continue;
    auto id = meta_pixel_id_from_url(*url, rules);
    if (!id || !meta_ids.count(*id)) continue;
    auto script = capture.scripts.find(request.url);
    if (script == capture.scripts.end()) {
      diagnostics.push_back({capture.site.domain, request.url,
                             "Meta config body was not captured"});
      continue;
    }
    try {
      verdict.meta.configurations.push_back(
          parse_meta_pixel_config(script->second, request.url, rules));
    } catch (const Error& e) {
      diagnostics.push_back({capture.site.domain, request.url, e.what()});
    }
  }

  for (auto& event : detect_fdc_events(capture, identity, rules, diagnostics)) {
    verdict.of(event.provider).fdc_events.push_back(std::move(event));
  }
  verdict.diagnostics = std::move(diagnostics);
  canonicalize(verdict);
  return verdict;
}

}  // namespace formscope
