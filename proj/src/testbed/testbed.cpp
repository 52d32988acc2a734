#include "formscope/testbed.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <openssl/evp.h>
#include <openssl/x509.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <functional>
#include <random>
#include <sstream>
#include <thread>

#include "formscope/json_io.hpp"
#include "formscope/url.hpp"
#include "httplib.h"

namespace formscope {

using nlohmann::json;

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return c >= '0' && c <= '9';
  });
}

bool valid_google_id(std::string_view id) {
  auto dash = id.find('-');
  if (dash == std::string_view::npos || dash + 1 >= id.size()) return false;
  if (!google_tag_kind_for_prefix(id.substr(0, dash))) return false;
  return std::all_of(id.begin() + static_cast<long>(dash) + 1, id.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
  });
}

PiiFieldSet form_fields() { return {kFormFields.begin(), kFormFields.end()}; }

PiiFieldSet intersect(const PiiFieldSet& a, const PiiFieldSet& b) {
  PiiFieldSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::inserter(out, out.end()));
  return out;
}

std::string_view to_string(PageShape shape) {
  switch (shape) {
    case PageShape::kAnchor: return "anchor";
    case PageShape::kNativeForm: return "native_form";
    case PageShape::kDegenerate: return "degenerate";
  }
  return "anchor";
}

PageShape parse_shape(const std::string& name) {
  if (name == "anchor") return PageShape::kAnchor;
  if (name == "native_form") return PageShape::kNativeForm;
  if (name == "degenerate") return PageShape::kDegenerate;
  throw Error("corpus: unknown page shape '" + name + "'");
}

std::string_view to_string(FailureMode mode) {
  switch (mode) {
    case FailureMode::kNone: return "none";
    case FailureMode::kSlowLoad: return "slow_load";
    case FailureMode::kUnreachable: return "unreachable";
    case FailureMode::kFailFirstVisit: return "fail_first_visit";
  }
  return "none";
}

FailureMode parse_failure(const std::string& name) {
  if (name == "none") return FailureMode::kNone;
  if (name == "slow_load") return FailureMode::kSlowLoad;
  if (name == "unreachable") return FailureMode::kUnreachable;
  if (name == "fail_first_visit") return FailureMode::kFailFirstVisit;
  throw Error("corpus: unknown failure mode '" + name + "'");
}

std::optional<PiiField> field_for_meta_token(std::string_view token) {
  for (PiiField f : kAllPiiFields) {
    if (meta_token(f) == token) return f;
  }
  return std::nullopt;
}

}  // namespace

void validate_spec(const SiteSpec& spec) {
  validate_site(site_record(spec));
  const std::string where = "site spec " + spec.domain + ": ";
  std::set<std::string> ids;
  for (const auto& pixel : spec.pixels) {
    if (!ids.insert(pixel.tracker_id).second) {
      throw Error(where + "tracker ID " + pixel.tracker_id + " repeats");
    }
    if (pixel.provider == Provider::kMeta) {
      if (!all_digits(pixel.tracker_id)) {
        throw Error(where + "Meta pixel ID must be numeric");
      }
      if (pixel.first_party_mode) {
        throw Error(where + "first-party mode applies to Google tags only");
      }
      if (pixel.selected_match_keys && !pixel.selected_match_keys->empty() &&
          intersect(*pixel.selected_match_keys, form_fields()).empty()) {
        throw Error(where + "match keys select no field the form carries, so "
                            "configuration and collection could never agree");
      }
      if (intersect(pixel.manual_keys, form_fields()) != pixel.manual_keys) {
        throw Error(where + "manual keys must be form fields");
      }
    } else {
      if (!valid_google_id(pixel.tracker_id)) {
        throw Error(where + "malformed Google tag ID " + pixel.tracker_id);
      }
      if (pixel.selected_match_keys && !pixel.selected_match_keys->empty() &&
          *pixel.selected_match_keys != PiiFieldSet{PiiField::kEmail}) {
        throw Error(where + "Google tags only collect email");
      }
      if (!pixel.manual_keys.empty()) {
        throw Error(where + "manual keys apply to Meta pixels only");
      }
    }
  }
  if (spec.latency_ms < 0) throw Error(where + "negative latency");
  if (spec.failure == FailureMode::kSlowLoad && spec.latency_ms == 0) {
    throw Error(where + "slow_load needs a latency");
  }
}

SiteRecord site_record(const SiteSpec& spec) {
  return SiteRecord{spec.domain, spec.rank, spec.vertical};
}

json corpus_to_json(const std::vector<SiteSpec>& corpus) {
  json sites = json::array();
  for (const auto& spec : corpus) {
    json pixels = json::array();
    for (const auto& p : spec.pixels) {
      json pj{{"provider", to_string(p.provider)},
              {"tracker_id", p.tracker_id},
              {"selected_match_keys",
               p.selected_match_keys ? to_json(*p.selected_match_keys) : json()},
              {"first_party_mode", p.first_party_mode},
              {"manual_keys", to_json(p.manual_keys)}};
      pixels.push_back(std::move(pj));
    }
    sites.push_back({{"domain", spec.domain},
                     {"rank", spec.rank},
                     {"vertical", spec.vertical.label()},
                     {"pixels", pixels},
                     {"shape", to_string(spec.shape)},
                     {"latency_ms", spec.latency_ms},
                     {"failure", to_string(spec.failure)},
                     {"decoys", spec.decoys}});
  }
  return json{{"format", kCorpusFormat}, {"sites", sites}};
}

std::vector<SiteSpec> corpus_from_json(const json& j) {
  if (j.value("format", std::string{}) != kCorpusFormat) {
    throw Error("corpus is not " + std::string(kCorpusFormat));
  }
  std::vector<SiteSpec> corpus;
  std::set<std::string> domains;
  try {
    for (const auto& sj : j.at("sites")) {
      SiteSpec spec;
      spec.domain = sj.at("domain").get<std::string>();
      spec.rank = sj.value("rank", std::int64_t{1});
      spec.vertical = Vertical::from_raw(sj.value("vertical", std::string("other")));
      spec.shape = parse_shape(sj.value("shape", std::string("anchor")));
      spec.latency_ms = sj.value("latency_ms", 0);
      spec.failure = parse_failure(sj.value("failure", std::string("none")));
      spec.decoys = sj.value("decoys", false);
      for (const auto& pj : sj.value("pixels", json::array())) {
        PixelSpec pixel;
        auto provider = parse_provider(pj.at("provider").get<std::string>());
        if (!provider) throw Error("corpus: unknown provider in " + spec.domain);
        pixel.provider = *provider;
        pixel.tracker_id = pj.at("tracker_id").get<std::string>();
        if (pj.contains("selected_match_keys") && !pj["selected_match_keys"].is_null()) {
          pixel.selected_match_keys = pii_fields_from_json(pj["selected_match_keys"]);
        }
        pixel.first_party_mode = pj.value("first_party_mode", false);
        if (pj.contains("manual_keys")) {
          pixel.manual_keys = pii_fields_from_json(pj["manual_keys"]);
        }
        spec.pixels.push_back(std::move(pixel));
      }
      validate_spec(spec);
      if (!domains.insert(spec.domain).second) {
        throw Error("corpus: domain " + spec.domain + " repeats");
      }
      corpus.push_back(std::move(spec));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("corpus: ") + e.what());
  }
  // A pixel's configuration lives with the provider, so one ID must mean
  // one configuration across the corpus.
  std::map<std::string, PixelSpec> by_id;
  for (const auto& spec : corpus) {
    for (const auto& pixel : spec.pixels) {
      auto [it, inserted] = by_id.emplace(pixel.tracker_id, pixel);
      if (!inserted && (it->second.selected_match_keys != pixel.selected_match_keys ||
                        it->second.provider != pixel.provider)) {
        throw Error("corpus: tracker " + pixel.tracker_id +
                    " is configured differently on two sites");
      }
    }
  }
  return corpus;
}

std::vector<SiteSpec> load_corpus(const std::string& path) {
  try {
    return corpus_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw Error("corpus file '" + path + "' is not valid JSON: " + e.what());
  }
}

std::vector<SiteSpec> generate_corpus(const CorpusOptions& options) {
  std::mt19937_64 rng(options.seed);
  auto digits = [&](int n) {
    std::string s(1, static_cast<char>('1' + rng() % 9));
    while (static_cast<int>(s.size()) < n) s += static_cast<char>('0' + rng() % 10);
    return s;
  };
  auto alnum = [&](int n) {
    static constexpr char kChars[] = "ABCDEFGHJKLMNPQRSTUVWXYZ0123456789";
    std::string s;
    while (static_cast<int>(s.size()) < n) s += kChars[rng() % (sizeof kChars - 1)];
    return s;
  };
  auto meta = [&](std::optional<PiiFieldSet> keys, PiiFieldSet manual = {}) {
    return PixelSpec{Provider::kMeta, digits(15), std::move(keys), false,
                     std::move(manual)};
  };
  auto google = [&](std::string prefix, bool collect, bool first_party = false) {
    std::string id = prefix + "-" + (prefix == "AW" ? digits(10) : alnum(10));
    std::optional<PiiFieldSet> keys;
    if (collect) keys = PiiFieldSet{PiiField::kEmail};
    return PixelSpec{Provider::kGoogle, id, keys, first_party, {}};
  };
  using F = PiiField;
  const PiiFieldSet all = all_pii_fields();

  // Each archetype fills in the pixels and page details of one site.
  using Archetype = std::function<void(SiteSpec&)>;
  std::vector<Archetype> archetypes = {
      [&](SiteSpec& s) { s.pixels = {meta(all), google("G", false)}; },
      [&](SiteSpec& s) { s.pixels = {meta(PiiFieldSet{F::kEmail, F::kPhoneNumber})}; },
      [&](SiteSpec& s) { s.pixels = {meta(std::nullopt)}; },
      [&](SiteSpec& s) { s.pixels = {meta(PiiFieldSet{})}; },
      [&](SiteSpec& s) { s.pixels = {google("AW", true)}; },
      [&](SiteSpec& s) { s.pixels = {google("G", true, true)}; },
      [&](SiteSpec& s) {
        s.pixels = {meta(PiiFieldSet{F::kEmail, F::kFirstName, F::kLastName}),
                    google("GT", true)};
      },
      [&](SiteSpec& s) { s.decoys = true; },
      [&](SiteSpec& s) { s.pixels = {meta(all), meta(std::nullopt)}; },
      [&](SiteSpec& s) { s.pixels = {google("DC", true), google("UA", false)}; },
      [&](SiteSpec& s) {
        s.pixels = {meta(PiiFieldSet{F::kEmail, F::kGender, F::kCountry},
                         PiiFieldSet{F::kPhoneNumber})};
      },
      [&](SiteSpec& s) {
        s.shape = PageShape::kDegenerate;
        s.pixels = {meta(PiiFieldSet{F::kZipCode, F::kCity, F::kState})};
      },
      [&](SiteSpec& s) {
        s.shape = PageShape::kNativeForm;
        s.pixels = {google("UA", true), meta(PiiFieldSet{F::kEmail, F::kLastName})};
      },
      [&](SiteSpec& s) {
        s.failure = FailureMode::kSlowLoad;
        s.latency_ms = options.slow_latency_ms;
        s.pixels = {meta(all)};
      },
      [&](SiteSpec& s) {
        s.decoys = true;
        s.pixels = {google("G", false, true)};
      },
      [&](SiteSpec& s) {
        s.decoys = true;
        s.shape = PageShape::kNativeForm;
        s.pixels = {meta(PiiFieldSet{F::kEmail}), google("AW", false)};
      },
  };

  static const std::vector<std::string> kCategories = {"shopping", "news", "travel"};
  std::vector<SiteSpec> corpus;
  std::size_t specials = (options.include_unreachable ? 1 : 0) +
                         (options.include_fail_first ? 1 : 0);
  std::size_t regular = options.sites > specials ? options.sites - specials : 0;
  auto base = [&](std::size_t i) {
    SiteSpec s;
    switch (i % 3) {
      case 0: s.vertical = Vertical::health(); break;
      case 1: s.vertical = Vertical::finance(); break;
      default: s.vertical = Vertical::non_sensitive(kCategories[(i / 3) % 3]); break;
    }
    std::string word = s.vertical.kind() == Vertical::Kind::kHealth    ? "clinic"
                       : s.vertical.kind() == Vertical::Kind::kFinance ? "lender"
                                                                       : s.vertical.category();
    char number[8];
    std::snprintf(number, sizeof number, "%02zu", i + 1);
    s.domain = word + "-" + number + ".test";
    s.rank = static_cast<std::int64_t>(i + 1);
    return s;
  };
  for (std::size_t i = 0; i < regular; ++i) {
    SiteSpec s = base(i);
    archetypes[i % archetypes.size()](s);
    corpus.push_back(std::move(s));
  }
  if (options.include_unreachable) {
    SiteSpec s = base(corpus.size());
    s.failure = FailureMode::kUnreachable;
    s.pixels = {meta(all)};
    corpus.push_back(std::move(s));
  }
  if (options.include_fail_first) {
    SiteSpec s = base(corpus.size());
    s.failure = FailureMode::kFailFirstVisit;
    s.pixels = {meta(PiiFieldSet{F::kEmail}), google("AW", true)};
    corpus.push_back(std::move(s));
  }
  for (const auto& s : corpus) validate_spec(s);
  return corpus;
}

std::string google_endpoint(const std::string& tag_id) {
  auto prefix = google_tag_prefix(tag_id);
  if (prefix == "AW") return "googleadservices.com/pagead/conversion";
  if (prefix == "DC") return "google.com/pagead/form-data";
  if (prefix == "UA") return "google.com/ccm/form-data";
  return "analytics.google.com/g/collect";
}

void CollectionLedger::append(LedgerEntry entry) {
  std::lock_guard lock(mutex_);
  entries_.push_back(std::move(entry));
}

std::vector<LedgerEntry> CollectionLedger::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

std::size_t CollectionLedger::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

void CollectionLedger::clear() {
  std::lock_guard lock(mutex_);
  entries_.clear();
}

std::vector<ExpectedHit> expected_hits(const std::vector<SiteSpec>& corpus) {
  std::vector<ExpectedHit> hits;
  for (const auto& spec : corpus) {
    if (spec.failure == FailureMode::kUnreachable) continue;
    for (const auto& pixel : spec.pixels) {
      if (pixel.provider == Provider::kMeta) {
        PiiFieldSet automatic =
            pixel.selected_match_keys
                ? intersect(*pixel.selected_match_keys, form_fields())
                : PiiFieldSet{};
        if (!automatic.empty()) {
          hits.push_back({spec.domain, Provider::kMeta, pixel.tracker_id,
                          CollectionMode::kAutomatic, automatic, "facebook.com/tr"});
        }
        if (!pixel.manual_keys.empty()) {
          hits.push_back({spec.domain, Provider::kMeta, pixel.tracker_id,
                          CollectionMode::kManual, pixel.manual_keys,
                          "facebook.com/tr"});
        }
      } else if (pixel.selected_match_keys &&
                 pixel.selected_match_keys->count(PiiField::kEmail)) {
        hits.push_back({spec.domain, Provider::kGoogle, pixel.tracker_id,
                        CollectionMode::kUnknown, {PiiField::kEmail},
                        google_endpoint(pixel.tracker_id)});
      }
    }
  }
  std::sort(hits.begin(), hits.end());
  return hits;
}

std::string LedgerDiff::describe() const {
  std::ostringstream out;
  auto hit = [&](const ExpectedHit& h) {
    out << h.site << " " << to_string(h.provider) << " " << h.tracker_id << " "
        << to_string(h.mode) << " " << h.endpoint << " {";
    bool first = true;
    for (PiiField f : h.fields) {
      out << (first ? "" : ",") << to_string(f);
      first = false;
    }
    out << "}\n";
  };
  for (const auto& h : missing) {
    out << "missing: ";
    hit(h);
  }
  for (const auto& h : unexpected) {
    out << "unexpected: ";
    hit(h);
  }
  for (const auto& url : invalid_digests) out << "bad digest: " << url << "\n";
  return out.str();
}

LedgerDiff ledger_diff(const std::vector<LedgerEntry>& ledger,
                       const std::vector<SiteSpec>& corpus) {
  std::set<ExpectedHit> observed;
  LedgerDiff diff;
  for (const auto& entry : ledger) {
    if (!entry.digests_valid) diff.invalid_digests.push_back(entry.url);
    for (const auto& [mode, fields] : entry.fields) {
      if (fields.empty()) continue;
      observed.insert({entry.site, entry.provider, entry.tracker_id, mode, fields,
                       entry.endpoint});
    }
  }
  std::vector<ExpectedHit> expected = expected_hits(corpus);
  std::set<ExpectedHit> wanted(expected.begin(), expected.end());
  std::set_difference(wanted.begin(), wanted.end(), observed.begin(),
                      observed.end(), std::back_inserter(diff.missing));
  std::set_difference(observed.begin(), observed.end(), wanted.begin(),
                      wanted.end(), std::back_inserter(diff.unexpected));
  return diff;
}

ExpectedVerdict expected_verdict(const SiteSpec& spec) {
  ExpectedVerdict out;
  if (spec.failure == FailureMode::kUnreachable) return out;
  for (const auto& pixel : spec.pixels) {
    if (pixel.provider == Provider::kMeta) {
      out.meta_ids.insert(pixel.tracker_id);
      if (pixel.selected_match_keys && !pixel.selected_match_keys->empty()) {
        out.meta_configured = true;
        out.meta_config_fields.insert(pixel.selected_match_keys->begin(),
                                      pixel.selected_match_keys->end());
        PiiFieldSet sent = intersect(*pixel.selected_match_keys, form_fields());
        if (!sent.empty()) {
          out.meta_fdc = true;
          out.meta_fdc_fields.insert(sent.begin(), sent.end());
          out.meta_modes.insert(CollectionMode::kAutomatic);
        }
      }
      if (!pixel.manual_keys.empty()) {
        out.meta_fdc = true;
        out.meta_fdc_fields.insert(pixel.manual_keys.begin(), pixel.manual_keys.end());
        out.meta_modes.insert(CollectionMode::kManual);
      }
    } else {
      out.google_tags.insert({pixel.tracker_id,
                              *google_tag_kind_for_prefix(google_tag_prefix(pixel.tracker_id)),
                              pixel.first_party_mode});
      if (pixel.selected_match_keys && pixel.selected_match_keys->count(PiiField::kEmail)) {
        out.google_fdc = true;
        out.google_fdc_fields.insert(PiiField::kEmail);
      }
    }
  }
  return out;
}

std::vector<std::string> verdict_mismatches(const ExpectedVerdict& expected,
                                            const SiteVerdict& verdict) {
  std::vector<std::string> out;
  auto fields = [](const PiiFieldSet& set) {
    std::string s = "{";
    for (PiiField f : set) s += std::string(s.size() > 1 ? "," : "") + std::string(to_string(f));
    return s + "}";
  };
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) out.push_back(what);
  };
  check(verdict.meta.tracker_ids() == expected.meta_ids, "meta tracker IDs differ");
  check(verdict.meta.installed == !expected.meta_ids.empty(), "meta installed flag");
  std::set<std::tuple<std::string, TagKind, bool>> google;
  for (const auto& i : verdict.google.installations) {
    google.insert({i.tracker_id, i.tag_kind, i.first_party_mode});
  }
  check(google == expected.google_tags, "google installations differ");
  check(verdict.google.installed == !expected.google_tags.empty(), "google installed flag");
  check(verdict.meta.configured == expected.meta_configured, "meta configured flag");
  check(verdict.meta.config_fields == expected.meta_config_fields,
        "meta config fields " + fields(verdict.meta.config_fields) + " vs " +
            fields(expected.meta_config_fields));
  check(verdict.meta.fdc == expected.meta_fdc, "meta fdc flag");
  check(verdict.meta.fdc_fields == expected.meta_fdc_fields,
        "meta fdc fields " + fields(verdict.meta.fdc_fields) + " vs " +
            fields(expected.meta_fdc_fields));
  check(verdict.meta.fdc_modes == expected.meta_modes, "meta fdc modes differ");
  check(verdict.google.fdc == expected.google_fdc, "google fdc flag");
  check(verdict.google.fdc_fields == expected.google_fdc_fields,
        "google fdc fields " + fields(verdict.google.fdc_fields) + " vs " +
            fields(expected.google_fdc_fields));
  std::set<CollectionMode> google_modes;
  if (expected.google_fdc) google_modes.insert(CollectionMode::kUnknown);
  check(verdict.google.fdc_modes == google_modes, "google fdc modes differ");
  return out;
}

// ---------------------------------------------------------------------------
// Server

namespace {

struct X509Deleter {
  void operator()(X509* p) const { X509_free(p); }
};
struct KeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};

std::pair<std::unique_ptr<X509, X509Deleter>, std::unique_ptr<EVP_PKEY, KeyDeleter>>
make_self_signed_certificate() {
  std::unique_ptr<EVP_PKEY, KeyDeleter> key(EVP_EC_gen("P-256"));
  if (!key) throw Error("testbed: key generation failed");
  std::unique_ptr<X509, X509Deleter> cert(X509_new());
  X509_set_version(cert.get(), 2);
  ASN1_INTEGER_set(X509_get_serialNumber(cert.get()), 1);
  X509_gmtime_adj(X509_getm_notBefore(cert.get()), -3600);
  X509_gmtime_adj(X509_getm_notAfter(cert.get()), 7L * 24 * 3600);
  X509_set_pubkey(cert.get(), key.get());
  X509_NAME* name = X509_get_subject_name(cert.get());
  X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_ASC,
                             reinterpret_cast<const unsigned char*>("formscope testbed"),
                             -1, -1, 0);
  X509_set_issuer_name(cert.get(), name);
  if (X509_sign(cert.get(), key.get(), EVP_sha256()) == 0) {
    throw Error("testbed: certificate signing failed");
  }
  return {std::move(cert), std::move(key)};
}

// A port with no listener: bound, read back, then released.
int closed_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return 9;
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  socklen_t len = sizeof addr;
  int port = 9;
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0 &&
      ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) == 0) {
    port = ntohs(addr.sin_port);
  }
  ::close(fd);
  return port;
}

constexpr unsigned char kGif[] = {0x47, 0x49, 0x46, 0x38, 0x39, 0x61, 0x01, 0x00,
                                  0x01, 0x00, 0x80, 0x00, 0x00, 0xff, 0xff, 0xff,
                                  0x00, 0x00, 0x00, 0x21, 0xf9, 0x04, 0x01, 0x00,
                                  0x00, 0x00, 0x00, 0x2c, 0x00, 0x00, 0x00, 0x00,
                                  0x01, 0x00, 0x01, 0x00, 0x00, 0x02, 0x02, 0x44,
                                  0x01, 0x00, 0x3b};

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

struct Testbed::Impl {
  std::unique_ptr<httplib::Server> server;
  std::thread thread;
  std::map<std::string, const SiteSpec*> sites;
  std::map<std::string, PageBundle> bundles;
  std::map<std::string, const PixelSpec*> meta_pixels;
  std::map<std::string, const PixelSpec*> google_tags;
  std::string meta_runtime;
  mutable std::mutex mutex;
  std::map<std::string, int> documents;
};

Testbed::Testbed(std::vector<SiteSpec> corpus, PlaceholderIdentity identity,
                 TestbedOptions options)
    : corpus_(std::move(corpus)),
      identity_(std::move(identity)),
      options_(std::move(options)),
      impl_(std::make_unique<Impl>()) {
  // Round-trip through JSON to apply the corpus-wide checks.
  corpus_ = corpus_from_json(corpus_to_json(corpus_));
  for (const auto& spec : corpus_) {
    impl_->sites[spec.domain] = &spec;
    impl_->bundles[spec.domain] = generate_site(spec);
    for (const auto& pixel : spec.pixels) {
      auto& table = pixel.provider == Provider::kMeta ? impl_->meta_pixels
                                                      : impl_->google_tags;
      table.emplace(pixel.tracker_id, &pixel);
    }
  }
  impl_->meta_runtime = meta_runtime_script();
}

Testbed::~Testbed() { stop(); }

int Testbed::document_requests(const std::string& domain) const {
  std::lock_guard lock(impl_->mutex);
  auto it = impl_->documents.find(domain);
  return it == impl_->documents.end() ? 0 : it->second;
}

std::string Testbed::resolver_rules() const {
  std::string rules;
  for (const auto& spec : corpus_) {
    if (spec.failure != FailureMode::kUnreachable) continue;
    for (const std::string& host : {spec.domain, "www." + spec.domain}) {
      rules += "MAP " + host + " 127.0.0.1:" + std::to_string(dead_port_) + ", ";
    }
  }
  return rules + "MAP * 127.0.0.1:" + std::to_string(port_);
}

void Testbed::stop() {
  if (!impl_ || !impl_->server) return;
  impl_->server->stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  impl_->server.reset();
}

void Testbed::start() {
  if (impl_->server) return;
  if (options_.tls) {
    auto [cert, key] = make_self_signed_certificate();
    auto server = std::make_unique<httplib::SSLServer>(cert.get(), key.get());
    if (!server->is_valid()) throw Error("testbed: TLS context setup failed");
    impl_->server = std::move(server);
  } else {
    impl_->server = std::make_unique<httplib::Server>();
  }
  httplib::Server& server = *impl_->server;
  server.new_task_queue = [] { return new httplib::ThreadPool(64); };
  server.set_keep_alive_timeout(2);

  Impl* impl = impl_.get();
  auto handler = [this, impl](const httplib::Request& req, httplib::Response& res) {
    std::string host = req.get_header_value("Host");
    host = host.substr(0, host.find(':'));
    std::transform(host.begin(), host.end(), host.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const std::string& path = req.path;
    auto q = req.target.find('?');
    std::string query = q == std::string::npos ? "" : req.target.substr(q + 1);
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Cache-Control", "no-store");

    auto gif = [&] {
      res.set_content(reinterpret_cast<const char*>(kGif), sizeof kGif, "image/gif");
    };
    auto script = [&](const std::string& body) {
      res.set_content(body, "application/javascript");
    };

    // Collection endpoints first: they are what the ledger is for.
    std::optional<Provider> provider;
    std::string endpoint;
    if (host_matches(host, "analytics.google.com") && path.starts_with("/g/collect")) {
      provider = Provider::kGoogle;
      endpoint = "analytics.google.com/g/collect";
    } else if (host_matches(host, "googleadservices.com") &&
               path.starts_with("/pagead/conversion")) {
      provider = Provider::kGoogle;
      endpoint = "googleadservices.com/pagead/conversion";
    } else if (host_matches(host, "google.com") && path.starts_with("/ccm/form-data")) {
      provider = Provider::kGoogle;
      endpoint = "google.com/ccm/form-data";
    } else if (host_matches(host, "google.com") && path.starts_with("/pagead/form-data")) {
      provider = Provider::kGoogle;
      endpoint = "google.com/pagead/form-data";
    } else if (host_matches(host, "facebook.com") &&
               (path == "/tr" || path.starts_with("/tr/") ||
                path.starts_with("/privacy_sandbox/register/trigger"))) {
      provider = Provider::kMeta;
      endpoint = path.starts_with("/tr") ? "facebook.com/tr"
                                         : "facebook.com/privacy_sandbox/register/trigger";
    }
    if (provider) {
      LedgerEntry entry;
      entry.provider = *provider;
      entry.endpoint = endpoint;
      entry.method = req.method;
      entry.url = "https://" + host + req.target;
      entry.params = parse_query(query);
      if (req.body.find('=') != std::string::npos) {
        auto body = parse_query(req.body);
        entry.params.insert(entry.params.end(), body.begin(), body.end());
      }
      entry.body_sha256 = sha256_hex(req.body);
      entry.timestamp_ms = now_ms();
      for (const auto& p : entry.params) {
        if (p.key == "dl") {
          if (auto page = parse_url(p.value)) {
            entry.site = page->host.starts_with("www.") ? page->host.substr(4) : page->host;
          }
        } else if ((p.key == "id" && *provider == Provider::kMeta) ||
                   (p.key == "tid" && *provider == Provider::kGoogle)) {
          entry.tracker_id = p.value;
        }
      }
      for (const auto& p : entry.params) {
        if (*provider == Provider::kMeta) {
          CollectionMode mode;
          std::string_view key = p.key;
          if (key.starts_with("udff[")) {
            mode = CollectionMode::kAutomatic;
            key.remove_prefix(5);
          } else if (key.starts_with("ud[")) {
            mode = CollectionMode::kManual;
            key.remove_prefix(3);
          } else {
            continue;
          }
          if (!key.ends_with(']')) continue;
          key.remove_suffix(1);
          auto field = field_for_meta_token(key);
          if (!field) continue;
          entry.fields[mode].insert(*field);
          const IdentityValue* value = identity_.find(*field);
          if (!value || value->meta_digest != p.value) entry.digests_valid = false;
        } else if (p.key == "em") {
          constexpr std::string_view kPrefix = "tv.1~em.";
          entry.fields[CollectionMode::kUnknown].insert(PiiField::kEmail);
          if (!std::string_view(p.value).starts_with(kPrefix) ||
              p.value.substr(kPrefix.size()) !=
                  identity_.at(PiiField::kEmail).google_digest) {
            entry.digests_valid = false;
          }
        }
      }
      ledger_.append(std::move(entry));
      gif();
      return;
    }

    if (host_matches(host, "connect.facebook.net")) {
      if (path.ends_with("/fbevents.js")) return script(impl->meta_runtime);
      constexpr std::string_view kConfig = "/signals/config/";
      if (path.starts_with(kConfig)) {
        auto it = impl->meta_pixels.find(path.substr(kConfig.size()));
        if (it != impl->meta_pixels.end()) {
          return script(meta_config_script(*it->second, options_.plain_config));
        }
      }
      res.status = 404;
      return;
    }
    if (host_matches(host, "googletagmanager.com")) {
      if (path == "/gtag/js") {
        auto it = impl->google_tags.find(req.get_param_value("id"));
        if (it != impl->google_tags.end()) return script(google_tag_script(*it->second));
      }
      res.status = 404;
      return;
    }
    if (host_matches(host, "facebook.com")) {
      if (path.starts_with("/plugins/")) {
        res.set_content("<!doctype html><title>plugin</title>", "text/html");
        return;
      }
      res.status = 404;
      return;
    }

    std::string domain = host.starts_with("www.") ? host.substr(4) : host;
    auto site = impl->sites.find(domain);
    if (site == impl->sites.end()) {
      res.status = 404;
      return;
    }
    const SiteSpec& spec = *site->second;
    if (path == "/" || path == "/index.html") {
      int seen;
      {
        std::lock_guard lock(impl->mutex);
        seen = impl->documents[domain]++;
      }
      if (spec.failure == FailureMode::kFailFirstVisit && seen == 0) {
        res.status = 503;
        res.set_content("<!doctype html><title>Service Unavailable</title>", "text/html");
        return;
      }
      if (spec.latency_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(spec.latency_ms));
      }
      res.set_content(impl->bundles[domain].html, "text/html; charset=utf-8");
      return;
    }
    const auto& resources = impl->bundles[domain].resources;
    if (auto it = resources.find(path); it != resources.end()) return script(it->second);
    if (path == "/collect") {
      res.status = 204;
      return;
    }
    res.status = 404;
  };
  server.Get(".*", handler);
  server.Post(".*", handler);
  server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Headers", "*");
    res.status = 204;
  });

  if (options_.port == 0) {
    port_ = server.bind_to_any_port(options_.bind_host);
  } else {
    port_ = server.bind_to_port(options_.bind_host, options_.port) ? options_.port : -1;
  }
  if (port_ <= 0) {
    impl_->server.reset();
    throw Error("testbed: cannot bind " + options_.bind_host + ":" +
                std::to_string(options_.port));
  }
  dead_port_ = closed_port();
  impl_->thread = std::thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();
}

}  // namespace formscope
