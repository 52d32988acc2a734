#pragma once

// A local simulation of the tracker ecosystem: generated sites, a mock
// config server and mock collection endpoints, with a ledger of every
// collection hit as ground truth.

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "formscope/model.hpp"
#include "formscope/pii_hash.hpp"
#include "json.hpp"

namespace formscope {

inline constexpr std::string_view kCorpusFormat = "formscope-corpus/1";

struct PixelSpec {
  Provider provider = Provider::kMeta;
  std::string tracker_id;
  // Meta: the automatic-matching keys. nullopt leaves the selectedMatchKeys
  // token out of the config entirely; an empty set emits an empty list.
  // Google: {email} turns on user-provided data collection.
  std::optional<PiiFieldSet> selected_match_keys;
  bool first_party_mode = false;  // Google only
  PiiFieldSet manual_keys;        // Meta only: fields the page passes itself

  friend bool operator==(const PixelSpec&, const PixelSpec&) = default;
};

enum class PageShape : std::uint8_t { kAnchor, kNativeForm, kDegenerate };
enum class FailureMode : std::uint8_t {
  kNone,
  kSlowLoad,        // document delayed by latency_ms
  kUnreachable,     // connection refused
  kFailFirstVisit,  // first document request answers 503
};

struct SiteSpec {
  std::string domain;
  std::int64_t rank = 1;
  Vertical vertical;
  std::vector<PixelSpec> pixels;
  PageShape shape = PageShape::kAnchor;
  int latency_ms = 0;
  FailureMode failure = FailureMode::kNone;
  // Adds look-alike traffic that must not be detected: the site's own
  // collector receiving a digest, a non-collection facebook.com path, and
  // a first-party file named like a tag without tag contents.
  bool decoys = false;

  friend bool operator==(const SiteSpec&, const SiteSpec&) = default;
};

// Throws Error when tracker IDs repeat, an ID is malformed for its
// provider, or keys are set that the simulated trackers cannot honour.
void validate_spec(const SiteSpec& spec);
SiteRecord site_record(const SiteSpec& spec);

nlohmann::json corpus_to_json(const std::vector<SiteSpec>& corpus);
std::vector<SiteSpec> corpus_from_json(const nlohmann::json& j);
std::vector<SiteSpec> load_corpus(const std::string& path);

// A mixed corpus: Meta/Google/both/none, default, custom, empty and absent
// match keys, first-party tags, every page shape, decoys and slow pages.
// Unreachable and fail-first-visit sites are added only when asked for.
struct CorpusOptions {
  std::size_t sites = 30;
  std::uint64_t seed = 1;
  bool include_unreachable = true;
  bool include_fail_first = true;
  int slow_latency_ms = 1500;
};
std::vector<SiteSpec> generate_corpus(const CorpusOptions& options);

struct PageBundle {
  std::string html;
  std::map<std::string, std::string> resources;  // path -> body on the site host
};

PageBundle generate_site(const SiteSpec& spec);

// Bodies served by the mock provider hosts.
std::string meta_runtime_script();
std::string meta_config_script(const PixelSpec& pixel, bool plain);
std::string google_tag_script(const PixelSpec& pixel);

// Wire token the simulated pixel uses for a field ("em", "ph", ...).
std::string meta_token(PiiField field);
// GA4 tags post their form data with sendBeacon; other kinds use GETs.
bool endpoint_uses_beacon(const std::string& tag_id);
// Site-relative path of the n-th first-party Google tag file.
std::string first_party_tag_path(std::size_t index);
// Collection endpoint ("host/path") a Google tag of this ID reports to.
std::string google_endpoint(const std::string& tag_id);

struct LedgerEntry {
  std::string site;  // from the hit's document-location parameter
  Provider provider = Provider::kMeta;
  std::string endpoint;  // host + path
  std::string tracker_id;
  std::string method;
  std::string url;
  std::vector<QueryParam> params;  // query then urlencoded body
  std::string body_sha256;
  std::int64_t timestamp_ms = 0;
  std::map<CollectionMode, PiiFieldSet> fields;
  bool digests_valid = true;  // every carried digest matched the identity
};

class CollectionLedger {
 public:
  void append(LedgerEntry entry);
  std::vector<LedgerEntry> entries() const;
  std::size_t size() const;
  void clear();

 private:
  mutable std::mutex mutex_;
  std::vector<LedgerEntry> entries_;
};

struct ExpectedHit {
  std::string site;
  Provider provider = Provider::kMeta;
  std::string tracker_id;
  CollectionMode mode = CollectionMode::kUnknown;
  PiiFieldSet fields;
  std::string endpoint;

  friend auto operator<=>(const ExpectedHit&, const ExpectedHit&) = default;
};

std::vector<ExpectedHit> expected_hits(const std::vector<SiteSpec>& corpus);

struct LedgerDiff {
  std::vector<ExpectedHit> missing;
  std::vector<ExpectedHit> unexpected;
  std::vector<std::string> invalid_digests;  // urls of hits with bad digests
  bool empty() const {
    return missing.empty() && unexpected.empty() && invalid_digests.empty();
  }
  std::string describe() const;
};

// Compares the distinct hits in the ledger against the specs. Hits without
// any PII field (page views) are not collection and are ignored.
LedgerDiff ledger_diff(const std::vector<LedgerEntry>& ledger,
                       const std::vector<SiteSpec>& corpus);

// What a correct pipeline should conclude about a spec's site.
struct ExpectedVerdict {
  std::set<std::string> meta_ids;
  std::set<std::tuple<std::string, TagKind, bool>> google_tags;  // id, kind, first party
  bool meta_configured = false;
  PiiFieldSet meta_config_fields;
  bool meta_fdc = false;
  PiiFieldSet meta_fdc_fields;
  std::set<CollectionMode> meta_modes;
  bool google_fdc = false;
  PiiFieldSet google_fdc_fields;
};

ExpectedVerdict expected_verdict(const SiteSpec& spec);

// Human-readable differences between a verdict and the expectation; empty
// when they agree.
std::vector<std::string> verdict_mismatches(const ExpectedVerdict& expected,
                                            const SiteVerdict& verdict);

struct TestbedOptions {
  std::string bind_host = "127.0.0.1";
  int port = 0;        // 0 picks a free port
  bool tls = true;     // provider hosts are HSTS-preloaded in browsers
  bool plain_config = false;
};

class Testbed {
 public:
  Testbed(std::vector<SiteSpec> corpus, PlaceholderIdentity identity,
          TestbedOptions options = {});
  ~Testbed();
  Testbed(const Testbed&) = delete;
  Testbed& operator=(const Testbed&) = delete;

  // Binds and starts serving on a background thread. Throws Error on bind
  // failure.
  void start();
  void stop();

  int port() const { return port_; }
  int dead_port() const { return dead_port_; }
  const std::vector<SiteSpec>& corpus() const { return corpus_; }
  CollectionLedger& ledger() { return ledger_; }
  // Document requests served (or refused with 503) per domain.
  int document_requests(const std::string& domain) const;

  // Value for the browser's --host-resolver-rules: unreachable sites go to
  // a closed port, every other host to this server.
  std::string resolver_rules() const;

 private:
  struct Impl;
  std::vector<SiteSpec> corpus_;
  PlaceholderIdentity identity_;
  TestbedOptions options_;
  std::unique_ptr<Impl> impl_;
  CollectionLedger ledger_;
  int port_ = 0;
  int dead_port_ = 0;
};

}  // namespace formscope
