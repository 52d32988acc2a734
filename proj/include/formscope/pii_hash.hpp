#pragma once

// Placeholder identity and the per-provider digests used as needles when
// searching captured traffic for submitted form data.

#include <map>
#include <string>
#include <string_view>

#include "formscope/model.hpp"

namespace formscope {

// Canonical form of a raw value: surrounding whitespace trimmed and ASCII
// lowercased; phone numbers reduced to digits; names, city and state have
// internal whitespace collapsed; zip codes are kept verbatim after the trim.
// Throws Error when nothing is left.
std::string normalize(PiiField field, std::string_view raw);

// Lowercase hex SHA-256 of the UTF-8 bytes.
std::string meta_digest(std::string_view normalized);

// Lowercase hex SHA-256 of the padded standard base64 text of the bytes.
std::string google_digest(std::string_view normalized);

std::string sha256_hex(std::string_view bytes);
std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

struct IdentityValue {
  std::string raw;
  std::string normalized;
  std::string meta_digest;
  std::string google_digest;

  friend bool operator==(const IdentityValue&, const IdentityValue&) = default;
};

class PlaceholderIdentity {
 public:
  const std::map<PiiField, IdentityValue>& values() const { return values_; }
  const IdentityValue* find(PiiField field) const;
  const IdentityValue& at(PiiField field) const;
  const std::string& digest(Provider provider, PiiField field) const;

  friend bool operator==(const PlaceholderIdentity&,
                         const PlaceholderIdentity&) = default;

 private:
  friend PlaceholderIdentity build_identity(
      const std::map<PiiField, std::string>& seed);
  std::map<PiiField, IdentityValue> values_;
};

// Requires the seven injected form fields; external_id is never part of an
// identity. Throws Error naming every missing field.
PlaceholderIdentity build_identity(const std::map<PiiField, std::string>& seed);

// The built-in synthetic persona.
PlaceholderIdentity default_identity();

// Flat key-value text: "<field>.raw=...", "<field>.normalized=...",
// "<field>.meta_sha256=...", "<field>.google_sha256=...". Lines starting
// with '#' are comments.
std::string serialize_identity(const PlaceholderIdentity& identity);

// Accepts files carrying only ".raw" (or bare "<field>=") entries; derived
// entries, when present, must agree with the recomputed values.
PlaceholderIdentity parse_identity(std::string_view text);
PlaceholderIdentity load_identity(const std::string& path);

}  // namespace formscope
