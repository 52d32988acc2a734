#include "formscope/pii_hash.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>

#include "formscope/json_io.hpp"

namespace formscope {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)); }

std::string_view trim(std::string_view text) {
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return text;
}

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

}  // namespace

std::string normalize(PiiField field, std::string_view raw) {
  std::string_view trimmed = trim(raw);
  std::string out;
  switch (field) {
    case PiiField::kPhoneNumber:
      for (char c : trimmed) {
        if (std::isdigit(static_cast<unsigned char>(c))) out += c;
      }
      break;
    case PiiField::kFirstName:
    case PiiField::kLastName:
    case PiiField::kCity:
    case PiiField::kState:
      out = collapse_whitespace(lowercase(trimmed));
      break;
    case PiiField::kZipCode:
      out = std::string(trimmed);
      break;
    default:
      out = lowercase(trimmed);
      break;
  }
  if (out.empty()) {
    throw Error("cannot normalize empty " + std::string(to_string(field)));
  }
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(),
         digest.data());
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(digest.size() * 2);
  for (unsigned char byte : digest) {
    out += kHex[byte >> 4];
    out += kHex[byte & 0x0f];
  }
  return out;
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int written = EVP_EncodeBlock(
      reinterpret_cast<unsigned char*>(out.data()),
      reinterpret_cast<const unsigned char*>(bytes.data()),
      static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(written));
  return out;
}

std::string base64_decode(std::string_view text) {
  std::string clean;
  for (char c : text) {
    if (!is_space(c)) clean += c;
  }
  if (clean.size() % 4 != 0) throw Error("base64 text has a ragged length");
  std::string out(3 * clean.size() / 4, '\0');
  int written = EVP_DecodeBlock(
      reinterpret_cast<unsigned char*>(out.data()),
      reinterpret_cast<const unsigned char*>(clean.data()),
      static_cast<int>(clean.size()));
  if (written < 0) throw Error("invalid base64 text");
  // EVP_DecodeBlock counts padding bytes as output.
  std::size_t padding = 0;
  if (!clean.empty() && clean.back() == '=') ++padding;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(written) - padding);
  return out;
}

std::string meta_digest(std::string_view normalized) {
  return sha256_hex(normalized);
}

std::string google_digest(std::string_view normalized) {
  return sha256_hex(base64_encode(normalized));
}

const IdentityValue* PlaceholderIdentity::find(PiiField field) const {
  auto it = values_.find(field);
  return it == values_.end() ? nullptr : &it->second;
}

const IdentityValue& PlaceholderIdentity::at(PiiField field) const {
  const IdentityValue* value = find(field);
  if (!value) {
    throw Error("identity has no " + std::string(to_string(field)));
  }
  return *value;
}

const std::string& PlaceholderIdentity::digest(Provider provider,
                                               PiiField field) const {
  const IdentityValue& value = at(field);
  return provider == Provider::kMeta ? value.meta_digest : value.google_digest;
}

PlaceholderIdentity build_identity(
    const std::map<PiiField, std::string>& seed) {
  std::string missing;
  for (PiiField field : kFormFields) {
    auto it = seed.find(field);
    if (it == seed.end() || trim(it->second).empty()) {
      if (!missing.empty()) missing += ", ";
      missing += to_string(field);
    }
  }
  if (!missing.empty()) {
    throw Error("identity seed is missing: " + missing);
  }
  PlaceholderIdentity identity;
  for (const auto& [field, raw] : seed) {
    if (field == PiiField::kExternalId) continue;
    IdentityValue value;
    value.raw = raw;
    value.normalized = normalize(field, raw);
    value.meta_digest = meta_digest(value.normalized);
    value.google_digest = google_digest(value.normalized);
    identity.values_.emplace(field, std::move(value));
  }
  return identity;
}

PlaceholderIdentity default_identity() {
  return build_identity({
      {PiiField::kEmail, "Avery.Placeholder@example.org"},
      {PiiField::kPhoneNumber, "+1 (555) 010-0199"},
      {PiiField::kFirstName, "Avery"},
      {PiiField::kLastName, "Placeholder"},
      {PiiField::kCity, "Springfield"},
      {PiiField::kState, "IL"},
      {PiiField::kZipCode, "62701"},
  });
}

std::string serialize_identity(const PlaceholderIdentity& identity) {
  std::ostringstream out;
  out << "# formscope placeholder identity (synthetic values only)\n";
  for (const auto& [field, value] : identity.values()) {
    std::string name(to_string(field));
    out << name << ".raw=" << value.raw << '\n'
        << name << ".normalized=" << value.normalized << '\n'
        << name << ".meta_sha256=" << value.meta_digest << '\n'
        << name << ".google_sha256=" << value.google_digest << '\n';
  }
  return out.str();
}

PlaceholderIdentity parse_identity(std::string_view text) {
  std::map<PiiField, std::string> seed;
  std::map<std::pair<PiiField, std::string>, std::string> derived;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || trim(line).front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error("identity line " + std::to_string(line_number) +
                  ": expected key=value");
    }
    std::string key(trim(std::string_view(line).substr(0, eq)));
    std::string value = line.substr(eq + 1);
    std::string field_name = key;
    std::string attribute = "raw";
    if (auto dot = key.find('.'); dot != std::string::npos) {
      field_name = key.substr(0, dot);
      attribute = key.substr(dot + 1);
    }
    auto field = parse_pii_field(field_name);
    if (!field) {
      throw Error("identity line " + std::to_string(line_number) +
                  ": unknown field '" + field_name + "'");
    }
    if (attribute == "raw") {
      seed[*field] = value;
    } else if (attribute == "normalized" || attribute == "meta_sha256" ||
               attribute == "google_sha256") {
      derived[{*field, attribute}] = std::string(trim(value));
    } else {
      throw Error("identity line " + std::to_string(line_number) +
                  ": unknown attribute '" + attribute + "'");
    }
  }
  PlaceholderIdentity identity = build_identity(seed);
  for (const auto& [key, expected] : derived) {
    const IdentityValue* value = identity.find(key.first);
    if (!value) continue;
    const std::string& actual = key.second == "normalized" ? value->normalized
                                : key.second == "meta_sha256"
                                    ? value->meta_digest
                                    : value->google_digest;
    if (lowercase(expected) != lowercase(actual)) {
      throw Error("identity " + std::string(to_string(key.first)) + "." +
                  key.second + " does not match the recomputed value");
    }
  }
  return identity;
}

PlaceholderIdentity load_identity(const std::string& path) {
  return parse_identity(read_file(path));
}

}  // namespace formscope
