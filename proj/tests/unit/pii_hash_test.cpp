#include <random>

#include "doctest.h"
#include "formscope/pii_hash.hpp"

using namespace formscope;

// Oracle values frozen from Python hashlib/base64.
TEST_CASE("sha256 and base64 match the reference implementation") {
  CHECK(sha256_hex("test@example.com") ==
        "973dfe463ec85785f5f95af5ba3906eedb2d931c24e69824a89ea65dba4e813b");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(base64_encode("test@example.com") == "dGVzdEBleGFtcGxlLmNvbQ==");
  CHECK(base64_encode("abc") == "YWJj");
  CHECK(base64_encode("jos\xc3\xa9@example.org") == "am9zw6lAZXhhbXBsZS5vcmc=");
}

TEST_CASE("provider digests") {
  CHECK(meta_digest("test@example.com") ==
        "973dfe463ec85785f5f95af5ba3906eedb2d931c24e69824a89ea65dba4e813b");
  CHECK(google_digest("test@example.com") ==
        "7e0060617a7404dacc6eb337c40cb735879552e2ff29db72d43be828845becee");
  CHECK(google_digest("abc") == "35d95694d3f160215db293c7899daa5907837838fb4b8119ed713e32446c1266");
  CHECK(meta_digest("jos\xc3\xa9@example.org") ==
        "55303a7975b541f6d6d4c6efb8fcc2d47860c84d214c16be93ff39371eca8123");
  CHECK(google_digest("jos\xc3\xa9@example.org") ==
        "d0f05fd55c1ba256f7b997dca94e4b8a531286f5d3be550783ad40003734777b");
}

TEST_CASE("base64 round-trips arbitrary bytes") {
  std::mt19937_64 rng(1);
  for (int n = 0; n < 300; ++n) {
    std::string bytes(static_cast<std::size_t>(n % 97), '\0');
    for (auto& c : bytes) c = static_cast<char>(rng() & 0xff);
    CHECK(base64_decode(base64_encode(bytes)) == bytes);
  }
  CHECK_THROWS_AS(base64_decode("abc"), Error);
}

TEST_CASE("normalization") {
  CHECK(normalize(PiiField::kEmail, "  Test@Example.COM ") == "test@example.com");
  CHECK(normalize(PiiField::kPhoneNumber, "+1 (555) 010-0199") == "15550100199");
  CHECK(normalize(PiiField::kFirstName, "  Mary   Ann ") == "mary ann");
  CHECK(normalize(PiiField::kCity, "New\tYork") == "new york");
  CHECK(normalize(PiiField::kZipCode, " 02134-1234 ") == "02134-1234");
  CHECK_THROWS_AS(normalize(PiiField::kEmail, "   "), Error);
  CHECK_THROWS_AS(normalize(PiiField::kPhoneNumber, "n/a"), Error);
}

TEST_CASE("normalization is idempotent") {
  const char* samples[] = {" A b ", "x@Y.z", "+44 20 7946 0000", "Zip 1", "\tTabs\tHere "};
  for (PiiField f : kFormFields) {
    for (const char* s : samples) {
      std::string once;
      try {
        once = normalize(f, s);
      } catch (const Error&) {
        continue;
      }
      CHECK(normalize(f, once) == once);
    }
  }
}

TEST_CASE("default identity digests agree with the reference") {
  const auto id = default_identity();
  CHECK(id.values().size() == 7);
  CHECK(id.digest(Provider::kMeta, PiiField::kEmail) ==
        "0f2d0c877264696aaba0c15d0204b2bfe1300691b61c6481ce4136c7e0a6eba0");
  CHECK(id.digest(Provider::kGoogle, PiiField::kEmail) ==
        "2612ad0e2840fa038295bc4db029687d4af79d52e31fdb29f079c31dc7b1a2cd");
  CHECK(id.digest(Provider::kMeta, PiiField::kPhoneNumber) ==
        "90be998a6e4b5bec4f18e14bc56a618ba6dd57100b89276067e3a77ff7140b4a");
  for (const auto& [field, value] : id.values()) {
    CHECK(value.meta_digest == meta_digest(value.normalized));
    CHECK(value.google_digest == google_digest(value.normalized));
  }
  CHECK(id.find(PiiField::kExternalId) == nullptr);
}

TEST_CASE("identity file round-trip") {
  const auto id = default_identity();
  CHECK(parse_identity(serialize_identity(id)) == id);
  std::string raw_only =
      "# comment\nemail=a@b.c\nphone_number.raw=555 1234\nfirst_name=A\nlast_name=B\n"
      "city=C\nstate=D\nzip_code=12345\n";
  auto parsed = parse_identity(raw_only);
  CHECK(parsed.at(PiiField::kPhoneNumber).normalized == "5551234");
}

TEST_CASE("identity files are checked") {
  std::string text = serialize_identity(default_identity());
  auto pos = text.find("email.meta_sha256=") + 18;
  text[pos] = text[pos] == '0' ? '1' : '0';
  CHECK_THROWS_AS(parse_identity(text), Error);
  CHECK_THROWS_AS(build_identity({{PiiField::kEmail, "a@b.c"}}), Error);
  CHECK_THROWS_AS(parse_identity("email=a@b.c\nbogus_field=1\n"), Error);
}
