#include <doctest.h>

#include "etdi/canonical.hpp"
#include "etdi/errors.hpp"

#include "helpers.hpp"

using etdi::Json;

TEST_CASE("sha256 matches the standard test vectors") {
    // FIPS 180-2 / RFC 6234 vectors
    CHECK(etdi::sha256_hex(std::string("")) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(etdi::sha256_hex(std::string("abc")) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(etdi::sha256_hex(std::string("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")) ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("base64 matches the RFC 4648 test vectors") {
    const std::vector<std::pair<std::string, std::string>> vectors = {
        {"", ""},       {"f", "Zg=="},     {"fo", "Zm8="},     {"foo", "Zm9v"},
        {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="}, {"foobar", "Zm9vYmFy"},
    };
    for (const auto& [plain, encoded] : vectors) {
        const std::vector<std::uint8_t> bytes(plain.begin(), plain.end());
        CHECK(etdi::base64_encode(bytes.data(), bytes.size()) == encoded);
        CHECK(etdi::base64_decode(encoded) == bytes);
    }
}

TEST_CASE("base64url is unpadded and url-safe") {
    // 0xfb 0xef 0xff encodes to "++//" in standard base64, "--__" url-safe
    const std::vector<std::uint8_t> bytes = {0xfb, 0xef, 0xbe};
    const std::string url = etdi::base64url_encode(bytes.data(), bytes.size());
    CHECK(url.find('+') == std::string::npos);
    CHECK(url.find('/') == std::string::npos);
    CHECK(url.find('=') == std::string::npos);
    CHECK(etdi::base64url_decode(url) == bytes);
    // one trailing byte => padding would appear in the standard variant
    const std::vector<std::uint8_t> one = {0x66};
    CHECK(etdi::base64url_encode(one.data(), one.size()) == "Zg");
}

TEST_CASE("base64 round-trips random byte strings of every small length") {
    testutil::Rng rng(0xb64);
    for (int len = 0; len <= 64; ++len) {
        std::vector<std::uint8_t> bytes(static_cast<std::size_t>(len));
        for (auto& b : bytes) b = static_cast<std::uint8_t>(testutil::rand_int(rng, 0, 255));
        CHECK(etdi::base64_decode(etdi::base64_encode(bytes.data(), bytes.size())) == bytes);
        CHECK(etdi::base64url_decode(etdi::base64url_encode(bytes.data(), bytes.size())) == bytes);
    }
    CHECK_THROWS_AS(etdi::base64_decode("!not base64!"), etdi::EncodingError);
}

TEST_CASE("canonical dump is independent of key insertion order") {
    const Json a = Json::parse(R"({"zeta":1,"alpha":{"b":2,"a":[1,2,3]},"mid":"x"})");
    const Json b = Json::parse(R"({"alpha":{"a":[1,2,3],"b":2},"mid":"x","zeta":1})");
    CHECK(etdi::canonical_dump(a) == etdi::canonical_dump(b));
    CHECK(etdi::canonical_dump(a) == R"({"alpha":{"a":[1,2,3],"b":2},"mid":"x","zeta":1})");
}

TEST_CASE("canonical dump uses minimal whitespace and sorted keys") {
    const Json doc = Json::parse(R"({ "b" : [ 1 , 2 ],  "a" : { "y": true, "x": null } })");
    const std::string dumped = etdi::canonical_dump(doc);
    CHECK(dumped == R"({"a":{"x":null,"y":true},"b":[1,2]})");
    // round-trip stability: parse(dump(x)) dumps identically
    CHECK(etdi::canonical_dump(Json::parse(dumped)) == dumped);
}

TEST_CASE("canonical dump round-trips randomized documents stably") {
    testutil::Rng rng(0xcafe);
    // random nested docs assembled from scalars, arrays, and objects
    std::function<Json(int)> gen = [&](int depth) -> Json {
        if (depth >= 3 || testutil::coin(rng, 0.5)) {
            switch (testutil::rand_int(rng, 0, 3)) {
                case 0: return Json(testutil::random_word(rng));
                case 1: return Json(testutil::rand_int(rng, -1000, 1000));
                case 2: return Json(testutil::coin(rng));
                default: return Json();
            }
        }
        if (testutil::coin(rng)) {
            Json arr = Json::array();
            for (int i = testutil::rand_int(rng, 0, 4); i > 0; --i) arr.push_back(gen(depth + 1));
            return arr;
        }
        Json obj = Json::object();
        for (int i = testutil::rand_int(rng, 0, 4); i > 0; --i)
            obj[testutil::random_word(rng)] = gen(depth + 1);
        return obj;
    };
    for (int i = 0; i < 500; ++i) {
        const Json doc = gen(0);
        const std::string once = etdi::canonical_dump(doc);
        CHECK(etdi::canonical_dump(Json::parse(once)) == once);
    }
}

TEST_CASE("canonical dump rejects what cannot be canonicalized") {
    CHECK_THROWS_AS(etdi::canonical_dump(Json(std::numeric_limits<double>::infinity())),
                    etdi::EncodingError);
    CHECK_THROWS_AS(etdi::canonical_dump(Json(std::nan(""))), etdi::EncodingError);
    Json bad_utf8;
    bad_utf8["key"] = std::string("\xff\xfe broken");
    CHECK_THROWS_AS(etdi::canonical_dump(bad_utf8), etdi::EncodingError);
}

TEST_CASE("canonical bytes equal the dumped string bytes") {
    const Json doc = Json::parse(R"({"k":[1,"two",false]})");
    const std::string text = etdi::canonical_dump(doc);
    const auto bytes = etdi::canonical_bytes(doc);
    REQUIRE(bytes.size() == text.size());
    CHECK(std::equal(bytes.begin(), bytes.end(),
                     reinterpret_cast<const std::uint8_t*>(text.data())));
}

TEST_CASE("is_lower_hex enforces length and alphabet") {
    CHECK(etdi::is_lower_hex("00ff", 4));
    CHECK_FALSE(etdi::is_lower_hex("00FF", 4));
    CHECK_FALSE(etdi::is_lower_hex("00f", 4));
    CHECK_FALSE(etdi::is_lower_hex("00fg", 4));
}
