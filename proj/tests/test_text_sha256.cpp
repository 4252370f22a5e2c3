#include <doctest.h>

#include <random>

#include "testforge/sha256.hpp"
#include "testforge/text.hpp"

using namespace testforge;

TEST_SUITE_BEGIN("text_sha256");

TEST_CASE("sha256 matches known vectors") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
    // block-boundary lengths
    CHECK(sha256_hex(std::string(55, 'a')) ==
          "9f4390f8d30c2dd92ec9f095b65e2b9ae9b0a925a5258e241c9f1e910f734318");
    CHECK(sha256_hex(std::string(64, 'a')) ==
          "ffe054fe7ae0cb6dc65c3af9b61d5209f439851db43d0ba5997337df154668eb");
}

TEST_CASE("base64 round-trips arbitrary bytes") {
    std::mt19937 rng(7);
    for (int i = 0; i < 200; ++i) {
        std::string bytes;
        size_t len = rng() % 60;
        for (size_t k = 0; k < len; ++k) bytes.push_back(static_cast<char>(rng() & 0xff));
        CHECK(base64_decode(base64_encode(bytes)) == bytes);
    }
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("fo") == "Zm8=");
    CHECK(base64_encode("foo") == "Zm9v");
}

TEST_CASE("utf8 validation") {
    CHECK(is_valid_utf8("plain ascii"));
    CHECK(is_valid_utf8("caf\xC3\xA9"));
    CHECK_FALSE(is_valid_utf8("\xff\xfe"));
    CHECK_FALSE(is_valid_utf8("trailing\xC3"));
    CHECK_FALSE(is_valid_utf8("\xC0\xAF"));  // overlong
}

TEST_CASE("strip_trailing_whitespace normalizes line ends") {
    CHECK(strip_trailing_whitespace("a \nb\t\n") == "a\nb");
    CHECK(strip_trailing_whitespace("a\n\n\n") == "a");
    CHECK(strip_trailing_whitespace("") == "");
    CHECK(strip_trailing_whitespace("  mid  word  \n") == "  mid  word");
    CHECK(strip_trailing_whitespace("x\r\n") == "x");
}

TEST_CASE("split_lines keeps empty segments") {
    auto lines = split_lines("a\n\nb");
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "a");
    CHECK(lines[1] == "");
    CHECK(lines[2] == "b");
}

TEST_SUITE_END();
