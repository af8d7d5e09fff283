#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "infodist/alphabet.hpp"
#include "helpers.hpp"

using namespace infodist;
using testutil::throws_code;

TEST_CASE("alphabet construction and lookup") {
    auto a = make_alphabet("abc");
    REQUIRE(a->size() == 3);
    REQUIRE(a->token(0) == "a");
    REQUIRE(a->token(2) == "c");
    REQUIRE(a->find("b") == 1);
    REQUIRE(a->find("z") == -1);
    REQUIRE(*a == *make_alphabet("abc"));
    REQUIRE_FALSE(*a == *make_alphabet("acb"));

    REQUIRE(throws_code(errc::too_small, [] { make_alphabet("a"); }));
    REQUIRE(throws_code(errc::duplicate_symbol, [] { make_alphabet("aba"); }));

    auto words = make_alphabet(std::vector<std::string>{"lo", "hi"});
    REQUIRE(words->find("hi") == 1);
    REQUIRE(words->find("h") == -1);
}

TEST_CASE("encode_string maps tokens to indices") {
    auto a = make_alphabet("ab");
    auto s = encode_string("abba", a);
    REQUIRE(s.size() == 4);
    REQUIRE(s[0] == 0);
    REQUIRE(s[1] == 1);
    REQUIRE(s[3] == 0);
    REQUIRE(s.to_text() == "abba");

    REQUIRE(throws_code(errc::unknown_symbol, [&] { encode_string("abc", a); }));

    const std::vector<std::string> toks{"hi", "lo", "hi"};
    auto words = make_alphabet(std::vector<std::string>{"lo", "hi"});
    auto w = encode_string(std::span<const std::string>(toks), words);
    REQUIRE(w.size() == 3);
    REQUIRE(w[0] == 1);
    REQUIRE(w[1] == 0);
}

TEST_CASE("pairing uses x*|A|+y layout and truncates to the shorter input") {
    auto a = make_alphabet("ab");
    auto x = encode_string("abab", a);
    auto y = encode_string("bba", a);

    auto s = pair_supersymbols(x, y, PairPolicy::truncate_to_min);
    REQUIRE(s.size() == 3);
    REQUIRE(s.truncated() == 1);
    REQUIRE(s.data()[0] == 0 * 2 + 1);
    REQUIRE(s.data()[1] == 1 * 2 + 1);
    REQUIRE(s.data()[2] == 0 * 2 + 0);
    REQUIRE(s.decode(1) == std::pair<std::uint32_t, std::uint32_t>{1, 1});

    REQUIRE(throws_code(errc::length_mismatch,
                        [&] { pair_supersymbols(x, y, PairPolicy::strict); }));

    auto z = encode_string("baab", a);
    REQUIRE_NOTHROW(pair_supersymbols(x, z, PairPolicy::strict));

    auto other = make_alphabet("xy");
    auto w = encode_string("xy", other);
    REQUIRE(throws_code(errc::alphabet_mismatch, [&] { pair_supersymbols(x, w); }));
}

TEST_CASE("pairing round-trips through the projections") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const auto asize = 2 + rng() % 5;
        std::vector<std::string> toks;
        for (std::uint64_t i = 0; i < asize; ++i) toks.push_back("t" + std::to_string(i));
        auto a = make_alphabet(toks);
        const std::size_t nx = rng() % 40, ny = rng() % 40;
        std::vector<std::uint32_t> dx(nx), dy(ny);
        for (auto& v : dx) v = static_cast<std::uint32_t>(rng() % asize);
        for (auto& v : dy) v = static_cast<std::uint32_t>(rng() % asize);
        SymbolString x(a, dx), y(a, dy);

        auto s = pair_supersymbols(x, y);
        auto px = project_first(s), py = project_second(s);
        const std::size_t n = std::min(nx, ny);
        REQUIRE(px.size() == n);
        REQUIRE(py.size() == n);
        for (std::size_t t = 0; t < n; ++t) {
            REQUIRE(px[t] == x[t]);
            REQUIRE(py[t] == y[t]);
        }
    }
}

TEST_CASE("product alphabet token order matches the pair index") {
    auto a = make_alphabet("ab");
    auto prod = make_product_alphabet(a);
    REQUIRE(prod->size() == 4);
    REQUIRE(prod->token(0) == "a|a");
    REQUIRE(prod->token(1) == "a|b");
    REQUIRE(prod->token(2) == "b|a");
    REQUIRE(prod->token(3) == "b|b");
}

TEST_CASE("concat preserves order and rejects mixed alphabets") {
    auto a = make_alphabet("ab");
    auto s = concat(encode_string("ab", a), encode_string("ba", a));
    REQUIRE(s.to_text() == "abba");
    auto other = make_alphabet("ba");
    REQUIRE(throws_code(errc::alphabet_mismatch,
                        [&] { concat(encode_string("ab", a), encode_string("ab", other)); }));
}

TEST_CASE("symbol strings validate their indices") {
    auto a = make_alphabet("ab");
    REQUIRE(throws_code(errc::unknown_symbol,
                        [&] { SymbolString(a, std::vector<std::uint32_t>{0, 2}); }));
    REQUIRE(SymbolString(a, {}).empty());
}
