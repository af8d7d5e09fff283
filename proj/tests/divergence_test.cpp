#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "infodist/divergence.hpp"
#include "infodist/markov.hpp"
#include "helpers.hpp"

using namespace infodist;
using Catch::Approx;
using testutil::bin;
using testutil::str;
using testutil::throws_code;

namespace {

SymbolString random_string(const AlphabetPtr& a, std::size_t n, std::mt19937_64& rng) {
    std::vector<std::uint32_t> data(n);
    for (auto& v : data) v = static_cast<std::uint32_t>(rng() % a->size());
    return SymbolString(a, std::move(data));
}

bool occurs_in(std::span<const std::uint32_t> hay, std::span<const std::uint32_t> needle) {
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

} // namespace

TEST_CASE("cross-parsing against a reference") {
    const auto ab = make_alphabet("ab");
    const auto x = encode_string("abab", ab);

    SECTION("a string cross-parses against itself in one phrase") {
        const auto p = cross_parse(x, x);
        REQUIRE(p.phrase_count == 1);
        REQUIRE(p.phrases == std::vector<std::pair<std::size_t, std::size_t>>{{0, 4}});
    }
    SECTION("phrases are maximal prefixes found in the reference") {
        const auto p = cross_parse(encode_string("aabb", ab), x);
        REQUIRE(p.phrase_count == 3);  // "a", "ab", "b"
        REQUIRE(p.phrases == std::vector<std::pair<std::size_t, std::size_t>>{
                                 {0, 1}, {1, 2}, {3, 1}});
    }
    SECTION("symbols absent from the reference become single-symbol phrases") {
        const auto abc = make_alphabet("abc");
        const auto p = cross_parse(encode_string("ccc", abc), encode_string("abab", abc));
        REQUIRE(p.phrase_count == 3);
    }
    SECTION("empty input is zero phrases; empty reference is an error") {
        REQUIRE(cross_parse(SymbolString(ab, {}), x).phrase_count == 0);
        REQUIRE(throws_code(errc::empty_reference,
                            [&] { cross_parse(x, SymbolString(ab, {})); }));
    }
    SECTION("alphabets must match") {
        REQUIRE(throws_code(errc::alphabet_mismatch,
                            [&] { cross_parse(x, str(bin(), "0101")); }));
    }
    SECTION("phrases tile z and occur in x unless they are novel symbols") {
        std::mt19937_64 rng(41);
        for (int trial = 0; trial < 1000; ++trial) {
            const auto a = trial % 2 ? bin() : testutil::quad();
            const auto zr = random_string(a, rng() % 120, rng);
            const auto xr = random_string(a, 1 + rng() % 120, rng);
            const auto p = cross_parse(zr, xr);
            std::size_t pos = 0;
            for (const auto& [start, len] : p.phrases) {
                REQUIRE(start == pos);
                REQUIRE(len >= 1);
                const auto phrase = zr.data().subspan(start, len);
                if (len >= 2) {
                    REQUIRE(occurs_in(xr.data(), phrase));
                } else if (!occurs_in(xr.data(), phrase)) {
                    // Novel symbol: the greedy match found nothing, length 1
                    // is forced.
                    REQUIRE(len == 1);
                }
                pos += len;
            }
            REQUIRE(pos == zr.size());
        }
    }
    SECTION("extending the reference never increases the phrase count") {
        std::mt19937_64 rng(42);
        for (int trial = 0; trial < 300; ++trial) {
            const auto a = testutil::quad();
            const auto zr = random_string(a, 1 + rng() % 100, rng);
            const auto xr = random_string(a, 1 + rng() % 100, rng);
            const auto pre = random_string(a, rng() % 30, rng);
            const auto post = random_string(a, rng() % 30, rng);
            const auto x2 = concat(concat(pre, xr), post);
            REQUIRE(cross_parse(zr, x2).phrase_count <= cross_parse(zr, xr).phrase_count);
        }
    }
}

TEST_CASE("cross-parsing divergence estimate") {
    const auto ab = make_alphabet("ab");
    const auto x = encode_string("abab", ab);

    SECTION("identical short strings clamp to zero") {
        const auto d = zm_divergence(x, x);
        REQUIRE(d.value == 0.0);
        REQUIRE(d.clamped);
        // (1 * log2(4) - 3 * log2(3)) / 4
        REQUIRE(d.raw == Approx(-0.6887218755408671).margin(1e-15));
        REQUIRE(d.method == "zm");
    }
    SECTION("clamping can be disabled") {
        const auto d = zm_divergence(x, x, false);
        REQUIRE_FALSE(d.clamped);
        REQUIRE(d.value == d.raw);
        REQUIRE(d.value < 0.0);
    }
    SECTION("input length guard") {
        REQUIRE(throws_code(errc::input_too_short,
                            [&] { zm_divergence(encode_string("a", ab), x); }));
    }
    SECTION("same source scores lower than a different source") {
        MarkovSource unif(bin(), 0, {0.5, 0.5});
        MarkovSource skew(bin(), 0, {0.9, 0.1});
        for (std::uint64_t seed = 50; seed < 55; ++seed) {
            const auto z = sample(unif, 100000, seed);
            const auto same = zm_divergence(z, sample(unif, 100000, seed + 100));
            const auto diff = zm_divergence(z, sample(skew, 100000, seed + 200));
            REQUIRE(diff.value > same.value);
        }
    }
}

TEST_CASE("cross-coding divergence estimate") {
    MarkovSource unif(bin(), 0, {0.5, 0.5});
    MarkovSource skew(bin(), 0, {0.9, 0.1});

    SECTION("same source is near zero and may dip below it") {
        double mean = 0.0;
        for (std::uint64_t seed = 60; seed < 90; ++seed)
            mean += cross_code_divergence(sample(unif, 30000, seed),
                                          sample(unif, 30000, seed + 500), 0);
        mean /= 30.0;
        REQUIRE(std::abs(mean) < 0.05);
    }
    SECTION("recovers the exact divergence in both directions") {
        const double d_us = exact_divergence_rate(unif, skew);   // 0.7370
        const double d_su = exact_divergence_rate(skew, unif);   // 0.5310
        double m_us = 0.0, m_su = 0.0;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            m_us += cross_code_divergence(sample(unif, 100000, seed),
                                          sample(skew, 100000, seed + 50), 0);
            m_su += cross_code_divergence(sample(skew, 100000, seed),
                                          sample(unif, 100000, seed + 50), 0);
        }
        m_us /= 5.0;
        m_su /= 5.0;
        REQUIRE(m_us == Approx(d_us).margin(0.05));
        REQUIRE(m_su == Approx(d_su).margin(0.05));
        // The two directions stay distinguishable.
        REQUIRE(m_us - m_su > 0.15);
    }
    SECTION("guards") {
        REQUIRE(throws_code(errc::empty_reference, [&] {
            cross_code_divergence(str(bin(), "01"), SymbolString(bin(), {}), 0);
        }));
        REQUIRE(throws_code(errc::input_too_short, [&] {
            cross_code_divergence(SymbolString(bin(), {}), str(bin(), "01"), 0);
        }));
        REQUIRE(throws_code(errc::alphabet_mismatch, [&] {
            cross_code_divergence(str(bin(), "01"), str(make_alphabet("xy"), "xy"), 0);
        }));
    }
}

TEST_CASE("divergence estimate dispatch") {
    const auto z = str(bin(), "0101");
    SECTION("method ids") {
        REQUIRE(divergence_estimate(z, z, DivergenceMethod::zm, 0).method == "zm");
        REQUIRE(divergence_estimate(z, z, DivergenceMethod::cross_code, 1).method ==
                "cross-code(k=1)");
    }
    SECTION("cross-code respects the clamp switch") {
        MarkovSource unif(bin(), 0, {0.5, 0.5});
        // Find a seed pair whose raw cross-code estimate is negative.
        for (std::uint64_t seed = 0; seed < 64; ++seed) {
            const auto a = sample(unif, 500, seed), b = sample(unif, 500, seed + 900);
            const double raw = cross_code_divergence(a, b, 0);
            if (raw < 0.0) {
                const auto clamped = divergence_estimate(a, b, DivergenceMethod::cross_code, 0);
                REQUIRE(clamped.value == 0.0);
                REQUIRE(clamped.clamped);
                REQUIRE(clamped.raw == raw);
                const auto open =
                    divergence_estimate(a, b, DivergenceMethod::cross_code, 0, false);
                REQUIRE(open.value == raw);
                return;
            }
        }
        FAIL("no negative raw estimate found in 64 seed pairs");
    }
    SECTION("estimators pick their natural method") {
        REQUIRE(matched_divergence_method(EstimatorSpec::lz78()) == DivergenceMethod::zm);
        REQUIRE(matched_divergence_method(EstimatorSpec::kt(2)) == DivergenceMethod::cross_code);
        REQUIRE(throws_code(errc::usage, [] {
            matched_divergence_method(EstimatorSpec::external(ExternalCompressor{"cp {in} {out}"}));
        }));
    }
}

TEST_CASE("concatenation measurement") {
    MarkovSource unif(bin(), 0, {0.5, 0.5});
    MarkovSource skew(bin(), 0, {0.9, 0.1});

    SECTION("input contract") {
        REQUIRE(throws_code(errc::length_mismatch, [&] {
            concat_conjecture(str(bin(), "0101"), str(bin(), "01"), EstimatorSpec::kt(0));
        }));
        REQUIRE(throws_code(errc::alphabet_mismatch, [&] {
            concat_conjecture(str(bin(), "01"), str(make_alphabet("xy"), "xy"),
                              EstimatorSpec::kt(0));
        }));
        REQUIRE(throws_code(errc::usage, [&] {
            concat_conjecture(str(bin(), "01"), str(bin(), "10"),
                              EstimatorSpec::external(ExternalCompressor{"cp {in} {out}"}));
        }));
    }
    SECTION("same source: measured rate is near twice the entropy") {
        const auto x = sample(unif, 50000, 70), y = sample(unif, 50000, 71);
        const auto r = concat_conjecture(x, y, EstimatorSpec::kt(0));
        REQUIRE(r.measured_rate == Approx(2.0).margin(0.05));
        REQUIRE(r.excess == r.measured_rate - r.baseline_rate);
        REQUIRE(std::abs(r.excess) < 0.05);
        REQUIRE(r.estimator_id == "kt(k=0)");
    }
    SECTION("diverging sources: the excess tracks the divergence") {
        const auto x = sample(unif, 50000, 72), y = sample(skew, 50000, 73);
        const auto r = concat_conjecture(x, y, EstimatorSpec::kt(0));
        const double d = exact_divergence_rate(skew, unif);
        REQUIRE(r.excess > 0.05);
        REQUIRE(r.excess < d + 0.05);
    }
    SECTION("caller-supplied reference rates define the prediction") {
        const auto x = sample(unif, 10000, 74), y = sample(skew, 10000, 75);
        const ReferenceRates ref{1.0, 0.4689955935892812, 0.25};
        const auto r = concat_conjecture(x, y, EstimatorSpec::kt(0), ref);
        REQUIRE(r.baseline_rate == Approx(1.4689955935892812).margin(1e-15));
        REQUIRE(r.predicted_rate == Approx(1.7189955935892812).margin(1e-15));
    }
    SECTION("parse estimator path") {
        const auto x = sample(unif, 20000, 76), y = sample(unif, 20000, 77);
        const auto r = concat_conjecture(x, y, EstimatorSpec::lz78());
        REQUIRE(r.estimator_id == "lz78");
        REQUIRE(r.measured_rate > 0.0);
        REQUIRE(r.predicted_rate >= r.baseline_rate);  // zm value is clamped
    }
}
