#include <doctest.h>

#include <set>

#include "survquack/rng.hpp"

using namespace survquack;

TEST_CASE("splitmix64 matches the published reference outputs")
{
    // seed 1234567, first outputs of the reference C implementation
    SplitMix64 g(1234567);
    CHECK(g() == 6457827717110365317ULL);
    CHECK(g() == 3203168211198807973ULL);
    CHECK(g() == 9817491932198370423ULL);
}

TEST_CASE("uniform stays strictly inside the unit interval")
{
    SplitMix64 g(0);
    for (int i = 0; i < 100000; ++i) {
        const double u = g.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
    // extreme raw outputs
    CHECK((0.0 + 0.5) * 0x1.0p-52 > 0.0);
    CHECK((static_cast<double>(~0ULL >> 12) + 0.5) * 0x1.0p-52 < 1.0);
    // the 53-bit variant would round its top value up to 1
    CHECK((static_cast<double>(~0ULL >> 11) + 0.5) * 0x1.0p-53 == 1.0);
}

TEST_CASE("stream seeds are pure functions of master, tag and index")
{
    CHECK(derive_stream_seed(42, "times", 7) == derive_stream_seed(42, "times", 7));
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        seen.insert(derive_stream_seed(42, "times", i));
        seen.insert(derive_stream_seed(42, "membership", i));
        seen.insert(derive_stream_seed(43, "times", i));
    }
    CHECK(seen.size() == 3000);
}

TEST_CASE("fnv1a tag hash")
{
    CHECK(tag_hash("") == 0xcbf29ce484222325ULL);
    CHECK(tag_hash("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("uniform mean and variance")
{
    SplitMix64 g = make_stream(9, "check", 0);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double u = g.uniform();
        s += u;
        s2 += u * u;
    }
    const double mean = s / n;
    CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
    CHECK(s2 / n - mean * mean == doctest::Approx(1.0 / 12).epsilon(0.02));
}
