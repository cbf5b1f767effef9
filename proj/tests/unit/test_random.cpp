#include <doctest.h>

#include <array>
#include <cstdint>
#include <set>

#include "colm/random.h"

using namespace colm;

// Known-answer vectors from the Random123 distribution (kat_vectors).
TEST_CASE("philox4x32-10 known answers") {
    using W = std::array<std::uint32_t, 4>;
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == W{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          W{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          W{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("sample_gaussian is deterministic and seed sensitive") {
    SeededGaussian g{42, 16};
    CHECK(g.sample() == g.sample());
    SeededGaussian other{43, 16};
    CHECK(g.sample() != other.sample());
}

TEST_CASE("sample_gaussian moments") {
    const int n = 100000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        const double x = SeededGaussian{static_cast<std::uint64_t>(i), 1}.sample()[0];
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.02);

    CounterRng rng(5);
    sum = sq = 0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    CHECK(std::abs(sum / n) < 0.02);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("CounterRng streams") {
    CounterRng a(1, 0), b(1, 0), c(1, 1);
    bool differs = false;
    for (int i = 0; i < 20; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        differs |= x != c.next_u64();
    }
    CHECK(differs);

    CounterRng r(9);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(r.uniform_index(7) < 7);
    }
}

TEST_CASE("sample_without_replacement yields distinct in-range indices") {
    CounterRng r(3);
    for (int t = 0; t < 200; ++t) {
        auto s = r.sample_without_replacement(50, 20);
        std::set<std::size_t> u(s.begin(), s.end());
        CHECK(u.size() == 20);
        CHECK(*u.rbegin() < 50);
    }
    CHECK(r.sample_without_replacement(5, 5).size() == 5);
}

TEST_CASE("mix_seed separates tags") {
    CHECK(mix_seed(1, 2, 3) == mix_seed(1, 2, 3));
    CHECK(mix_seed(1, 2, 3) != mix_seed(1, 3, 2));
    CHECK(mix_seed(1, 2, 3) != mix_seed(2, 2, 3));
}
