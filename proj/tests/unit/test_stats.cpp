#include <doctest.h>

#include <cmath>
#include <vector>

#include "colm/stats.h"

using namespace colm;

TEST_CASE("wilson interval") {
    auto all = wilson_interval(500, 500);
    CHECK(all.upper == doctest::Approx(1.0));
    CHECK(all.lower > 0.98);
    auto half = wilson_interval(50, 100);
    CHECK(half.lower < 0.5);
    CHECK(half.upper > 0.5);
    CHECK(half.lower + half.upper == doctest::Approx(1.0));
    // 95% (z=1.96) check against a hand value: 8/10 -> [0.4902, 0.9433].
    auto w = wilson_interval(8, 10, 1.959963984540054);
    CHECK(w.lower == doctest::Approx(0.4902).epsilon(1e-3));
    CHECK(w.upper == doctest::Approx(0.9433).epsilon(1e-3));
}

TEST_CASE("one-sample t-test") {
    std::vector<double> x{-0.5, 0.5, 1.5, 2.5};  // mean 1, sd 1.291, t = 1.549
    CHECK(one_sample_t_test(x) == doctest::Approx(0.2191).epsilon(2e-3));
    std::vector<double> zeros(5, 0.0);
    CHECK(one_sample_t_test(zeros) == 1.0);
    std::vector<double> same(5, 2.0);
    CHECK(one_sample_t_test(same) == 0.0);
    std::vector<double> sym{-1, 1, -2, 2};
    CHECK(one_sample_t_test(sym) == doctest::Approx(1.0));
}

TEST_CASE("log-log slope") {
    std::vector<double> x{8, 16, 32, 64};
    std::vector<double> y;
    for (double b : x) y.push_back(3.0 / b);
    CHECK(log_log_slope(x, y) == doctest::Approx(-1.0));
    std::vector<double> sq;
    for (double b : x) sq.push_back(b * b);
    CHECK(log_log_slope(x, sq) == doctest::Approx(2.0));
}
