#pragma once

#include <cstddef>
#include <span>

namespace colm {

struct Interval {
    double lower = 0.0;
    double upper = 1.0;
};

/// Wilson score interval for a binomial proportion; z = 2.5758 is 99%.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 2.5758293035489004);

/// Two-sided one-sample t-test of mean(values) == 0. Returns the p-value
/// (1 when the values have no spread and mean zero, 0 when no spread and
/// non-zero mean).
double one_sample_t_test(std::span<const double> values);

/// Least-squares slope of log(y) against log(x).
double log_log_slope(std::span<const double> x, std::span<const double> y);

}  // namespace colm
