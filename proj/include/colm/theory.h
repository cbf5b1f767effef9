#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "colm/config.h"
#include "colm/stats.h"

namespace colm {

struct TheoryCheck {
    std::string name;
    /// Monte-Carlo frequency, or the measured quantity for non-frequency checks.
    double value = 0.0;
    /// Frequency target or upper bound the value is compared with.
    double threshold = 0.0;
    std::size_t trials = 0;
    std::size_t successes = 0;
    /// 99% Wilson interval for frequency checks.
    Interval interval;
    bool passed = false;
    std::string detail;
};

struct TheoryReport {
    /// Dataset size prescribed for the coverage and medoid checks.
    std::size_t coverage_n = 0;
    /// beta g(alpha): probability mass of one alpha-neighborhood.
    double neighborhood_mass = 0.0;
    /// Dataset size prescribed for the local-evaluation check.
    std::size_t local_eval_n = 0;
    double gap_bound = 0.0;
    std::vector<TheoryCheck> checks;

    bool all_passed() const;
    const TheoryCheck& find(const std::string& name) const;
};

/// Smallest n >= 3 with n / ln(n) >= m k / eps^2.
std::size_t local_eval_n0(std::size_t k, std::size_t m, double epsilon);

/// max(n0, ceil(m ln(2m / delta) / eps^2)).
std::size_t local_eval_sample_size(std::size_t k, std::size_t m, double delta, double epsilon);

/// Runs every check; failures are recorded in the report, never thrown.
TheoryReport run_theory_checks(const TheoryConfig& cfg);

void write_theory_report(const std::filesystem::path& dir, const TheoryReport& report, DataFormat format);

}  // namespace colm
