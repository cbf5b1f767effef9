#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "colm/theory.h"

using namespace colm;

TEST_CASE("single partition, single center is always covered") {
    TheoryConfig cfg;
    cfg.k = 1;
    cfg.m = 1;
    cfg.trials = 100;
    auto rep = run_theory_checks(cfg);
    CHECK(rep.find("partition_coverage").successes == 100);
    CHECK(rep.find("partition_coverage").passed);
    CHECK(rep.find("exact_medoids_in_neighborhood").trials == 100);
}

TEST_CASE("gap bound at kappa/m=1, alpha_u=2, alpha*=1") {
    TheoryConfig cfg;
    cfg.trials = 50;
    auto rep = run_theory_checks(cfg);
    CHECK(rep.gap_bound == 3.0);
    CHECK(rep.coverage_n > 0);
    CHECK(rep.neighborhood_mass > 0.0);
    CHECK(rep.neighborhood_mass <= 1.0);
    CHECK_THROWS_AS(rep.find("nope"), std::out_of_range);
    const auto dir = std::filesystem::temp_directory_path() / "colm_unit_theory";
    write_theory_report(dir, rep, DataFormat::jsonl);
    CHECK(std::filesystem::exists(dir / "theory.jsonl"));
    CHECK(std::filesystem::exists(dir / "theory_summary.json"));
}

TEST_CASE("local-evaluation sizes") {
    for (auto [k, m, eps] : {std::tuple{2ul, 2ul, 0.1}, std::tuple{1ul, 1ul, 0.5}, std::tuple{3ul, 4ul, 0.2}}) {
        const std::size_t n0 = local_eval_n0(k, m, eps);
        const double target = static_cast<double>(m * k) / (eps * eps);
        CHECK(n0 / std::log(static_cast<double>(n0)) >= target);
        if (n0 > 3) CHECK((n0 - 1) / std::log(static_cast<double>(n0 - 1)) < target);
    }
    CHECK(local_eval_sample_size(2, 2, 0.04, 0.1) >=
          static_cast<std::size_t>(std::ceil(2 * std::log(100.0) / 0.01)));
}
