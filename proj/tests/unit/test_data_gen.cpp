#include <doctest.h>

#include <cmath>
#include <vector>

#include "colm/data_gen.h"
#include "colm/errors.h"
#include "colm/random.h"
#include "colm/stats.h"

using namespace colm;

TEST_CASE("single source, single center, no outliers stays inside the ball") {
    MixtureSpec spec;
    spec.num_sources = 1;
    spec.source_sizes = {500};
    spec.centers_per_source = 1;
    spec.feature_dim = 5;
    spec.seed = 3;
    auto g = generate(spec);
    REQUIRE(g.dataset.size() == 500);
    for (const auto& ex : g.dataset.examples) CHECK(l2_distance(ex.features, g.truth.centers[0]) <= 1.0);
}

TEST_CASE("generation is a pure function of the spec") {
    MixtureSpec spec;
    spec.largest_source = 200;
    spec.imbalance_ratio = 20;
    spec.outliers = 7;
    spec.seed = 11;
    auto a = generate(spec), b = generate(spec);
    REQUIRE(a.dataset.size() == b.dataset.size());
    for (std::size_t i = 0; i < a.dataset.size(); ++i) {
        CHECK(a.dataset.examples[i].features == b.dataset.examples[i].features);
        CHECK(a.dataset.examples[i].label == b.dataset.examples[i].label);
    }
    spec.seed = 12;
    CHECK(generate(spec).dataset.examples[0].features != a.dataset.examples[0].features);
}

TEST_CASE("source sizes, imbalance ratio and planted-structure audit") {
    MixtureSpec spec;
    spec.num_sources = 10;
    spec.largest_source = 2000;
    spec.imbalance_ratio = 100;
    spec.outliers = 40;
    spec.seed = 5;
    auto g = generate(spec);
    auto sizes = spec.resolved_sizes();
    CHECK(sizes.front() == 2000);
    CHECK(sizes.back() == 20);
    auto hist = g.dataset.source_sizes();
    for (std::size_t q = 0; q < sizes.size(); ++q) CHECK(hist.at(static_cast<int>(q)) == sizes[q]);

    std::size_t inside = 0, outliers = 0;
    for (std::size_t i = 0; i < g.dataset.size(); ++i) {
        const auto& x = g.dataset.examples[i].features;
        bool near = false;
        for (const auto& c : g.truth.centers) near |= l2_distance(x, c) <= spec.dense_radius;
        inside += near;
        if (g.truth.is_outlier[i]) {
            ++outliers;
            const double r = l2_distance(x, g.truth.centers[g.truth.example_center[i]]);
            CHECK(r > spec.dense_radius);
            CHECK(r <= spec.outlier_radius + 1e-12);
            CHECK(g.truth.center_source[g.truth.example_center[i]] == g.dataset.examples[i].source_id);
        }
    }
    CHECK(outliers == 40);
    CHECK(inside == g.dataset.size() - 40);
}

TEST_CASE("labels are learnable-ish: noise-free shared rule is a deterministic function of x") {
    MixtureSpec spec;
    spec.num_sources = 2;
    spec.largest_source = 100;
    spec.imbalance_ratio = 2;
    spec.label_noise = 0.0;
    spec.num_classes = 3;
    auto g = generate(spec);
    std::vector<std::size_t> seen(3, 0);
    for (const auto& ex : g.dataset.examples) {
        CHECK(ex.label < 3);
        ++seen[ex.label];
    }
    CHECK(g.dataset.num_classes == 3);
}

TEST_CASE("infeasible geometry and invalid specs are rejected") {
    MixtureSpec spec;
    spec.num_sources = 1;
    spec.source_sizes = {10};
    spec.centers_per_source = 2;
    spec.feature_dim = 2;
    spec.centers = {DenseVector{0.0, 0.0}, DenseVector{1.5, 0.0}};
    CHECK_THROWS_AS(generate(spec), ConfigError);

    MixtureSpec bad;
    bad.outlier_radius = 0.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = MixtureSpec{};
    bad.source_sizes = {1, 2};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = MixtureSpec{};
    bad.num_classes = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = MixtureSpec{};
    bad.center_spread = 0.01;
    bad.num_sources = 3;
    CHECK_THROWS_AS(generate(bad), ConfigError);
}

TEST_CASE("ball volume and mass helpers") {
    CHECK(ball_volume(2, 1.0) == doctest::Approx(M_PI));
    CHECK(ball_volume(3, 2.0) == doctest::Approx(4.0 / 3.0 * M_PI * 8));
    MixtureSpec spec;
    spec.feature_dim = 2;
    CHECK(dense_ball_mass(spec, 1.0) == 1.0);
    CHECK(dense_ball_mass(spec, 0.0) == 0.0);
    // 2-D: chi-squared with 2 dof has cdf 1 - exp(-x/2).
    const double s2 = spec.coordinate_sigma() * spec.coordinate_sigma();
    const double expect = (1 - std::exp(-0.25 / (2 * s2))) / (1 - std::exp(-1.0 / (2 * s2)));
    CHECK(dense_ball_mass(spec, 0.5) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(coverage_sample_size(2, 2, 0.04, 1.0) == static_cast<std::size_t>(std::ceil(8 * std::log(100.0))));
    CHECK(coverage_sample_size(1, 1, 0.5, 1.0) == 2);
}

TEST_CASE("coverage sizing: random 2-way partitions hit both neighborhoods") {
    const std::size_t k = 2, m = 2;
    const double delta = 0.04, alpha = 0.5;
    MixtureSpec spec;
    spec.num_sources = 1;
    spec.centers_per_source = k;
    spec.feature_dim = 2;
    spec.center_spread = 4.0;
    const double mass = dense_ball_mass(spec, alpha) / static_cast<double>(k);
    const std::size_t n = coverage_sample_size(k, m, delta, mass);
    spec.source_sizes = {n};

    std::size_t ok = 0;
    const std::size_t trials = 500;
    for (std::size_t t = 0; t < trials; ++t) {
        spec.seed = 1000 + t;
        auto g = generate(spec);
        CounterRng rng(t, 77);
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        rng.shuffle(order);
        bool all = true;
        for (std::size_t part = 0; part < m; ++part) {
            std::vector<bool> hit(k, false);
            for (std::size_t i = part; i < n; i += m) {
                const auto& x = g.dataset.examples[order[i]].features;
                for (std::size_t c = 0; c < k; ++c) hit[c] = hit[c] || l2_distance(x, g.truth.centers[c]) <= alpha;
            }
            for (bool h : hit) all = all && h;
        }
        ok += all;
    }
    CHECK(wilson_interval(ok, trials).upper >= 1 - delta);
}
