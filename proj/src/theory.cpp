#include "colm/theory.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "colm/data_gen.h"
#include "colm/facility_location.h"
#include "colm/harness.h"
#include "colm/random.h"

namespace colm {

bool TheoryReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const TheoryCheck& c) { return c.passed; });
}

const TheoryCheck& TheoryReport::find(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) return c;
    }
    throw std::out_of_range("no theory check named " + name);
}

std::size_t local_eval_n0(std::size_t k, std::size_t m, double epsilon) {
    const double target = static_cast<double>(m * k) / (epsilon * epsilon);
    auto ok = [&](std::size_t n) { return static_cast<double>(n) / std::log(static_cast<double>(n)) >= target; };
    // n / ln n is increasing for n >= 3.
    std::size_t hi = 3;
    while (!ok(hi)) hi *= 2;
    std::size_t lo = std::max<std::size_t>(3, hi / 2);
    if (ok(lo)) return lo;
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        (ok(mid) ? hi : lo) = mid;
    }
    return hi;
}

std::size_t local_eval_sample_size(std::size_t k, std::size_t m, double delta, double epsilon) {
    const double hoeffding = static_cast<double>(m) * std::log(2.0 * static_cast<double>(m) / delta) /
                             (epsilon * epsilon);
    return std::max(local_eval_n0(k, m, epsilon), static_cast<std::size_t>(std::ceil(hoeffding)));
}

namespace {

MixtureSpec base_spec(const TheoryConfig& cfg, std::size_t centers, std::size_t n, std::size_t outliers) {
    MixtureSpec s;
    s.num_sources = 1;
    s.source_sizes = {n};
    s.centers_per_source = centers;
    s.dense_radius = cfg.alpha_star;
    s.dense_scale = cfg.dense_scale;
    s.outliers = outliers;
    s.outlier_radius = cfg.alpha_u;
    s.feature_dim = cfg.dim;
    s.center_spread = cfg.center_spread;
    s.num_classes = 2;
    s.label_rule = LabelRule::center;
    s.label_noise = 0.0;
    return s;
}

/// Centers are placed once; every trial redraws the points around them.
std::vector<DenseVector> fixed_centers(const TheoryConfig& cfg, std::size_t centers, std::uint64_t tag) {
    MixtureSpec s = base_spec(cfg, centers, centers, 0);
    s.seed = mix_seed(cfg.seed, tag);
    return generate(s).truth.centers;
}

std::vector<std::vector<std::size_t>> random_partition(std::size_t n, std::size_t m, CounterRng& rng) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<std::vector<std::size_t>> parts(m);
    for (std::size_t j = 0; j < m; ++j) {
        parts[j].assign(perm.begin() + static_cast<std::ptrdiff_t>(j * n / m),
                        perm.begin() + static_cast<std::ptrdiff_t>((j + 1) * n / m));
        std::sort(parts[j].begin(), parts[j].end());
    }
    return parts;
}

TheoryCheck frequency_check(std::string name, std::size_t successes, std::size_t trials, double target,
                            std::string detail) {
    TheoryCheck c;
    c.name = std::move(name);
    c.trials = trials;
    c.successes = successes;
    c.value = static_cast<double>(successes) / static_cast<double>(trials);
    c.threshold = target;
    c.interval = wilson_interval(successes, trials);
    c.passed = c.interval.upper >= target;
    c.detail = std::move(detail);
    return c;
}

struct CoverageOutcome {
    std::size_t partitions_covered = 0;
    std::size_t neighborhoods_full = 0;
    std::size_t medoids_near = 0;
    std::size_t exact_medoids_near = 0;
    /// Trials where some partition was too large to enumerate k-subsets.
    std::size_t exact_skipped = 0;
};

/// Exact k-medoids by enumeration; empty when C(n, k) exceeds `limit`.
std::vector<std::size_t> exact_medoids(const FacilityLocationProblem& p, std::size_t k, double limit = 2e6) {
    const std::size_t n = p.size();
    double combos = 1.0;
    for (std::size_t j = 0; j < k; ++j) combos = combos * static_cast<double>(n - j) / static_cast<double>(j + 1);
    if (combos > limit) return {};
    std::vector<bool> pick(n, false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), true);
    std::vector<std::size_t> best, s;
    double best_value = -1.0;
    do {
        s.clear();
        for (std::size_t i = 0; i < n; ++i)
            if (pick[i]) s.push_back(i);
        const double v = fl_value(p, s);
        if (v > best_value) {
            best_value = v;
            best = s;
        }
    } while (std::prev_permutation(pick.begin(), pick.end()));
    return best;
}

/// One Monte-Carlo sweep of the coverage and medoid events at size n.
CoverageOutcome coverage_trials(const TheoryConfig& cfg, const std::vector<DenseVector>& centers, std::size_t n,
                                std::uint64_t tag, bool with_medoids) {
    CoverageOutcome out;
    const double km = static_cast<double>(cfg.k * cfg.m);
    const double neighbor_floor = km * std::log(km / cfg.delta);
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        MixtureSpec spec = base_spec(cfg, cfg.k, n, 0);
        spec.centers = centers;
        spec.seed = mix_seed(cfg.seed, tag, trial);
        const auto points = generate(spec).dataset.examples;
        CounterRng rng(mix_seed(cfg.seed, tag + 1, trial));
        const auto parts = random_partition(n, cfg.m, rng);

        // near[i][c]: point i within alpha of center c.
        std::vector<std::vector<bool>> near(n, std::vector<bool>(cfg.k));
        std::vector<std::size_t> counts(cfg.k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < cfg.k; ++c) {
                near[i][c] = l2_distance(points[i].features, centers[c]) <= cfg.alpha;
                counts[c] += near[i][c];
            }
        }
        if (std::all_of(counts.begin(), counts.end(), [&](std::size_t v) { return v >= neighbor_floor; })) {
            ++out.neighborhoods_full;
        }

        bool covered = true;
        bool medoids_ok = true;
        bool exact_ok = true;
        bool exact_done = true;
        auto all_near = [&](const std::vector<std::size_t>& part, const std::vector<std::size_t>& picks) {
            return std::all_of(picks.begin(), picks.end(), [&](std::size_t s) {
                return std::any_of(near[part[s]].begin(), near[part[s]].end(), [](bool b) { return b; });
            });
        };
        for (const auto& part : parts) {
            for (std::size_t c = 0; c < cfg.k && covered; ++c) {
                covered = std::any_of(part.begin(), part.end(), [&](std::size_t i) { return near[i][c]; });
            }
            if (!with_medoids) continue;
            if (part.size() < cfg.k) {
                medoids_ok = exact_ok = false;
                continue;
            }
            std::vector<DenseVector> feats;
            for (std::size_t i : part) feats.push_back(points[i].features);
            const auto problem = FacilityLocationProblem::from_points(feats, Metric::l2, cfg.k);
            medoids_ok = medoids_ok && all_near(part, lazy_greedy_maximize(problem).selected);
            if (exact_done && exact_ok) {
                const auto exact = exact_medoids(problem, cfg.k);
                exact_done = !exact.empty();
                exact_ok = exact_done && all_near(part, exact);
            }
        }
        out.partitions_covered += covered;
        out.medoids_near += medoids_ok;
        out.exact_medoids_near += exact_done && exact_ok;
        out.exact_skipped += !exact_done;
    }
    return out;
}

TheoryCheck variance_gap_check(const TheoryConfig& cfg, double bound) {
    const std::size_t parts = cfg.m;
    const std::size_t n = parts * cfg.partition_size;
    const auto outliers = static_cast<std::size_t>(std::llround(cfg.kappa_per_partition * static_cast<double>(parts)));
    const std::size_t budget = cfg.variance_centers;
    const auto centers = fixed_centers(cfg, cfg.variance_centers, 30);

    std::vector<DenseVector> coreset_means, random_means;
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        MixtureSpec spec = base_spec(cfg, cfg.variance_centers, n, outliers);
        spec.centers = centers;
        spec.seed = mix_seed(cfg.seed, 31, trial);
        const auto points = generate(spec).dataset.examples;
        CounterRng rng(mix_seed(cfg.seed, 32, trial));
        for (const auto& part : random_partition(n, parts, rng)) {
            std::vector<DenseVector> feats;
            for (std::size_t i : part) feats.push_back(points[i].features);
            const auto sol = lazy_greedy_maximize(FacilityLocationProblem::from_points(feats, Metric::l2, budget));
            std::vector<DenseVector> chosen;
            for (std::size_t s : sol.selected) chosen.push_back(feats[s]);
            coreset_means.push_back(mean_of(chosen));
            chosen.clear();
            for (std::size_t s : rng.sample_without_replacement(feats.size(), budget)) chosen.push_back(feats[s]);
            random_means.push_back(mean_of(chosen));
        }
    }
    const double v_core = covariance_trace(coreset_means);
    const double v_rand = covariance_trace(random_means);
    TheoryCheck c;
    c.name = "variance_gap";
    c.value = v_rand - v_core;
    c.threshold = bound;
    c.trials = cfg.trials;
    c.passed = c.value >= 0.0 && c.value <= bound;
    c.detail = "random " + format_double(v_rand) + " coreset " + format_double(v_core) + " over " +
               std::to_string(coreset_means.size()) + " partitions; gap must lie in [0, bound]";
    return c;
}

TheoryCheck local_evaluation_check(const TheoryConfig& cfg, std::size_t n, const std::vector<DenseVector>& centers) {
    std::size_t successes = 0;
    double worst = 0.0;
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        MixtureSpec spec = base_spec(cfg, cfg.k, n, 0);
        spec.centers = centers;
        spec.seed = mix_seed(cfg.seed, 40, trial);
        const auto points = generate(spec).dataset.examples;
        CounterRng rng(mix_seed(cfg.seed, 41, trial));

        // Per-element values lie in [0, 1]: C bounds every pairwise distance
        // (twice the largest distance from the mean).
        DenseVector centroid(cfg.dim);
        for (const auto& p : points) centroid += p.features;
        centroid *= 1.0 / static_cast<double>(n);
        double radius = 0.0;
        for (const auto& p : points) radius = std::max(radius, l2_distance(p.features, centroid));
        const double offset = 2.0 * radius;
        const auto chosen = rng.sample_without_replacement(n, cfg.k);

        std::vector<double> value(n);
        for (std::size_t i = 0; i < n; ++i) {
            double best = 0.0;
            for (std::size_t s : chosen) {
                best = std::max(best, (offset - l2_distance(points[i].features, points[s].features)) / offset);
            }
            value[i] = best;
        }
        double full = 0.0;
        for (double v : value) full += v;
        full /= static_cast<double>(n);
        double trial_worst = 0.0;
        for (const auto& part : random_partition(n, cfg.m, rng)) {
            double local = 0.0;
            for (std::size_t i : part) local += value[i];
            local /= static_cast<double>(part.size());
            trial_worst = std::max(trial_worst, std::abs(local - full));
        }
        worst = std::max(worst, trial_worst);
        successes += trial_worst < cfg.epsilon;
    }
    return frequency_check("local_evaluation", successes, cfg.trials, 1.0 - cfg.delta,
                           "n=" + std::to_string(n) + ", largest |f_part - f| " + format_double(worst) +
                               " against epsilon " + format_double(cfg.epsilon));
}

}  // namespace

TheoryReport run_theory_checks(const TheoryConfig& cfg) {
    cfg.validate();
    TheoryReport report;
    const auto centers = fixed_centers(cfg, cfg.k, 10);

    MixtureSpec geometry = base_spec(cfg, cfg.k, cfg.k, 0);
    report.neighborhood_mass = cfg.beta ? *cfg.beta * ball_volume(cfg.dim, cfg.alpha)
                                        : dense_ball_mass(geometry, cfg.alpha) / static_cast<double>(cfg.k);
    report.neighborhood_mass = std::min(1.0, report.neighborhood_mass);
    report.coverage_n = std::max(coverage_sample_size(cfg.k, cfg.m, cfg.delta, report.neighborhood_mass), cfg.k * cfg.m);
    report.local_eval_n = local_eval_sample_size(cfg.k, cfg.m, cfg.delta, cfg.epsilon);
    report.gap_bound = variance_gap_bound(cfg.kappa_per_partition, cfg.alpha_u, cfg.alpha_star);

    const double target = 1.0 - cfg.delta;
    const std::string size_note = "n=" + std::to_string(report.coverage_n);
    const CoverageOutcome full = coverage_trials(cfg, centers, report.coverage_n, 20, true);
    report.checks.push_back(frequency_check("partition_coverage", full.partitions_covered, cfg.trials, target,
                                            size_note + "; every partition meets every alpha-neighborhood"));
    report.checks.push_back(frequency_check("neighborhood_size", full.neighborhoods_full, cfg.trials, target,
                                            size_note + "; each alpha-neighborhood holds >= km ln(km/delta) points"));
    report.checks.push_back(frequency_check("medoids_in_neighborhood", full.medoids_near, cfg.trials, target,
                                            size_note + "; every greedy medoid lies within alpha of a center"));
    TheoryCheck exact = frequency_check("exact_medoids_in_neighborhood", full.exact_medoids_near, cfg.trials, target,
                                        size_note + "; every exact k-medoid lies within alpha of a center");
    if (full.exact_skipped > 0) {
        exact.passed = false;
        exact.detail += "; partitions too large to enumerate in " + std::to_string(full.exact_skipped) + " trials";
    }
    report.checks.push_back(exact);

    const auto small_n = std::max<std::size_t>(
        cfg.m, static_cast<std::size_t>(std::floor(cfg.undersize_factor * static_cast<double>(report.coverage_n))));
    const CoverageOutcome undersized = coverage_trials(cfg, centers, small_n, 22, false);
    TheoryCheck bite = frequency_check("undersized_coverage_drops", undersized.partitions_covered, cfg.trials, target,
                                       "n=" + std::to_string(small_n) + "; expected below 1 - delta");
    bite.passed = bite.value < target;
    report.checks.push_back(bite);

    report.checks.push_back(variance_gap_check(cfg, report.gap_bound));
    report.checks.push_back(local_evaluation_check(cfg, report.local_eval_n, centers));
    return report;
}

void write_theory_report(const std::filesystem::path& dir, const TheoryReport& report, DataFormat format) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / ("theory." + to_string(format)), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write theory report in " + dir.string());
    if (format == DataFormat::csv) {
        out << "check,value,threshold,trials,successes,ci_lower,ci_upper,passed,detail\n";
        for (const auto& c : report.checks) {
            out << c.name << ',' << format_double(c.value) << ',' << format_double(c.threshold) << ',' << c.trials
                << ',' << c.successes << ',' << format_double(c.interval.lower) << ','
                << format_double(c.interval.upper) << ',' << (c.passed ? "true" : "false") << ",\"" << c.detail
                << "\"\n";
        }
    } else {
        for (const auto& c : report.checks) {
            nlohmann::json row{{"check", c.name},
                               {"value", c.value},
                               {"threshold", c.threshold},
                               {"trials", c.trials},
                               {"successes", c.successes},
                               {"ci_lower", c.interval.lower},
                               {"ci_upper", c.interval.upper},
                               {"passed", c.passed},
                               {"detail", c.detail}};
            out << row.dump() << '\n';
        }
    }
    const nlohmann::json summary{{"coverage_n", report.coverage_n},
                                 {"neighborhood_mass", report.neighborhood_mass},
                                 {"local_eval_n", report.local_eval_n},
                                 {"gap_bound", report.gap_bound},
                                 {"all_passed", report.all_passed()}};
    std::ofstream(dir / "theory_summary.json", std::ios::binary) << summary.dump(2) << '\n';
}

}  // namespace colm
