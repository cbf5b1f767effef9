// Acceptance run: one PASS/FAIL line per criterion, with the measured values.
// Usage: colm_acceptance <work-dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "colm/clustering.h"
#include "colm/config.h"
#include "colm/data_gen.h"
#include "colm/facility_location.h"
#include "colm/harness.h"
#include "colm/random.h"
#include "colm/selector.h"
#include "colm/stats.h"
#include "colm/theory.h"
#include "colm/toy_model.h"
#include "colm/zeroth_order.h"
#include "oracles.h"

using namespace colm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path g_work;

// ---- 1: greedy ratio and lazy == naive

FacilityLocationProblem random_problem(CounterRng& rng, std::size_t n, std::size_t budget, Metric metric) {
    const std::size_t dim = 1 + rng.uniform_index(4);
    std::vector<DenseVector> pts(n, DenseVector(dim));
    for (auto& p : pts)
        for (auto& x : p) x = rng.normal();
    return FacilityLocationProblem::from_points(pts, metric, budget);
}

Outcome greedy_optimality() {
    CounterRng rng(101);
    const double ratio = 1.0 - std::exp(-1.0);
    std::size_t ok = 0;
    double worst = 1.0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng.uniform_index(7);
        const std::size_t k = 1 + rng.uniform_index(std::min<std::size_t>(3, n));
        auto p = random_problem(rng, n, k, t % 2 ? Metric::l1 : Metric::l2);
        const double opt = oracle::brute_force_opt(p);
        const double got = greedy_maximize(p).objective_value;
        worst = std::min(worst, got / opt);
        if (got >= ratio * opt - 1e-12) ++ok;
    }
    std::size_t same = 0;
    for (int t = 0; t < 500; ++t) {
        const std::size_t n = 1 + rng.uniform_index(64);
        auto p = random_problem(rng, n, 1 + rng.uniform_index(n), t % 2 ? Metric::l1 : Metric::l2);
        auto a = greedy_maximize(p);
        auto b = lazy_greedy_maximize(p);
        if (a.selected == b.selected && a.assignment == b.assignment && a.objective_value == b.objective_value) ++same;
    }
    return {ok == 200 && same == 500, std::to_string(ok) + "/200 above (1-1/e)OPT, worst ratio " +
                                          fmt("%.4f", worst) + "; lazy==naive " + std::to_string(same) + "/500"};
}

// ---- 2: backprop vs central differences

Outcome gradient_oracle() {
    CounterRng rng(202);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        ModelShape shape{1 + rng.uniform_index(6), 1 + rng.uniform_index(8), 2 + rng.uniform_index(4)};
        auto params = ModelParams::initialize(shape, 1000 + t);
        for (auto& x : params.flat()) x += 0.3 * rng.normal();
        Example ex{DenseVector(shape.input_dim), rng.uniform_index(shape.num_classes), 0};
        for (auto& x : ex.features) x = rng.normal();
        auto g = exact_gradient(params, ex);
        auto fd = oracle::central_differences(
            [&](const DenseVector& flat) { return per_example_loss(ModelParams(shape, flat), ex); }, params.flat(),
            1e-6);
        for (std::size_t j = 0; j < g.size(); ++j) worst = std::max(worst, oracle::relative_error(g[j], fd[j]));
    }
    return {worst < 1e-5, "max relative error " + fmt("%.2e", worst) + " over 100 points"};
}

// ---- 3: SPSA soundness

Outcome spsa_soundness() {
    const ModelShape shape{4, 6, 3};
    auto params = ModelParams::initialize(shape, 31);
    CounterRng rng(17);
    Example ex{DenseVector(shape.input_dim), 2, 0};
    for (auto& x : ex.features) x = rng.normal();
    for (auto& x : params.flat()) x += 0.2 * rng.normal();

    // Quadratic: the coefficient is exactly z^T theta.
    auto quad = [](const DenseVector& t) { return 0.5 * squared_norm(t); };
    DenseVector theta{1.0, -2.0, 0.5};
    double quad_err = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto z = SeededGaussian{s, 3}.sample();
        quad_err = std::max(quad_err, std::abs(spsa_coefficient(quad, theta, z, 1e-3) - dot(z, theta)));
    }
    const bool quad_ok = quad_err <= 1e-9 * std::max(1.0, l2_norm(theta));

    auto fr = forward_cached(params, std::span<const Example>(&ex, 1));
    SpsaConfig mc{1e-3, 5, 10000, true};
    auto est = spsa_last_projection(params, ex, fr.cache, 0, mc);
    const double cos = cosine_similarity(est, exact_gradient(params, ex, GradScope::last_projection));

    SpsaConfig cfg{1e-3, 77, 8, true};
    auto restricted = spsa_last_projection(params, ex, fr.cache, 0, cfg);
    auto probes = spsa_last_projection_probes(params, ex, fr.cache, 0, cfg);
    auto loss = [&](const DenseVector& flat) { return per_example_loss(ModelParams(shape, flat), ex); };
    const std::size_t off = params.projection_offset();
    DenseVector padded(shape.total_dim());
    double cache_err = 0.0;
    for (std::size_t p = 0; p < cfg.probes; ++p) {
        auto zvp = projection_direction(shape, probe_seed(cfg, p), true);
        DenseVector z(shape.total_dim());
        std::copy(zvp.begin(), zvp.end(), z.begin() + static_cast<std::ptrdiff_t>(off));
        const double c = spsa_coefficient(loss, params.flat(), z, cfg.perturbation_scale);
        cache_err = std::max(cache_err, std::abs(c - probes[p].coefficient));
        padded.add_scaled(z, c);
    }
    padded *= 1.0 / static_cast<double>(cfg.probes);
    double pad_err = 0.0;
    for (std::size_t j = 0; j < off; ++j) pad_err = std::max(pad_err, std::abs(padded[j]));
    for (std::size_t j = 0; j < restricted.size(); ++j)
        pad_err = std::max(pad_err, std::abs(restricted[j] - padded[off + j]));

    const bool pass = quad_ok && cos >= 0.95 && pad_err <= 1e-10 && cache_err <= 1e-12;
    return {pass, "quadratic err " + fmt("%.1e", quad_err) + ", cosine(10^4 probes) " + fmt("%.4f", cos) +
                      ", restricted vs padded " + fmt("%.1e", pad_err) + ", cache vs full " + fmt("%.1e", cache_err)};
}

// ---- 4: selection invariants

Outcome structural_invariants() {
    CounterRng rng(404);
    std::size_t violations = 0, over_budget = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t q = 1 + rng.uniform_index(8);
        std::map<int, std::size_t> full;
        for (std::size_t s = 0; s < q; ++s) full[static_cast<int>(s)] = 5 + rng.uniform_index(300);
        const auto cat = classify_sources(full);
        const std::size_t r = 4 + rng.uniform_index(80);
        const std::size_t dim = 6 + rng.uniform_index(40);
        CandidateBatch b;
        for (std::size_t i = 0; i < r; ++i) {
            b.dataset_indices.push_back(7 * i + 1);
            b.source_ids.push_back(static_cast<int>(rng.uniform_index(q)));
            DenseVector g(dim);
            for (auto& x : g) x = rng.normal();
            b.gradients.push_back(cat.is_small(b.source_ids.back()) ? DenseVector{} : g);
        }
        SelectorConfig cfg;
        cfg.budget = 1 + rng.uniform_index(r);
        cfg.sparsity = 1 + rng.uniform_index(dim);
        const auto cs = select_coreset(b, cat, SelectionState::zeros(dim), cfg);

        const auto pos = cs.positions();
        std::set<std::size_t> chosen(pos.begin(), pos.end());
        std::size_t kept = 0;
        bool ok = chosen.size() == cs.size();
        for (std::size_t p = 0; p < r; ++p) {
            if (!cat.is_small(b.source_ids[p])) continue;
            ++kept;
            ok = ok && chosen.count(p) == 1;
        }
        std::size_t planned = 0;
        for (const auto& [id, v] : cs.plan.per_big_budget) planned += v;
        if (kept >= cfg.budget) {
            ++over_budget;
            ok = ok && planned == 0 && cs.size() == kept;
        } else {
            ok = ok && planned == cfg.budget - kept && cs.size() == cfg.budget;
        }
        for (const auto& e : cs.entries) ok = ok && e.weight == 1.0;
        for (const auto& g : cs.groups) ok = ok && g.mask.kept() == cfg.sparsity && g.mask.dimension() == dim;
        if (!ok) ++violations;
    }
    return {violations == 0, std::to_string(violations) + " violations in 1000 batches (" +
                                 std::to_string(over_budget) + " with small members filling the budget)"};
}

// ---- 5: coverage and medoid placement

Outcome theory_validation() {
    TheoryConfig cfg;
    cfg.seed = 5;
    cfg.k = 2;
    cfg.m = 2;
    cfg.delta = 0.04;
    cfg.trials = 500;
    const auto rep = run_theory_checks(cfg);
    const auto& cov = rep.find("partition_coverage");
    const auto& med = rep.find("medoids_in_neighborhood");
    const auto& exact = rep.find("exact_medoids_in_neighborhood");
    std::printf("  info: exact k-medoids in neighborhood %zu/%zu\n", exact.successes, exact.trials);
    auto show = [](const TheoryCheck& c) {
        return c.name + " " + std::to_string(c.successes) + "/" + std::to_string(c.trials) + " CI [" +
               fmt("%.4f", c.interval.lower) + ", " + fmt("%.4f", c.interval.upper) + "]";
    };
    return {cov.passed && med.passed,
            "n=" + std::to_string(rep.coverage_n) + ", target " + fmt("%.2f", 1 - cfg.delta) + "; " + show(cov) +
                "; " + show(med)};
}

// ---- 6: variance probe on the planted-outlier mixture

ExperimentConfig outlier_probe_config(bool outliers) {
    ExperimentConfig cfg;
    cfg.seed = 6;
    cfg.steps = 200;
    cfg.batch_size = 32;
    cfg.large_batch_size = 64;
    cfg.probe.checkpoints = 10;
    cfg.probe.resamples = 50;
    auto& s = cfg.dataset.synthetic;
    s.num_sources = 1;
    s.source_sizes = {2048};
    s.centers_per_source = 2;
    s.dense_radius = 1.0;
    s.outlier_radius = 2.0;
    s.outliers = outliers ? 2048 / 64 : 0;  // one per large batch
    // Labels follow the planted centers so the input-space dense areas are
    // also the gradient-space ones; noisy labels add unplanted outliers.
    s.label_rule = LabelRule::center;
    s.label_noise = 0.0;
    s.seed = 6;
    return cfg;
}

std::string probe_line(const VarianceReport& r) {
    return fmt("colm lower at %.0f%%", 100.0 * r.fraction_colm_lower) + " of " +
           std::to_string(r.checkpoints.size()) + " checkpoints, max gap " + fmt("%.3g", r.max_gap) + ", bound " +
           fmt("%.3g", r.bound) + ", p " + fmt("%.3g", r.p_value);
}

Outcome variance_probe() {
    auto cfg = outlier_probe_config(true);
    const Dataset data = resolve_dataset(cfg);
    const double bound = mixture_gap_bound(cfg.dataset.synthetic, cfg.resolved_large_batch());
    const auto rep = run_variance_probe(cfg, data, bound);

    auto hom = outlier_probe_config(false);
    const auto hrep = run_variance_probe(hom, resolve_dataset(hom), std::nan(""));

    auto noisy = cfg;
    noisy.dataset.synthetic.label_rule = LabelRule::shared_linear;
    noisy.dataset.synthetic.label_noise = 0.1;
    const auto nrep = run_variance_probe(noisy, resolve_dataset(noisy), bound);
    std::printf("  info: default labels (shared linear, 10%% noise): %s\n", probe_line(nrep).c_str());
    auto weighted = noisy;
    weighted.selection.weighting = CoresetWeighting::cluster_size;
    const auto wrep = run_variance_probe(weighted, resolve_dataset(weighted), bound);
    std::printf("  info: default labels, cluster-size weighted coresets: %s\n", probe_line(wrep).c_str());

    const bool pass = rep.checkpoints.size() >= 10 && rep.fraction_colm_lower >= 0.8 && rep.max_gap <= bound &&
                      hrep.p_value > 0.01;
    return {pass, "outliers: " + probe_line(rep) + "; homogeneous p " + fmt("%.3g", hrep.p_value)};
}

// ---- 7: convergence direction on the imbalanced mixture

Outcome convergence_direction() {
    std::size_t loss_wins = 0, small_wins = 0, ablation_worse = 0;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ExperimentConfig cfg;
        cfg.seed = seed;
        cfg.steps = 500;
        cfg.batch_size = 32;
        cfg.large_batch_size = 64;
        cfg.logging.variance_interval = 1000;
        cfg.dataset.synthetic.num_sources = 10;
        cfg.dataset.synthetic.imbalance_ratio = 100;
        cfg.dataset.synthetic.seed = seed;
        const Dataset data = resolve_dataset(cfg);

        cfg.method = Method::random;
        const auto rnd = run_training(cfg, data);
        cfg.method = Method::colm;
        const auto colm = run_training(cfg, data);
        cfg.selection.keep_small = false;
        const auto ablate = run_training(cfg, data);

        loss_wins += colm.final_loss <= rnd.final_loss;
        small_wins += colm.final_small_acc > rnd.final_small_acc;
        ablation_worse += ablate.final_small_acc < colm.final_small_acc;
        per_seed += " [" + fmt("%.4f", colm.final_loss) + "/" + fmt("%.4f", rnd.final_loss) + " acc " +
                    fmt("%.3f", colm.final_small_acc) + "/" + fmt("%.3f", rnd.final_small_acc) + "/" +
                    fmt("%.3f", ablate.final_small_acc) + "]";
    }
    return {loss_wins >= 4 && small_wins >= 4 && ablation_worse >= 4,
            "loss <= random " + std::to_string(loss_wins) + "/5, small acc > random " + std::to_string(small_wins) +
                "/5, no-keep-small worse " + std::to_string(ablation_worse) + "/5; loss colm/random, small acc " +
                "colm/random/no-keep:" + per_seed};
}

// ---- 8: 1/b scaling of random mini-batch variance

Outcome variance_scaling() {
    MixtureSpec spec;
    spec.num_sources = 4;
    spec.largest_source = 4000;
    spec.imbalance_ratio = 4;
    spec.seed = 8;
    const auto gen = generate(spec);
    const auto params = ModelParams::initialize(ModelShape{spec.feature_dim, 32, spec.num_classes}, 8);
    std::vector<double> bs{8, 16, 32, 64}, var;
    for (double b : bs)
        var.push_back(random_subset_variance(params, gen.dataset.examples, static_cast<std::size_t>(b), 4000, 8));
    const double slope = log_log_slope(bs, var);
    return {std::abs(slope + 1.0) <= 0.15, "slope " + fmt("%.4f", slope) + " over b in {8,16,32,64}"};
}

// ---- 9: source discovery

Outcome source_discovery() {
    double worst_ari = 1.0, worst_rel = 0.0;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ExperimentConfig cfg;
        cfg.seed = seed;
        cfg.steps = 300;
        cfg.logging.variance_interval = 1000;
        auto& s = cfg.dataset.synthetic;
        s.num_sources = 2;
        s.source_sizes = {1200, 300};
        s.centers_per_source = 1;
        s.feature_dim = 10;
        s.num_classes = 4;
        s.centers = {DenseVector(10, -4.0), DenseVector(10, 4.0)};
        s.seed = seed;
        const Dataset data = resolve_dataset(cfg);
        std::vector<int> truth;
        for (const auto& e : data.examples) truth.push_back(e.source_id);

        const auto known = run_training(cfg, data);
        cfg.discovery.enabled = true;
        cfg.discovery.clusters = 2;
        const auto found = run_training(cfg, data);

        const double ari = oracle::adjusted_rand_index(found.selection_sources, truth);
        const double rel = std::abs(found.final_loss - known.final_loss) / known.final_loss;
        worst_ari = std::min(worst_ari, ari);
        worst_rel = std::max(worst_rel, rel);
        per_seed += " " + fmt("%.4f", found.final_loss) + "/" + fmt("%.4f", known.final_loss);
    }
    return {worst_ari == 1.0 && worst_rel <= 0.05, "min ARI " + fmt("%.4f", worst_ari) +
                                                       ", max relative loss difference " + fmt("%.4f", worst_rel) +
                                                       "; final loss discovered/true:" + per_seed};
}

// ---- 10: byte-identical reruns of every command

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + COLM_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().filename() == "timing.csv") continue;
        files[fs::relative(e.path(), dir).string()] = slurp(e.path());
    }
    return files;
}

Outcome determinism() {
    const fs::path dir = g_work / "determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "spec.json") << R"({"num_sources": 3, "source_sizes": [200, 60, 12], "feature_dim": 6,
        "num_classes": 3, "outliers": 4, "seed": 10})";
    std::ofstream(dir / "exp.json") << R"({"steps": 30, "batch_size": 8, "hidden_dim": 8,
        "logging": {"variance_interval": 10, "variance_resamples": 30},
        "probe": {"checkpoints": 3, "resamples": 30},
        "dataset": {"synthetic": {"num_sources": 3, "source_sizes": [200, 60, 12], "feature_dim": 6,
                                  "num_classes": 3, "outliers": 4, "seed": 10}}})";
    std::ofstream(dir / "theory.json") << R"({"theory": {"trials": 40}})";
    const std::vector<std::string> commands{
        "generate --spec " + (dir / "spec.json").string(), "train --config " + (dir / "exp.json").string(),
        "variance-probe --config " + (dir / "exp.json").string(), "bench --config " + (dir / "exp.json").string(),
        "theory-check --config " + (dir / "theory.json").string()};
    std::size_t identical = 0, total = 0;
    std::string bad;
    for (const auto& c : commands) {
        for (const char* format : {"csv", "jsonl"}) {
            ++total;
            const std::string tag = c.substr(0, c.find(' ')) + "_" + format;
            std::map<std::string, std::string> snaps[2];
            bool ran = true;
            const fs::path out = dir / tag;
            for (int rep = 0; rep < 2; ++rep) {
                fs::remove_all(out);
                ran = ran && run_cli(c + " --seed 11 --format " + format + " --out " + out.string()) == 0;
                if (ran) snaps[rep] = snapshot(out);
            }
            if (ran && !snaps[0].empty() && snaps[0] == snaps[1]) {
                ++identical;
            } else {
                bad += " " + tag;
            }
        }
    }
    return {identical == total, std::to_string(identical) + "/" + std::to_string(total) +
                                    " command/format pairs byte-identical" + (bad.empty() ? "" : "; differ:" + bad)};
}

}  // namespace

int main(int argc, char** argv) {
    g_work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "colm_acceptance";
    fs::create_directories(g_work);

    struct Criterion {
        int id;
        const char* name;
        double limit_s;  // 0: no runtime limit
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "greedy optimality", 60, greedy_optimality},
        {2, "gradient oracle", 0, gradient_oracle},
        {3, "spsa soundness", 120, spsa_soundness},
        {4, "selection invariants", 0, structural_invariants},
        {5, "coverage and medoid placement", 300, theory_validation},
        {6, "variance probe", 600, variance_probe},
        {7, "convergence direction", 900, convergence_direction},
        {8, "variance scaling", 0, variance_scaling},
        {9, "source discovery", 0, source_discovery},
        {10, "determinism", 0, determinism},
    };

    std::ofstream results(g_work / "results.txt");
    int passed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_s > 0 && secs > c.limit_s) {
            o.pass = false;
            o.detail += "; over the " + fmt("%.0f", c.limit_s) + " s limit";
        }
        passed += o.pass;
        char head[128];
        std::snprintf(head, sizeof head, "criterion %2d %-30s %s (%.1f s) ", c.id, c.name, o.pass ? "PASS" : "FAIL",
                      secs);
        std::printf("%s%s\n", head, o.detail.c_str());
        std::fflush(stdout);
        results << head << o.detail << '\n';
    }
    std::printf("%d/%zu criteria passed\n", passed, criteria.size());
    results << passed << '/' << criteria.size() << " criteria passed\n";
    return 0;
}
