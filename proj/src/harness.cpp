#include "colm/harness.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "colm/errors.h"
#include "colm/random.h"
#include "colm/stats.h"

namespace colm {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string number(double v) {
    if (std::isnan(v)) return "nan";
    return format_double(v);
}

struct Selection {
    /// Ascending batch positions.
    std::vector<std::size_t> positions;
    std::vector<double> weights;
    bool over_budget = false;
};

Selection uniform_selection(std::vector<std::size_t> positions) {
    std::sort(positions.begin(), positions.end());
    Selection sel;
    sel.weights.assign(positions.size(), 1.0);
    sel.positions = std::move(positions);
    return sel;
}

struct Evaluation {
    double loss = 0.0;
    double small_acc = kNaN;
    double big_acc = kNaN;
};

SourceCatalog build_catalog(const std::map<int, std::size_t>& sizes, const SelectionSettings& s) {
    if (!s.keep_small) return catalog_all_big(sizes);
    if (s.small_sources) {
        try {
            return catalog_with_small(sizes, *s.small_sources);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("selection.small_sources: ") + e.what());
        }
    }
    return classify_sources(sizes);
}

class Engine {
public:
    Engine(const ExperimentConfig& cfg, const Dataset& data, bool track_history)
        : cfg_(cfg),
          data_(data),
          examples_(data.examples),
          shape_{data.feature_dim, cfg.hidden_dim, data.num_classes},
          params_(ModelParams::initialize(shape_, mix_seed(cfg.seed, 1))),
          adam_(AdamState::zeros(shape_.total_dim(),
                                 AdamConfig{cfg.optimizer.beta1, cfg.optimizer.beta2, cfg.optimizer.eps, cfg.optimizer.lr})),
          selection_state_(SelectionState::zeros(shape_.projection_dim())),
          b_(cfg.batch_size),
          r_(cfg.resolved_large_batch()),
          track_history_(track_history),
          batch_rng_(cfg.seed, 2),
          subset_rng_(cfg.seed, 3) {
        if (data.size() < r_) {
            throw ConfigError("dataset has " + std::to_string(data.size()) + " examples, fewer than the large batch " +
                              std::to_string(r_));
        }
        for (const auto& ex : examples_) {
            if (ex.features.size() != shape_.input_dim) throw ConfigError("dataset rows differ in feature count");
        }
        selection_state_.beta1 = cfg.selection.beta1;
        selection_state_.beta2 = cfg.selection.beta2;
        selection_state_.eps = cfg.selection.eps;
        selection_state_.mode = cfg.selection.normalization;
        spsa_.perturbation_scale = cfg.spsa.perturbation_scale;
        spsa_.probes = cfg.spsa.probes;
        spsa_.perturb_bias = cfg.spsa.perturb_bias;
        spsa_.seed = mix_seed(cfg.seed, 4);
        selector_.budget = b_;
        selector_.sparsity = cfg.selection.sparsity;
        selector_.aggregation = cfg.selection.aggregation;
        selector_.grouping = cfg.selection.grouping;
        selector_.weighting = cfg.selection.weighting;
        selector_.greedy = cfg.selection.greedy;

        report_catalog_ = data.has_sources ? classify_sources(data.source_sizes())
                                           : catalog_all_big(std::map<int, std::size_t>{{0, data.size()}});
        if (!cfg.discovery.enabled) catalog_ = build_catalog(data.source_sizes(), cfg.selection);
        for (std::size_t i = 1; i <= cfg.discovery.refreshes; ++i) {
            const std::size_t span = cfg.steps - cfg.discovery.warmup_steps;
            refresh_steps_.push_back(cfg.discovery.warmup_steps + i * span / (cfg.discovery.refreshes + 1));
        }
    }

    std::size_t dataset_size() const noexcept { return examples_.size(); }
    const ModelParams& params() const noexcept { return params_; }
    const std::vector<Example>& examples() const noexcept { return examples_; }
    std::size_t batch_size() const noexcept { return b_; }
    std::size_t large_batch_size() const noexcept { return r_; }

    std::vector<std::size_t> draw_batch() { return batch_rng_.sample_without_replacement(examples_.size(), r_); }
    CounterRng& subset_rng() noexcept { return subset_rng_; }

    /// Picks the mini-batch for `method` from large batch `idx`. When
    /// `history_out` is given and the method computes zeroth-order
    /// gradients, the candidate batch is handed back for the history update.
    Selection select(Method method, const std::vector<std::size_t>& idx, std::size_t step, CounterRng& rng,
                     std::optional<CandidateBatch>* history_out) const {
        switch (method) {
            case Method::random:
                return uniform_selection(rng.sample_without_replacement(idx.size(), b_));
            case Method::colm: {
                if (!catalog_) return uniform_selection(rng.sample_without_replacement(idx.size(), b_));
                CandidateBatch cand =
                    make_candidate_batch(params_, examples_, idx, *catalog_, spsa_, cfg_.spsa.sharing, step);
                const Coreset coreset = select_coreset(cand, *catalog_, selection_state_, selector_);
                Selection sel;
                for (const auto& e : coreset.entries) {
                    sel.positions.push_back(e.position);
                    sel.weights.push_back(e.weight);
                }
                sel.over_budget = coreset.plan.small_exceeds_budget;
                if (history_out) *history_out = std::move(cand);
                return sel;
            }
            case Method::hidden_fl:
                return hidden_fl_selection(idx);
            default: {
                const std::vector<Example> batch = gather(idx);
                return uniform_selection(top_scoring_positions(baseline_scores(method, params_, batch), idx, b_));
            }
        }
    }

    DenseVector selection_gradient(const std::vector<std::size_t>& idx, const Selection& sel) const {
        DenseVector acc(shape_.total_dim());
        double total_weight = 0.0;
        for (std::size_t k = 0; k < sel.positions.size(); ++k) {
            acc.add_scaled(exact_gradient(params_, examples_[idx[sel.positions[k]]]), sel.weights[k]);
            total_weight += sel.weights[k];
        }
        acc *= 1.0 / total_weight;
        return acc;
    }

    void update_history(const CandidateBatch& cand) {
        std::vector<DenseVector> big;
        for (std::size_t pos = 0; pos < cand.size(); ++pos) {
            if (!cand.gradients[pos].empty()) big.push_back(cand.gradients[pos]);
        }
        if (big.empty()) return;
        selection_state_ = update_selection_history(selection_state_, mean_of(big));
    }

    /// Advances the history for runs whose own method does not produce
    /// zeroth-order gradients (variance-probe trajectories).
    void track_history(const std::vector<std::size_t>& idx, std::size_t step) {
        if (!track_history_ || !catalog_) return;
        update_history(make_candidate_batch(params_, examples_, idx, *catalog_, spsa_, cfg_.spsa.sharing, step));
    }

    void apply(const DenseVector& grad, std::size_t step) {
        if (!grad.all_finite()) throw DivergenceError(step, "non-finite gradient at step " + std::to_string(step));
        const double lr = LrSchedule{cfg_.optimizer.schedule, cfg_.optimizer.lr, cfg_.optimizer.warmup_fraction}.at(
            step, cfg_.steps);
        if (cfg_.optimizer.kind == OptimizerKind::adam) {
            adam_.config.lr = lr;
            AdamStepResult res = adam_step(adam_, params_.flat(), grad);
            adam_ = std::move(res.state);
            params_.flat() = std::move(res.params);
        } else {
            params_.flat() = sgd_step(params_.flat(), grad, lr);
        }
    }

    Evaluation evaluate(std::size_t step) const {
        double loss = 0.0;
        std::size_t small_hits = 0, small_total = 0, big_hits = 0, big_total = 0;
        const auto proj = params_.projection();
        for (const auto& ex : data_.examples) {
            const DenseVector act = hidden_activation(params_, ex.features);
            const std::vector<double> logits = logits_from_activation(shape_, proj, act.span());
            loss += loss_from_activation(shape_, proj, act.span(), ex.label);
            const std::size_t pred =
                static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
            const bool hit = pred == ex.label;
            const int src = data_.has_sources ? ex.source_id : 0;
            if (report_catalog_.is_small(src)) {
                ++small_total;
                small_hits += hit;
            } else {
                ++big_total;
                big_hits += hit;
            }
        }
        Evaluation ev;
        ev.loss = loss / static_cast<double>(data_.size());
        if (!std::isfinite(ev.loss)) throw DivergenceError(step, "non-finite loss at step " + std::to_string(step));
        if (small_total) ev.small_acc = static_cast<double>(small_hits) / static_cast<double>(small_total);
        if (big_total) ev.big_acc = static_cast<double>(big_hits) / static_cast<double>(big_total);
        return ev;
    }

    /// Clusters penultimate activations at the warm-up boundary and at each
    /// refresh step.
    void maybe_discover(std::size_t step) {
        if (!cfg_.discovery.enabled) return;
        const bool due = step == cfg_.discovery.warmup_steps ||
                         std::find(refresh_steps_.begin(), refresh_steps_.end(), step) != refresh_steps_.end();
        if (!due) return;
        std::vector<DenseVector> rows;
        rows.reserve(examples_.size());
        for (const auto& ex : examples_) rows.push_back(hidden_activation(params_, ex.features));
        const std::vector<int> labels = discover_sources(rows, cfg_.discovery.clusters, mix_seed(cfg_.seed, 6, step));
        std::map<int, std::size_t> sizes;
        for (std::size_t i = 0; i < examples_.size(); ++i) {
            examples_[i].source_id = labels[i];
            ++sizes[labels[i]];
        }
        catalog_ = build_catalog(sizes, cfg_.selection);
    }

    std::vector<int> selection_sources() const {
        std::vector<int> out;
        for (const auto& ex : examples_) out.push_back(ex.source_id);
        return out;
    }

private:
    std::vector<Example> gather(const std::vector<std::size_t>& idx) const {
        std::vector<Example> batch;
        batch.reserve(idx.size());
        for (std::size_t i : idx) batch.push_back(examples_[i]);
        return batch;
    }

    Selection hidden_fl_selection(const std::vector<std::size_t>& idx) const {
        const std::vector<Example> batch = gather(idx);
        const ForwardResult fwd = forward_cached(params_, batch);
        std::vector<std::size_t> order(idx.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return idx[a] < idx[b]; });
        std::vector<DenseVector> rows;
        for (std::size_t pos : order) {
            const auto row = fwd.cache.row(pos);
            rows.emplace_back(std::vector<double>(row.begin(), row.end()));
        }
        const auto problem = FacilityLocationProblem::from_points(rows, Metric::l2, b_);
        const MedoidSolution sol = lazy_greedy_maximize(problem);
        std::vector<std::size_t> positions;
        for (std::size_t s : sol.selected) positions.push_back(order[s]);
        return uniform_selection(std::move(positions));
    }

    const ExperimentConfig& cfg_;
    const Dataset& data_;
    std::vector<Example> examples_;
    ModelShape shape_;
    ModelParams params_;
    AdamState adam_;
    SelectionState selection_state_;
    SpsaConfig spsa_;
    SelectorConfig selector_;
    std::size_t b_;
    std::size_t r_;
    bool track_history_;
    std::optional<SourceCatalog> catalog_;
    SourceCatalog report_catalog_;
    std::vector<std::size_t> refresh_steps_;
    CounterRng batch_rng_;
    CounterRng subset_rng_;
};

double method_variance(const Engine& engine, Method method, std::size_t step, std::size_t resamples,
                       std::uint64_t seed) {
    // Batches and subset draws use separate streams so every method sees the
    // same resampled large batches.
    CounterRng rng(seed);
    CounterRng pick(seed, 1);
    std::vector<DenseVector> means;
    means.reserve(resamples);
    for (std::size_t s = 0; s < resamples; ++s) {
        const auto idx = rng.sample_without_replacement(engine.dataset_size(), engine.large_batch_size());
        const Selection sel = engine.select(method, idx, step, pick, nullptr);
        means.push_back(engine.selection_gradient(idx, sel));
    }
    return covariance_trace(means);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

Dataset resolve_dataset(const ExperimentConfig& cfg) {
    if (!cfg.dataset.path.empty()) return load_dataset(cfg.dataset.path, cfg.dataset.format, cfg.discovery.enabled);
    return generate(cfg.dataset.synthetic).dataset;
}

std::vector<std::size_t> top_scoring_positions(const std::vector<double>& scores,
                                               const std::vector<std::size_t>& dataset_indices, std::size_t b) {
    if (scores.size() != dataset_indices.size()) throw DimensionError("top_scoring_positions: length mismatch");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
        if (scores[a] != scores[c]) return scores[a] > scores[c];
        return dataset_indices[a] < dataset_indices[c];
    });
    order.resize(std::min(b, order.size()));
    std::sort(order.begin(), order.end());
    return order;
}

std::vector<double> baseline_scores(Method method, const ModelParams& params, std::span<const Example> batch) {
    std::vector<double> scores;
    scores.reserve(batch.size());
    for (const auto& ex : batch) {
        switch (method) {
            case Method::big_loss:
                scores.push_back(per_example_loss(params, ex));
                break;
            case Method::grad_norm:
                scores.push_back(l2_norm(exact_gradient(params, ex, GradScope::last_projection)));
                break;
            case Method::least_confidence: {
                const auto p = predict_proba(params, ex);
                scores.push_back(-*std::max_element(p.begin(), p.end()));
                break;
            }
            default:
                throw std::invalid_argument("baseline_scores: " + to_string(method) + " is not score-based");
        }
    }
    return scores;
}

RunResult run_training(const ExperimentConfig& cfg, const Dataset& data) {
    cfg.validate();
    Engine engine(cfg, data, /*track_history=*/false);
    RunResult result;
    result.method = cfg.method;
    result.rows.reserve(cfg.steps);

    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        const auto idx = engine.draw_batch();

        auto t0 = Clock::now();
        std::optional<CandidateBatch> cand;
        const Selection sel = engine.select(cfg.method, idx, step, engine.subset_rng(), &cand);
        if (cand) engine.update_history(*cand);
        const double select_ms = ms_since(t0);
        if (sel.over_budget) ++result.over_budget_steps;

        t0 = Clock::now();
        engine.apply(engine.selection_gradient(idx, sel), step);
        const double train_ms = ms_since(t0);

        engine.maybe_discover(step);
        const Evaluation ev = engine.evaluate(step);
        double variance = kNaN;
        if (step % cfg.logging.variance_interval == 0 || step == cfg.steps) {
            variance = method_variance(engine, cfg.method, step + 1, cfg.logging.variance_resamples,
                                       mix_seed(cfg.seed, 5, step));
        }
        result.rows.push_back({step, ev.loss, variance, ev.small_acc, ev.big_acc, select_ms, train_ms});
    }
    const MetricsRow& last = result.rows.back();
    result.final_loss = last.loss;
    result.final_small_acc = last.small_src_acc;
    result.final_big_acc = last.big_src_acc;
    result.final_params = engine.params();
    result.selection_sources = engine.selection_sources();
    return result;
}

std::vector<RunResult> run_baseline_selectors(const ExperimentConfig& cfg, const Dataset& data) {
    std::vector<RunResult> runs;
    for (Method m : cfg.bench_methods) {
        ExperimentConfig c = cfg;
        c.method = m;
        runs.push_back(run_training(c, data));
    }
    return runs;
}

void write_metrics(const std::filesystem::path& dir, const RunResult& run, DataFormat format,
                   bool wall_time_in_metrics) {
    std::string metrics;
    std::string timing = "step,select_ms,train_ms\n";
    if (format == DataFormat::csv) metrics = std::string(kMetricsHeader) + "\n";
    for (const auto& row : run.rows) {
        const double sel = wall_time_in_metrics ? row.select_ms : 0.0;
        const double train = wall_time_in_metrics ? row.train_ms : 0.0;
        if (format == DataFormat::csv) {
            metrics += std::to_string(row.step) + "," + number(row.loss) + "," + number(row.grad_variance) + "," +
                       number(row.small_src_acc) + "," + number(row.big_src_acc) + "," + number(sel) + "," +
                       number(train) + "\n";
        } else {
            // NaN is not valid JSON; it is written as null.
            auto js = [](double v) { return std::isnan(v) ? std::string("null") : format_double(v); };
            metrics += "{\"step\":" + std::to_string(row.step) + ",\"loss\":" + js(row.loss) +
                       ",\"grad_variance\":" + js(row.grad_variance) + ",\"small_src_acc\":" + js(row.small_src_acc) +
                       ",\"big_src_acc\":" + js(row.big_src_acc) + ",\"select_ms\":" + js(sel) +
                       ",\"train_ms\":" + js(train) + "}\n";
        }
        timing += std::to_string(row.step) + "," + number(row.select_ms) + "," + number(row.train_ms) + "\n";
    }
    write_text(dir / ("metrics." + to_string(format)), metrics);
    write_text(dir / "timing.csv", timing);
}

double random_subset_variance(const ModelParams& params, std::span<const Example> data, std::size_t b,
                              std::size_t resamples, std::uint64_t seed) {
    if (b == 0 || b > data.size()) throw std::invalid_argument("random_subset_variance: bad subset size");
    if (resamples < 2) throw std::invalid_argument("random_subset_variance: need at least two resamples");
    CounterRng rng(seed);
    std::vector<DenseVector> means;
    means.reserve(resamples);
    std::vector<Example> batch(b);
    for (std::size_t s = 0; s < resamples; ++s) {
        const auto idx = rng.sample_without_replacement(data.size(), b);
        for (std::size_t k = 0; k < b; ++k) batch[k] = data[idx[k]];
        means.push_back(mean_gradient(params, batch));
    }
    return covariance_trace(means);
}

double variance_gap_bound(double kappa_per_batch, double alpha_u, double alpha_star) {
    const double spread = kappa_per_batch * (alpha_u - alpha_star);
    return spread * (2.0 * alpha_star + spread);
}

double mixture_gap_bound(const MixtureSpec& spec, std::size_t large_batch) {
    std::size_t n = 0;
    for (std::size_t s : spec.resolved_sizes()) n += s;
    const double kappa_per_batch = static_cast<double>(spec.outliers) * static_cast<double>(large_batch) /
                                   static_cast<double>(n);
    return variance_gap_bound(kappa_per_batch, spec.outlier_radius, spec.dense_radius);
}

VarianceReport run_variance_probe(const ExperimentConfig& cfg, const Dataset& data, double bound) {
    cfg.validate();
    Engine engine(cfg, data, /*track_history=*/true);
    VarianceReport report;
    report.statistic = "trace of the empirical covariance of mini-batch mean gradients (all parameters) over " +
                       std::to_string(cfg.probe.resamples) + " resampled large batches at fixed parameters";
    report.trajectory = cfg.probe.trajectory;
    report.resamples = cfg.probe.resamples;
    report.batch_size = engine.batch_size();
    report.large_batch_size = engine.large_batch_size();
    report.bound = bound;

    std::vector<std::size_t> checkpoint_steps;
    for (std::size_t c = 1; c <= cfg.probe.checkpoints; ++c) {
        checkpoint_steps.push_back(c * cfg.steps / cfg.probe.checkpoints);
    }
    std::size_t next = 0;
    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        const auto idx = engine.draw_batch();
        std::optional<CandidateBatch> cand;
        const Selection sel = engine.select(cfg.probe.trajectory, idx, step, engine.subset_rng(), &cand);
        if (cand) {
            engine.update_history(*cand);
        } else {
            engine.track_history(idx, step);
        }
        engine.apply(engine.selection_gradient(idx, sel), step);
        engine.maybe_discover(step);

        while (next < checkpoint_steps.size() && checkpoint_steps[next] == step) {
            CounterRng rng(mix_seed(cfg.seed, 7, step));
            CounterRng pick(mix_seed(cfg.seed, 7, step), 1);
            std::vector<DenseVector> random_means, colm_means;
            for (std::size_t s = 0; s < cfg.probe.resamples; ++s) {
                const auto batch = rng.sample_without_replacement(engine.dataset_size(), engine.large_batch_size());
                const Selection rsel = engine.select(Method::random, batch, step + 1, pick, nullptr);
                const Selection csel = engine.select(Method::colm, batch, step + 1, pick, nullptr);
                random_means.push_back(engine.selection_gradient(batch, rsel));
                colm_means.push_back(engine.selection_gradient(batch, csel));
            }
            report.checkpoints.push_back(
                {next + 1, step, covariance_trace(random_means), covariance_trace(colm_means)});
            ++next;
        }
    }

    std::size_t lower = 0;
    std::vector<double> log_ratios;
    report.max_gap = -std::numeric_limits<double>::infinity();
    for (const auto& c : report.checkpoints) {
        if (c.colm_var < c.random_var) ++lower;
        report.max_gap = std::max(report.max_gap, c.random_var - c.colm_var);
        if (c.random_var > 0.0 && c.colm_var > 0.0) log_ratios.push_back(std::log(c.random_var / c.colm_var));
    }
    report.fraction_colm_lower = static_cast<double>(lower) / static_cast<double>(report.checkpoints.size());
    report.p_value = log_ratios.size() >= 2 ? one_sample_t_test(log_ratios) : 1.0;
    return report;
}

void write_variance_report(const std::filesystem::path& dir, const VarianceReport& report, DataFormat format) {
    std::string body;
    if (format == DataFormat::csv) {
        body = "# statistic: " + report.statistic + "\n";
        body += "checkpoint,step,random_var,colm_var,gap,bound\n";
        for (const auto& c : report.checkpoints) {
            body += std::to_string(c.index) + "," + std::to_string(c.step) + "," + number(c.random_var) + "," +
                    number(c.colm_var) + "," + number(c.random_var - c.colm_var) + "," + number(report.bound) + "\n";
        }
    } else {
        nlohmann::json head{{"statistic", report.statistic}};
        body = head.dump() + "\n";
        for (const auto& c : report.checkpoints) {
            body += "{\"checkpoint\":" + std::to_string(c.index) + ",\"step\":" + std::to_string(c.step) +
                    ",\"random_var\":" + format_double(c.random_var) + ",\"colm_var\":" + format_double(c.colm_var) +
                    ",\"gap\":" + format_double(c.random_var - c.colm_var) +
                    ",\"bound\":" + (std::isnan(report.bound) ? std::string("null") : format_double(report.bound)) +
                    "}\n";
        }
    }
    write_text(dir / ("variance." + to_string(format)), body);

    const nlohmann::json summary{
        {"statistic", report.statistic},
        {"trajectory", to_string(report.trajectory)},
        {"resamples", report.resamples},
        {"batch_size", report.batch_size},
        {"large_batch_size", report.large_batch_size},
        {"bound", std::isnan(report.bound) ? nlohmann::json(nullptr) : nlohmann::json(report.bound)},
        {"checkpoints", report.checkpoints.size()},
        {"fraction_colm_lower", report.fraction_colm_lower},
        {"max_gap", report.max_gap},
        {"p_value_log_ratio", report.p_value},
    };
    write_text(dir / "variance_summary.json", summary.dump(2) + "\n");
}

}  // namespace colm
