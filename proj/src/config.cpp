#include "colm/config.h"

#include <fstream>
#include <sstream>
#include <utility>

#include "colm/errors.h"

namespace colm {

using nlohmann::json;

namespace {

template <typename E>
using EnumTable = std::vector<std::pair<std::string, E>>;

const EnumTable<Method>& method_table() {
    static const EnumTable<Method> t{{"random", Method::random},
                                     {"colm", Method::colm},
                                     {"big-loss", Method::big_loss},
                                     {"grad-norm", Method::grad_norm},
                                     {"least-confidence", Method::least_confidence},
                                     {"hidden-fl", Method::hidden_fl}};
    return t;
}
const EnumTable<LabelRule> label_rules{{"shared_linear", LabelRule::shared_linear},
                                       {"source_linear", LabelRule::source_linear},
                                       {"center", LabelRule::center}};
const EnumTable<DataFormat> formats{{"csv", DataFormat::csv}, {"jsonl", DataFormat::jsonl}};
const EnumTable<OptimizerKind> optimizers{{"adam", OptimizerKind::adam}, {"sgd", OptimizerKind::sgd}};
const EnumTable<LrScheduleKind> schedules{{"constant", LrScheduleKind::constant}, {"cosine", LrScheduleKind::cosine}};
const EnumTable<MaskAggregation> aggregations{{"mean_abs", MaskAggregation::mean_abs},
                                              {"max_abs", MaskAggregation::max_abs}};
const EnumTable<SelectionGrouping> groupings{{"per_source", SelectionGrouping::per_source},
                                             {"pooled", SelectionGrouping::pooled}};
const EnumTable<CoresetWeighting> weightings{{"uniform", CoresetWeighting::uniform},
                                             {"cluster_size", CoresetWeighting::cluster_size}};
const EnumTable<GreedyVariant> greedies{{"lazy", GreedyVariant::lazy}, {"naive", GreedyVariant::naive}};
const EnumTable<NormalizationMode> normalizations{{"blended", NormalizationMode::blended},
                                                  {"shared_second_moment", NormalizationMode::shared_second_moment},
                                                  {"none", NormalizationMode::none}};
const EnumTable<PerturbationSharing> sharings{{"per_example", PerturbationSharing::per_example},
                                              {"shared_per_step", PerturbationSharing::shared_per_step}};

template <typename E>
E enum_from(const EnumTable<E>& table, const std::string& value, const std::string& where) {
    for (const auto& [name, e] : table) {
        if (name == value) return e;
    }
    std::string options;
    for (const auto& [name, _] : table) options += (options.empty() ? "" : ", ") + name;
    throw ConfigError(where + ": unknown value '" + value + "' (expected one of " + options + ")");
}

template <typename E>
std::string enum_name(const EnumTable<E>& table, E value) {
    for (const auto& [name, e] : table) {
        if (e == value) return name;
    }
    return "?";
}

/// Reads fields of one JSON object and rejects keys it was never asked for.
class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <typename T>
    void get(const std::string& key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        const json& v = j_.at(key);
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ConfigError("");
                out = v.get<bool>();
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0)) throw ConfigError("");
                out = v.get<T>();
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!v.is_number()) throw ConfigError("");
                out = v.get<T>();
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw ConfigError("");
                out = v.get<std::string>();
            } else {
                out = v.get<T>();
            }
        } catch (const std::exception&) {
            throw ConfigError(where_ + "." + key + ": wrong type");
        }
    }

    template <typename E>
    void get_enum(const std::string& key, E& out, const EnumTable<E>& table) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        if (!j_.at(key).is_string()) throw ConfigError(where_ + "." + key + ": expected a string");
        out = enum_from(table, j_.at(key).get<std::string>(), where_ + "." + key);
    }

    void get_optional(const std::string& key, std::optional<double>& out) {
        seen_.insert(key);
        if (!j_.contains(key) || j_.at(key).is_null()) return;
        if (!j_.at(key).is_number()) throw ConfigError(where_ + "." + key + ": expected a number or null");
        out = j_.at(key).get<double>();
    }

    const json* child(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    std::string path(const std::string& key) const { return where_ + "." + key; }

    void finish() const {
        for (const auto& [key, _] : j_.items()) {
            if (!seen_.count(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
        }
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

}  // namespace

Method parse_method(const std::string& name) { return enum_from(method_table(), name, "method"); }
std::string to_string(Method method) { return enum_name(method_table(), method); }

std::vector<Method> all_methods() {
    std::vector<Method> out;
    for (const auto& [_, m] : method_table()) out.push_back(m);
    return out;
}

MixtureSpec parse_mixture(const json& j) {
    MixtureSpec s;
    Reader r(j, "mixture");
    r.get("num_sources", s.num_sources);
    r.get("source_sizes", s.source_sizes);
    r.get("largest_source", s.largest_source);
    r.get("imbalance_ratio", s.imbalance_ratio);
    r.get("centers_per_source", s.centers_per_source);
    r.get("dense_radius", s.dense_radius);
    r.get("dense_scale", s.dense_scale);
    r.get("outliers", s.outliers);
    r.get("outlier_radius", s.outlier_radius);
    r.get("feature_dim", s.feature_dim);
    r.get("center_spread", s.center_spread);
    if (const json* centers = r.child("centers")) {
        if (!centers->is_array()) throw ConfigError("mixture.centers: expected an array of arrays");
        for (const auto& c : *centers) {
            if (!c.is_array()) throw ConfigError("mixture.centers: expected an array of arrays");
            s.centers.emplace_back(c.get<std::vector<double>>());
        }
    }
    r.get("num_classes", s.num_classes);
    r.get_enum("label_rule", s.label_rule, label_rules);
    r.get("label_noise", s.label_noise);
    r.get("seed", s.seed);
    r.finish();
    s.validate();
    return s;
}

json mixture_to_json(const MixtureSpec& s) {
    json centers = json::array();
    for (const auto& c : s.centers) centers.push_back(c.values());
    return json{{"num_sources", s.num_sources},
                {"source_sizes", s.source_sizes},
                {"largest_source", s.largest_source},
                {"imbalance_ratio", s.imbalance_ratio},
                {"centers_per_source", s.centers_per_source},
                {"dense_radius", s.dense_radius},
                {"dense_scale", s.dense_scale},
                {"outliers", s.outliers},
                {"outlier_radius", s.outlier_radius},
                {"feature_dim", s.feature_dim},
                {"center_spread", s.center_spread},
                {"centers", centers},
                {"num_classes", s.num_classes},
                {"label_rule", enum_name(label_rules, s.label_rule)},
                {"label_noise", s.label_noise},
                {"seed", s.seed}};
}

void ExperimentConfig::validate() const {
    if (steps == 0) throw ConfigError("steps must be >= 1");
    if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
    if (resolved_large_batch() < batch_size) throw ConfigError("large_batch_size must be >= batch_size");
    if (hidden_dim == 0) throw ConfigError("hidden_dim must be >= 1");
    if (!(optimizer.lr > 0.0)) throw ConfigError("optimizer.lr must be positive");
    if (!(spsa.perturbation_scale > 0.0)) throw ConfigError("spsa.perturbation_scale must be positive");
    if (spsa.probes == 0) throw ConfigError("spsa.probes must be >= 1");
    if (logging.variance_interval == 0) throw ConfigError("logging.variance_interval must be >= 1");
    if (logging.variance_resamples < 30) throw ConfigError("logging.variance_resamples must be >= 30");
    if (probe.resamples < 30) throw ConfigError("probe.resamples must be >= 30");
    if (probe.checkpoints == 0 || probe.checkpoints > steps) {
        throw ConfigError("probe.checkpoints must be in [1, steps]");
    }
    if (discovery.enabled) {
        if (discovery.clusters == 0) throw ConfigError("discovery.clusters must be >= 1");
        if (discovery.warmup_steps >= steps) throw ConfigError("discovery.warmup_steps must be below steps");
    }
    if (bench_methods.empty()) throw ConfigError("bench.methods must not be empty");
}

ExperimentConfig parse_experiment_config(const json& j) {
    ExperimentConfig c;
    Reader r(j, "config");
    r.get("seed", c.seed);
    r.get("output", c.output);
    r.get_enum("format", c.format, formats);
    std::string method = to_string(c.method);
    r.get("method", method);
    c.method = parse_method(method);
    r.get("steps", c.steps);
    r.get("batch_size", c.batch_size);
    r.get("large_batch_size", c.large_batch_size);
    r.get("hidden_dim", c.hidden_dim);

    if (const json* d = r.child("dataset")) {
        Reader dr(*d, "dataset");
        dr.get("path", c.dataset.path);
        dr.get_enum("format", c.dataset.format, formats);
        if (const json* syn = dr.child("synthetic")) c.dataset.synthetic = parse_mixture(*syn);
        dr.finish();
    }
    if (const json* o = r.child("optimizer")) {
        Reader orr(*o, "optimizer");
        orr.get_enum("name", c.optimizer.kind, optimizers);
        orr.get("lr", c.optimizer.lr);
        orr.get("beta1", c.optimizer.beta1);
        orr.get("beta2", c.optimizer.beta2);
        orr.get("eps", c.optimizer.eps);
        orr.get_enum("schedule", c.optimizer.schedule, schedules);
        orr.get("warmup_fraction", c.optimizer.warmup_fraction);
        orr.finish();
    }
    if (const json* s = r.child("selection")) {
        Reader sr(*s, "selection");
        sr.get("sparsity", c.selection.sparsity);
        sr.get_enum("aggregation", c.selection.aggregation, aggregations);
        sr.get_enum("grouping", c.selection.grouping, groupings);
        sr.get_enum("weighting", c.selection.weighting, weightings);
        sr.get_enum("greedy", c.selection.greedy, greedies);
        sr.get("keep_small", c.selection.keep_small);
        if (const json* small = sr.child("small_sources")) {
            if (small->is_string()) {
                if (small->get<std::string>() != "auto") {
                    throw ConfigError("selection.small_sources: expected \"auto\" or a list of source ids");
                }
            } else if (small->is_array()) {
                std::set<int> ids;
                for (const auto& id : *small) {
                    if (!id.is_number_integer()) throw ConfigError("selection.small_sources: ids must be integers");
                    ids.insert(id.get<int>());
                }
                c.selection.small_sources = ids;
            } else {
                throw ConfigError("selection.small_sources: expected \"auto\" or a list of source ids");
            }
        }
        sr.get_enum("normalization", c.selection.normalization, normalizations);
        sr.get("beta1", c.selection.beta1);
        sr.get("beta2", c.selection.beta2);
        sr.get("eps", c.selection.eps);
        sr.finish();
    }
    if (const json* s = r.child("spsa")) {
        Reader sr(*s, "spsa");
        sr.get("perturbation_scale", c.spsa.perturbation_scale);
        sr.get("probes", c.spsa.probes);
        sr.get("perturb_bias", c.spsa.perturb_bias);
        sr.get_enum("sharing", c.spsa.sharing, sharings);
        sr.finish();
    }
    if (const json* s = r.child("discovery")) {
        Reader sr(*s, "discovery");
        sr.get("enabled", c.discovery.enabled);
        sr.get("clusters", c.discovery.clusters);
        sr.get("warmup_steps", c.discovery.warmup_steps);
        sr.get("refreshes", c.discovery.refreshes);
        sr.finish();
    }
    if (const json* s = r.child("logging")) {
        Reader sr(*s, "logging");
        sr.get("variance_interval", c.logging.variance_interval);
        sr.get("variance_resamples", c.logging.variance_resamples);
        sr.get("wall_time_in_metrics", c.logging.wall_time_in_metrics);
        sr.finish();
    }
    if (const json* s = r.child("probe")) {
        Reader sr(*s, "probe");
        sr.get("checkpoints", c.probe.checkpoints);
        sr.get("resamples", c.probe.resamples);
        std::string trajectory = to_string(c.probe.trajectory);
        sr.get("trajectory", trajectory);
        c.probe.trajectory = parse_method(trajectory);
        sr.get_optional("bound", c.probe.bound);
        sr.finish();
    }
    if (const json* s = r.child("bench")) {
        Reader sr(*s, "bench");
        std::vector<std::string> names;
        sr.get("methods", names);
        if (sr.has("methods")) {
            c.bench_methods.clear();
            for (const auto& n : names) c.bench_methods.push_back(parse_method(n));
        }
        sr.finish();
    }
    r.finish();
    c.validate();
    return c;
}

json experiment_to_json(const ExperimentConfig& c) {
    std::vector<std::string> methods;
    for (Method m : c.bench_methods) methods.push_back(to_string(m));
    json small = "auto";
    if (c.selection.small_sources) small = std::vector<int>(c.selection.small_sources->begin(), c.selection.small_sources->end());
    return json{
        {"seed", c.seed},
        {"output", c.output},
        {"format", enum_name(formats, c.format)},
        {"method", to_string(c.method)},
        {"steps", c.steps},
        {"batch_size", c.batch_size},
        {"large_batch_size", c.large_batch_size},
        {"hidden_dim", c.hidden_dim},
        {"dataset",
         {{"path", c.dataset.path},
          {"format", enum_name(formats, c.dataset.format)},
          {"synthetic", mixture_to_json(c.dataset.synthetic)}}},
        {"optimizer",
         {{"name", enum_name(optimizers, c.optimizer.kind)},
          {"lr", c.optimizer.lr},
          {"beta1", c.optimizer.beta1},
          {"beta2", c.optimizer.beta2},
          {"eps", c.optimizer.eps},
          {"schedule", enum_name(schedules, c.optimizer.schedule)},
          {"warmup_fraction", c.optimizer.warmup_fraction}}},
        {"selection",
         {{"sparsity", c.selection.sparsity},
          {"aggregation", enum_name(aggregations, c.selection.aggregation)},
          {"grouping", enum_name(groupings, c.selection.grouping)},
          {"weighting", enum_name(weightings, c.selection.weighting)},
          {"greedy", enum_name(greedies, c.selection.greedy)},
          {"keep_small", c.selection.keep_small},
          {"small_sources", small},
          {"normalization", enum_name(normalizations, c.selection.normalization)},
          {"beta1", c.selection.beta1},
          {"beta2", c.selection.beta2},
          {"eps", c.selection.eps}}},
        {"spsa",
         {{"perturbation_scale", c.spsa.perturbation_scale},
          {"probes", c.spsa.probes},
          {"perturb_bias", c.spsa.perturb_bias},
          {"sharing", enum_name(sharings, c.spsa.sharing)}}},
        {"discovery",
         {{"enabled", c.discovery.enabled},
          {"clusters", c.discovery.clusters},
          {"warmup_steps", c.discovery.warmup_steps},
          {"refreshes", c.discovery.refreshes}}},
        {"logging",
         {{"variance_interval", c.logging.variance_interval},
          {"variance_resamples", c.logging.variance_resamples},
          {"wall_time_in_metrics", c.logging.wall_time_in_metrics}}},
        {"probe",
         {{"checkpoints", c.probe.checkpoints},
          {"resamples", c.probe.resamples},
          {"trajectory", to_string(c.probe.trajectory)},
          {"bound", c.probe.bound ? json(*c.probe.bound) : json(nullptr)}}},
        {"bench", {{"methods", methods}}},
    };
}

void TheoryConfig::validate() const {
    if (k == 0 || m == 0) throw ConfigError("theory: k and m must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("theory.delta must be in (0, 1)");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("theory.epsilon must be in (0, 1]");
    if (!(alpha_star > 0.0)) throw ConfigError("theory.alpha_star must be positive");
    if (!(alpha > 0.0 && alpha <= alpha_star)) throw ConfigError("theory.alpha must be in (0, alpha_star]");
    if (beta && !(*beta > 0.0)) throw ConfigError("theory.beta must be positive");
    if (dim == 0) throw ConfigError("theory.dim must be >= 1");
    if (trials == 0) throw ConfigError("theory.trials must be >= 1");
    if (!(alpha_u > alpha_star)) throw ConfigError("theory.alpha_u must exceed alpha_star");
    if (kappa_per_partition < 0.0) throw ConfigError("theory.kappa_per_partition must be >= 0");
    if (partition_size == 0 || variance_centers == 0) {
        throw ConfigError("theory.partition_size and theory.variance_centers must be >= 1");
    }
    if (!(undersize_factor > 0.0 && undersize_factor < 1.0)) {
        throw ConfigError("theory.undersize_factor must be in (0, 1)");
    }
}

TheoryConfig parse_theory_config(const json& j) {
    TheoryConfig c;
    Reader r(j, "config");
    r.get("seed", c.seed);
    r.get("output", c.output);
    r.get_enum("format", c.format, formats);
    if (const json* t = r.child("theory")) {
        Reader tr(*t, "theory");
        tr.get("k", c.k);
        tr.get("m", c.m);
        tr.get("delta", c.delta);
        tr.get("epsilon", c.epsilon);
        tr.get("alpha_star", c.alpha_star);
        tr.get("alpha", c.alpha);
        tr.get_optional("beta", c.beta);
        tr.get("dim", c.dim);
        tr.get("center_spread", c.center_spread);
        tr.get("dense_scale", c.dense_scale);
        tr.get("trials", c.trials);
        tr.get("kappa_per_partition", c.kappa_per_partition);
        tr.get("alpha_u", c.alpha_u);
        tr.get("partition_size", c.partition_size);
        tr.get("variance_centers", c.variance_centers);
        tr.get("undersize_factor", c.undersize_factor);
        tr.finish();
    }
    r.finish();
    c.validate();
    return c;
}

json theory_to_json(const TheoryConfig& c) {
    return json{{"seed", c.seed},
                {"output", c.output},
                {"format", enum_name(formats, c.format)},
                {"theory",
                 {{"k", c.k},
                  {"m", c.m},
                  {"delta", c.delta},
                  {"epsilon", c.epsilon},
                  {"alpha_star", c.alpha_star},
                  {"alpha", c.alpha},
                  {"beta", c.beta ? json(*c.beta) : json(nullptr)},
                  {"dim", c.dim},
                  {"center_spread", c.center_spread},
                  {"dense_scale", c.dense_scale},
                  {"trials", c.trials},
                  {"kappa_per_partition", c.kappa_per_partition},
                  {"alpha_u", c.alpha_u},
                  {"partition_size", c.partition_size},
                  {"variance_centers", c.variance_centers},
                  {"undersize_factor", c.undersize_factor}}}};
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace colm
