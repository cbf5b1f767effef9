#include "colm/zeroth_order.h"

#include <cmath>
#include <string>

#include "colm/random.h"

namespace colm {

void SpsaConfig::validate() const {
    if (!(perturbation_scale > 0.0) || !std::isfinite(perturbation_scale)) {
        throw std::invalid_argument("SpsaConfig: perturbation_scale must be positive");
    }
    if (probes == 0) throw std::invalid_argument("SpsaConfig: probes must be >= 1");
}

std::uint64_t probe_seed(const SpsaConfig& cfg, std::size_t probe) noexcept {
    return mix_seed(cfg.seed, 0x5A5Au, probe);
}

double spsa_coefficient(const LossFunction& loss, const DenseVector& theta, const DenseVector& direction,
                        double scale, std::size_t probe) {
    if (theta.size() != direction.size()) throw DimensionError("spsa_coefficient: direction length mismatch");
    DenseVector plus = theta;
    plus.add_scaled(direction, scale);
    DenseVector minus = theta;
    minus.add_scaled(direction, -scale);
    const double lp = loss(plus);
    const double lm = loss(minus);
    if (!std::isfinite(lp) || !std::isfinite(lm)) {
        throw NonFiniteLossError(probe, "SPSA probe " + std::to_string(probe) + ": non-finite perturbed loss");
    }
    return (lp - lm) / (2.0 * scale);
}

DenseVector spsa_estimate(const LossFunction& loss, const DenseVector& theta, const SpsaConfig& cfg) {
    cfg.validate();
    DenseVector acc(theta.size());
    for (std::size_t p = 0; p < cfg.probes; ++p) {
        const DenseVector z = SeededGaussian{probe_seed(cfg, p), theta.size()}.sample();
        acc.add_scaled(z, spsa_coefficient(loss, theta, z, cfg.perturbation_scale, p));
    }
    acc *= 1.0 / static_cast<double>(cfg.probes);
    return acc;
}

DenseVector spsa_full(const ModelParams& params, const Example& example, const SpsaConfig& cfg) {
    const ModelShape shape = params.shape();
    auto loss = [&](const DenseVector& flat) { return per_example_loss(ModelParams(shape, flat), example); };
    return spsa_estimate(loss, params.flat(), cfg);
}

DenseVector projection_direction(const ModelShape& shape, std::uint64_t seed, bool perturb_bias) {
    DenseVector z = SeededGaussian{seed, shape.projection_dim()}.sample();
    if (!perturb_bias) {
        const std::size_t bias_begin = shape.hidden_dim * shape.num_classes;
        for (std::size_t k = bias_begin; k < z.size(); ++k) z[k] = 0.0;
    }
    return z;
}

std::vector<SpsaProbe> spsa_last_projection_probes(const ModelParams& params, const Example& example,
                                                   const ActivationCache& cache, std::size_t row,
                                                   const SpsaConfig& cfg) {
    cfg.validate();
    const ModelShape& shape = params.shape();
    const auto activation = cache.row(row);
    const auto proj = params.projection();
    const DenseVector base(std::vector<double>(proj.begin(), proj.end()));
    auto loss = [&](const DenseVector& block) {
        return loss_from_activation(shape, block.span(), activation, example.label);
    };
    std::vector<SpsaProbe> probes;
    probes.reserve(cfg.probes);
    for (std::size_t p = 0; p < cfg.probes; ++p) {
        const std::uint64_t seed = probe_seed(cfg, p);
        const DenseVector z = projection_direction(shape, seed, cfg.perturb_bias);
        probes.push_back({seed, spsa_coefficient(loss, base, z, cfg.perturbation_scale, p)});
    }
    return probes;
}

DenseVector reconstruct_estimate(const ModelShape& shape, const std::vector<SpsaProbe>& probes, bool perturb_bias) {
    DenseVector acc(shape.projection_dim());
    if (probes.empty()) return acc;
    for (const auto& probe : probes) {
        acc.add_scaled(projection_direction(shape, probe.seed, perturb_bias), probe.coefficient);
    }
    acc *= 1.0 / static_cast<double>(probes.size());
    return acc;
}

DenseVector spsa_last_projection(const ModelParams& params, const Example& example, const ActivationCache& cache,
                                 std::size_t row, const SpsaConfig& cfg) {
    return reconstruct_estimate(params.shape(), spsa_last_projection_probes(params, example, cache, row, cfg),
                                cfg.perturb_bias);
}

}  // namespace colm
