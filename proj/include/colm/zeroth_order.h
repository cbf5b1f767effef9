#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "colm/numeric.h"
#include "colm/toy_model.h"

namespace colm {

struct SpsaConfig {
    double perturbation_scale = 1e-3;
    std::uint64_t seed = 0;
    std::size_t probes = 1;
    /// Perturb the projection bias together with its weights.
    bool perturb_bias = true;

    void validate() const;
};

/// Raised when a perturbed loss evaluates to NaN or infinity.
class NonFiniteLossError : public std::runtime_error {
public:
    NonFiniteLossError(std::size_t probe, const std::string& what)
        : std::runtime_error(what), probe_(probe) {}
    std::size_t probe() const noexcept { return probe_; }

private:
    std::size_t probe_;
};

using LossFunction = std::function<double(const DenseVector&)>;

/// Seed of the perturbation used by probe `probe`.
std::uint64_t probe_seed(const SpsaConfig& cfg, std::size_t probe) noexcept;

/// Central-difference directional derivative (L(x+eps z) - L(x-eps z)) / (2 eps).
/// `probe` only labels the error if a loss is non-finite.
double spsa_coefficient(const LossFunction& loss, const DenseVector& theta, const DenseVector& direction,
                        double scale, std::size_t probe = 0);

/// Probe-averaged SPSA gradient of an arbitrary loss over all coordinates.
DenseVector spsa_estimate(const LossFunction& loss, const DenseVector& theta, const SpsaConfig& cfg);

/// SPSA gradient of the per-example loss over every model parameter.
DenseVector spsa_full(const ModelParams& params, const Example& example, const SpsaConfig& cfg);

/// One probe: the direction is regenerated from `seed`, never stored.
struct SpsaProbe {
    std::uint64_t seed = 0;
    double coefficient = 0.0;
};

/// Perturbation over the flattened projection block for one probe.
DenseVector projection_direction(const ModelShape& shape, std::uint64_t seed, bool perturb_bias);

/// Per-probe directional derivatives for the projection block, evaluated
/// from the cached penultimate activation row `row` (no hidden-layer work).
std::vector<SpsaProbe> spsa_last_projection_probes(const ModelParams& params, const Example& example,
                                                   const ActivationCache& cache, std::size_t row,
                                                   const SpsaConfig& cfg);

/// Rebuilds the probe-averaged estimate sum_p c_p z_p / P from stored scalars.
DenseVector reconstruct_estimate(const ModelShape& shape, const std::vector<SpsaProbe>& probes, bool perturb_bias);

/// Projection-block SPSA gradient (length projection_dim()).
DenseVector spsa_last_projection(const ModelParams& params, const Example& example, const ActivationCache& cache,
                                 std::size_t row, const SpsaConfig& cfg);

}  // namespace colm
