#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "colm/numeric.h"

namespace colm {

/// Philox4x32-10 block function (Salmon et al., Random123). Pure: the same
/// (counter, key) always yields the same four words on every platform.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// SplitMix64 finalizer, used to derive child seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Combines a base seed with two tags (e.g. step and example index) into a
/// decorrelated child seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept;

/// Sequential random stream over Philox. A (seed, stream) pair names the
/// stream; draws walk the block counter.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

    std::uint32_t next_u32() noexcept;
    std::uint64_t next_u64() noexcept;

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept;
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller.
    double normal() noexcept;
    /// Unbiased integer in [0, n). Requires n > 0.
    std::size_t uniform_index(std::size_t n) noexcept;

    /// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    template <typename T>
    void shuffle(std::vector<T>& items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[uniform_index(i)]);
        }
    }

private:
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> buffer_{};
    std::size_t buffered_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

/// Deterministic standard-normal vector generator: the same (seed, dimension)
/// always regenerates the bit-identical vector, so perturbations never need
/// to be stored.
struct SeededGaussian {
    std::uint64_t seed = 0;
    std::size_t dimension = 1;

    DenseVector sample() const;
};

}  // namespace colm
