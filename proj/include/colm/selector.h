#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "colm/facility_location.h"
#include "colm/numeric.h"
#include "colm/optimizer.h"
#include "colm/toy_model.h"
#include "colm/zeroth_order.h"

namespace colm {

/// Small/big split of the sources over the full dataset.
struct SourceCatalog {
    std::map<int, std::size_t> source_sizes;
    /// |V| / c for c sources.
    double small_threshold = 0.0;
    std::set<int> small_ids;
    std::set<int> big_ids;

    bool is_small(int source_id) const;
    /// Throws std::invalid_argument for an unknown source.
    void require_known(int source_id) const;
};

/// Sources with fewer than |V|/c examples are small (strict comparison).
SourceCatalog classify_sources(const std::map<int, std::size_t>& source_sizes);

/// Catalog with an explicit small set; every other source is big.
SourceCatalog catalog_with_small(const std::map<int, std::size_t>& source_sizes, const std::set<int>& small_ids);

/// Catalog in which every source is big (keep-small disabled).
SourceCatalog catalog_all_big(const std::map<int, std::size_t>& source_sizes);

/// The large batch a coreset is selected from.
struct CandidateBatch {
    std::vector<std::size_t> dataset_indices;
    std::vector<int> source_ids;
    /// Last-projection zeroth-order gradient per member. Members of small
    /// sources may have an empty vector.
    std::vector<DenseVector> gradients;

    std::size_t size() const noexcept { return dataset_indices.size(); }
};

struct BudgetPlan {
    std::size_t total_budget = 0;
    /// Batch positions of small-source members (all of them are kept).
    std::vector<std::size_t> kept_small;
    /// Batch positions of each big source, ordered by dataset index.
    std::map<int, std::vector<std::size_t>> big_members;
    std::map<int, std::size_t> per_big_budget;
    /// Budgets before rounding.
    std::map<int, double> fractional;
    /// True when the small-source members alone reach the budget.
    bool small_exceeds_budget = false;
};

/// Keeps every small-source member and splits the rest of the budget across
/// big sources in proportion to their batch counts, rounding by largest
/// remainder (ties: larger source, then smaller id). Budgets never exceed a
/// source's batch count; any slack goes to sources with room.
BudgetPlan plan_budgets(const CandidateBatch& batch, const SourceCatalog& catalog, std::size_t budget);

enum class MaskAggregation { mean_abs, max_abs };

/// Default sparsity h = max(8, ceil(0.008 d)), capped at d.
std::size_t default_sparsity(std::size_t projection_dim);

struct GroupFeatures {
    /// Source id, or kPooledGroup for pooled selection.
    int source_id = 0;
    /// Batch positions, ordered by dataset index.
    std::vector<std::size_t> members;
    SparsityMask mask{1, {0}};
    /// Mask-restricted normalized features, aligned with `members`.
    std::vector<DenseVector> features;
};

inline constexpr int kPooledGroup = -1;

/// Normalized features of `members` restricted to the top-h coordinates of
/// their aggregated magnitudes.
GroupFeatures build_group_features(const CandidateBatch& batch, std::vector<std::size_t> members, int group_id,
                                   const SelectionState& state, std::size_t h, MaskAggregation aggregation);

/// Per-big-source features for the plan's big sources.
std::vector<GroupFeatures> build_features(const CandidateBatch& batch, const SelectionState& state, std::size_t h,
                                          const BudgetPlan& plan,
                                          MaskAggregation aggregation = MaskAggregation::mean_abs);

enum class SelectionGrouping { per_source, pooled };
enum class CoresetWeighting { uniform, cluster_size };
enum class GreedyVariant { lazy, naive };

struct SelectorConfig {
    std::size_t budget = 32;
    /// 0 selects default_sparsity().
    std::size_t sparsity = 0;
    MaskAggregation aggregation = MaskAggregation::mean_abs;
    SelectionGrouping grouping = SelectionGrouping::per_source;
    CoresetWeighting weighting = CoresetWeighting::uniform;
    GreedyVariant greedy = GreedyVariant::lazy;
};

enum class EntryRole { kept_small, medoid };

struct CoresetEntry {
    std::size_t position = 0;
    std::size_t dataset_index = 0;
    int source_id = 0;
    EntryRole role = EntryRole::medoid;
    double weight = 1.0;
};

struct GroupSelection {
    int group_id = 0;
    std::size_t budget = 0;
    SparsityMask mask{1, {0}};
    /// Selected batch positions in pick order.
    std::vector<std::size_t> medoids;
};

struct Coreset {
    /// Ordered by batch position.
    std::vector<CoresetEntry> entries;
    BudgetPlan plan;
    std::vector<GroupSelection> groups;

    std::size_t size() const noexcept { return entries.size(); }
    std::vector<std::size_t> positions() const;
    std::vector<std::size_t> dataset_indices() const;
};

/// Keeps all small-source members, then picks medoids per big source (or
/// from the pooled big members) by greedy facility location on l1 distances
/// between masked normalized features.
Coreset select_coreset(const CandidateBatch& batch, const SourceCatalog& catalog, const SelectionState& state,
                       const SelectorConfig& cfg);

enum class PerturbationSharing {
    /// Fresh direction per (step, example).
    per_example,
    /// One direction per step shared by the whole batch.
    shared_per_step,
};

/// Seed of the zeroth-order perturbation for one example at one step.
std::uint64_t perturbation_seed(std::uint64_t base_seed, PerturbationSharing sharing, std::size_t step,
                                std::size_t dataset_index) noexcept;

/// Builds the candidate batch for `indices`: one cached forward pass, then
/// last-projection SPSA gradients for members of big sources (all members
/// when `all_members` is set).
CandidateBatch make_candidate_batch(const ModelParams& params, std::span<const Example> data,
                                    const std::vector<std::size_t>& indices, const SourceCatalog& catalog,
                                    const SpsaConfig& spsa, PerturbationSharing sharing, std::size_t step,
                                    bool all_members = false);

/// k-means over activation rows; labels numbered by first appearance.
std::vector<int> discover_sources(std::span<const DenseVector> activations, std::size_t k_clusters,
                                  std::uint64_t seed);

}  // namespace colm
