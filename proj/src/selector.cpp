#include "colm/selector.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "colm/clustering.h"
#include "colm/random.h"

namespace colm {

bool SourceCatalog::is_small(int source_id) const {
    require_known(source_id);
    return small_ids.count(source_id) > 0;
}

void SourceCatalog::require_known(int source_id) const {
    if (source_sizes.count(source_id) == 0) {
        throw std::invalid_argument("source " + std::to_string(source_id) + " is not in the catalog");
    }
}

namespace {

SourceCatalog base_catalog(const std::map<int, std::size_t>& source_sizes) {
    if (source_sizes.empty()) throw std::invalid_argument("classify_sources: no sources");
    SourceCatalog cat;
    cat.source_sizes = source_sizes;
    std::size_t total = 0;
    for (const auto& [id, n] : source_sizes) {
        if (n == 0) throw std::invalid_argument("classify_sources: source " + std::to_string(id) + " is empty");
        total += n;
    }
    cat.small_threshold = static_cast<double>(total) / static_cast<double>(source_sizes.size());
    return cat;
}

}  // namespace

SourceCatalog classify_sources(const std::map<int, std::size_t>& source_sizes) {
    SourceCatalog cat = base_catalog(source_sizes);
    for (const auto& [id, n] : source_sizes) {
        (static_cast<double>(n) < cat.small_threshold ? cat.small_ids : cat.big_ids).insert(id);
    }
    return cat;
}

SourceCatalog catalog_with_small(const std::map<int, std::size_t>& source_sizes, const std::set<int>& small_ids) {
    SourceCatalog cat = base_catalog(source_sizes);
    for (int id : small_ids) cat.require_known(id);
    for (const auto& [id, _] : source_sizes) (small_ids.count(id) ? cat.small_ids : cat.big_ids).insert(id);
    return cat;
}

SourceCatalog catalog_all_big(const std::map<int, std::size_t>& source_sizes) {
    return catalog_with_small(source_sizes, {});
}

BudgetPlan plan_budgets(const CandidateBatch& batch, const SourceCatalog& catalog, std::size_t budget) {
    if (budget == 0) throw std::invalid_argument("plan_budgets: budget must be >= 1");
    if (batch.size() == 0) throw std::invalid_argument("plan_budgets: empty batch");
    if (batch.source_ids.size() != batch.size()) throw DimensionError("plan_budgets: source ids misaligned");

    BudgetPlan plan;
    plan.total_budget = budget;
    for (std::size_t pos = 0; pos < batch.size(); ++pos) {
        const int src = batch.source_ids[pos];
        if (catalog.is_small(src)) {
            plan.kept_small.push_back(pos);
        } else {
            plan.big_members[src].push_back(pos);
        }
    }
    for (auto& [_, members] : plan.big_members) {
        std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            return batch.dataset_indices[a] < batch.dataset_indices[b];
        });
    }

    const std::size_t kept = plan.kept_small.size();
    for (const auto& [src, _] : plan.big_members) {
        plan.per_big_budget[src] = 0;
        plan.fractional[src] = 0.0;
    }
    if (kept >= budget) {
        plan.small_exceeds_budget = true;
        return plan;
    }
    const std::size_t remaining = budget - kept;
    const std::size_t big_total = batch.size() - kept;
    if (big_total == 0) return plan;

    if (remaining >= big_total) {
        for (const auto& [src, members] : plan.big_members) {
            plan.per_big_budget[src] = members.size();
            plan.fractional[src] = static_cast<double>(remaining) * static_cast<double>(members.size()) /
                                   static_cast<double>(big_total);
        }
        return plan;
    }

    // Exact rational arithmetic: b_q = remaining * n_q / big_total.
    struct Share {
        int src;
        std::size_t count;
        std::size_t remainder;
    };
    std::vector<Share> shares;
    std::size_t assigned = 0;
    for (const auto& [src, members] : plan.big_members) {
        const std::size_t numer = remaining * members.size();
        plan.per_big_budget[src] = numer / big_total;
        plan.fractional[src] = static_cast<double>(numer) / static_cast<double>(big_total);
        assigned += numer / big_total;
        shares.push_back({src, members.size(), numer % big_total});
    }
    std::sort(shares.begin(), shares.end(), [](const Share& a, const Share& b) {
        if (a.remainder != b.remainder) return a.remainder > b.remainder;
        if (a.count != b.count) return a.count > b.count;
        return a.src < b.src;
    });
    for (std::size_t i = 0; assigned < remaining; ++i, ++assigned) ++plan.per_big_budget[shares[i].src];
    return plan;
}

std::size_t default_sparsity(std::size_t projection_dim) {
    const auto scaled = static_cast<std::size_t>(std::ceil(0.008 * static_cast<double>(projection_dim)));
    return std::min(projection_dim, std::max<std::size_t>(8, scaled));
}

GroupFeatures build_group_features(const CandidateBatch& batch, std::vector<std::size_t> members, int group_id,
                                   const SelectionState& state, std::size_t h, MaskAggregation aggregation) {
    if (members.empty()) throw std::invalid_argument("build_group_features: empty group");
    GroupFeatures out;
    out.source_id = group_id;
    out.members = std::move(members);

    std::vector<DenseVector> normalized;
    normalized.reserve(out.members.size());
    for (std::size_t pos : out.members) {
        const DenseVector& g = batch.gradients.at(pos);
        if (g.size() != state.m_hat.size()) {
            throw DimensionError("build_features: example at batch position " + std::to_string(pos) +
                                 " has a gradient of length " + std::to_string(g.size()) + ", expected " +
                                 std::to_string(state.m_hat.size()));
        }
        normalized.push_back(normalized_feature(state, g));
    }
    const std::size_t dim = state.m_hat.size();
    if (h == 0 || h > dim) {
        throw std::invalid_argument("build_features: sparsity " + std::to_string(h) + " outside [1, " +
                                    std::to_string(dim) + "]");
    }
    DenseVector magnitude(dim);
    for (const auto& f : normalized) {
        for (std::size_t j = 0; j < dim; ++j) {
            if (aggregation == MaskAggregation::mean_abs) {
                magnitude[j] += std::abs(f[j]);
            } else {
                magnitude[j] = std::max(magnitude[j], std::abs(f[j]));
            }
        }
    }
    if (aggregation == MaskAggregation::mean_abs) magnitude *= 1.0 / static_cast<double>(normalized.size());
    out.mask = top_h_mask(magnitude, h);
    out.features.reserve(normalized.size());
    for (const auto& f : normalized) out.features.push_back(restrict_to(f, out.mask));
    return out;
}

std::vector<GroupFeatures> build_features(const CandidateBatch& batch, const SelectionState& state, std::size_t h,
                                          const BudgetPlan& plan, MaskAggregation aggregation) {
    std::vector<GroupFeatures> groups;
    for (const auto& [src, members] : plan.big_members) {
        groups.push_back(build_group_features(batch, members, src, state, h, aggregation));
    }
    return groups;
}

std::vector<std::size_t> Coreset::positions() const {
    std::vector<std::size_t> out;
    for (const auto& e : entries) out.push_back(e.position);
    return out;
}

std::vector<std::size_t> Coreset::dataset_indices() const {
    std::vector<std::size_t> out;
    for (const auto& e : entries) out.push_back(e.dataset_index);
    return out;
}

Coreset select_coreset(const CandidateBatch& batch, const SourceCatalog& catalog, const SelectionState& state,
                       const SelectorConfig& cfg) {
    Coreset coreset;
    coreset.plan = plan_budgets(batch, catalog, cfg.budget);
    const BudgetPlan& plan = coreset.plan;
    const std::size_t h = cfg.sparsity == 0 ? default_sparsity(state.m_hat.size()) : cfg.sparsity;

    for (std::size_t pos : plan.kept_small) {
        coreset.entries.push_back({pos, batch.dataset_indices[pos], batch.source_ids[pos], EntryRole::kept_small, 1.0});
    }

    std::vector<std::pair<std::vector<std::size_t>, std::size_t>> group_inputs;  // members, budget
    std::vector<int> group_ids;
    if (cfg.grouping == SelectionGrouping::per_source) {
        for (const auto& [src, members] : plan.big_members) {
            group_inputs.emplace_back(members, plan.per_big_budget.at(src));
            group_ids.push_back(src);
        }
    } else if (!plan.big_members.empty()) {
        std::vector<std::size_t> members;
        std::size_t budget = 0;
        for (const auto& [src, m] : plan.big_members) {
            members.insert(members.end(), m.begin(), m.end());
            budget += plan.per_big_budget.at(src);
        }
        std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            return batch.dataset_indices[a] < batch.dataset_indices[b];
        });
        group_inputs.emplace_back(std::move(members), budget);
        group_ids.push_back(kPooledGroup);
    }

    for (std::size_t g = 0; g < group_inputs.size(); ++g) {
        auto& [members, budget] = group_inputs[g];
        GroupFeatures feats = build_group_features(batch, members, group_ids[g], state, h, cfg.aggregation);
        GroupSelection sel;
        sel.group_id = group_ids[g];
        sel.budget = budget;
        sel.mask = feats.mask;
        if (budget > 0) {
            const auto problem = FacilityLocationProblem::from_points(feats.features, Metric::l1, budget);
            const MedoidSolution sol =
                cfg.greedy == GreedyVariant::lazy ? lazy_greedy_maximize(problem) : greedy_maximize(problem);
            for (std::size_t slot = 0; slot < sol.selected.size(); ++slot) {
                const std::size_t pos = feats.members[sol.selected[slot]];
                sel.medoids.push_back(pos);
                const double weight = cfg.weighting == CoresetWeighting::uniform
                                          ? 1.0
                                          : static_cast<double>(sol.cluster_sizes[slot]);
                coreset.entries.push_back(
                    {pos, batch.dataset_indices[pos], batch.source_ids[pos], EntryRole::medoid, weight});
            }
        }
        coreset.groups.push_back(std::move(sel));
    }

    std::sort(coreset.entries.begin(), coreset.entries.end(),
              [](const CoresetEntry& a, const CoresetEntry& b) { return a.position < b.position; });
    return coreset;
}

std::uint64_t perturbation_seed(std::uint64_t base_seed, PerturbationSharing sharing, std::size_t step,
                                std::size_t dataset_index) noexcept {
    if (sharing == PerturbationSharing::shared_per_step) return mix_seed(base_seed, step, ~std::uint64_t{0});
    return mix_seed(base_seed, step, dataset_index);
}

CandidateBatch make_candidate_batch(const ModelParams& params, std::span<const Example> data,
                                    const std::vector<std::size_t>& indices, const SourceCatalog& catalog,
                                    const SpsaConfig& spsa, PerturbationSharing sharing, std::size_t step,
                                    bool all_members) {
    CandidateBatch batch;
    batch.dataset_indices = indices;
    std::vector<Example> members;
    members.reserve(indices.size());
    for (std::size_t idx : indices) {
        if (idx >= data.size()) throw std::out_of_range("make_candidate_batch: index out of range");
        members.push_back(data[idx]);
        batch.source_ids.push_back(data[idx].source_id);
    }
    batch.gradients.resize(indices.size());
    const ForwardResult fwd = forward_cached(params, members);
    for (std::size_t pos = 0; pos < indices.size(); ++pos) {
        if (!all_members && catalog.is_small(batch.source_ids[pos])) continue;
        SpsaConfig cfg = spsa;
        cfg.seed = perturbation_seed(spsa.seed, sharing, step, indices[pos]);
        batch.gradients[pos] = spsa_last_projection(params, members[pos], fwd.cache, pos, cfg);
    }
    return batch;
}

std::vector<int> discover_sources(std::span<const DenseVector> activations, std::size_t k_clusters,
                                  std::uint64_t seed) {
    return kmeans(activations, k_clusters, seed).labels;
}

}  // namespace colm
