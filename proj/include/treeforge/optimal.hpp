#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "treeforge/dataset.hpp"
#include "treeforge/error.hpp"
#include "treeforge/tree.hpp"

namespace treeforge {

/// Bit j of a row is set iff feature `feature` <= `threshold`.
struct BitThreshold {
    int feature = 0;
    double threshold = 0.0;
    bool operator==(const BitThreshold&) const = default;
};

/// Column-major boolean matrix packed into 64-bit words.
class BinarizedDataset {
public:
    BinarizedDataset(std::size_t n_rows, std::vector<BitThreshold> thresholds, std::vector<std::uint64_t> columns,
                     LabelVector labels, int n_classes);

    std::size_t n_rows() const noexcept { return n_rows_; }
    std::size_t n_bits() const noexcept { return thresholds_.size(); }
    std::size_t n_words() const noexcept { return words_; }
    int n_classes() const noexcept { return n_classes_; }
    std::span<const ClassId> labels() const noexcept { return labels_; }
    const std::vector<BitThreshold>& thresholds() const noexcept { return thresholds_; }
    /// Constant input features, which contribute no bits.
    const std::vector<int>& constant_features() const noexcept { return constant_features_; }

    bool bit(std::size_t row, std::size_t j) const {
        return (columns_[j * words_ + row / 64] >> (row % 64)) & 1U;
    }
    std::span<const std::uint64_t> column(std::size_t j) const { return {columns_.data() + j * words_, words_}; }

    /// Keeps the first `n_bits` columns.
    BinarizedDataset first_bits(std::size_t n_bits) const;
    /// Bits as 0/1 doubles, so tree learners and apply_tree can run on them.
    Dataset as_dataset() const;

private:
    friend BinarizedDataset binarize_with(const Dataset&, std::span<const BitThreshold>);
    friend BinarizedDataset binarize(const Dataset&, int);

    std::size_t n_rows_;
    std::size_t words_;
    std::vector<BitThreshold> thresholds_;
    std::vector<std::uint64_t> columns_;
    LabelVector labels_;
    int n_classes_;
    std::vector<int> constant_features_;
};

/// Up to `thresholds_per_feature` equal-frequency thresholds per feature. Each
/// threshold is the midpoint between consecutive distinct values whose left
/// share is closest to the quantile level k/(t+1); duplicates are dropped.
BinarizedDataset binarize(const Dataset& dataset, int thresholds_per_feature);

/// Applies previously chosen thresholds (e.g. from a training split).
BinarizedDataset binarize_with(const Dataset& dataset, std::span<const BitThreshold> thresholds);

struct OptParams {
    int max_depth = 2;
    double leaf_penalty = 0.0;  // lambda in misclassified/N + lambda * leaves
    std::uint64_t node_budget = 10'000'000;
    // Disables memoization and bound pruning; used to cross-check the search.
    bool exhaustive = false;

    void validate() const;
};

/// Optimal tree expressed over the bit columns: feature j is bit j, threshold
/// 0.5, so bit 0 routes left and bit 1 routes right.
struct OptResult {
    TreeModel tree;
    double objective = 0.0;
    std::size_t errors = 0;
    std::uint64_t search_nodes = 0;
};

/// Raised when the search exceeds its node budget; carries the best complete
/// root-level tree found so far and the remaining optimality gap.
class SolverBudgetExceeded : public Error {
public:
    SolverBudgetExceeded(OptResult incumbent, double lower_bound);
    const OptResult& incumbent() const noexcept { return incumbent_; }
    double lower_bound() const noexcept { return lower_bound_; }
    double gap() const noexcept { return incumbent_.objective - lower_bound_; }

private:
    OptResult incumbent_;
    double lower_bound_;
};

/// Minimises misclassified/N + leaf_penalty * n_leaves over all trees of depth
/// <= max_depth on the bit columns. Depth-first branch and bound; subproblems
/// are keyed by (sample subset, remaining depth). `search_nodes` counts
/// candidate splits examined at expanded subproblems (a depth-1 search over B
/// bits examines exactly B).
OptResult solve_optimal(const BinarizedDataset& data, const OptParams& params);

std::uint64_t count_search_nodes(const BinarizedDataset& data, const OptParams& params);

/// Misclassified/N + lambda * leaves of `bit_tree` on `data`.
double tree_objective(const TreeModel& bit_tree, const BinarizedDataset& data, double leaf_penalty);

/// Rewrites a bit-space tree onto the original features (bit set <=> value <=
/// threshold, so children swap).
TreeModel to_feature_tree(const TreeModel& bit_tree, std::span<const BitThreshold> thresholds);

}  // namespace treeforge
