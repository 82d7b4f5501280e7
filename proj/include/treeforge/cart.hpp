#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include <nlohmann/json.hpp>

#include "treeforge/dataset.hpp"
#include "treeforge/tree.hpp"

namespace treeforge {

struct CartParams {
    int max_depth = 4;
    std::size_t min_samples_leaf = 1;
    // A split is taken only when its Gini decrease is strictly greater.
    double min_impurity_decrease = 0.0;

    void validate() const;
    bool operator==(const CartParams&) const = default;
};

void to_json(nlohmann::json& j, const CartParams& p);
void from_json(const nlohmann::json& j, CartParams& p);

/// 1 - sum_i (n_i / N)^2. Throws on an empty node.
double gini(std::span<const std::size_t> class_counts);

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity_decrease = 0.0;
};

/// Best Gini split over the given rows. Candidate thresholds are midpoints of
/// consecutive distinct values; ties prefer the lower feature index and then
/// the lower threshold. Returns nullopt when the node is pure, when no split
/// beats `min_impurity_decrease`, or when every split violates the leaf floor.
std::optional<Split> best_split(const Dataset& dataset, std::span<const std::size_t> rows, const CartParams& params);

/// Greedy top-down CART. Leaves predict the majority class (ties to the lowest
/// class id). Deterministic.
TreeModel fit_cart(const Dataset& dataset, const CartParams& params);

}  // namespace treeforge
