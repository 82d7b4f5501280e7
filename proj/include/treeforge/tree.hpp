#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "treeforge/dataset.hpp"

namespace treeforge {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    ClassId label = 0;  // leaf class; unused on internal nodes

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

/// Binary decision tree stored as a flat node array rooted at index 0.
///
/// Routing: value <= threshold goes left, anything else goes right.
class TreeModel {
public:
    /// Validates that `nodes` form a single rooted tree (every non-root node
    /// reachable exactly once from node 0).
    explicit TreeModel(std::vector<TreeNode> nodes);

    static TreeModel leaf(ClassId label);
    static TreeModel split(int feature, double threshold, const TreeModel& left, const TreeModel& right);

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    const TreeNode& node(std::size_t i) const { return nodes_.at(i); }
    int depth() const noexcept { return depth_; }
    int n_leaves() const noexcept { return n_leaves_; }
    int max_feature_index() const noexcept { return max_feature_; }

    ClassId predict(std::span<const double> row) const;

    bool operator==(const TreeModel& other) const { return nodes_ == other.nodes_; }

private:
    std::vector<TreeNode> nodes_;
    int depth_ = 0;
    int n_leaves_ = 0;
    int max_feature_ = -1;
};

/// Predicts every row. Throws StructuralError naming the first node whose
/// feature index is outside the dataset's width.
LabelVector apply_tree(const TreeModel& tree, const Dataset& dataset);

/// Recursive node objects: {"feature","threshold","left","right"} or {"class"}.
nlohmann::json tree_to_json(const TreeModel& tree);
TreeModel tree_from_json(const nlohmann::json& j);

}  // namespace treeforge
