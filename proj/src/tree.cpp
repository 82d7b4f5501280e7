#include "treeforge/tree.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "treeforge/error.hpp"

namespace treeforge {

TreeModel::TreeModel(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) {
        throw StructuralError("tree has no nodes");
    }
    std::vector<char> seen(nodes_.size(), 0);
    // Iterative walk carrying depth; a node reached twice means a DAG or cycle.
    std::vector<std::pair<int, int>> stack{{0, 0}};
    seen[0] = 1;
    std::size_t visited = 0;
    while (!stack.empty()) {
        const auto [index, d] = stack.back();
        stack.pop_back();
        ++visited;
        const TreeNode& n = nodes_[static_cast<std::size_t>(index)];
        if (n.is_leaf()) {
            if (n.label < 0) {
                throw StructuralError("leaf node " + std::to_string(index) + " has negative class");
            }
            ++n_leaves_;
            depth_ = std::max(depth_, d);
            continue;
        }
        if (!std::isfinite(n.threshold)) {
            throw StructuralError("node " + std::to_string(index) + " has a non-finite threshold");
        }
        max_feature_ = std::max(max_feature_, n.feature);
        for (int child : {n.left, n.right}) {
            if (child < 0 || static_cast<std::size_t>(child) >= nodes_.size()) {
                throw StructuralError("node " + std::to_string(index) + " has a child index out of range");
            }
            if (seen[static_cast<std::size_t>(child)]) {
                throw StructuralError("node " + std::to_string(child) + " is reachable more than once");
            }
            seen[static_cast<std::size_t>(child)] = 1;
            stack.emplace_back(child, d + 1);
        }
    }
    if (visited != nodes_.size()) {
        throw StructuralError("tree contains unreachable nodes");
    }
}

TreeModel TreeModel::leaf(ClassId label) {
    TreeNode n;
    n.label = label;
    return TreeModel({n});
}

TreeModel TreeModel::split(int feature, double threshold, const TreeModel& left, const TreeModel& right) {
    if (feature < 0) {
        throw StructuralError("split feature index must be non-negative");
    }
    std::vector<TreeNode> nodes;
    nodes.reserve(1 + left.nodes_.size() + right.nodes_.size());
    nodes.push_back({feature, threshold, 1, static_cast<int>(1 + left.nodes_.size()), 0});
    auto append = [&nodes](const std::vector<TreeNode>& sub, int offset) {
        for (TreeNode n : sub) {
            if (!n.is_leaf()) {
                n.left += offset;
                n.right += offset;
            }
            nodes.push_back(n);
        }
    };
    append(left.nodes_, 1);
    append(right.nodes_, nodes[0].right);
    return TreeModel(std::move(nodes));
}

ClassId TreeModel::predict(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes_[i].is_leaf()) {
        const TreeNode& n = nodes_[i];
        i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes_[i].label;
}

LabelVector apply_tree(const TreeModel& tree, const Dataset& dataset) {
    if (tree.max_feature_index() >= static_cast<int>(dataset.n_features())) {
        const auto& nodes = tree.nodes();
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (!nodes[i].is_leaf() && nodes[i].feature >= static_cast<int>(dataset.n_features())) {
                throw StructuralError("tree node " + std::to_string(i) + " tests feature " +
                                      std::to_string(nodes[i].feature) + " but the dataset has " +
                                      std::to_string(dataset.n_features()) + " features");
            }
        }
    }
    LabelVector out(dataset.n_rows());
    for (std::size_t r = 0; r < dataset.n_rows(); ++r) {
        out[r] = tree.predict(dataset.row(r));
    }
    return out;
}

namespace {

nlohmann::json node_to_json(const std::vector<TreeNode>& nodes, int index) {
    const TreeNode& n = nodes[static_cast<std::size_t>(index)];
    if (n.is_leaf()) {
        return {{"class", n.label}};
    }
    return {{"feature", n.feature},
            {"threshold", n.threshold},
            {"left", node_to_json(nodes, n.left)},
            {"right", node_to_json(nodes, n.right)}};
}

int node_from_json(const nlohmann::json& j, std::vector<TreeNode>& nodes) {
    if (!j.is_object()) {
        throw SchemaError("tree node must be a JSON object");
    }
    const int index = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (j.contains("class")) {
        if (!j.at("class").is_number_integer()) {
            throw SchemaError("leaf 'class' must be an integer");
        }
        nodes[static_cast<std::size_t>(index)].label = j.at("class").get<ClassId>();
        return index;
    }
    for (const char* key : {"feature", "threshold", "left", "right"}) {
        if (!j.contains(key)) {
            throw SchemaError(std::string("internal tree node is missing '") + key + "'");
        }
    }
    if (!j.at("feature").is_number_integer() || !j.at("threshold").is_number()) {
        throw SchemaError("internal tree node has mistyped 'feature' or 'threshold'");
    }
    const int feature = j.at("feature").get<int>();
    if (feature < 0) {
        throw SchemaError("internal tree node has a negative feature index");
    }
    const double threshold = j.at("threshold").get<double>();
    const int left = node_from_json(j.at("left"), nodes);
    const int right = node_from_json(j.at("right"), nodes);
    nodes[static_cast<std::size_t>(index)] = {feature, threshold, left, right, 0};
    return index;
}

}  // namespace

nlohmann::json tree_to_json(const TreeModel& tree) { return node_to_json(tree.nodes(), 0); }

TreeModel tree_from_json(const nlohmann::json& j) {
    std::vector<TreeNode> nodes;
    node_from_json(j, nodes);
    return TreeModel(std::move(nodes));
}

}  // namespace treeforge
