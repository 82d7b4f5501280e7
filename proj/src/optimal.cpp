#include "treeforge/optimal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <unordered_map>

namespace treeforge {

BinarizedDataset::BinarizedDataset(std::size_t n_rows, std::vector<BitThreshold> thresholds,
                                   std::vector<std::uint64_t> columns, LabelVector labels, int n_classes)
    : n_rows_(n_rows),
      words_((n_rows + 63) / 64),
      thresholds_(std::move(thresholds)),
      columns_(std::move(columns)),
      labels_(std::move(labels)),
      n_classes_(n_classes) {
    if (n_rows_ == 0) throw ValidationError("binarized dataset needs at least one row");
    if (labels_.size() != n_rows_) throw ValidationError("binarized labels length mismatch");
    if (columns_.size() != words_ * thresholds_.size()) throw ValidationError("binarized column buffer size mismatch");
    if (n_classes_ < 2) throw ValidationError("binarized dataset needs n_classes >= 2");
    for (ClassId y : labels_) {
        if (y < 0 || y >= n_classes_) throw ValidationError("binarized label out of range");
    }
}

BinarizedDataset BinarizedDataset::first_bits(std::size_t n_bits) const {
    if (n_bits > thresholds_.size()) {
        throw ValidationError("requested " + std::to_string(n_bits) + " bits but only " +
                              std::to_string(thresholds_.size()) + " exist");
    }
    std::vector<BitThreshold> thresholds(thresholds_.begin(), thresholds_.begin() + static_cast<std::ptrdiff_t>(n_bits));
    std::vector<std::uint64_t> columns(columns_.begin(), columns_.begin() + static_cast<std::ptrdiff_t>(n_bits * words_));
    BinarizedDataset out(n_rows_, std::move(thresholds), std::move(columns), labels_, n_classes_);
    out.constant_features_ = constant_features_;
    return out;
}

Dataset BinarizedDataset::as_dataset() const {
    if (thresholds_.empty()) throw ValidationError("binarized dataset has no bits");
    const std::size_t b = thresholds_.size();
    std::vector<double> features(n_rows_ * b);
    for (std::size_t r = 0; r < n_rows_; ++r) {
        for (std::size_t j = 0; j < b; ++j) features[r * b + j] = bit(r, j) ? 1.0 : 0.0;
    }
    return Dataset(n_rows_, b, std::move(features), labels_, n_classes_, {}, "binarized");
}

namespace {

double midpoint(double lo, double hi) {
    double mid = lo / 2.0 + hi / 2.0;
    if (!(mid >= lo && mid < hi)) mid = lo;
    return mid;
}

std::vector<std::uint64_t> pack_columns(const Dataset& dataset, std::span<const BitThreshold> thresholds) {
    const std::size_t n = dataset.n_rows();
    const std::size_t words = (n + 63) / 64;
    std::vector<std::uint64_t> columns(words * thresholds.size(), 0);
    for (std::size_t j = 0; j < thresholds.size(); ++j) {
        const auto& t = thresholds[j];
        if (t.feature < 0 || static_cast<std::size_t>(t.feature) >= dataset.n_features()) {
            throw StructuralError("bit " + std::to_string(j) + " refers to feature " + std::to_string(t.feature) +
                                  " outside the dataset");
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (dataset.at(r, static_cast<std::size_t>(t.feature)) <= t.threshold) {
                columns[j * words + r / 64] |= std::uint64_t{1} << (r % 64);
            }
        }
    }
    return columns;
}

}  // namespace

BinarizedDataset binarize_with(const Dataset& dataset, std::span<const BitThreshold> thresholds) {
    auto columns = pack_columns(dataset, thresholds);
    return BinarizedDataset(dataset.n_rows(), {thresholds.begin(), thresholds.end()}, std::move(columns),
                            {dataset.labels().begin(), dataset.labels().end()}, dataset.n_classes());
}

BinarizedDataset binarize(const Dataset& dataset, int thresholds_per_feature) {
    if (thresholds_per_feature < 1) {
        throw ValidationError("thresholds_per_feature must be >= 1");
    }
    const std::size_t n = dataset.n_rows();
    std::vector<BitThreshold> thresholds;
    std::vector<int> constant;
    std::vector<double> values(n);
    for (std::size_t f = 0; f < dataset.n_features(); ++f) {
        for (std::size_t r = 0; r < n; ++r) values[r] = dataset.at(r, f);
        std::sort(values.begin(), values.end());
        // (midpoint, share of rows at or below it) for every distinct-value gap.
        std::vector<std::pair<double, double>> gaps;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (values[i] < values[i + 1]) {
                gaps.emplace_back(midpoint(values[i], values[i + 1]),
                                  static_cast<double>(i + 1) / static_cast<double>(n));
            }
        }
        if (gaps.empty()) {
            constant.push_back(static_cast<int>(f));
            continue;
        }
        std::vector<double> chosen;
        for (int k = 1; k <= thresholds_per_feature; ++k) {
            const double level = static_cast<double>(k) / static_cast<double>(thresholds_per_feature + 1);
            const auto closest = std::min_element(gaps.begin(), gaps.end(), [level](const auto& a, const auto& b) {
                return std::abs(a.second - level) < std::abs(b.second - level);
            });
            if (std::find(chosen.begin(), chosen.end(), closest->first) == chosen.end()) {
                chosen.push_back(closest->first);
            }
        }
        std::sort(chosen.begin(), chosen.end());
        for (double t : chosen) thresholds.push_back({static_cast<int>(f), t});
    }
    BinarizedDataset out = binarize_with(dataset, thresholds);
    out.constant_features_ = std::move(constant);
    return out;
}

void OptParams::validate() const {
    if (max_depth < 1) throw ValidationError("optimal solver max_depth must be >= 1");
    if (!(leaf_penalty >= 0.0) || !std::isfinite(leaf_penalty)) {
        throw ValidationError("optimal solver leaf_penalty must be a non-negative number");
    }
    if (node_budget == 0) throw ValidationError("optimal solver node_budget must be positive");
}

SolverBudgetExceeded::SolverBudgetExceeded(OptResult incumbent, double lower_bound)
    : Error("optimal solver exceeded its node budget after " + std::to_string(incumbent.search_nodes) +
            " nodes; incumbent objective " + std::to_string(incumbent.objective) + ", gap " +
            std::to_string(incumbent.objective - lower_bound)),
      incumbent_(std::move(incumbent)),
      lower_bound_(lower_bound) {}

namespace {

struct SolNode {
    int bit = -1;  // -1: leaf
    ClassId label = 0;
    std::shared_ptr<const SolNode> unset;  // bit 0
    std::shared_ptr<const SolNode> set;    // bit 1
};

struct Solution {
    double cost = 0.0;  // errors + penalty * leaves
    std::size_t errors = 0;
    std::size_t leaves = 0;
    std::shared_ptr<const SolNode> tree;
};

using Subset = std::vector<std::uint64_t>;

struct MemoKey {
    Subset rows;
    int depth = 0;
    bool operator==(const MemoKey&) const = default;
};

struct MemoKeyHash {
    std::size_t operator()(const MemoKey& k) const noexcept {
        std::uint64_t h = 0xCBF29CE484222325ULL ^ static_cast<std::uint64_t>(k.depth);
        for (std::uint64_t w : k.rows) {
            h ^= w + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
            h *= 0x100000001B3ULL;
        }
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};

struct MemoEntry {
    std::optional<Solution> exact;
    double lower_bound = 0.0;  // optimum >= lower_bound when not exact
};

struct BudgetHit {};

class Search {
public:
    Search(const BinarizedDataset& data, const OptParams& params)
        : data_(data),
          params_(params),
          words_(data.n_words()),
          penalty_(params.leaf_penalty * static_cast<double>(data.n_rows())),
          class_masks_(static_cast<std::size_t>(data.n_classes()), Subset(data.n_words(), 0)) {
        for (std::size_t r = 0; r < data.n_rows(); ++r) {
            class_masks_[static_cast<std::size_t>(data.labels()[r])][r / 64] |= std::uint64_t{1} << (r % 64);
        }
    }

    std::optional<Solution> solve(const Subset& rows, int depth, double upper_bound) {
        const Solution leaf = make_leaf(rows);
        if (depth == 0 || leaf.errors == 0 || leaf.cost <= 2.0 * penalty_) {
            return finish_trivial(leaf, depth, upper_bound);
        }
        MemoKey key;
        if (!params_.exhaustive) {
            key = {rows, depth};
            if (auto it = memo_.find(key); it != memo_.end()) {
                const MemoEntry& e = it->second;
                if (e.exact) return e.exact->cost < upper_bound ? e.exact : std::nullopt;
                if (e.lower_bound >= upper_bound) return std::nullopt;
            }
        }

        Solution best = leaf;
        const bool root = depth == params_.max_depth;
        if (root) incumbent_ = best;
        double cutoff = params_.exhaustive ? std::numeric_limits<double>::infinity() : std::min(upper_bound, leaf.cost);
        Subset unset(words_);
        Subset set(words_);
        for (std::size_t j = 0; j < data_.n_bits(); ++j) {
            if (++nodes_ > params_.node_budget) throw BudgetHit{};
            const auto col = data_.column(j);
            bool any_unset = false;
            bool any_set = false;
            for (std::size_t w = 0; w < words_; ++w) {
                set[w] = rows[w] & col[w];
                unset[w] = rows[w] & ~col[w];
                any_set |= set[w] != 0;
                any_unset |= unset[w] != 0;
            }
            if (!any_set || !any_unset) continue;

            const double inf = std::numeric_limits<double>::infinity();
            const auto left = solve(unset, depth - 1, params_.exhaustive ? inf : cutoff - penalty_);
            if (!left) continue;
            const auto right = solve(set, depth - 1, params_.exhaustive ? inf : cutoff - left->cost);
            if (!right) continue;
            const double total = left->cost + right->cost;
            if (total < (params_.exhaustive ? best.cost : cutoff)) {
                auto node = std::make_shared<SolNode>();
                node->bit = static_cast<int>(j);
                node->unset = left->tree;
                node->set = right->tree;
                best = {total, left->errors + right->errors, left->leaves + right->leaves, std::move(node)};
                if (!params_.exhaustive) cutoff = total;
                if (root) incumbent_ = best;
            }
        }

        if (params_.exhaustive) {
            return best.cost < upper_bound ? std::optional<Solution>(best) : std::nullopt;
        }
        MemoEntry& entry = memo_[std::move(key)];
        if (best.cost < upper_bound) {
            entry.exact = best;
            return best;
        }
        entry.lower_bound = std::max(entry.lower_bound, upper_bound);
        return std::nullopt;
    }

    std::uint64_t nodes() const noexcept { return nodes_; }
    const std::optional<Solution>& incumbent() const noexcept { return incumbent_; }
    Solution root_leaf() {
        Subset all(words_, 0);
        for (std::size_t r = 0; r < data_.n_rows(); ++r) all[r / 64] |= std::uint64_t{1} << (r % 64);
        return make_leaf(all);
    }

private:
    Solution make_leaf(const Subset& rows) const {
        std::size_t n = 0;
        std::size_t best_count = 0;
        ClassId best_class = 0;
        for (std::size_t c = 0; c < class_masks_.size(); ++c) {
            std::size_t count = 0;
            for (std::size_t w = 0; w < words_; ++w) count += static_cast<std::size_t>(std::popcount(rows[w] & class_masks_[c][w]));
            n += count;
            if (count > best_count) {
                best_count = count;
                best_class = static_cast<ClassId>(c);
            }
        }
        auto node = std::make_shared<SolNode>();
        node->label = best_class;
        const std::size_t errors = n - best_count;
        return {static_cast<double>(errors) + penalty_, errors, 1, std::move(node)};
    }

    std::optional<Solution> finish_trivial(const Solution& leaf, int depth, double upper_bound) {
        if (depth == params_.max_depth) incumbent_ = leaf;
        return leaf.cost < upper_bound ? std::optional<Solution>(leaf) : std::nullopt;
    }

    const BinarizedDataset& data_;
    const OptParams& params_;
    std::size_t words_;
    double penalty_;
    std::vector<Subset> class_masks_;
    std::unordered_map<MemoKey, MemoEntry, MemoKeyHash> memo_;
    std::uint64_t nodes_ = 0;
    std::optional<Solution> incumbent_;
};

void emit(const SolNode& n, std::vector<TreeNode>& out) {
    const auto index = out.size();
    out.emplace_back();
    if (n.bit < 0) {
        out[index].label = n.label;
        return;
    }
    const int left = static_cast<int>(out.size());
    emit(*n.unset, out);
    const int right = static_cast<int>(out.size());
    emit(*n.set, out);
    out[index] = {n.bit, 0.5, left, right, 0};
}

OptResult to_result(const Solution& s, const BinarizedDataset& data, const OptParams& params, std::uint64_t nodes) {
    std::vector<TreeNode> out;
    emit(*s.tree, out);
    const double objective = static_cast<double>(s.errors) / static_cast<double>(data.n_rows()) +
                             params.leaf_penalty * static_cast<double>(s.leaves);
    return {TreeModel(std::move(out)), objective, s.errors, nodes};
}

}  // namespace

OptResult solve_optimal(const BinarizedDataset& data, const OptParams& params) {
    params.validate();
    if (data.n_bits() == 0) {
        throw ValidationError("optimal solver needs at least one bit column");
    }
    Search search(data, params);
    Subset all(data.n_words(), 0);
    for (std::size_t r = 0; r < data.n_rows(); ++r) all[r / 64] |= std::uint64_t{1} << (r % 64);
    try {
        const auto best = search.solve(all, params.max_depth, std::numeric_limits<double>::infinity());
        return to_result(*best, data, params, search.nodes());
    } catch (const BudgetHit&) {
        const Solution incumbent = search.incumbent() ? *search.incumbent() : search.root_leaf();
        throw SolverBudgetExceeded(to_result(incumbent, data, params, search.nodes()), params.leaf_penalty);
    }
}

std::uint64_t count_search_nodes(const BinarizedDataset& data, const OptParams& params) {
    return solve_optimal(data, params).search_nodes;
}

double tree_objective(const TreeModel& bit_tree, const BinarizedDataset& data, double leaf_penalty) {
    const auto predicted = apply_tree(bit_tree, data.as_dataset());
    std::size_t errors = 0;
    for (std::size_t r = 0; r < predicted.size(); ++r) errors += predicted[r] != data.labels()[r];
    return static_cast<double>(errors) / static_cast<double>(data.n_rows()) +
           leaf_penalty * static_cast<double>(bit_tree.n_leaves());
}

TreeModel to_feature_tree(const TreeModel& bit_tree, std::span<const BitThreshold> thresholds) {
    std::vector<TreeNode> nodes = bit_tree.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        TreeNode& n = nodes[i];
        if (n.is_leaf()) continue;
        if (static_cast<std::size_t>(n.feature) >= thresholds.size()) {
            throw StructuralError("tree node " + std::to_string(i) + " tests bit " + std::to_string(n.feature) +
                                  " but only " + std::to_string(thresholds.size()) + " bits exist");
        }
        const BitThreshold& t = thresholds[static_cast<std::size_t>(n.feature)];
        n.feature = t.feature;
        n.threshold = t.threshold;
        std::swap(n.left, n.right);
    }
    return TreeModel(std::move(nodes));
}

}  // namespace treeforge
