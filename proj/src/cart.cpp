#include "treeforge/cart.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "treeforge/error.hpp"

namespace treeforge {

void CartParams::validate() const {
    if (max_depth < 0) throw ValidationError("cart max_depth must be >= 0");
    if (min_samples_leaf < 1) throw ValidationError("cart min_samples_leaf must be >= 1");
    if (!(min_impurity_decrease >= 0.0)) throw ValidationError("cart min_impurity_decrease must be >= 0");
}

void to_json(nlohmann::json& j, const CartParams& p) {
    j = {{"max_depth", p.max_depth},
         {"min_samples_leaf", p.min_samples_leaf},
         {"min_impurity_decrease", p.min_impurity_decrease}};
}

void from_json(const nlohmann::json& j, CartParams& p) {
    p.max_depth = j.value("max_depth", p.max_depth);
    p.min_samples_leaf = j.value("min_samples_leaf", p.min_samples_leaf);
    p.min_impurity_decrease = j.value("min_impurity_decrease", p.min_impurity_decrease);
}

double gini(std::span<const std::size_t> class_counts) {
    const std::size_t n = std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
    if (n == 0) {
        throw ValidationError("gini of an empty node");
    }
    double sum_sq = 0.0;
    for (std::size_t c : class_counts) {
        const double p = static_cast<double>(c) / static_cast<double>(n);
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

namespace {

using i128 = __int128;

struct Entry {
    double value;
    std::size_t row;
};

// Feature columns sorted by value, restricted to the rows of one node.
using SortedRows = std::vector<std::vector<Entry>>;

struct Candidate {
    int feature = -1;
    double threshold = 0.0;
    // Children score sL/nL + sR/nR kept as an exact fraction, s = sum of squared counts.
    i128 num = 0;
    i128 den = 1;
    double approx = 0.0;
};

// The double score decides unless the two are within rounding of each other.
bool better(const Candidate& a, const Candidate& b) {
    const double diff = a.approx - b.approx;
    if (std::abs(diff) > 1e-9 * std::max(std::abs(a.approx), 1.0)) return diff > 0.0;
    return a.num * b.den > b.num * a.den;
}

double midpoint(double lo, double hi) {
    double mid = lo / 2.0 + hi / 2.0;
    if (!(mid >= lo && mid < hi)) mid = lo;
    return mid;
}

ClassId majority(std::span<const std::size_t> counts) {
    // max_element returns the first maximum, i.e. the lowest class id.
    return static_cast<ClassId>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

std::vector<std::size_t> node_counts(const Dataset& data, std::span<const Entry> rows) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(data.n_classes()), 0);
    for (const Entry& e : rows) ++counts[static_cast<std::size_t>(data.labels()[e.row])];
    return counts;
}

std::optional<Split> scan_splits(const Dataset& data, const SortedRows& sorted, std::span<const std::size_t> counts,
                                 const CartParams& params) {
    const std::size_t n = sorted.front().size();
    const std::size_t k = counts.size();
    std::uint64_t s_total = 0;
    std::size_t nonzero = 0;
    for (std::size_t c : counts) {
        s_total += static_cast<std::uint64_t>(c) * c;
        nonzero += c > 0;
    }
    if (n < 2 || nonzero < 2 || n < 2 * params.min_samples_leaf) {
        return std::nullopt;
    }

    std::optional<Candidate> best;
    std::vector<std::size_t> left(k);
    const auto labels = data.labels();
    for (std::size_t f = 0; f < data.n_features(); ++f) {
        const auto& order = sorted[f];
        std::fill(left.begin(), left.end(), 0);
        std::uint64_t s_left = 0;
        std::uint64_t s_right = s_total;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const auto y = static_cast<std::size_t>(labels[order[i].row]);
            const std::uint64_t cl = left[y]++;
            const std::uint64_t cr = counts[y] - cl;
            s_left += 2 * cl + 1;
            s_right -= 2 * cr - 1;
            const std::size_t n_left = i + 1;
            const std::size_t n_right = n - n_left;
            if (n_left < params.min_samples_leaf) continue;
            if (n_right < params.min_samples_leaf) break;
            const double lo = order[i].value;
            const double hi = order[i + 1].value;
            if (!(lo < hi)) continue;
            const double approx = static_cast<double>(s_left) / static_cast<double>(n_left) +
                                  static_cast<double>(s_right) / static_cast<double>(n_right);
            if (best && approx < best->approx * (1.0 - 1e-9)) continue;
            Candidate c{static_cast<int>(f), 0.0, static_cast<i128>(s_left) * n_right + static_cast<i128>(s_right) * n_left,
                        static_cast<i128>(n_left) * n_right, approx};
            if (!best || better(c, *best)) {
                c.threshold = midpoint(lo, hi);
                best = c;
            }
        }
    }
    if (!best) {
        return std::nullopt;
    }
    // Decrease = num / (den * n) - s_total / n^2; positivity checked exactly.
    const i128 lhs = best->num * static_cast<i128>(n);
    const i128 rhs = static_cast<i128>(s_total) * best->den;
    const double nd = static_cast<double>(n);
    const double decrease = static_cast<double>(best->num) / (static_cast<double>(best->den) * nd) -
                            static_cast<double>(s_total) / (nd * nd);
    if (params.min_impurity_decrease == 0.0 ? lhs <= rhs : !(decrease > params.min_impurity_decrease)) {
        return std::nullopt;
    }
    return Split{best->feature, best->threshold, std::max(decrease, 0.0)};
}

SortedRows sort_rows(const Dataset& data, std::span<const std::size_t> rows) {
    SortedRows sorted(data.n_features());
    for (std::size_t f = 0; f < data.n_features(); ++f) {
        auto& order = sorted[f];
        order.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) order[i] = {data.at(rows[i], f), rows[i]};
        std::sort(order.begin(), order.end(), [](const Entry& a, const Entry& b) {
            return a.value < b.value || (a.value == b.value && a.row < b.row);
        });
    }
    return sorted;
}

class CartBuilder {
public:
    CartBuilder(const Dataset& data, const CartParams& params)
        : data_(data), params_(params), goes_left_(data.n_rows(), 0) {}

    int grow(const SortedRows& sorted, int depth) {
        const auto counts = node_counts(data_, sorted.front());
        std::optional<Split> split;
        if (depth < params_.max_depth) {
            split = scan_splits(data_, sorted, counts, params_);
        }
        const int index = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        if (!split) {
            nodes_.back().label = majority(counts);
            return index;
        }
        const auto f = static_cast<std::size_t>(split->feature);
        std::size_t n_left = 0;
        for (const Entry& e : sorted[f]) {
            goes_left_[e.row] = e.value <= split->threshold;
            n_left += goes_left_[e.row];
        }
        const std::size_t n_right = sorted.front().size() - n_left;
        SortedRows left(sorted.size());
        SortedRows right(sorted.size());
        for (std::size_t g = 0; g < sorted.size(); ++g) {
            left[g].reserve(n_left);
            right[g].reserve(n_right);
            for (const Entry& e : sorted[g]) {
                (goes_left_[e.row] ? left[g] : right[g]).push_back(e);
            }
        }
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        nodes_[static_cast<std::size_t>(index)] = {split->feature, split->threshold, l, r, 0};
        return index;
    }

    std::vector<TreeNode> take() { return std::move(nodes_); }

private:
    const Dataset& data_;
    const CartParams& params_;
    std::vector<char> goes_left_;
    std::vector<TreeNode> nodes_;
};

}  // namespace

std::optional<Split> best_split(const Dataset& dataset, std::span<const std::size_t> rows, const CartParams& params) {
    params.validate();
    if (rows.empty()) {
        return std::nullopt;
    }
    const auto sorted = sort_rows(dataset, rows);
    return scan_splits(dataset, sorted, node_counts(dataset, sorted.front()), params);
}

TreeModel fit_cart(const Dataset& dataset, const CartParams& params) {
    params.validate();
    std::vector<std::size_t> all(dataset.n_rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    CartBuilder builder(dataset, params);
    builder.grow(sort_rows(dataset, all), 0);
    return TreeModel(builder.take());
}

}  // namespace treeforge
