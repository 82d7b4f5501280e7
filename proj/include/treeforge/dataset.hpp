#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace treeforge {

using ClassId = std::int32_t;
using LabelVector = std::vector<ClassId>;

/// Dense N x d feature matrix (row-major) with integer class labels in [0, K).
///
/// Immutable after construction; the constructor enforces every invariant
/// (finite features, labels below n_classes, K >= 2, N >= 1, d >= 1).
class Dataset {
public:
    Dataset(std::size_t n_rows, std::size_t n_features, std::vector<double> features, LabelVector labels,
            int n_classes, std::vector<std::string> feature_names = {}, std::string provenance = {});

    std::size_t n_rows() const noexcept { return n_rows_; }
    std::size_t n_features() const noexcept { return n_features_; }
    int n_classes() const noexcept { return n_classes_; }

    double at(std::size_t row, std::size_t col) const { return features_[row * n_features_ + col]; }
    std::span<const double> row(std::size_t r) const {
        return {features_.data() + r * n_features_, n_features_};
    }
    std::span<const double> features() const noexcept { return features_; }
    std::span<const ClassId> labels() const noexcept { return labels_; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    const std::string& provenance() const noexcept { return provenance_; }

    /// Per-class label counts, length n_classes.
    std::vector<std::size_t> class_counts() const;
    int observed_classes() const;

    /// Same features and metadata, new labels (validated against n_classes).
    Dataset with_labels(LabelVector labels) const;
    Dataset with_provenance(std::string provenance) const;
    /// Rows selected by index, in the given order (duplicates allowed).
    Dataset subset(std::span<const std::size_t> rows) const;

    bool operator==(const Dataset&) const = default;

private:
    std::size_t n_rows_;
    std::size_t n_features_;
    std::vector<double> features_;
    LabelVector labels_;
    int n_classes_;
    std::vector<std::string> feature_names_;
    std::string provenance_;
};

/// Fraction of positions where the two label vectors agree.
double accuracy(std::span<const ClassId> predicted, std::span<const ClassId> truth);

std::vector<std::size_t> count_labels(std::span<const ClassId> labels, int n_classes);

}  // namespace treeforge
