#include "treeforge/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "treeforge/error.hpp"

namespace treeforge {

Dataset::Dataset(std::size_t n_rows, std::size_t n_features, std::vector<double> features, LabelVector labels,
                 int n_classes, std::vector<std::string> feature_names, std::string provenance)
    : n_rows_(n_rows),
      n_features_(n_features),
      features_(std::move(features)),
      labels_(std::move(labels)),
      n_classes_(n_classes),
      feature_names_(std::move(feature_names)),
      provenance_(std::move(provenance)) {
    if (n_rows_ < 1 || n_features_ < 1) {
        throw ValidationError("dataset needs at least one row and one feature");
    }
    if (n_classes_ < 2) {
        throw ValidationError("dataset needs n_classes >= 2, got " + std::to_string(n_classes_));
    }
    if (features_.size() != n_rows_ * n_features_) {
        throw ValidationError("feature buffer size does not match n_rows * n_features");
    }
    if (labels_.size() != n_rows_) {
        throw ValidationError("label vector length does not match n_rows");
    }
    if (!feature_names_.empty() && feature_names_.size() != n_features_) {
        throw ValidationError("feature_names length does not match n_features");
    }
    for (std::size_t i = 0; i < features_.size(); ++i) {
        if (!std::isfinite(features_[i])) {
            throw ValidationError("non-finite feature value at row " + std::to_string(i / n_features_) + ", column " +
                                  std::to_string(i % n_features_));
        }
    }
    for (std::size_t i = 0; i < n_rows_; ++i) {
        if (labels_[i] < 0 || labels_[i] >= n_classes_) {
            throw ValidationError("label " + std::to_string(labels_[i]) + " at row " + std::to_string(i) +
                                  " outside [0, " + std::to_string(n_classes_) + ")");
        }
    }
}

std::vector<std::size_t> Dataset::class_counts() const { return count_labels(labels_, n_classes_); }

int Dataset::observed_classes() const {
    const auto counts = class_counts();
    return static_cast<int>(std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
}

Dataset Dataset::with_labels(LabelVector labels) const {
    return Dataset(n_rows_, n_features_, features_, std::move(labels), n_classes_, feature_names_, provenance_);
}

Dataset Dataset::with_provenance(std::string provenance) const {
    Dataset out = *this;
    out.provenance_ = std::move(provenance);
    return out;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    std::vector<double> features;
    features.reserve(rows.size() * n_features_);
    LabelVector labels;
    labels.reserve(rows.size());
    for (std::size_t r : rows) {
        if (r >= n_rows_) {
            throw ValidationError("subset row index out of range");
        }
        const auto src = row(r);
        features.insert(features.end(), src.begin(), src.end());
        labels.push_back(labels_[r]);
    }
    return Dataset(rows.size(), n_features_, std::move(features), std::move(labels), n_classes_, feature_names_,
                   provenance_);
}

double accuracy(std::span<const ClassId> predicted, std::span<const ClassId> truth) {
    if (predicted.size() != truth.size()) {
        throw ValidationError("accuracy: length mismatch (" + std::to_string(predicted.size()) + " vs " +
                              std::to_string(truth.size()) + ")");
    }
    if (predicted.empty()) {
        throw ValidationError("accuracy: empty label vectors");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        hits += predicted[i] == truth[i];
    }
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::vector<std::size_t> count_labels(std::span<const ClassId> labels, int n_classes) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
    for (ClassId y : labels) {
        if (y < 0 || y >= n_classes) {
            throw ValidationError("label " + std::to_string(y) + " outside [0, " + std::to_string(n_classes) + ")");
        }
        ++counts[static_cast<std::size_t>(y)];
    }
    return counts;
}

}  // namespace treeforge
