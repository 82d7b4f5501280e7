#pragma once

#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "treeforge/cart.hpp"
#include "treeforge/dataset.hpp"

namespace treeforge {

enum class RejectReason { imbalance, accuracy, degenerate };

std::string to_string(RejectReason reason);
RejectReason reject_reason_from_string(const std::string& s);

struct QualityReport {
    double imbalance_raw = 0.0;         // K * sum_i (n_i/N - 1/K)^2
    double imbalance_normalized = 0.0;  // imbalance_raw / (K - 1)
    double cart_accuracy = 0.0;         // in-sample accuracy of the probe tree
    double majority_fraction = 0.0;     // largest class share of the measured labels
    int n_classes = 0;                  // K used in the imbalance formula
    int n_classes_observed = 0;
    bool passed = false;
    std::optional<RejectReason> reject_reason;

    bool operator==(const QualityReport&) const = default;
};

void to_json(nlohmann::json& j, const QualityReport& r);
void from_json(const nlohmann::json& j, QualityReport& r);

struct FilterParams {
    double imbalance_threshold = 0.3;  // pass iff normalized imbalance < threshold
    double accuracy_threshold = 0.7;   // pass iff probe accuracy > threshold
    CartParams probe{};
    // When false every non-degenerate dataset passes; measurements are still filled in.
    bool enabled = true;

    void validate() const;
    bool operator==(const FilterParams&) const = default;
};

void to_json(nlohmann::json& j, const FilterParams& p);
void from_json(const nlohmann::json& j, FilterParams& p);

double class_imbalance_raw_from_counts(std::span<const std::size_t> counts);
double class_imbalance_raw(std::span<const ClassId> labels, int n_classes);
double class_imbalance_normalized(std::span<const ClassId> labels, int n_classes);

/// Measures imbalance of the dataset's own labels with K = dataset.n_classes(),
/// fits the probe CART and scores its training accuracy. Degenerate (single
/// observed class) first, then imbalance, then accuracy.
QualityReport evaluate(const Dataset& dataset, const FilterParams& params);

/// Same decision, but the imbalance is measured on `target_labels` (the labels
/// that will actually be stored, e.g. tree predictions) while the probe CART
/// is fit and scored on the raw dataset. A known probe accuracy (e.g. from a
/// tree already fit with the probe parameters) skips the refit.
QualityReport evaluate_targets(const Dataset& raw, std::span<const ClassId> target_labels, const FilterParams& params,
                               std::optional<double> probe_accuracy = std::nullopt);

}  // namespace treeforge
