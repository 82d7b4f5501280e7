#include "treeforge/filters.hpp"

#include <algorithm>
#include <numeric>

#include "treeforge/error.hpp"

namespace treeforge {

std::string to_string(RejectReason reason) {
    switch (reason) {
        case RejectReason::imbalance: return "imbalance";
        case RejectReason::accuracy: return "accuracy";
        case RejectReason::degenerate: return "degenerate";
    }
    return "unknown";
}

RejectReason reject_reason_from_string(const std::string& s) {
    if (s == "imbalance") return RejectReason::imbalance;
    if (s == "accuracy") return RejectReason::accuracy;
    if (s == "degenerate") return RejectReason::degenerate;
    throw SchemaError("unknown reject reason '" + s + "'");
}

void to_json(nlohmann::json& j, const QualityReport& r) {
    j = {{"imbalance_raw", r.imbalance_raw},
         {"imbalance_normalized", r.imbalance_normalized},
         {"cart_accuracy", r.cart_accuracy},
         {"majority_fraction", r.majority_fraction},
         {"n_classes", r.n_classes},
         {"n_classes_observed", r.n_classes_observed},
         {"passed", r.passed},
         {"reject_reason", r.reject_reason ? nlohmann::json(to_string(*r.reject_reason)) : nlohmann::json(nullptr)}};
}

void from_json(const nlohmann::json& j, QualityReport& r) {
    r.imbalance_raw = j.at("imbalance_raw").get<double>();
    r.imbalance_normalized = j.at("imbalance_normalized").get<double>();
    r.cart_accuracy = j.at("cart_accuracy").get<double>();
    r.majority_fraction = j.value("majority_fraction", 0.0);
    r.n_classes = j.value("n_classes", 0);
    r.n_classes_observed = j.at("n_classes_observed").get<int>();
    r.passed = j.at("passed").get<bool>();
    const auto& reason = j.at("reject_reason");
    r.reject_reason = reason.is_null() ? std::nullopt
                                       : std::optional<RejectReason>(reject_reason_from_string(reason.get<std::string>()));
}

void FilterParams::validate() const {
    if (!(imbalance_threshold > 0.0 && imbalance_threshold < 1.0)) {
        throw ValidationError("imbalance threshold must lie in (0, 1)");
    }
    if (!(accuracy_threshold > 0.0 && accuracy_threshold < 1.0)) {
        throw ValidationError("accuracy threshold must lie in (0, 1)");
    }
    probe.validate();
}

void to_json(nlohmann::json& j, const FilterParams& p) {
    j = {{"imbalance_threshold", p.imbalance_threshold},
         {"accuracy_threshold", p.accuracy_threshold},
         {"probe", p.probe},
         {"enabled", p.enabled}};
}

void from_json(const nlohmann::json& j, FilterParams& p) {
    p.imbalance_threshold = j.value("imbalance_threshold", p.imbalance_threshold);
    p.accuracy_threshold = j.value("accuracy_threshold", p.accuracy_threshold);
    if (j.contains("probe")) p.probe = j.at("probe").get<CartParams>();
    p.enabled = j.value("enabled", p.enabled);
}

double class_imbalance_raw_from_counts(std::span<const std::size_t> counts) {
    const std::size_t k = counts.size();
    if (k < 2) {
        throw ValidationError("class imbalance needs K >= 2");
    }
    const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
    if (n == 0) {
        throw ValidationError("class imbalance of an empty label vector");
    }
    const double uniform = 1.0 / static_cast<double>(k);
    double sum = 0.0;
    for (std::size_t c : counts) {
        const double d = static_cast<double>(c) / static_cast<double>(n) - uniform;
        sum += d * d;
    }
    return static_cast<double>(k) * sum;
}

double class_imbalance_raw(std::span<const ClassId> labels, int n_classes) {
    if (n_classes < 2) {
        throw ValidationError("class imbalance needs K >= 2");
    }
    return class_imbalance_raw_from_counts(count_labels(labels, n_classes));
}

double class_imbalance_normalized(std::span<const ClassId> labels, int n_classes) {
    return class_imbalance_raw(labels, n_classes) / static_cast<double>(n_classes - 1);
}

QualityReport evaluate_targets(const Dataset& raw, std::span<const ClassId> target_labels, const FilterParams& params,
                               std::optional<double> probe_accuracy) {
    params.validate();
    if (target_labels.size() != raw.n_rows()) {
        throw ValidationError("target labels length does not match the dataset");
    }
    const int k = raw.n_classes();
    const auto counts = count_labels(target_labels, k);

    QualityReport report;
    report.n_classes = k;
    report.imbalance_raw = class_imbalance_raw_from_counts(counts);
    report.imbalance_normalized = report.imbalance_raw / static_cast<double>(k - 1);
    report.majority_fraction =
        static_cast<double>(*std::max_element(counts.begin(), counts.end())) / static_cast<double>(raw.n_rows());
    report.n_classes_observed = raw.observed_classes();

    if (probe_accuracy) {
        report.cart_accuracy = *probe_accuracy;
    } else {
        const TreeModel probe = fit_cart(raw, params.probe);
        report.cart_accuracy = accuracy(apply_tree(probe, raw), raw.labels());
    }

    if (report.n_classes_observed < 2) {
        report.reject_reason = RejectReason::degenerate;
    } else if (params.enabled && !(report.imbalance_normalized < params.imbalance_threshold)) {
        report.reject_reason = RejectReason::imbalance;
    } else if (params.enabled && !(report.cart_accuracy > params.accuracy_threshold)) {
        report.reject_reason = RejectReason::accuracy;
    }
    report.passed = !report.reject_reason.has_value();
    return report;
}

QualityReport evaluate(const Dataset& dataset, const FilterParams& params) {
    return evaluate_targets(dataset, dataset.labels(), params);
}

}  // namespace treeforge
