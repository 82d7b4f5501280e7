#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treeforge/dataset.hpp"
#include "treeforge/random.hpp"

namespace treeforge {

// All activations are total on the reals, so no sample can become NaN.
enum class Activation { identity, tanh, rectifier, sine };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);
double activate(Activation a, double x);

struct IntRange {
    int lo = 0;
    int hi = 0;
    bool operator==(const IntRange&) const = default;
};

struct RealRange {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const RealRange&) const = default;
};

struct ScmConfig {
    IntRange n_nodes{8, 32};
    double edge_density = 0.4;
    IntRange n_samples{256, 2048};
    IntRange n_features{3, 10};
    IntRange n_classes{2, 10};
    std::vector<Activation> activations{Activation::identity, Activation::tanh, Activation::rectifier,
                                        Activation::sine};
    RealRange noise_scale{0.05, 0.3};
    int max_resample_attempts = 16;

    void validate() const;
    bool operator==(const ScmConfig&) const = default;
};

void to_json(nlohmann::json& j, const ScmConfig& c);
void from_json(const nlohmann::json& j, ScmConfig& c);

struct StructuralEquation {
    std::vector<int> parents;  // all lower-indexed nodes
    std::vector<double> weights;
    Activation activation = Activation::identity;
    double noise_scale = 1.0;
};

/// Random DAG whose node indices are already a topological order.
struct ScmGraph {
    std::vector<StructuralEquation> nodes;
    std::vector<int> feature_nodes;
    int target_node = -1;

    std::size_t n_nodes() const noexcept { return nodes.size(); }
    /// Ancestor flags of `node` (excluding itself).
    std::vector<char> ancestors(int node) const;
    /// Throws GenerationError when the graph is cyclic, out of order, or the
    /// target has no feature ancestor.
    void validate() const;
};

/// Samples a graph with edge i -> j (i < j) included with probability
/// edge_density. Resamples up to max_resample_attempts times until the target
/// has at least one feature among its ancestors.
ScmGraph sample_scm(const ScmConfig& config, RandomSource& rng);

/// Ancestral sampling of every node, then equal-frequency binning of the
/// target into n_classes labels. Throws GenerationError when quantile bins
/// collapse (tied values across a bin boundary) or values are non-finite.
Dataset sample_dataset(const ScmGraph& graph, std::size_t n_samples, int n_classes, RandomSource& rng);

/// Equal-frequency labels: the row at sorted rank p gets class floor(p*K/N).
LabelVector quantile_bin(std::span<const double> values, int n_classes);

}  // namespace treeforge
