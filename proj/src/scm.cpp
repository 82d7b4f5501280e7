#include "treeforge/scm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "treeforge/error.hpp"

namespace treeforge {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::tanh: return "tanh";
        case Activation::rectifier: return "rectifier";
        case Activation::sine: return "sine";
    }
    return "unknown";
}

Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::identity;
    if (s == "tanh") return Activation::tanh;
    if (s == "rectifier") return Activation::rectifier;
    if (s == "sine") return Activation::sine;
    throw ValidationError("unknown activation '" + s + "'");
}

double activate(Activation a, double x) {
    switch (a) {
        case Activation::identity: return x;
        case Activation::tanh: return std::tanh(x);
        // Leaky slope keeps the map injective, so rectified targets do not
        // pile up on a single tied value.
        case Activation::rectifier: return x > 0.0 ? x : 0.01 * x;
        case Activation::sine: return std::sin(x);
    }
    return x;
}

void ScmConfig::validate() const {
    auto check_range = [](const IntRange& r, const char* name, int min_lo) {
        if (r.lo < min_lo || r.hi < r.lo) {
            throw ValidationError(std::string("scm ") + name + " range [" + std::to_string(r.lo) + ", " +
                                  std::to_string(r.hi) + "] is empty or below " + std::to_string(min_lo));
        }
    };
    check_range(n_nodes, "n_nodes", 2);
    check_range(n_samples, "n_samples", 1);
    check_range(n_features, "n_features", 1);
    check_range(n_classes, "n_classes", 2);
    if (!(edge_density > 0.0 && edge_density <= 1.0)) {
        throw ValidationError("scm edge_density must lie in (0, 1]");
    }
    // Each draw caps d at M - 1, so only the smallest graph has to fit the smallest feature count.
    if (n_features.lo >= n_nodes.lo) {
        throw ValidationError("scm n_features min must be below n_nodes min");
    }
    if (n_samples.lo < n_classes.hi) {
        throw ValidationError("scm n_samples min must be at least n_classes max");
    }
    if (activations.empty()) {
        throw ValidationError("scm activation set is empty");
    }
    if (!(noise_scale.lo >= 0.0 && noise_scale.hi >= noise_scale.lo && std::isfinite(noise_scale.hi))) {
        throw ValidationError("scm noise_scale range is invalid");
    }
    if (max_resample_attempts < 1) {
        throw ValidationError("scm max_resample_attempts must be >= 1");
    }
}

namespace {

nlohmann::json range_json(const IntRange& r) { return nlohmann::json::array({r.lo, r.hi}); }

IntRange int_range(const nlohmann::json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

}  // namespace

void to_json(nlohmann::json& j, const ScmConfig& c) {
    nlohmann::json acts = nlohmann::json::array();
    for (Activation a : c.activations) acts.push_back(to_string(a));
    j = {{"n_nodes_range", range_json(c.n_nodes)},
         {"edge_density", c.edge_density},
         {"n_samples_range", range_json(c.n_samples)},
         {"n_features_range", range_json(c.n_features)},
         {"n_classes_range", range_json(c.n_classes)},
         {"activation_set", acts},
         {"noise_scale_range", nlohmann::json::array({c.noise_scale.lo, c.noise_scale.hi})},
         {"max_resample_attempts", c.max_resample_attempts}};
}

void from_json(const nlohmann::json& j, ScmConfig& c) {
    if (j.contains("n_nodes_range")) c.n_nodes = int_range(j.at("n_nodes_range"));
    c.edge_density = j.value("edge_density", c.edge_density);
    if (j.contains("n_samples_range")) c.n_samples = int_range(j.at("n_samples_range"));
    if (j.contains("n_features_range")) c.n_features = int_range(j.at("n_features_range"));
    if (j.contains("n_classes_range")) c.n_classes = int_range(j.at("n_classes_range"));
    if (j.contains("activation_set")) {
        c.activations.clear();
        for (const auto& a : j.at("activation_set")) c.activations.push_back(activation_from_string(a.get<std::string>()));
    }
    if (j.contains("noise_scale_range")) {
        const auto& r = j.at("noise_scale_range");
        c.noise_scale = {r.at(0).get<double>(), r.at(1).get<double>()};
    }
    c.max_resample_attempts = j.value("max_resample_attempts", c.max_resample_attempts);
}

std::vector<char> ScmGraph::ancestors(int node) const {
    std::vector<char> flags(nodes.size(), 0);
    std::vector<int> stack{node};
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int p : nodes[static_cast<std::size_t>(v)].parents) {
            if (!flags[static_cast<std::size_t>(p)]) {
                flags[static_cast<std::size_t>(p)] = 1;
                stack.push_back(p);
            }
        }
    }
    return flags;
}

void ScmGraph::validate() const {
    const int m = static_cast<int>(nodes.size());
    for (int j = 0; j < m; ++j) {
        const auto& eq = nodes[static_cast<std::size_t>(j)];
        if (eq.parents.size() != eq.weights.size()) {
            throw GenerationError("node " + std::to_string(j) + " has mismatched parents and weights");
        }
        for (int p : eq.parents) {
            if (p < 0 || p >= j) {
                throw GenerationError("node " + std::to_string(j) + " has parent " + std::to_string(p) +
                                      " outside topological order");
            }
        }
    }
    if (target_node < 0 || target_node >= m) {
        throw GenerationError("target node out of range");
    }
    if (feature_nodes.empty()) {
        throw GenerationError("graph has no feature nodes");
    }
    for (int f : feature_nodes) {
        if (f < 0 || f >= m || f == target_node) {
            throw GenerationError("feature node " + std::to_string(f) + " is invalid");
        }
    }
    const auto anc = ancestors(target_node);
    if (std::none_of(feature_nodes.begin(), feature_nodes.end(),
                     [&](int f) { return anc[static_cast<std::size_t>(f)] != 0; })) {
        throw GenerationError("target node has no feature ancestor");
    }
}

ScmGraph sample_scm(const ScmConfig& config, RandomSource& rng) {
    config.validate();
    for (int attempt = 0; attempt < config.max_resample_attempts; ++attempt) {
        const int m = static_cast<int>(rng.uniform_int(config.n_nodes.lo, config.n_nodes.hi));
        const int d = static_cast<int>(rng.uniform_int(config.n_features.lo, std::min(config.n_features.hi, m - 1)));

        ScmGraph graph;
        graph.nodes.resize(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) {
            auto& eq = graph.nodes[static_cast<std::size_t>(j)];
            for (int i = 0; i < j; ++i) {
                if (rng.bernoulli(config.edge_density)) eq.parents.push_back(i);
            }
            // Unit-variance fan-in keeps node scales comparable across depths.
            const double scale = eq.parents.empty() ? 1.0 : 1.0 / std::sqrt(static_cast<double>(eq.parents.size()));
            for (std::size_t p = 0; p < eq.parents.size(); ++p) eq.weights.push_back(rng.normal() * scale);
            eq.activation = config.activations[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(config.activations.size()) - 1))];
            eq.noise_scale = rng.uniform(config.noise_scale.lo, config.noise_scale.hi);
        }

        std::vector<int> candidates;
        for (int j = 0; j < m; ++j) {
            if (!graph.nodes[static_cast<std::size_t>(j)].parents.empty()) candidates.push_back(j);
        }
        if (candidates.empty()) continue;
        graph.target_node =
            candidates[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(candidates.size()) - 1))];

        std::vector<int> pool;
        for (int j = 0; j < m; ++j) {
            if (j != graph.target_node) pool.push_back(j);
        }
        // Partial Fisher-Yates draws d distinct feature nodes.
        for (int i = 0; i < d; ++i) {
            const auto pick = rng.uniform_int(i, static_cast<std::int64_t>(pool.size()) - 1);
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick)]);
        }
        graph.feature_nodes.assign(pool.begin(), pool.begin() + d);
        std::sort(graph.feature_nodes.begin(), graph.feature_nodes.end());

        const auto anc = graph.ancestors(graph.target_node);
        if (std::any_of(graph.feature_nodes.begin(), graph.feature_nodes.end(),
                        [&](int f) { return anc[static_cast<std::size_t>(f)] != 0; })) {
            return graph;
        }
    }
    throw GenerationError("no causal link from features to target after " +
                          std::to_string(config.max_resample_attempts) + " graph samples");
}

LabelVector quantile_bin(std::span<const double> values, int n_classes) {
    const std::size_t n = values.size();
    if (n_classes < 2 || n < static_cast<std::size_t>(n_classes)) {
        throw GenerationError("quantile binning needs n >= n_classes >= 2");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const auto k = static_cast<std::size_t>(n_classes);
    LabelVector labels(n);
    for (std::size_t p = 0; p < n; ++p) {
        labels[order[p]] = static_cast<ClassId>(p * k / n);
        if (p > 0 && labels[order[p]] != labels[order[p - 1]] && !(values[order[p - 1]] < values[order[p]])) {
            throw GenerationError("target quantiles collapse: tied values straddle a class boundary");
        }
    }
    return labels;
}

Dataset sample_dataset(const ScmGraph& graph, std::size_t n_samples, int n_classes, RandomSource& rng) {
    graph.validate();
    if (n_classes < 2 || n_samples < static_cast<std::size_t>(n_classes)) {
        throw ValidationError("sample_dataset needs n_samples >= n_classes >= 2");
    }
    const std::size_t m = graph.n_nodes();
    std::vector<std::vector<double>> columns(m, std::vector<double>(n_samples));
    for (std::size_t j = 0; j < m; ++j) {
        const auto& eq = graph.nodes[j];
        auto& col = columns[j];
        for (std::size_t r = 0; r < n_samples; ++r) {
            double x = eq.noise_scale * rng.normal();
            for (std::size_t p = 0; p < eq.parents.size(); ++p) {
                x += eq.weights[p] * columns[static_cast<std::size_t>(eq.parents[p])][r];
            }
            col[r] = activate(eq.activation, x);
            if (!std::isfinite(col[r])) {
                throw GenerationError("non-finite value at node " + std::to_string(j));
            }
        }
    }

    const std::size_t d = graph.feature_nodes.size();
    std::vector<double> features(n_samples * d);
    std::vector<std::string> names;
    names.reserve(d);
    for (std::size_t c = 0; c < d; ++c) {
        const auto& col = columns[static_cast<std::size_t>(graph.feature_nodes[c])];
        for (std::size_t r = 0; r < n_samples; ++r) features[r * d + c] = col[r];
        names.push_back("x" + std::to_string(c));
    }
    LabelVector labels = quantile_bin(columns[static_cast<std::size_t>(graph.target_node)], n_classes);
    return Dataset(n_samples, d, std::move(features), std::move(labels), n_classes, std::move(names), "scm");
}

}  // namespace treeforge
