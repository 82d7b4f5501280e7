#include <doctest.h>

#include <cmath>

#include "treeforge/error.hpp"
#include "treeforge/scm.hpp"
#include "oracles.hpp"

using namespace treeforge;

namespace {

bool same_graph(const ScmGraph& a, const ScmGraph& b) {
    if (a.n_nodes() != b.n_nodes() || a.feature_nodes != b.feature_nodes || a.target_node != b.target_node) return false;
    for (std::size_t i = 0; i < a.n_nodes(); ++i) {
        const auto& x = a.nodes[i];
        const auto& y = b.nodes[i];
        if (x.parents != y.parents || x.weights != y.weights || x.activation != y.activation ||
            x.noise_scale != y.noise_scale) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_SUITE("scm") {

TEST_CASE("config validation") {
    ScmConfig c;
    CHECK_NOTHROW(c.validate());
    c.n_classes = {1, 3};
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.edge_density = 0.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.n_nodes = {5, 4};
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.n_features = {8, 10};
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.activations.clear();
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("config json round trip") {
    ScmConfig c;
    c.edge_density = 0.7;
    c.activations = {Activation::sine};
    nlohmann::json j = c;
    CHECK(j.get<ScmConfig>() == c);
    CHECK(j.contains("n_nodes_range"));
    CHECK(j.contains("activation_set"));
}

TEST_CASE("activations are total on the reals") {
    for (auto a : {Activation::identity, Activation::tanh, Activation::rectifier, Activation::sine}) {
        for (double x : {-1e300, -3.0, 0.0, 2.5, 1e300}) CHECK(std::isfinite(activate(a, x)));
        CHECK(activation_from_string(to_string(a)) == a);
    }
    CHECK(activate(Activation::rectifier, -2.0) < 0.0);
    CHECK(activate(Activation::rectifier, 2.0) == 2.0);
}

TEST_CASE("sampled graphs are acyclic with a causal feature link") {
    ScmConfig c;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        RandomSource r(seed);
        const ScmGraph g = sample_scm(c, r);
        const auto order = oracle::kahn_order(g);
        REQUIRE(order.size() == g.n_nodes());
        CHECK(g.n_nodes() >= 8);
        CHECK(g.n_nodes() <= 32);
        CHECK(g.feature_nodes.size() >= 3);
        CHECK(g.feature_nodes.size() <= 10);
        CHECK(std::find(g.feature_nodes.begin(), g.feature_nodes.end(), g.target_node) == g.feature_nodes.end());
        const auto anc = g.ancestors(g.target_node);
        CHECK(std::any_of(g.feature_nodes.begin(), g.feature_nodes.end(), [&](int f) { return anc[static_cast<std::size_t>(f)] != 0; }));
        CHECK_NOTHROW(g.validate());
    }
}

TEST_CASE("sample_scm is deterministic in the seed") {
    ScmConfig c;
    RandomSource a(5), b(5), other(6);
    const auto ga = sample_scm(c, a);
    CHECK(same_graph(ga, sample_scm(c, b)));
    CHECK_FALSE(same_graph(ga, sample_scm(c, other)));
}

TEST_CASE("density 1 connects every earlier node") {
    ScmConfig c;
    c.n_nodes = {3, 3};
    c.n_features = {1, 2};
    c.edge_density = 1.0;
    RandomSource r(1);
    const auto g = sample_scm(c, r);
    CHECK(g.nodes[0].parents.empty());
    CHECK(g.nodes[1].parents == std::vector<int>{0});
    CHECK(g.nodes[2].parents == std::vector<int>{0, 1});
}

TEST_CASE("graph without any causal path raises after bounded resampling") {
    ScmConfig c;
    c.n_nodes = {2, 2};
    c.n_features = {1, 1};
    c.edge_density = 1e-12;
    c.max_resample_attempts = 4;
    RandomSource r(0);
    CHECK_THROWS_AS(sample_scm(c, r), GenerationError);
}

TEST_CASE("quantile binning gives near-equal classes") {
    std::vector<double> v(100);
    RandomSource r(2);
    for (auto& x : v) x = r.normal();
    const auto y = quantile_bin(v, 4);
    std::vector<int> counts(4, 0);
    for (auto c : y) ++counts[static_cast<std::size_t>(c)];
    for (int c : counts) CHECK(std::abs(c - 25) <= 1);

    for (int k = 2; k <= 10; ++k) {
        for (std::size_t n : {k * 1ul, 37ul, 256ul, 1001ul}) {
            if (n < static_cast<std::size_t>(k)) continue;
            std::vector<double> w(n);
            for (auto& x : w) x = r.normal();
            const auto lab = quantile_bin(w, k);
            std::vector<std::size_t> cnt(static_cast<std::size_t>(k), 0);
            for (auto c : lab) ++cnt[static_cast<std::size_t>(c)];
            const double bound = 1.0 / k + static_cast<double>(k - 1) / static_cast<double>(n);
            CHECK(static_cast<double>(*std::max_element(cnt.begin(), cnt.end())) / static_cast<double>(n) <= bound + 1e-12);
            // Rank order is respected: a larger value never gets a smaller class.
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; j += 17) {
                    if (w[i] < w[j]) CHECK(lab[i] <= lab[j]);
                }
            }
        }
    }
}

TEST_CASE("collapsed quantiles raise") {
    CHECK_THROWS_AS(quantile_bin(std::vector<double>(10, 1.0), 2), GenerationError);
    CHECK_THROWS_AS(quantile_bin(std::vector<double>{1, 2}, 3), GenerationError);
}

TEST_CASE("sample_dataset shape, finiteness and determinism") {
    ScmConfig c;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        RandomSource r(seed);
        const auto g = sample_scm(c, r);
        RandomSource d1(seed + 1000), d2(seed + 1000);
        try {
            const Dataset a = sample_dataset(g, 300, 4, d1);
            CHECK(a.n_rows() == 300);
            CHECK(a.n_features() == g.feature_nodes.size());
            CHECK(a.n_classes() == 4);
            for (double v : a.features()) REQUIRE(std::isfinite(v));
            CHECK(a == sample_dataset(g, 300, 4, d2));
        } catch (const GenerationError&) {
            // Tied target quantiles are legal and handled by the caller.
        }
    }
}

TEST_CASE("cutting the target off leaves features independent of the label") {
    ScmConfig c;
    c.n_features = {3, 5};
    int null_rejections = 0;
    int null_tests = 0;
    int linked_detected = 0;
    int linked_tests = 0;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        RandomSource r(seed);
        ScmGraph g = sample_scm(c, r);
        RandomSource data_rng(seed + 77);
        const Dataset linked = sample_dataset(g, 10000, 3, data_rng);

        // Zero every edge touching the target. Its value is then its own noise only,
        // and no feature can inherit it through a descendant path.
        auto& eq = g.nodes[static_cast<std::size_t>(g.target_node)];
        std::fill(eq.weights.begin(), eq.weights.end(), 0.0);
        for (auto& node : g.nodes) {
            for (std::size_t p = 0; p < node.parents.size(); ++p) {
                if (node.parents[p] == g.target_node) node.weights[p] = 0.0;
            }
        }
        RandomSource cut_rng(seed + 77);
        const Dataset cut = sample_dataset(g, 10000, 3, cut_rng);

        std::vector<int> y_cut(cut.labels().begin(), cut.labels().end());
        std::vector<int> y_linked(linked.labels().begin(), linked.labels().end());
        double best_linked_p = 1.0;
        for (std::size_t f = 0; f < cut.n_features(); ++f) {
            std::vector<double> x(cut.n_rows());
            for (std::size_t i = 0; i < x.size(); ++i) x[i] = cut.at(i, f);
            ++null_tests;
            null_rejections += oracle::mi_permutation_p(x, y_cut, 8, 3, 199, seed * 31 + f) < 0.01;
            for (std::size_t i = 0; i < x.size(); ++i) x[i] = linked.at(i, f);
            best_linked_p = std::min(best_linked_p, oracle::mi_permutation_p(x, y_linked, 8, 3, 199, seed * 37 + f));
        }
        ++linked_tests;
        linked_detected += best_linked_p < 0.01;
    }
    // At the 1% level a handful of false alarms among ~30 tests would already be unusual.
    CHECK(null_rejections <= 2);
    // Positive control: the untouched graphs do show dependence.
    CHECK(linked_detected >= linked_tests - 1);
}

}
