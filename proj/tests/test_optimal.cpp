#include <doctest.h>

#include "treeforge/cart.hpp"
#include "treeforge/error.hpp"
#include "treeforge/optimal.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace treeforge;

namespace {

// Random 0/1 matrix; each non-constant column becomes one bit (value == 0).
BinarizedDataset random_bits(std::size_t n, std::size_t b, int k, std::uint64_t seed) {
    RandomSource r(seed);
    std::vector<double> f(n * b);
    for (auto& v : f) v = static_cast<double>(r.uniform_int(0, 1));
    LabelVector y(n);
    for (auto& c : y) c = static_cast<ClassId>(r.uniform_int(0, k - 1));
    return binarize(Dataset(n, b, f, y, k), 1);
}

OptParams with_depth(int depth, double lambda = 0.0) {
    OptParams p;
    p.max_depth = depth;
    p.leaf_penalty = lambda;
    return p;
}

}  // namespace

TEST_SUITE("optimal") {

TEST_CASE("binarize: 0/1 feature, median threshold, constant feature") {
    const Dataset zero_one(4, 1, {0, 1, 1, 0}, {0, 1, 1, 0}, 2);
    const auto b = binarize(zero_one, 1);
    REQUIRE(b.n_bits() == 1);
    CHECK(b.thresholds()[0].threshold == 0.5);
    CHECK(b.bit(0, 0));
    CHECK_FALSE(b.bit(1, 0));

    const Dataset ramp(4, 1, {1, 2, 3, 4}, {0, 0, 1, 1}, 2);
    const auto m = binarize(ramp, 1);
    REQUIRE(m.n_bits() == 1);
    CHECK(m.thresholds()[0].threshold == 2.5);
    CHECK(m.bit(0, 0));
    CHECK(m.bit(1, 0));
    CHECK_FALSE(m.bit(2, 0));
    CHECK_FALSE(m.bit(3, 0));

    const Dataset with_const(3, 2, {5, 1, 5, 2, 5, 3}, {0, 1, 0}, 2);
    const auto c = binarize(with_const, 2);
    CHECK(c.constant_features() == std::vector<int>{0});
    for (const auto& t : c.thresholds()) CHECK(t.feature == 1);

    CHECK_THROWS_AS(binarize(ramp, 0), ValidationError);
}

TEST_CASE("binarize bit semantics hold for every bit") {
    const Dataset d = test::random_dataset(57, 4, 3, 8);
    const auto b = binarize(d, 3);
    CHECK(b.n_bits() == 12);
    for (std::size_t j = 0; j < b.n_bits(); ++j) {
        const auto& t = b.thresholds()[j];
        for (std::size_t r = 0; r < d.n_rows(); ++r) {
            CHECK(b.bit(r, j) == (d.at(r, static_cast<std::size_t>(t.feature)) <= t.threshold));
        }
    }
    const auto again = binarize_with(d, b.thresholds());
    for (std::size_t j = 0; j < b.n_bits(); ++j) {
        for (std::size_t r = 0; r < d.n_rows(); ++r) CHECK(again.bit(r, j) == b.bit(r, j));
    }
}

TEST_CASE("XOR: optimal finds the perfect depth-2 tree that CART misses") {
    const auto bits = binarize(test::xor_dataset(), 1);
    const auto r = solve_optimal(bits, with_depth(2));
    CHECK(r.objective == 0.0);
    CHECK(r.errors == 0);
    CHECK(oracle::brute_force_objective(bits, 2, 0.0) == 0.0);
    CartParams c;
    c.max_depth = 2;
    const auto cart = fit_cart(bits.as_dataset(), c);
    CHECK(accuracy(apply_tree(cart, bits.as_dataset()), bits.labels()) == 0.5);
    // Mapping back onto the original features keeps the predictions.
    const auto ft = to_feature_tree(r.tree, bits.thresholds());
    CHECK(apply_tree(ft, test::xor_dataset()) == LabelVector{0, 1, 1, 0});
}

TEST_CASE("branch and bound matches brute-force enumeration") {
    RandomSource meta(2024);
    for (int trial = 0; trial < 120; ++trial) {
        const auto n = static_cast<std::size_t>(meta.uniform_int(1, 16));
        const auto b = static_cast<std::size_t>(meta.uniform_int(1, 6));
        const int k = static_cast<int>(meta.uniform_int(2, 3));
        const int depth = static_cast<int>(meta.uniform_int(1, 2));
        const double lambda = trial % 3 == 0 ? 0.0 : meta.uniform(0.0, 0.2);
        const auto data = random_bits(n, b, k, meta.next_u64());
        if (data.n_bits() == 0) continue;
        const auto r = solve_optimal(data, with_depth(depth, lambda));
        const double truth = oracle::brute_force_objective(data, depth, lambda);
        CHECK(r.objective == doctest::Approx(truth).epsilon(1e-12));
        CHECK(tree_objective(r.tree, data, lambda) == doctest::Approx(r.objective).epsilon(1e-12));
        CHECK(r.tree.depth() <= depth);
    }
}

TEST_CASE("memoized search agrees with the exhaustive mode and explores no more") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto data = random_bits(40, 6, 2, seed);
        if (data.n_bits() == 0) continue;
        for (int depth : {1, 2, 3}) {
            auto p = with_depth(depth);
            const auto fast = solve_optimal(data, p);
            p.exhaustive = true;
            const auto slow = solve_optimal(data, p);
            CHECK(fast.objective == slow.objective);
            CHECK(fast.search_nodes <= slow.search_nodes);
        }
    }
}

TEST_CASE("depth 1 examines exactly B candidates") {
    for (std::size_t b : {1, 3, 6}) {
        const auto data = binarize(test::random_dataset(30, b, 2, b), 1);
        REQUIRE(data.n_bits() == b);
        CHECK(count_search_nodes(data, with_depth(1)) == b);
    }
}

TEST_CASE("capacity and penalty extremes") {
    // 8 distinct rows over 3 bits: depth 3 can isolate every row.
    std::vector<double> f;
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 3; ++j) f.push_back((i >> j) & 1);
    }
    const Dataset d(8, 3, f, {0, 1, 1, 0, 1, 0, 0, 1}, 2);
    const auto bits = binarize(d, 1);
    CHECK(solve_optimal(bits, with_depth(3)).objective == 0.0);
    const auto big_lambda = solve_optimal(bits, with_depth(3, 1.0));
    CHECK(big_lambda.tree.n_leaves() == 1);
    CHECK(big_lambda.objective == doctest::Approx(0.5 + 1.0));
}

TEST_CASE("objective is monotone in depth and lambda, and dominates CART") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Dataset raw = test::grid_dataset(60, 4, 3, 5, 300 + seed);
        const auto bits = binarize(raw, 2);
        double prev = 2.0;
        for (int depth = 1; depth <= 3; ++depth) {
            const double obj = solve_optimal(bits, with_depth(depth)).objective;
            CHECK(obj <= prev);
            prev = obj;
            CartParams c;
            c.max_depth = depth;
            const Dataset bd = bits.as_dataset();
            CHECK(obj <= 1.0 - accuracy(apply_tree(fit_cart(bd, c), bd), bd.labels()) + 1e-12);
        }
        double prev_l = -1.0;
        for (double lambda : {0.0, 0.01, 0.05, 0.2}) {
            const double obj = solve_optimal(bits, with_depth(2, lambda)).objective;
            CHECK(obj >= prev_l);
            prev_l = obj;
        }
    }
}

TEST_CASE("node budget raises with an incumbent and a gap") {
    const auto data = binarize(test::random_dataset(200, 10, 2, 5), 1);
    auto p = with_depth(4);
    p.node_budget = 1000;
    try {
        solve_optimal(data, p);
        FAIL("expected SolverBudgetExceeded");
    } catch (const SolverBudgetExceeded& e) {
        CHECK(e.incumbent().tree.depth() <= 4);
        CHECK(e.gap() >= 0.0);
        CHECK(tree_objective(e.incumbent().tree, data, 0.0) == doctest::Approx(e.incumbent().objective));
    }
    CHECK_THROWS_AS(count_search_nodes(data, p), SolverBudgetExceeded);
}

TEST_CASE("node counts grow with depth and with B") {
    const auto data = binarize(test::random_dataset(300, 12, 2, 77), 1);
    std::uint64_t prev = 0;
    for (int depth = 1; depth <= 4; ++depth) {
        const auto n = count_search_nodes(data.first_bits(10), with_depth(depth));
        CHECK(n >= prev);
        prev = n;
    }
    CHECK(count_search_nodes(data.first_bits(12), with_depth(3)) > count_search_nodes(data.first_bits(4), with_depth(3)));
}

TEST_CASE("parameter validation") {
    const auto data = binarize(test::xor_dataset(), 1);
    CHECK_THROWS_AS(solve_optimal(data, with_depth(0)), ValidationError);
    CHECK_THROWS_AS(solve_optimal(data, with_depth(1, -1.0)), ValidationError);
    CHECK_THROWS_AS(data.first_bits(5), ValidationError);
}

}
