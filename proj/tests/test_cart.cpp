#include <doctest.h>

#include <numeric>

#include "treeforge/cart.hpp"
#include "treeforge/error.hpp"
#include "test_util.hpp"

using namespace treeforge;

namespace {

std::size_t smallest_leaf(const TreeModel& t, const Dataset& d) {
    std::vector<std::size_t> per_node(t.nodes().size(), 0);
    for (std::size_t r = 0; r < d.n_rows(); ++r) {
        std::size_t i = 0;
        while (!t.node(i).is_leaf()) {
            const auto& n = t.node(i);
            i = static_cast<std::size_t>(d.at(r, static_cast<std::size_t>(n.feature)) <= n.threshold ? n.left : n.right);
        }
        ++per_node[i];
    }
    std::size_t best = d.n_rows();
    for (std::size_t i = 0; i < per_node.size(); ++i) {
        if (t.node(i).is_leaf()) best = std::min(best, per_node[i]);
    }
    return best;
}

double train_acc(const Dataset& d, int depth, std::size_t min_leaf = 1) {
    CartParams p;
    p.max_depth = depth;
    p.min_samples_leaf = min_leaf;
    return accuracy(apply_tree(fit_cart(d, p), d), d.labels());
}

}  // namespace

TEST_SUITE("cart") {

TEST_CASE("gini") {
    CHECK(gini(std::vector<std::size_t>{7, 0}) == 0.0);
    CHECK(gini(std::vector<std::size_t>{5, 5}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(gini(std::vector<std::size_t>{3, 1}) == doctest::Approx(0.375).epsilon(1e-15));
    CHECK(gini(std::vector<std::size_t>{1, 1, 1}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(gini(std::vector<std::size_t>{0, 0}), ValidationError);
}

TEST_CASE("best_split on separable 1-D data") {
    const Dataset d(4, 1, {0, 0, 1, 1}, {0, 0, 1, 1}, 2);
    const std::vector<std::size_t> rows{0, 1, 2, 3};
    const auto s = best_split(d, rows, {});
    REQUIRE(s.has_value());
    CHECK(s->feature == 0);
    CHECK(s->threshold == 0.5);
    CHECK(s->impurity_decrease == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("best_split returns none on pure nodes and on XOR") {
    const Dataset pure(3, 1, {1, 2, 3}, {1, 1, 1}, 2);
    const std::vector<std::size_t> r3{0, 1, 2};
    CHECK_FALSE(best_split(pure, r3, {}).has_value());
    const Dataset x = test::xor_dataset();
    const std::vector<std::size_t> r4{0, 1, 2, 3};
    CHECK_FALSE(best_split(x, r4, {}).has_value());
}

TEST_CASE("best_split tie-break prefers lower feature then lower threshold") {
    // Both features are identical copies, so every candidate ties across features.
    const Dataset d(4, 2, {0, 0, 1, 1, 2, 2, 3, 3}, {0, 1, 1, 0}, 2);
    const std::vector<std::size_t> rows{0, 1, 2, 3};
    const auto s = best_split(d, rows, {});
    REQUIRE(s.has_value());
    CHECK(s->feature == 0);
    // Thresholds 0.5 and 2.5 tie (each isolates one row of a class); the lower wins.
    CHECK(s->threshold == 0.5);
}

TEST_CASE("best_split respects min_samples_leaf and min_impurity_decrease") {
    const Dataset d(4, 1, {0, 1, 2, 3}, {0, 1, 1, 1}, 2);
    const std::vector<std::size_t> rows{0, 1, 2, 3};
    CartParams p;
    p.min_samples_leaf = 2;
    const auto s = best_split(d, rows, p);
    REQUIRE(s.has_value());
    CHECK(s->threshold == 1.5);
    p.min_samples_leaf = 3;
    CHECK_FALSE(best_split(d, rows, p).has_value());
    CartParams q;
    q.min_impurity_decrease = 0.375;  // the best split gains exactly 0.375
    CHECK_FALSE(best_split(d, rows, q).has_value());
    q.min_impurity_decrease = 0.37;
    CHECK(best_split(d, rows, q).has_value());
}

TEST_CASE("fit_cart basic cases") {
    const Dataset single(3, 1, {1, 2, 3}, {1, 1, 1}, 2);
    const auto t = fit_cart(single, {});
    CHECK(t.n_leaves() == 1);
    CHECK(accuracy(apply_tree(t, single), single.labels()) == 1.0);

    CartParams depth2;
    depth2.max_depth = 2;
    const auto x = fit_cart(test::xor_dataset(), depth2);
    CHECK(x.n_leaves() == 1);
    CHECK(accuracy(apply_tree(x, test::xor_dataset()), test::xor_dataset().labels()) == 0.5);

    const Dataset sep(4, 1, {0, 0, 1, 1}, {0, 0, 1, 1}, 2);
    CartParams d1;
    d1.max_depth = 1;
    const auto stump = fit_cart(sep, d1);
    CHECK(stump.depth() == 1);
    CHECK(accuracy(apply_tree(stump, sep), sep.labels()) == 1.0);

    CartParams d0;
    d0.max_depth = 0;
    CHECK(fit_cart(sep, d0).n_leaves() == 1);
}

TEST_CASE("majority leaf ties go to the lowest class id") {
    const Dataset d(4, 1, {1, 1, 1, 1}, {2, 1, 2, 1}, 3);
    const auto t = fit_cart(d, {});
    CHECK(t.nodes().size() == 1);
    CHECK(t.node(0).label == 1);
}

TEST_CASE("depth bound, majority floor and determinism on random data") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const Dataset d = test::grid_dataset(120, 3, 3, 5, seed);
        for (int depth = 0; depth <= 5; ++depth) {
            CartParams p;
            p.max_depth = depth;
            const auto t = fit_cart(d, p);
            CHECK(t.depth() <= depth);
            const auto counts = d.class_counts();
            const double floor = static_cast<double>(*std::max_element(counts.begin(), counts.end())) / 120.0;
            CHECK(accuracy(apply_tree(t, d), d.labels()) >= floor);
            CHECK(fit_cart(d, p) == t);
        }
    }
}

TEST_CASE("leaf-size floor holds") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Dataset d = test::random_dataset(150, 4, 3, 100 + seed);
        for (std::size_t min_leaf : {1, 3, 7, 20}) {
            CartParams p;
            p.max_depth = 6;
            p.min_samples_leaf = min_leaf;
            CHECK(smallest_leaf(fit_cart(d, p), d) >= min_leaf);
        }
    }
}

TEST_CASE("training accuracy is monotone in depth") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const Dataset d = test::grid_dataset(100, 3, 4, 6, 500 + seed);
        double prev = 0.0;
        for (int depth = 0; depth <= 6; ++depth) {
            const double a = train_acc(d, depth);
            CHECK(a >= prev);
            prev = a;
        }
    }
}

TEST_CASE("row permutation leaves predictions unchanged") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Dataset d = test::grid_dataset(80, 3, 3, 4, 900 + seed);
        std::vector<std::size_t> perm(d.n_rows());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        RandomSource r(seed);
        for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[static_cast<std::size_t>(r.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
        CartParams p;
        p.max_depth = 4;
        const auto a = fit_cart(d, p);
        const auto b = fit_cart(d.subset(perm), p);
        const Dataset probe = test::grid_dataset(300, 3, 3, 6, 7000 + seed);
        CHECK(apply_tree(a, probe) == apply_tree(b, probe));
    }
}

TEST_CASE("thresholds stay between the neighbouring values") {
    // Adjacent doubles: the midpoint rounds to one of them and must remain < hi.
    const double lo = 1.0;
    const double hi = std::nextafter(1.0, 2.0);
    const Dataset d(2, 1, {lo, hi}, {0, 1}, 2);
    const auto t = fit_cart(d, {});
    REQUIRE(t.depth() == 1);
    CHECK(accuracy(apply_tree(t, d), d.labels()) == 1.0);
}

}
