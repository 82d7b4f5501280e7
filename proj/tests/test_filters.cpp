#include <doctest.h>

#include <cmath>

#include "treeforge/error.hpp"
#include "treeforge/filters.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace treeforge;

namespace {

LabelVector labels_from_counts(const std::vector<std::size_t>& counts) {
    LabelVector y;
    for (std::size_t c = 0; c < counts.size(); ++c) y.insert(y.end(), counts[c], static_cast<ClassId>(c));
    return y;
}

}  // namespace

TEST_SUITE("filters") {

TEST_CASE("imbalance hand values") {
    CHECK(class_imbalance_raw(labels_from_counts({50, 50}), 2) == 0.0);
    CHECK(class_imbalance_raw(labels_from_counts({100, 0, 0}), 3) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(class_imbalance_raw(labels_from_counts({75, 25}), 2) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(class_imbalance_normalized(labels_from_counts({75, 25}), 2) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(class_imbalance_normalized(LabelVector(9, 4), 5) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(class_imbalance_raw(LabelVector{0}, 1), ValidationError);
    CHECK_THROWS_AS(class_imbalance_raw(LabelVector{}, 2), ValidationError);
}

TEST_CASE("imbalance agrees with the long-double definition on random counts") {
    RandomSource r(17);
    for (int trial = 0; trial < 500; ++trial) {
        const int k = static_cast<int>(r.uniform_int(2, 12));
        std::vector<std::size_t> counts(static_cast<std::size_t>(k));
        std::size_t total = 0;
        for (auto& c : counts) total += c = static_cast<std::size_t>(r.uniform_int(0, 300));
        if (total == 0) counts[0] = total = 1;
        const double raw = class_imbalance_raw_from_counts(counts);
        CHECK(std::abs(raw - oracle::imbalance_raw(counts)) < 1e-12);
        const auto y = labels_from_counts(counts);
        const double norm = class_imbalance_normalized(y, k);
        CHECK(norm >= 0.0);
        CHECK(norm <= 1.0 + 1e-15);
        CHECK(std::abs(norm - raw / (k - 1)) < 1e-15);
    }
}

TEST_CASE("imbalance is invariant under class-id permutation") {
    const std::vector<std::size_t> counts{4, 9, 1, 0, 6};
    auto shuffled = counts;
    std::rotate(shuffled.begin(), shuffled.begin() + 2, shuffled.end());
    CHECK(class_imbalance_raw_from_counts(counts) == doctest::Approx(class_imbalance_raw_from_counts(shuffled)).epsilon(1e-15));
}

TEST_CASE("K=2 threshold matches the majority-fraction boundary") {
    const double boundary = 0.5 + std::sqrt(0.075);
    CHECK(boundary == doctest::Approx(0.7739).epsilon(1e-4));
    const std::size_t n = 100000;
    for (std::size_t maj = n / 2; maj <= n; maj += 97) {
        const double p = static_cast<double>(maj) / static_cast<double>(n);
        const double norm = class_imbalance_raw_from_counts(std::vector<std::size_t>{maj, n - maj});
        if (std::abs(p - boundary) > 1e-9) CHECK((norm < 0.3) == (p < boundary));
    }
}

TEST_CASE("evaluate: accept, imbalance, accuracy, degenerate") {
    FilterParams params;
    params.probe.max_depth = 2;

    const Dataset sep(8, 1, {0, 1, 2, 3, 4, 5, 6, 7}, {0, 0, 0, 0, 1, 1, 1, 1}, 2);
    const auto ok = evaluate(sep, params);
    CHECK(ok.passed);
    CHECK_FALSE(ok.reject_reason.has_value());
    CHECK(ok.cart_accuracy == 1.0);

    LabelVector y(100, 0);
    for (int i = 0; i < 5; ++i) y[static_cast<std::size_t>(i)] = 1;
    std::vector<double> f(100);
    std::iota(f.begin(), f.end(), 0.0);
    const auto skew = evaluate(Dataset(100, 1, f, y, 2), params);
    CHECK_FALSE(skew.passed);
    CHECK(skew.reject_reason == RejectReason::imbalance);
    CHECK(skew.majority_fraction == doctest::Approx(0.95));

    const auto x = evaluate(test::xor_dataset(), params);
    CHECK(x.cart_accuracy == 0.5);
    CHECK(x.reject_reason == RejectReason::accuracy);

    const auto deg = evaluate(Dataset(3, 1, {1, 2, 3}, {1, 1, 1}, 3), params);
    CHECK(deg.reject_reason == RejectReason::degenerate);
    CHECK_FALSE(deg.passed);
}

TEST_CASE("strict inequalities at the thresholds") {
    // 0.25 normalized imbalance and 0.75 accuracy.
    const Dataset d(4, 1, {0, 0, 0, 0}, {0, 0, 0, 1}, 2);
    FilterParams p;
    p.imbalance_threshold = 0.25;
    CHECK(evaluate(d, p).reject_reason == RejectReason::imbalance);
    p.imbalance_threshold = 0.26;
    p.accuracy_threshold = 0.75;
    CHECK(evaluate(d, p).reject_reason == RejectReason::accuracy);
    p.accuracy_threshold = 0.74;
    CHECK(evaluate(d, p).passed);
}

TEST_CASE("disabled filters pass everything but degenerate data") {
    FilterParams p;
    p.enabled = false;
    CHECK(evaluate(test::xor_dataset(), p).passed);
    CHECK(evaluate(Dataset(3, 1, {1, 2, 3}, {1, 1, 1}, 3), p).reject_reason == RejectReason::degenerate);
}

TEST_CASE("passed iff both thresholds hold") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Dataset d = test::grid_dataset(60, 2, 3, 4, seed);
        FilterParams p;
        p.probe.max_depth = static_cast<int>(seed % 4);
        const auto r = evaluate(d, p);
        CHECK(r.imbalance_normalized == doctest::Approx(r.imbalance_raw / (r.n_classes - 1)));
        CHECK(r.passed == (r.imbalance_normalized < 0.3 && r.cart_accuracy > 0.7));
        CHECK(evaluate(d, p) == r);
    }
}

TEST_CASE("quality report json round trip") {
    const auto r = evaluate(test::xor_dataset(), {});
    nlohmann::json j = r;
    CHECK(j.get<QualityReport>() == r);
    CHECK(j.at("reject_reason") == "accuracy");
}

}
