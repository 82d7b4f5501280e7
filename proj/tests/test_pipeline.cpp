#include <doctest.h>

#include <fstream>
#include <set>

#include "treeforge/corpus.hpp"
#include "treeforge/error.hpp"
#include "treeforge/pipeline.hpp"
#include "treeforge/relabel.hpp"
#include "test_util.hpp"

using namespace treeforge;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config(std::size_t count, std::uint64_t seed) {
    PipelineConfig c;
    c.target_count = count;
    c.master_seed = seed;
    c.scm.n_samples = {64, 256};
    c.scm.n_classes = {2, 6};
    return c;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config validation and json") {
    PipelineConfig c;
    CHECK_NOTHROW(c.validate());
    c.noise_rate = 1.5;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.target_count = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);

    PipelineConfig d;
    d.noise_rate = 0.1;
    d.cart.max_depth = 3;
    nlohmann::json j = d;
    const auto back = j.get<PipelineConfig>();
    CHECK(back.noise_rate == 0.1);
    CHECK(back.cart.max_depth == 3);
    CHECK(j.at("filters").at("imbalance_threshold") == 0.3);
    CHECK(j.at("filters").at("accuracy_threshold") == 0.7);
    CHECK(j.at("noise_rate") == 0.1);
    CHECK_THROWS_AS(nlohmann::json({{"noise_rat", 0.1}}).get<PipelineConfig>(), ValidationError);
}

TEST_CASE("generate_one is deterministic and self-consistent") {
    const auto c = small_config(1, 3);
    for (std::uint64_t s = 0; s < 15; ++s) {
        const auto a = generate_one(c, worker_seed(c, s));
        const auto b = generate_one(c, worker_seed(c, s));
        CHECK(a.tally == b.tally);
        CHECK(a.tally.total() ==
              a.tally.accepted + a.tally.rejected_accuracy + a.tally.rejected_imbalance + a.tally.rejected_degenerate);
        REQUIRE(a.triple.has_value() == b.triple.has_value());
        if (!a.triple) continue;
        const auto& t = *a.triple;
        CHECK(t.dataset == b.triple->dataset);
        CHECK(t.tree == b.triple->tree);
        CHECK(t.report.passed);
        CHECK(t.report.imbalance_normalized < 0.3);
        CHECK(t.report.cart_accuracy > 0.7);
        const double acc = accuracy(apply_tree(t.tree, t.dataset), t.dataset.labels());
        CHECK(acc == static_cast<double>(t.dataset.n_rows() - t.provenance.flipped_count) / static_cast<double>(t.dataset.n_rows()));

        // The stored report is reproducible from the raw attempt.
        const Dataset raw = reconstruct_raw(c, t.seed, t.provenance.accepted_attempt);
        CHECK(std::equal(raw.features().begin(), raw.features().end(), t.dataset.features().begin()));
        CHECK(fit_cart(raw, c.cart) == t.tree);
    }
}

TEST_CASE("filters lower the acceptance rate") {
    auto on = small_config(1, 11);
    on.max_attempts_per_accept = 1;
    auto off = on;
    off.filters.enabled = false;
    std::size_t accepted_on = 0, accepted_off = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        accepted_on += generate_one(on, worker_seed(on, s)).tally.accepted;
        accepted_off += generate_one(off, worker_seed(off, s)).tally.accepted;
    }
    CHECK(accepted_on < accepted_off);
}

TEST_CASE("corpus is independent of the worker count") {
    test::TempDir a, b;
    auto c = small_config(12, 5);
    const auto m1 = generate_corpus(c, a.path / "c");
    c.workers = 3;
    const auto m3 = generate_corpus(c, b.path / "c");
    CHECK(m1.entries.size() == 12);
    CHECK(m1.entries == m3.entries);
    CHECK(m1.telemetry == m3.telemetry);
    std::set<std::uint64_t> seeds;
    for (const auto& e : m1.entries) seeds.insert(e.seed);
    CHECK(seeds.size() == 12);
    // Only manifest, data and tree files remain.
    std::size_t files = 0;
    for (const auto& f : fs::directory_iterator(a.path / "c")) {
        (void)f;
        ++files;
    }
    CHECK(files == 1 + 2 * 12);
}

TEST_CASE("every manifest entry re-validates") {
    test::TempDir dir;
    const auto c = small_config(10, 8);
    generate_corpus(c, dir.path);
    const Corpus corpus = read_corpus(dir.path);
    std::size_t attempts = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& e = corpus.manifest().entries[i];
        const Dataset d = corpus.dataset(i);
        const auto t = corpus.tree(i);
        std::size_t mismatched = 0;
        const auto pred = apply_tree(t, d);
        for (std::size_t r = 0; r < d.n_rows(); ++r) mismatched += pred[r] != d.labels()[r];
        CHECK(mismatched == e.provenance.flipped_count);
        CHECK(e.provenance.pipeline_params_digest == pipeline_params_digest(c));
        attempts += e.provenance.attempts.total();
    }
    const auto& tel = corpus.manifest().telemetry;
    CHECK(tel.accepted == 10);
    CHECK(tel.total() >= attempts);
    CHECK(corpus.manifest().config.at("noise_rate") == 0.05);
}

TEST_CASE("resume after an interrupted run reuses entries without duplicates") {
    test::TempDir full, partial;
    const auto c = small_config(8, 21);
    const auto reference = generate_corpus(c, full.path);

    // An earlier, smaller run with the same parameters is extended in place.
    auto small = c;
    small.target_count = 5;
    generate_corpus(small, partial.path);
    const auto extended = generate_corpus(c, partial.path);
    CHECK(extended.entries == reference.entries);

    // An interruption before the manifest was written leaves only entry files; they are rebuilt identically.
    fs::remove(partial.path / "manifest.json");
    const auto resumed = generate_corpus(c, partial.path);
    CHECK(resumed.entries == reference.entries);
    std::set<std::uint64_t> seeds;
    for (const auto& e : resumed.entries) CHECK(seeds.insert(e.seed).second);
    CHECK_NOTHROW(read_corpus(partial.path));
}

TEST_CASE("resume refuses a directory with different parameters or foreign files") {
    test::TempDir dir;
    auto c = small_config(3, 1);
    generate_corpus(c, dir.path);
    c.noise_rate = 0.1;
    CHECK_THROWS_AS(generate_corpus(c, dir.path), IoError);

    test::TempDir other;
    std::ofstream(other.path / "notes.txt") << "hello";
    CHECK_THROWS_AS(generate_corpus(small_config(2, 1), other.path), IoError);
}

TEST_CASE("unreachable target writes a partial manifest and raises") {
    test::TempDir dir;
    auto c = small_config(3, 2);
    c.filters.accuracy_threshold = 0.9999;
    c.max_attempts_per_accept = 2;
    try {
        generate_corpus(c, dir.path);
        FAIL("expected IncompleteCorpusError");
    } catch (const IncompleteCorpusError& e) {
        CHECK_FALSE(e.partial().complete);
        CHECK(e.partial().entries.size() < 3);
    }
    const auto m = read_corpus(dir.path).manifest();
    CHECK_FALSE(m.complete);
    CHECK(m.telemetry.total() > 0);
}

}
