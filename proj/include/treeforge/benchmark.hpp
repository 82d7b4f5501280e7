#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "treeforge/corpus.hpp"
#include "treeforge/dataset.hpp"

namespace treeforge {

// ---------------------------------------------------------------------------
// Wall-clock timing
// ---------------------------------------------------------------------------

struct TimingStats {
    double median_ms = 0.0;
    double p25_ms = 0.0;
    double p75_ms = 0.0;
    int repetitions = 0;
};

/// Runs `fn` once to warm up, then `repetitions` timed calls on the calling
/// thread. Reports the median and interquartile points.
TimingStats time_repeated(const std::function<void()>& fn, int repetitions);

/// Same, for several functions timed round-robin (one call of each per round).
std::vector<TimingStats> time_interleaved(std::span<const std::function<void()>> fns, int repetitions);

/// Fixed instance used by the timing sweeps.
struct BenchDataSpec {
    std::size_t n_samples = 500;
    std::size_t n_features = 12;
    int n_classes = 2;
    int thresholds_per_feature = 1;
    std::uint64_t seed = 2024;
    double noise_rate = 0.05;
};

/// Continuous SCM dataset of exactly the requested shape.
Dataset make_bench_dataset(const BenchDataSpec& spec);

struct TimingRow {
    int depth = 0;
    std::size_t b_features = 0;
    TimingStats pipeline;  // CART fit + relabel + noise
    TimingStats solver;    // optimal search on the bit columns
    std::uint64_t solver_nodes = 0;
    double solver_objective = 0.0;
    bool solver_budget_exceeded = false;
    double solver_gap = 0.0;
};

struct TimingOptions {
    int repetitions = 15;
    int solver_repetitions = 3;
    std::uint64_t node_budget = 10'000'000;
};

/// One row per depth on the first `n_bits` bit columns of the fixed instance.
std::vector<TimingRow> bench_time_vs_depth(std::span<const int> depths, const BenchDataSpec& spec, std::size_t n_bits,
                                           const TimingOptions& options = {});

/// One row per bit count at a fixed depth. The pipeline column always runs on
/// the original continuous features, since the relabel construction never
/// binarizes; only the solver's input grows with B.
std::vector<TimingRow> bench_time_vs_features(std::span<const std::size_t> bit_counts, int depth,
                                              const BenchDataSpec& spec, const TimingOptions& options = {});

void write_timing_csv(std::ostream& out, std::span<const TimingRow> rows);

// ---------------------------------------------------------------------------
// Corpus diversity
// ---------------------------------------------------------------------------

struct DiversityReport {
    std::vector<double> bin_edges;          // bins + 1 edges over [0, range_hi]
    std::vector<std::size_t> imbalance_histogram;
    std::size_t out_of_range = 0;           // values >= range_hi (counted in the last bin)
    std::map<int, std::size_t> class_counts;  // declared K -> entries
    bool class_counts_decline = false;      // non-increasing over the observed K span
    std::size_t n_entries = 0;
};

DiversityReport corpus_stats(const CorpusManifest& manifest, int bins = 10, double range_hi = 0.3);

void write_histogram_csv(std::ostream& out, const DiversityReport& report);
void write_class_counts_csv(std::ostream& out, const DiversityReport& report);
nlohmann::json diversity_to_json(const DiversityReport& report);

// ---------------------------------------------------------------------------
// Accuracy harness
// ---------------------------------------------------------------------------

struct NamedDataset {
    std::string name;
    Dataset data;
};

/// Every *.csv in `dir`, sorted by file name, labels remapped to dense ids.
std::vector<NamedDataset> load_csv_dir(const std::filesystem::path& dir);

struct AccuracyOptions {
    std::size_t splits = 0;  // per dataset
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    int depth = 2;
    std::vector<int> ensemble_sizes{1};
    std::vector<std::string> models{"cart", "optimal"};
    std::uint64_t seed = 0;
    int thresholds_per_feature = 1;
    std::uint64_t node_budget = 10'000'000;
    int workers = 1;

    void validate() const;
};

struct AccuracyCell {
    std::string model;
    int trees = 1;
    double mean = 0.0;
    double sem = 0.0;
    std::size_t n_splits = 0;
    std::vector<double> per_split;  // in (dataset, split) order
};

/// Training objective (misclassified fraction) of CART and of the optimal
/// solver on the binarized training set of one split, single tree.
struct SplitCheck {
    std::string dataset;
    std::size_t split = 0;
    double cart_train_objective = 0.0;
    double optimal_train_objective = 0.0;
    bool budget_exceeded = false;
};

struct AccuracyReport {
    std::vector<AccuracyCell> cells;
    std::vector<SplitCheck> checks;
    std::vector<std::string> warnings;
};

/// Sample-standard-deviation / sqrt(n); 0 for fewer than two values.
double standard_error(std::span<const double> values);

/// Ensembles (size > 1) vote over trees fit on bootstrap resamples of the
/// training split (ties to the lowest class id); size 1 is a single tree fit
/// on the split itself. Splits, bootstraps and depth are shared by all models.
AccuracyReport bench_accuracy(const std::vector<NamedDataset>& datasets, const AccuracyOptions& options);

void write_accuracy_csv(std::ostream& out, const AccuracyReport& report);
void write_split_checks_csv(std::ostream& out, const AccuracyReport& report);

}  // namespace treeforge
