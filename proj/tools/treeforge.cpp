// treeforge command line: corpus generation, corpus inspection and the benchmark harnesses.
#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "treeforge/benchmark.hpp"
#include "treeforge/corpus.hpp"
#include "treeforge/csv.hpp"
#include "treeforge/pipeline.hpp"

namespace fs = std::filesystem;
using namespace treeforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

void print_tally(std::ostream& out, const AttemptTally& t) {
    const double rate = t.total() == 0 ? 0.0 : static_cast<double>(t.accepted) / static_cast<double>(t.total());
    out << "attempts " << t.total() << ": accepted " << t.accepted << " (" << std::fixed << std::setprecision(1)
        << 100.0 * rate << "%), rejected imbalance " << t.rejected_imbalance << ", accuracy " << t.rejected_accuracy
        << ", degenerate " << t.rejected_degenerate << '\n'
        << std::defaultfloat;
}

// Writes to `path`, or to stdout when the path is empty.
template <class Fn>
void emit(const std::string& path, Fn&& fn) {
    if (path.empty()) {
        fn(std::cout);
        return;
    }
    std::ostringstream buf;
    fn(buf);
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    write_file_atomic(path, buf.str());
}

struct GenerateArgs {
    std::string config_path;
    std::optional<std::size_t> count;
    std::optional<std::uint64_t> master_seed;
    std::optional<int> workers;
    std::optional<double> noise_rate;
    std::optional<double> max_imbalance;
    std::optional<double> min_accuracy;
    std::optional<int> cart_depth;
    std::string out;
};

int cmd_generate(const GenerateArgs& a) {
    PipelineConfig config;
    if (!a.config_path.empty()) {
        try {
            config = nlohmann::json::parse(read_file(a.config_path)).get<PipelineConfig>();
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("config " + a.config_path + ": " + e.what());
        }
    }
    if (a.count) config.target_count = *a.count;
    if (a.master_seed) config.master_seed = *a.master_seed;
    if (a.workers) config.workers = *a.workers;
    if (a.noise_rate) config.noise_rate = *a.noise_rate;
    if (a.max_imbalance) config.filters.imbalance_threshold = *a.max_imbalance;
    if (a.min_accuracy) config.filters.accuracy_threshold = *a.min_accuracy;
    if (a.cart_depth) {
        // The probe and the relabeling tree share one depth unless the config split them.
        if (config.filters.probe == config.cart) config.filters.probe.max_depth = *a.cart_depth;
        config.cart.max_depth = *a.cart_depth;
    }
    config.validate();

    try {
        const CorpusManifest m = generate_corpus(config, a.out);
        std::cout << "wrote " << m.entries.size() << " entries to " << a.out << '\n';
        print_tally(std::cout, m.telemetry);
        return kExitOk;
    } catch (const IncompleteCorpusError& e) {
        std::cerr << "error: " << e.what() << "; partial manifest written to " << a.out << '\n';
        print_tally(std::cerr, e.partial().telemetry);
        return kExitFailure;
    }
}

struct StatsArgs {
    std::string corpus;
    int bins = 10;
    double range_hi = 0.3;
    std::string out_dir;
};

int cmd_stats(const StatsArgs& a) {
    const Corpus corpus = read_corpus(a.corpus);
    const DiversityReport r = corpus_stats(corpus.manifest(), a.bins, a.range_hi);
    if (!a.out_dir.empty()) {
        fs::create_directories(a.out_dir);
        emit((fs::path(a.out_dir) / "imbalance_histogram.csv").string(),
             [&](std::ostream& o) { write_histogram_csv(o, r); });
        emit((fs::path(a.out_dir) / "class_counts.csv").string(),
             [&](std::ostream& o) { write_class_counts_csv(o, r); });
        emit((fs::path(a.out_dir) / "stats.json").string(),
             [&](std::ostream& o) { o << diversity_to_json(r).dump(2) << '\n'; });
    }
    std::cout << "entries " << r.n_entries << ", imbalance values at or above " << a.range_hi << ": "
              << r.out_of_range << '\n';
    write_histogram_csv(std::cout, r);
    write_class_counts_csv(std::cout, r);
    std::cout << "class counts " << (r.class_counts_decline ? "decline" : "do not decline") << " with K\n";
    print_tally(std::cout, corpus.manifest().telemetry);
    return kExitOk;
}

struct BenchTimeArgs {
    std::vector<int> depths;
    std::vector<std::size_t> bit_counts;
    int sweep_depth = 3;
    std::size_t depth_bits = 10;
    BenchDataSpec spec;
    TimingOptions timing;
    std::string out;
};

int cmd_bench_time(const BenchTimeArgs& a) {
    if (a.depths.empty() && a.bit_counts.empty()) {
        throw ValidationError("give --depths, --features or both");
    }
    std::vector<TimingRow> rows;
    if (!a.depths.empty()) {
        rows = bench_time_vs_depth(a.depths, a.spec, a.depth_bits, a.timing);
    }
    if (!a.bit_counts.empty()) {
        const auto more = bench_time_vs_features(a.bit_counts, a.sweep_depth, a.spec, a.timing);
        rows.insert(rows.end(), more.begin(), more.end());
    }
    emit(a.out, [&](std::ostream& o) { write_timing_csv(o, rows); });
    for (const auto& r : rows) {
        if (r.solver_budget_exceeded) {
            std::cerr << "warning: solver budget exceeded at depth " << r.depth << ", B=" << r.b_features
                      << "; gap " << r.solver_gap << '\n';
        }
    }
    return kExitOk;
}

struct BenchAccArgs {
    std::string data_dir;
    AccuracyOptions options;
    std::string out_dir;
};

int cmd_bench_acc(const BenchAccArgs& a) {
    a.options.validate();
    const auto datasets = load_csv_dir(a.data_dir);
    if (datasets.empty()) {
        throw IoError("no .csv files in " + a.data_dir);
    }
    const AccuracyReport r = bench_accuracy(datasets, a.options);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    if (!a.out_dir.empty()) {
        fs::create_directories(a.out_dir);
        emit((fs::path(a.out_dir) / "accuracy.csv").string(), [&](std::ostream& o) { write_accuracy_csv(o, r); });
        emit((fs::path(a.out_dir) / "split_checks.csv").string(),
             [&](std::ostream& o) { write_split_checks_csv(o, r); });
    }
    write_accuracy_csv(std::cout, r);
    std::size_t violations = 0;
    for (const auto& c : r.checks) {
        if (!c.budget_exceeded && c.optimal_train_objective > c.cart_train_objective + 1e-12) ++violations;
    }
    if (violations > 0) {
        std::cerr << "error: optimal training objective above CART's on " << violations << " splits\n";
        return kExitFailure;
    }
    return kExitOk;
}

struct InspectArgs {
    std::string corpus;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> index;
};

int cmd_inspect(const InspectArgs& a) {
    if (a.seed.has_value() == a.index.has_value()) {
        throw ValidationError("give exactly one of --seed or --index");
    }
    const Corpus corpus = read_corpus(a.corpus);
    const std::size_t i = a.seed ? corpus.find_seed(*a.seed) : *a.index;
    if (i >= corpus.size()) {
        throw ValidationError("index " + std::to_string(i) + " out of range (corpus has " +
                              std::to_string(corpus.size()) + " entries)");
    }
    const CorpusEntry& e = corpus.manifest().entries[i];
    const std::string label = "entry " + std::to_string(i) + " (seed " + std::to_string(e.seed) + ")";

    std::vector<std::string> problems;
    const fs::path data_path = corpus.dir() / e.dataset_path;
    const fs::path tree_path = corpus.dir() / e.tree_path;
    if (checksum_file(data_path) != e.dataset_checksum) problems.push_back(e.dataset_path + " checksum mismatch");
    if (checksum_file(tree_path) != e.tree_checksum) problems.push_back(e.tree_path + " checksum mismatch");

    // Parse directly rather than through Corpus so a tampered file still gets a row-level diagnosis.
    const Dataset data = read_dataset_csv(data_path, e.n_classes);
    const TreeModel tree = tree_from_json(nlohmann::json::parse(read_file(tree_path)));
    const LabelVector predicted = apply_tree(tree, data);
    std::size_t mismatched = 0;
    for (std::size_t r = 0; r < data.n_rows(); ++r) mismatched += predicted[r] != data.labels()[r];
    const double acc = accuracy(predicted, data.labels());
    const double expected = static_cast<double>(data.n_rows() - std::min(data.n_rows(), e.provenance.flipped_count)) /
                            static_cast<double>(data.n_rows());
    if (mismatched != e.provenance.flipped_count) {
        problems.push_back("tree disagrees with stored labels on " + std::to_string(mismatched) +
                           " rows but the recorded flipped_count is " + std::to_string(e.provenance.flipped_count));
    }

    std::cout << label << '\n'
              << "  dataset " << e.dataset_path << ": " << data.n_rows() << " rows, " << data.n_features()
              << " features, " << data.n_classes() << " classes\n"
              << "  tree depth " << tree.depth() << ", " << tree.n_leaves() << " leaves\n"
              << "  tree accuracy on stored labels " << format_double(acc) << " (1 - flipped/N = "
              << format_double(expected) << ")\n"
              << "quality " << nlohmann::json(e.quality).dump(2) << '\n'
              << "provenance seed_index " << e.provenance.seed_index << ", accepted attempt "
              << e.provenance.accepted_attempt << ", noise_rate " << e.provenance.noise_rate << ", flipped "
              << e.provenance.flipped_count << '\n'
              << "tree " << tree_to_json(tree).dump(2) << '\n';
    if (!problems.empty()) {
        for (const auto& p : problems) std::cerr << "error: " << label << ": " << p << '\n';
        return kExitFailure;
    }
    std::cout << "ok: flipped-count identity holds\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic decision-tree corpus generator and benchmark harness"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Generate a filtered (features, noisy labels, tree) corpus");
    generate->add_option("--config", gen.config_path, "JSON config mirroring the pipeline config fields")
        ->check(CLI::ExistingFile);
    generate->add_option("--count", gen.count, "Number of entries (target_count)");
    generate->add_option("--master-seed", gen.master_seed, "Master seed");
    generate->add_option("--workers", gen.workers, "Worker threads");
    generate->add_option("--noise-rate", gen.noise_rate, "Label flip probability");
    generate->add_option("--max-imbalance", gen.max_imbalance, "Accept iff normalized imbalance is below this");
    generate->add_option("--min-accuracy", gen.min_accuracy, "Accept iff probe CART accuracy is above this");
    generate->add_option("--cart-depth", gen.cart_depth, "Depth of the relabeling CART tree");
    generate->add_option("--out", gen.out, "Output corpus directory")->required();

    StatsArgs st;
    auto* stats = app.add_subcommand("stats", "Imbalance histogram and class-count table of a corpus");
    stats->add_option("corpus", st.corpus, "Corpus directory")->required();
    stats->add_option("--bins", st.bins, "Histogram bins")->capture_default_str();
    stats->add_option("--range", st.range_hi, "Upper edge of the histogram range")->capture_default_str();
    stats->add_option("--out-dir", st.out_dir, "Write imbalance_histogram.csv, class_counts.csv, stats.json here");

    BenchTimeArgs bt;
    auto* bench_time = app.add_subcommand("bench-time", "Pipeline vs optimal-solver timing sweeps");
    bench_time->add_option("--depths", bt.depths, "Depth sweep, e.g. 2,3,4,5,6")->delimiter(',');
    bench_time->add_option("--features", bt.bit_counts, "Binary feature sweep, e.g. 4,6,8,10,12")->delimiter(',');
    bench_time->add_option("--sweep-depth", bt.sweep_depth, "Depth used by the feature sweep")->capture_default_str();
    bench_time->add_option("--bits", bt.depth_bits, "Binary features used by the depth sweep")->capture_default_str();
    bench_time->add_option("--samples", bt.spec.n_samples, "Rows of the benchmark instance")->capture_default_str();
    bench_time->add_option("--continuous-features", bt.spec.n_features, "Continuous features of the instance")
        ->capture_default_str();
    bench_time->add_option("--seed", bt.spec.seed, "Instance seed")->capture_default_str();
    bench_time->add_option("--repetitions", bt.timing.repetitions, "Timed pipeline runs per row")
        ->capture_default_str();
    bench_time->add_option("--solver-repetitions", bt.timing.solver_repetitions, "Timed solver runs per row")
        ->capture_default_str();
    bench_time->add_option("--node-budget", bt.timing.node_budget, "Solver search-node budget")
        ->capture_default_str();
    bench_time->add_option("--out", bt.out, "CSV output path (default stdout)");

    BenchAccArgs ba;
    auto* bench_acc = app.add_subcommand("bench-acc", "CART vs optimal accuracy over random splits of CSV datasets");
    bench_acc->add_option("--data", ba.data_dir, "Directory of CSV datasets")->required()->check(CLI::ExistingDirectory);
    bench_acc->add_option("--splits", ba.options.splits, "Splits per dataset (N)")->required();
    bench_acc->add_option("--train", ba.options.train_size, "Training rows per split (M)")->required();
    bench_acc->add_option("--test", ba.options.test_size, "Test rows per split (Y)")->required();
    bench_acc->add_option("--depth", ba.options.depth, "Maximum tree depth for every model")->required();
    bench_acc->add_option("--trees", ba.options.ensemble_sizes, "Ensemble sizes, e.g. 1,5")->required()->delimiter(',');
    bench_acc->add_option("--models", ba.options.models, "Models among cart,optimal")->delimiter(',');
    bench_acc->add_option("--seed", ba.options.seed, "Split seed")->capture_default_str();
    bench_acc->add_option("--thresholds", ba.options.thresholds_per_feature, "Bit thresholds per feature")
        ->capture_default_str();
    bench_acc->add_option("--node-budget", ba.options.node_budget, "Solver search-node budget")->capture_default_str();
    bench_acc->add_option("--workers", ba.options.workers, "Parallel split evaluation")->capture_default_str();
    bench_acc->add_option("--out-dir", ba.out_dir, "Write accuracy.csv and split_checks.csv here");

    InspectArgs in;
    auto* inspect = app.add_subcommand("inspect", "Print one corpus entry and re-verify its flipped-count identity");
    inspect->add_option("corpus", in.corpus, "Corpus directory")->required();
    inspect->add_option("--seed", in.seed, "Entry seed");
    inspect->add_option("--index", in.index, "Entry position in the manifest");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*generate) return cmd_generate(gen);
        if (*stats) return cmd_stats(st);
        if (*bench_time) return cmd_bench_time(bt);
        if (*bench_acc) return cmd_bench_acc(ba);
        if (*inspect) return cmd_inspect(in);
    } catch (const ValidationError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}
