#include "treeforge/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>
#include <thread>

#include "treeforge/cart.hpp"
#include "treeforge/csv.hpp"
#include "treeforge/error.hpp"
#include "treeforge/optimal.hpp"
#include "treeforge/random.hpp"
#include "treeforge/relabel.hpp"
#include "treeforge/scm.hpp"

namespace treeforge {

namespace {

double percentile(std::vector<double> sorted, double q) {
    std::sort(sorted.begin(), sorted.end());
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - static_cast<double>(lo));
}

}  // namespace

TimingStats time_repeated(const std::function<void()>& fn, int repetitions) {
    return time_interleaved(std::span(&fn, 1), repetitions).front();
}

std::vector<TimingStats> time_interleaved(std::span<const std::function<void()>> fns, int repetitions) {
    if (repetitions < 1) {
        throw ValidationError("timing needs at least one repetition");
    }
    for (const auto& fn : fns) fn();
    std::vector<std::vector<double>> samples(fns.size());
    for (int rep = 0; rep < repetitions; ++rep) {
        for (std::size_t i = 0; i < fns.size(); ++i) {
            const auto start = std::chrono::steady_clock::now();
            fns[i]();
            const auto stop = std::chrono::steady_clock::now();
            samples[i].push_back(std::chrono::duration<double, std::milli>(stop - start).count());
        }
    }
    std::vector<TimingStats> out;
    for (const auto& v : samples) {
        out.push_back({percentile(v, 0.5), percentile(v, 0.25), percentile(v, 0.75), repetitions});
    }
    return out;
}

Dataset make_bench_dataset(const BenchDataSpec& spec) {
    ScmConfig config;
    const int d = static_cast<int>(spec.n_features);
    config.n_features = {d, d};
    config.n_nodes = {2 * d + 2, 2 * d + 2};
    config.n_samples = {static_cast<int>(spec.n_samples), static_cast<int>(spec.n_samples)};
    config.n_classes = {spec.n_classes, spec.n_classes};
    for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
        RandomSource rng(derive_seed(spec.seed, attempt));
        try {
            RandomSource graph_rng = rng.child(0);
            RandomSource data_rng = rng.child(1);
            const ScmGraph graph = sample_scm(config, graph_rng);
            return sample_dataset(graph, spec.n_samples, spec.n_classes, data_rng).with_provenance("bench");
        } catch (const GenerationError&) {
        }
    }
    throw GenerationError("could not sample a benchmark dataset");
}

namespace {

// Pipeline timings for all rows, one repetition of each row per round so that
// drift in machine speed hits every row alike.
std::vector<TimingStats> time_pipelines(const Dataset& data, std::span<const int> depths, const BenchDataSpec& spec,
                                        int repetitions) {
    std::vector<std::function<void()>> jobs;
    std::size_t sink = 0;
    for (int depth : depths) {
        CartParams cart;
        cart.max_depth = depth;
        jobs.emplace_back([&data, &spec, &sink, cart] {
            const TreeModel tree = fit_cart(data, cart);
            const Dataset relabeled = relabel(data, tree);
            RandomSource rng(spec.seed);
            sink += inject_noise(relabeled, spec.noise_rate, rng).flipped_count;
        });
    }
    return time_interleaved(jobs, repetitions);
}

void time_solver(const BinarizedDataset& bits, int depth, const TimingOptions& options, TimingRow& row) {
    OptParams params;
    params.max_depth = depth;
    params.node_budget = options.node_budget;
    // One untimed solve fixes the deterministic node count and objective.
    try {
        const OptResult r = solve_optimal(bits, params);
        row.solver_nodes = r.search_nodes;
        row.solver_objective = r.objective;
    } catch (const SolverBudgetExceeded& e) {
        row.solver_budget_exceeded = true;
        row.solver_nodes = e.incumbent().search_nodes;
        row.solver_objective = e.incumbent().objective;
        row.solver_gap = e.gap();
    }
    row.solver = time_repeated(
        [&] {
            try {
                solve_optimal(bits, params);
            } catch (const SolverBudgetExceeded&) {
            }
        },
        options.solver_repetitions);
}

}  // namespace

std::vector<TimingRow> bench_time_vs_depth(std::span<const int> depths, const BenchDataSpec& spec, std::size_t n_bits,
                                           const TimingOptions& options) {
    if (depths.empty()) {
        throw ValidationError("depth list is empty");
    }
    const Dataset data = make_bench_dataset(spec);
    const BinarizedDataset bits = binarize(data, spec.thresholds_per_feature).first_bits(n_bits);
    for (int depth : depths) {
        if (depth < 1) throw ValidationError("depths must be >= 1");
    }
    const auto pipeline = time_pipelines(data, depths, spec, options.repetitions);
    std::vector<TimingRow> rows;
    for (std::size_t i = 0; i < depths.size(); ++i) {
        const int depth = depths[i];
        TimingRow row;
        row.depth = depth;
        row.b_features = n_bits;
        row.pipeline = pipeline[i];
        time_solver(bits, depth, options, row);
        rows.push_back(row);
    }
    return rows;
}

std::vector<TimingRow> bench_time_vs_features(std::span<const std::size_t> bit_counts, int depth,
                                              const BenchDataSpec& spec, const TimingOptions& options) {
    if (bit_counts.empty()) {
        throw ValidationError("bit count list is empty");
    }
    if (depth < 1) throw ValidationError("depth must be >= 1");
    const Dataset data = make_bench_dataset(spec);
    const BinarizedDataset all_bits = binarize(data, spec.thresholds_per_feature);
    // The pipeline never sees the bit columns, so every row times the same work.
    const std::vector<int> depths(bit_counts.size(), depth);
    const auto pipeline = time_pipelines(data, depths, spec, options.repetitions);
    std::vector<TimingRow> rows;
    for (std::size_t i = 0; i < bit_counts.size(); ++i) {
        const std::size_t b = bit_counts[i];
        if (b > all_bits.n_bits()) {
            throw ValidationError("requested " + std::to_string(b) + " bit columns but the instance has " +
                                  std::to_string(all_bits.n_bits()));
        }
        TimingRow row;
        row.depth = depth;
        row.b_features = b;
        row.pipeline = pipeline[i];
        time_solver(all_bits.first_bits(b), depth, options, row);
        rows.push_back(row);
    }
    return rows;
}

void write_timing_csv(std::ostream& out, std::span<const TimingRow> rows) {
    out << "depth,b_features,pipeline_ms_median,solver_ms_median,solver_nodes,pipeline_ms_p25,pipeline_ms_p75,"
           "solver_ms_p25,solver_ms_p75,solver_objective,solver_budget_exceeded,solver_gap,repetitions,"
           "solver_repetitions\n";
    for (const auto& r : rows) {
        out << r.depth << ',' << r.b_features << ',' << format_double(r.pipeline.median_ms) << ','
            << format_double(r.solver.median_ms) << ',' << r.solver_nodes << ',' << format_double(r.pipeline.p25_ms)
            << ',' << format_double(r.pipeline.p75_ms) << ',' << format_double(r.solver.p25_ms) << ','
            << format_double(r.solver.p75_ms) << ',' << format_double(r.solver_objective) << ','
            << (r.solver_budget_exceeded ? 1 : 0) << ',' << format_double(r.solver_gap) << ','
            << r.pipeline.repetitions << ',' << r.solver.repetitions << '\n';
    }
}

DiversityReport corpus_stats(const CorpusManifest& manifest, int bins, double range_hi) {
    if (manifest.entries.empty()) {
        throw ValidationError("corpus has no entries");
    }
    if (bins < 1 || !(range_hi > 0.0)) {
        throw ValidationError("histogram needs bins >= 1 and a positive range");
    }
    DiversityReport report;
    report.n_entries = manifest.entries.size();
    const auto nb = static_cast<std::size_t>(bins);
    report.bin_edges.resize(nb + 1);
    for (std::size_t i = 0; i <= nb; ++i) {
        report.bin_edges[i] = range_hi * static_cast<double>(i) / static_cast<double>(nb);
    }
    report.imbalance_histogram.assign(nb, 0);
    for (const auto& e : manifest.entries) {
        const double v = e.quality.imbalance_normalized;
        std::size_t bin = nb - 1;
        if (v >= range_hi) {
            ++report.out_of_range;
        } else {
            bin = std::min(nb - 1, static_cast<std::size_t>(std::max(0.0, v) / range_hi * static_cast<double>(nb)));
        }
        ++report.imbalance_histogram[bin];
        ++report.class_counts[e.n_classes];
    }
    report.class_counts_decline = true;
    const int k_lo = report.class_counts.begin()->first;
    const int k_hi = report.class_counts.rbegin()->first;
    std::size_t previous = std::numeric_limits<std::size_t>::max();
    for (int k = k_lo; k <= k_hi; ++k) {
        const auto it = report.class_counts.find(k);
        const std::size_t c = it == report.class_counts.end() ? 0 : it->second;
        if (c > previous) report.class_counts_decline = false;
        previous = c;
    }
    return report;
}

void write_histogram_csv(std::ostream& out, const DiversityReport& report) {
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < report.imbalance_histogram.size(); ++i) {
        out << format_double(report.bin_edges[i]) << ',' << format_double(report.bin_edges[i + 1]) << ','
            << report.imbalance_histogram[i] << '\n';
    }
}

void write_class_counts_csv(std::ostream& out, const DiversityReport& report) {
    out << "n_classes,count\n";
    for (const auto& [k, c] : report.class_counts) out << k << ',' << c << '\n';
}

nlohmann::json diversity_to_json(const DiversityReport& report) {
    nlohmann::json classes = nlohmann::json::object();
    for (const auto& [k, c] : report.class_counts) classes[std::to_string(k)] = c;
    return {{"n_entries", report.n_entries},
            {"bin_edges", report.bin_edges},
            {"imbalance_histogram", report.imbalance_histogram},
            {"out_of_range", report.out_of_range},
            {"class_counts", classes},
            {"class_counts_decline", report.class_counts_decline}};
}

std::vector<NamedDataset> load_csv_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw IoError(dir.string() + " is not a directory");
    }
    std::vector<std::filesystem::path> files;
    for (const auto& item : std::filesystem::directory_iterator(dir)) {
        if (item.is_regular_file() && item.path().extension() == ".csv") files.push_back(item.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<NamedDataset> out;
    for (const auto& f : files) out.push_back({f.stem().string(), read_dataset_csv(f)});
    return out;
}

void AccuracyOptions::validate() const {
    if (splits < 1) throw ValidationError("--splits must be >= 1");
    if (train_size < 1 || test_size < 1) throw ValidationError("--train and --test must be >= 1");
    if (depth < 1) throw ValidationError("--depth must be >= 1");
    if (ensemble_sizes.empty()) throw ValidationError("at least one ensemble size is required");
    for (int t : ensemble_sizes) {
        if (t < 1) throw ValidationError("ensemble sizes must be >= 1");
    }
    if (models.empty()) throw ValidationError("at least one model is required");
    for (const auto& m : models) {
        if (m != "cart" && m != "optimal") throw ValidationError("unknown model '" + m + "'");
    }
    if (thresholds_per_feature < 1) throw ValidationError("thresholds per feature must be >= 1");
    if (workers < 1) throw ValidationError("workers must be >= 1");
}

double standard_error(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
}

namespace {

struct Job {
    std::size_t dataset;
    std::size_t split;
};

struct JobResult {
    // [model][ensemble index] -> test accuracy
    std::vector<std::vector<double>> accuracy;
    SplitCheck check;
    std::vector<std::string> warnings;
};

TreeModel fit_optimal(const Dataset& train, std::span<const BitThreshold> thresholds, int depth,
                      std::uint64_t budget, bool& budget_hit) {
    if (thresholds.empty()) {
        return TreeModel::leaf(static_cast<ClassId>(std::max_element(train.class_counts().begin(),
                                                                      train.class_counts().end()) -
                                                    train.class_counts().begin()));
    }
    const BinarizedDataset bits = binarize_with(train, thresholds);
    OptParams params;
    params.max_depth = depth;
    params.node_budget = budget;
    try {
        return to_feature_tree(solve_optimal(bits, params).tree, thresholds);
    } catch (const SolverBudgetExceeded& e) {
        budget_hit = true;
        return to_feature_tree(e.incumbent().tree, thresholds);
    }
}

LabelVector vote(const std::vector<LabelVector>& predictions, int n_classes) {
    const std::size_t n = predictions.front().size();
    LabelVector out(n);
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes));
    for (std::size_t r = 0; r < n; ++r) {
        std::fill(counts.begin(), counts.end(), 0);
        for (const auto& p : predictions) ++counts[static_cast<std::size_t>(p[r])];
        out[r] = static_cast<ClassId>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    }
    return out;
}

JobResult run_split(const NamedDataset& named, std::size_t dataset_index, std::size_t split,
                    const AccuracyOptions& options) {
    const Dataset& data = named.data;
    RandomSource rng(derive_seed(derive_seed(options.seed, dataset_index), split));
    std::vector<std::size_t> order(data.n_rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    }
    const std::span<const std::size_t> train_rows(order.data(), options.train_size);
    const std::span<const std::size_t> test_rows(order.data() + options.train_size, options.test_size);
    const Dataset train = data.subset(train_rows);
    const Dataset test = data.subset(test_rows);
    const auto thresholds = binarize(train, options.thresholds_per_feature).thresholds();

    CartParams cart;
    cart.max_depth = options.depth;

    JobResult result;
    result.check.dataset = named.name;
    result.check.split = split;
    {
        const BinarizedDataset bits = binarize_with(train, thresholds);
        bool hit = false;
        if (bits.n_bits() > 0) {
            const Dataset bit_data = bits.as_dataset();
            const auto cart_pred = apply_tree(fit_cart(bit_data, cart), bit_data);
            result.check.cart_train_objective = 1.0 - accuracy(cart_pred, bit_data.labels());
            const TreeModel opt = fit_optimal(train, thresholds, options.depth, options.node_budget, hit);
            result.check.optimal_train_objective = 1.0 - accuracy(apply_tree(opt, train), train.labels());
        } else {
            const double leaf_error = 1.0 - static_cast<double>(*std::max_element(train.class_counts().begin(),
                                                                                   train.class_counts().end())) /
                                                static_cast<double>(train.n_rows());
            result.check.cart_train_objective = leaf_error;
            result.check.optimal_train_objective = leaf_error;
        }
        result.check.budget_exceeded = hit;
    }

    result.accuracy.assign(options.models.size(), std::vector<double>(options.ensemble_sizes.size()));
    for (std::size_t e = 0; e < options.ensemble_sizes.size(); ++e) {
        const int trees = options.ensemble_sizes[e];
        std::vector<Dataset> members;
        if (trees == 1) {
            members.push_back(train);
        } else {
            for (int t = 0; t < trees; ++t) {
                RandomSource boot = rng.child(static_cast<std::uint64_t>(1000 + t));
                std::vector<std::size_t> rows(train.n_rows());
                for (auto& r : rows) r = static_cast<std::size_t>(boot.uniform_int(0, static_cast<std::int64_t>(train.n_rows()) - 1));
                members.push_back(train.subset(rows));
            }
        }
        for (std::size_t m = 0; m < options.models.size(); ++m) {
            std::vector<LabelVector> predictions;
            for (const auto& member : members) {
                TreeModel tree = TreeModel::leaf(0);
                if (options.models[m] == "cart") {
                    tree = fit_cart(member, cart);
                } else {
                    bool hit = false;
                    tree = fit_optimal(member, thresholds, options.depth, options.node_budget, hit);
                    if (hit) {
                        result.warnings.push_back(named.name + " split " + std::to_string(split) +
                                                  ": solver budget exceeded, incumbent used");
                    }
                }
                predictions.push_back(apply_tree(tree, test));
            }
            result.accuracy[m][e] = accuracy(vote(predictions, data.n_classes()), test.labels());
        }
    }
    return result;
}

}  // namespace

AccuracyReport bench_accuracy(const std::vector<NamedDataset>& datasets, const AccuracyOptions& options) {
    options.validate();
    AccuracyReport report;
    std::vector<Job> jobs;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        if (options.train_size + options.test_size > datasets[d].data.n_rows()) {
            report.warnings.push_back(datasets[d].name + ": skipped, " + std::to_string(datasets[d].data.n_rows()) +
                                      " rows < train + test");
            continue;
        }
        for (std::size_t s = 0; s < options.splits; ++s) jobs.push_back({d, s});
    }
    if (jobs.empty()) {
        throw ValidationError("no dataset is large enough for the requested train and test sizes");
    }

    std::vector<JobResult> results(jobs.size());
    const auto workers = static_cast<std::size_t>(options.workers);
    std::vector<std::exception_ptr> errors(workers);
    auto work = [&](std::size_t w) {
        try {
            for (std::size_t i = w; i < jobs.size(); i += workers) {
                results[i] = run_split(datasets[jobs[i].dataset], jobs[i].dataset, jobs[i].split, options);
            }
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    for (std::size_t m = 0; m < options.models.size(); ++m) {
        for (std::size_t e = 0; e < options.ensemble_sizes.size(); ++e) {
            AccuracyCell cell;
            cell.model = options.models[m];
            cell.trees = options.ensemble_sizes[e];
            for (const auto& r : results) cell.per_split.push_back(r.accuracy[m][e]);
            cell.n_splits = cell.per_split.size();
            cell.mean = std::accumulate(cell.per_split.begin(), cell.per_split.end(), 0.0) /
                        static_cast<double>(cell.n_splits);
            cell.sem = standard_error(cell.per_split);
            report.cells.push_back(std::move(cell));
        }
    }
    for (auto& r : results) {
        report.checks.push_back(r.check);
        for (auto& w : r.warnings) report.warnings.push_back(std::move(w));
    }
    return report;
}

void write_accuracy_csv(std::ostream& out, const AccuracyReport& report) {
    out << "model,trees,mean_accuracy,sem,n_splits\n";
    for (const auto& c : report.cells) {
        out << c.model << ',' << c.trees << ',' << format_double(c.mean) << ',' << format_double(c.sem) << ','
            << c.n_splits << '\n';
    }
}

void write_split_checks_csv(std::ostream& out, const AccuracyReport& report) {
    out << "dataset,split,cart_train_objective,optimal_train_objective,budget_exceeded\n";
    for (const auto& c : report.checks) {
        out << c.dataset << ',' << c.split << ',' << format_double(c.cart_train_objective) << ','
            << format_double(c.optimal_train_objective) << ',' << (c.budget_exceeded ? 1 : 0) << '\n';
    }
}

}  // namespace treeforge
