#include "treeforge/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <exception>
#include <map>
#include <mutex>
#include <regex>
#include <thread>

#include "treeforge/relabel.hpp"

namespace treeforge {

namespace fs = std::filesystem;

void PipelineConfig::validate() const {
    scm.validate();
    cart.validate();
    filters.validate();
    if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) {
        throw ValidationError("noise_rate must lie in [0, 1]");
    }
    if (target_count < 1) {
        throw ValidationError("target_count must be >= 1");
    }
    if (max_attempts_per_accept < 1) {
        throw ValidationError("max_attempts_per_accept must be >= 1");
    }
    if (workers < 1) {
        throw ValidationError("workers must be >= 1");
    }
}

void to_json(nlohmann::json& j, const PipelineConfig& c) {
    j = {{"scm", c.scm},
         {"cart", c.cart},
         {"filters", c.filters},
         {"noise_rate", c.noise_rate},
         {"target_count", c.target_count},
         {"master_seed", c.master_seed},
         {"max_attempts_per_accept", c.max_attempts_per_accept},
         {"workers", c.workers}};
}

void from_json(const nlohmann::json& j, PipelineConfig& c) {
    static const char* known[] = {"scm",         "cart",        "filters", "noise_rate", "target_count",
                                  "master_seed", "max_attempts_per_accept", "workers"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
            throw ValidationError("unknown pipeline config key '" + key + "'");
        }
    }
    if (j.contains("scm")) c.scm = j.at("scm").get<ScmConfig>();
    if (j.contains("cart")) c.cart = j.at("cart").get<CartParams>();
    if (j.contains("filters")) c.filters = j.at("filters").get<FilterParams>();
    c.noise_rate = j.value("noise_rate", c.noise_rate);
    c.target_count = j.value("target_count", c.target_count);
    c.master_seed = j.value("master_seed", c.master_seed);
    c.max_attempts_per_accept = j.value("max_attempts_per_accept", c.max_attempts_per_accept);
    c.workers = j.value("workers", c.workers);
}

std::string pipeline_params_digest(const PipelineConfig& config) {
    nlohmann::json j = config;
    j.erase("workers");
    j.erase("target_count");
    return fnv1a_hex(j.dump());
}

std::uint64_t worker_seed(const PipelineConfig& config, std::uint64_t index) {
    return derive_seed(config.master_seed, index);
}

namespace {

struct AttemptDraw {
    RandomSource rng;
    std::size_t n_samples;
    int n_classes;
};

AttemptDraw draw_attempt(const PipelineConfig& config, std::uint64_t seed, int attempt) {
    RandomSource rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    const auto n = static_cast<std::size_t>(rng.uniform_int(config.scm.n_samples.lo, config.scm.n_samples.hi));
    const auto k = static_cast<int>(rng.uniform_int(config.scm.n_classes.lo, config.scm.n_classes.hi));
    return {rng, n, k};
}

Dataset sample_raw(const PipelineConfig& config, const AttemptDraw& draw) {
    RandomSource graph_rng = draw.rng.child(0);
    RandomSource data_rng = draw.rng.child(1);
    const ScmGraph graph = sample_scm(config.scm, graph_rng);
    return sample_dataset(graph, draw.n_samples, draw.n_classes, data_rng);
}

}  // namespace

Dataset reconstruct_raw(const PipelineConfig& config, std::uint64_t seed, int attempt) {
    return sample_raw(config, draw_attempt(config, seed, attempt));
}

GenerateOutcome generate_one(const PipelineConfig& config, std::uint64_t seed) {
    config.validate();
    GenerateOutcome out;
    for (int attempt = 0; attempt < config.max_attempts_per_accept; ++attempt) {
        const AttemptDraw draw = draw_attempt(config, seed, attempt);
        std::optional<Dataset> raw;
        try {
            raw = sample_raw(config, draw);
        } catch (const GenerationError&) {
            out.tally.reject(RejectReason::degenerate);
            continue;
        }
        const TreeModel tree = fit_cart(*raw, config.cart);
        const LabelVector targets = apply_tree(tree, *raw);
        std::optional<double> probe_accuracy;
        if (config.filters.probe == config.cart) {
            probe_accuracy = accuracy(targets, raw->labels());
        }
        const QualityReport report = evaluate_targets(*raw, targets, config.filters, probe_accuracy);
        if (!report.passed) {
            out.tally.reject(*report.reject_reason);
            continue;
        }
        ++out.tally.accepted;
        RandomSource noise_rng = draw.rng.child(2);
        NoisyDataset noisy = inject_noise(raw->with_labels(targets), config.noise_rate, noise_rng);

        EntryProvenance prov;
        prov.accepted_attempt = attempt;
        prov.attempts = out.tally;
        prov.noise_rate = config.noise_rate;
        prov.flipped_count = noisy.flipped_count;
        prov.pipeline_params_digest = pipeline_params_digest(config);
        Dataset stored = noisy.dataset.with_provenance("scm seed=" + std::to_string(seed) +
                                                       " attempt=" + std::to_string(attempt));
        out.triple = GeneratedTriple{std::move(stored), tree, report, prov, seed};
        return out;
    }
    return out;
}

IncompleteCorpusError::IncompleteCorpusError(CorpusManifest partial)
    : Error("corpus incomplete: " + std::to_string(partial.entries.size()) + " of " +
            std::to_string(partial.config.value("target_count", std::size_t{0})) +
            " entries generated within the attempt budget"),
      partial_(std::move(partial)) {}

namespace {

struct IndexResult {
    std::optional<CorpusEntry> entry;
    AttemptTally tally;
};

std::string sidecar_name(std::uint64_t seed) { return "entry_" + std::to_string(seed) + ".json"; }

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

bool entry_files_intact(const fs::path& dir, const CorpusEntry& e) {
    try {
        return checksum_file(dir / e.dataset_path) == e.dataset_checksum &&
               checksum_file(dir / e.tree_path) == e.tree_checksum;
    } catch (const IoError&) {
        return false;
    }
}

// Entries from an interrupted or earlier run with identical parameters, by seed.
std::map<std::uint64_t, CorpusEntry> reusable_entries(const fs::path& dir, const std::string& digest) {
    static const std::regex ours(R"((data_\d+\.csv|tree_\d+\.json|entry_\d+\.json|manifest\.json)(\.tmp)?)");
    std::map<std::uint64_t, CorpusEntry> found;
    if (!fs::exists(dir)) return found;
    if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
    for (const auto& item : fs::directory_iterator(dir)) {
        const std::string name = item.path().filename().string();
        if (!std::regex_match(name, ours)) {
            throw IoError("output directory " + dir.string() + " is neither empty nor a resumable corpus (found " +
                          name + ")");
        }
    }
    auto consider = [&](const CorpusEntry& e) {
        if (e.provenance.pipeline_params_digest != digest) {
            throw IoError("output directory " + dir.string() +
                          " holds a corpus generated with different parameters; use a fresh directory");
        }
        if (entry_files_intact(dir, e)) found.emplace(e.seed, e);
    };
    if (fs::exists(dir / "manifest.json")) {
        CorpusManifest m = nlohmann::json::parse(read_file(dir / "manifest.json")).get<CorpusManifest>();
        for (const auto& e : m.entries) consider(e);
    }
    for (const auto& item : fs::directory_iterator(dir)) {
        const std::string name = item.path().filename().string();
        if (name.rfind("entry_", 0) == 0 && item.path().extension() == ".json") {
            try {
                consider(nlohmann::json::parse(read_file(item.path())).get<CorpusEntry>());
            } catch (const nlohmann::json::exception&) {
                // A torn sidecar is simply regenerated.
            }
        }
    }
    return found;
}

void remove_entry_files(const fs::path& dir, std::uint64_t seed) {
    std::error_code ec;
    fs::remove(dir / dataset_file_name(seed), ec);
    fs::remove(dir / tree_file_name(seed), ec);
    fs::remove(dir / sidecar_name(seed), ec);
}

}  // namespace

CorpusManifest generate_corpus(const PipelineConfig& config, const fs::path& out_dir) {
    config.validate();
    const std::string digest = pipeline_params_digest(config);
    const auto reusable = reusable_entries(out_dir, digest);
    fs::create_directories(out_dir);

    const std::size_t target = config.target_count;
    const auto workers = static_cast<std::size_t>(config.workers);
    // Seed indices beyond this budget are not tried; it depends only on the target.
    const std::size_t index_budget = 2 * target + 16;

    std::vector<IndexResult> results;
    std::size_t successes = 0;
    std::size_t next = 0;

    auto run_index = [&](std::size_t index) -> IndexResult {
        const std::uint64_t seed = worker_seed(config, index);
        if (auto it = reusable.find(seed); it != reusable.end()) {
            return {it->second, it->second.provenance.attempts};
        }
        GenerateOutcome outcome = generate_one(config, seed);
        IndexResult r{std::nullopt, outcome.tally};
        if (outcome.triple) {
            auto& t = *outcome.triple;
            t.provenance.seed_index = index;
            CorpusEntry e = write_corpus_entry(out_dir, t.dataset, t.tree, t.report, seed, t.provenance);
            write_file_atomic(out_dir / sidecar_name(seed), nlohmann::json(e).dump() + "\n");
            r.entry = std::move(e);
        }
        return r;
    };

    while (successes < target && next < index_budget) {
        const std::size_t need = target - successes;
        const std::size_t batch = std::min(index_budget - next, need + need / 2 + workers);
        std::vector<IndexResult> chunk(batch);
        std::vector<std::exception_ptr> errors(workers);
        auto work = [&](std::size_t w) {
            try {
                for (std::size_t i = w; i < batch; i += workers) chunk[i] = run_index(next + i);
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
        for (auto& r : chunk) {
            successes += r.entry.has_value();
            results.push_back(std::move(r));
        }
        next += batch;
    }

    CorpusManifest manifest;
    manifest.created_at = utc_timestamp();
    manifest.config = config;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        auto& r = results[i];
        if (kept == target) {
            if (r.entry) remove_entry_files(out_dir, r.entry->seed);
            continue;
        }
        manifest.telemetry += r.tally;
        if (r.entry) {
            manifest.entries.push_back(*r.entry);
            ++kept;
        }
    }
    manifest.complete = kept == target;
    write_manifest(out_dir, manifest);
    for (const auto& e : manifest.entries) {
        std::error_code ec;
        fs::remove(out_dir / sidecar_name(e.seed), ec);
    }
    if (!manifest.complete) {
        throw IncompleteCorpusError(manifest);
    }
    return manifest;
}

}  // namespace treeforge
