#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "treeforge/cart.hpp"
#include "treeforge/corpus.hpp"
#include "treeforge/error.hpp"
#include "treeforge/filters.hpp"
#include "treeforge/scm.hpp"

namespace treeforge {

struct PipelineConfig {
    ScmConfig scm;
    CartParams cart;
    FilterParams filters;
    double noise_rate = 0.05;
    std::size_t target_count = 100;
    std::uint64_t master_seed = 0;
    int max_attempts_per_accept = 100;
    int workers = 1;

    void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
/// Missing keys keep their defaults; field names mirror the struct.
void from_json(const nlohmann::json& j, PipelineConfig& c);

/// Digest of everything that influences entry content (excludes workers and target_count).
std::string pipeline_params_digest(const PipelineConfig& config);

/// Seed handed to the worker that owns seed index `index`.
std::uint64_t worker_seed(const PipelineConfig& config, std::uint64_t index);

struct GeneratedTriple {
    Dataset dataset;  // features with noisy tree labels
    TreeModel tree;
    QualityReport report;
    EntryProvenance provenance;
    std::uint64_t seed = 0;
};

struct GenerateOutcome {
    std::optional<GeneratedTriple> triple;
    AttemptTally tally;  // every attempt made for this seed, accepted or not
};

/// Sample -> fit CART -> filter, repeated up to max_attempts_per_accept times;
/// the first passing attempt is relabeled with its tree and noised.
/// Deterministic in (config, seed).
GenerateOutcome generate_one(const PipelineConfig& config, std::uint64_t seed);

/// Rebuilds the raw (pre-relabel) dataset of a given attempt.
Dataset reconstruct_raw(const PipelineConfig& config, std::uint64_t seed, int attempt);

class IncompleteCorpusError : public Error {
public:
    explicit IncompleteCorpusError(CorpusManifest partial);
    const CorpusManifest& partial() const noexcept { return partial_; }

private:
    CorpusManifest partial_;
};

/// Generates exactly target_count entries into `out_dir`. Seed index i uses
/// worker_seed(config, i); the accepted set is the first target_count
/// successful indices, so the result does not depend on the worker count.
/// Entries already present from an interrupted run with the same parameters
/// are reused. The manifest is written last.
CorpusManifest generate_corpus(const PipelineConfig& config, const std::filesystem::path& out_dir);

}  // namespace treeforge
