#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "treeforge/dataset.hpp"
#include "treeforge/filters.hpp"
#include "treeforge/tree.hpp"

namespace treeforge {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kManifestSchemaMajor = 1;
inline constexpr const char* kManifestSchemaVersion = "1.0";

/// Outcome counts of generation attempts; the four buckets always sum to the
/// attempt total.
struct AttemptTally {
    std::size_t accepted = 0;
    std::size_t rejected_imbalance = 0;
    std::size_t rejected_accuracy = 0;
    std::size_t rejected_degenerate = 0;

    std::size_t total() const noexcept {
        return accepted + rejected_imbalance + rejected_accuracy + rejected_degenerate;
    }
    void reject(RejectReason reason);
    AttemptTally& operator+=(const AttemptTally& other);
    bool operator==(const AttemptTally&) const = default;
};

void to_json(nlohmann::json& j, const AttemptTally& t);
void from_json(const nlohmann::json& j, AttemptTally& t);

struct EntryProvenance {
    std::uint64_t seed_index = 0;
    int accepted_attempt = 0;
    AttemptTally attempts;
    double noise_rate = 0.0;
    std::size_t flipped_count = 0;
    std::string pipeline_params_digest;

    bool operator==(const EntryProvenance&) const = default;
};

struct CorpusEntry {
    std::string dataset_path;  // relative to the corpus directory
    std::string tree_path;
    std::uint64_t seed = 0;
    QualityReport quality;
    EntryProvenance provenance;
    std::size_t n_rows = 0;
    std::size_t n_features = 0;
    int n_classes = 0;
    std::string dataset_checksum;
    std::string tree_checksum;

    bool operator==(const CorpusEntry&) const = default;
};

void to_json(nlohmann::json& j, const CorpusEntry& e);
void from_json(const nlohmann::json& j, CorpusEntry& e);

struct CorpusManifest {
    std::string schema_version = kManifestSchemaVersion;
    std::string tool_version = kToolVersion;
    std::string created_at;
    nlohmann::json config;  // effective generation config
    AttemptTally telemetry;
    bool complete = true;
    std::vector<CorpusEntry> entries;
};

void to_json(nlohmann::json& j, const CorpusManifest& m);
/// Rejects manifests whose schema major version differs from ours.
void from_json(const nlohmann::json& j, CorpusManifest& m);

std::string dataset_file_name(std::uint64_t seed);
std::string tree_file_name(std::uint64_t seed);

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string checksum_file(const std::filesystem::path& path);

/// Writes the entry's CSV and tree JSON into `dir` and returns the manifest
/// entry describing them (paths, checksums, shapes).
CorpusEntry write_corpus_entry(const std::filesystem::path& dir, const Dataset& dataset, const TreeModel& tree,
                               const QualityReport& report, std::uint64_t seed, const EntryProvenance& provenance = {});

void write_manifest(const std::filesystem::path& dir, const CorpusManifest& manifest);

/// A parsed manifest whose entry files are loaded (and checksum-verified) on demand.
class Corpus {
public:
    Corpus(std::filesystem::path dir, CorpusManifest manifest) : dir_(std::move(dir)), manifest_(std::move(manifest)) {}

    const std::filesystem::path& dir() const noexcept { return dir_; }
    const CorpusManifest& manifest() const noexcept { return manifest_; }
    std::size_t size() const noexcept { return manifest_.entries.size(); }

    Dataset dataset(std::size_t i) const;
    TreeModel tree(std::size_t i) const;
    /// Index of the entry with the given seed; throws if absent.
    std::size_t find_seed(std::uint64_t seed) const;

private:
    std::filesystem::path dir_;
    CorpusManifest manifest_;
};

/// Parses `dir/manifest.json` and checks that every referenced file exists and
/// that seeds are unique. Errors name the offending entry.
Corpus read_corpus(const std::filesystem::path& dir);

/// Writes `text` to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view text);
std::string read_file(const std::filesystem::path& path);

}  // namespace treeforge
