#include "treeforge/corpus.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "treeforge/csv.hpp"
#include "treeforge/error.hpp"

namespace treeforge {

namespace fs = std::filesystem;

void AttemptTally::reject(RejectReason reason) {
    switch (reason) {
        case RejectReason::imbalance: ++rejected_imbalance; break;
        case RejectReason::accuracy: ++rejected_accuracy; break;
        case RejectReason::degenerate: ++rejected_degenerate; break;
    }
}

AttemptTally& AttemptTally::operator+=(const AttemptTally& other) {
    accepted += other.accepted;
    rejected_imbalance += other.rejected_imbalance;
    rejected_accuracy += other.rejected_accuracy;
    rejected_degenerate += other.rejected_degenerate;
    return *this;
}

void to_json(nlohmann::json& j, const AttemptTally& t) {
    j = {{"accepted", t.accepted},
         {"rejected_imbalance", t.rejected_imbalance},
         {"rejected_accuracy", t.rejected_accuracy},
         {"rejected_degenerate", t.rejected_degenerate},
         {"total", t.total()}};
}

void from_json(const nlohmann::json& j, AttemptTally& t) {
    t.accepted = j.at("accepted").get<std::size_t>();
    t.rejected_imbalance = j.at("rejected_imbalance").get<std::size_t>();
    t.rejected_accuracy = j.at("rejected_accuracy").get<std::size_t>();
    t.rejected_degenerate = j.at("rejected_degenerate").get<std::size_t>();
    if (j.contains("total") && j.at("total").get<std::size_t>() != t.total()) {
        throw SchemaError("attempt tally does not sum to its recorded total");
    }
}

void to_json(nlohmann::json& j, const CorpusEntry& e) {
    j = {{"dataset_path", e.dataset_path},
         {"tree_path", e.tree_path},
         {"seed", e.seed},
         {"seed_index", e.provenance.seed_index},
         {"quality", e.quality},
         {"noise_rate", e.provenance.noise_rate},
         {"flipped_count", e.provenance.flipped_count},
         {"accepted_attempt", e.provenance.accepted_attempt},
         {"attempts", e.provenance.attempts},
         {"pipeline_params_digest", e.provenance.pipeline_params_digest},
         {"n_rows", e.n_rows},
         {"n_features", e.n_features},
         {"n_classes", e.n_classes},
         {"dataset_checksum", e.dataset_checksum},
         {"tree_checksum", e.tree_checksum}};
}

void from_json(const nlohmann::json& j, CorpusEntry& e) {
    e.dataset_path = j.at("dataset_path").get<std::string>();
    e.tree_path = j.at("tree_path").get<std::string>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.quality = j.at("quality").get<QualityReport>();
    e.provenance.seed_index = j.value("seed_index", std::uint64_t{0});
    e.provenance.noise_rate = j.at("noise_rate").get<double>();
    e.provenance.flipped_count = j.at("flipped_count").get<std::size_t>();
    e.provenance.accepted_attempt = j.value("accepted_attempt", 0);
    if (j.contains("attempts")) e.provenance.attempts = j.at("attempts").get<AttemptTally>();
    e.provenance.pipeline_params_digest = j.value("pipeline_params_digest", std::string{});
    e.n_rows = j.at("n_rows").get<std::size_t>();
    e.n_features = j.at("n_features").get<std::size_t>();
    e.n_classes = j.at("n_classes").get<int>();
    e.dataset_checksum = j.value("dataset_checksum", std::string{});
    e.tree_checksum = j.value("tree_checksum", std::string{});
}

void to_json(nlohmann::json& j, const CorpusManifest& m) {
    j = {{"schema_version", m.schema_version},
         {"tool_version", m.tool_version},
         {"created_at", m.created_at},
         {"config", m.config},
         {"telemetry", m.telemetry},
         {"complete", m.complete},
         {"entries", m.entries}};
}

void from_json(const nlohmann::json& j, CorpusManifest& m) {
    if (!j.is_object() || !j.contains("schema_version")) {
        throw SchemaError("manifest has no schema_version");
    }
    m.schema_version = j.at("schema_version").get<std::string>();
    int major = -1;
    try {
        major = std::stoi(m.schema_version.substr(0, m.schema_version.find('.')));
    } catch (const std::exception&) {
        throw SchemaError("manifest schema_version '" + m.schema_version + "' is not a version number");
    }
    if (major != kManifestSchemaMajor) {
        throw SchemaError("manifest schema_version " + m.schema_version + " is not supported (expected major " +
                          std::to_string(kManifestSchemaMajor) + ")");
    }
    m.tool_version = j.value("tool_version", std::string{});
    m.created_at = j.value("created_at", std::string{});
    m.config = j.value("config", nlohmann::json::object());
    if (j.contains("telemetry")) m.telemetry = j.at("telemetry").get<AttemptTally>();
    m.complete = j.value("complete", true);
    m.entries.clear();
    const auto& entries = j.at("entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        try {
            m.entries.push_back(entries[i].get<CorpusEntry>());
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError("manifest entry " + std::to_string(i) + " is malformed: " + e.what());
        }
    }
}

std::string dataset_file_name(std::uint64_t seed) { return "data_" + std::to_string(seed) + ".csv"; }
std::string tree_file_name(std::uint64_t seed) { return "tree_" + std::to_string(seed) + ".json"; }

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string checksum_file(const fs::path& path) { return fnv1a_hex(read_file(path)); }

void write_file_atomic(const fs::path& path, std::string_view text) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open " + tmp.string() + " for writing");
        }
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out.flush()) {
            throw IoError("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

CorpusEntry write_corpus_entry(const fs::path& dir, const Dataset& dataset, const TreeModel& tree,
                               const QualityReport& report, std::uint64_t seed, const EntryProvenance& provenance) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create corpus directory " + dir.string() + ": " + ec.message());
    }
    std::ostringstream csv;
    write_dataset_csv(csv, dataset);
    const std::string csv_text = csv.str();
    const std::string tree_text = tree_to_json(tree).dump() + "\n";

    CorpusEntry entry;
    entry.dataset_path = dataset_file_name(seed);
    entry.tree_path = tree_file_name(seed);
    entry.seed = seed;
    entry.quality = report;
    entry.provenance = provenance;
    entry.n_rows = dataset.n_rows();
    entry.n_features = dataset.n_features();
    entry.n_classes = dataset.n_classes();
    entry.dataset_checksum = fnv1a_hex(csv_text);
    entry.tree_checksum = fnv1a_hex(tree_text);
    write_file_atomic(dir / entry.dataset_path, csv_text);
    write_file_atomic(dir / entry.tree_path, tree_text);
    return entry;
}

void write_manifest(const fs::path& dir, const CorpusManifest& manifest) {
    write_file_atomic(dir / "manifest.json", nlohmann::json(manifest).dump(2) + "\n");
}

namespace {

std::string verified_text(const fs::path& dir, const std::string& rel, const std::string& checksum,
                          std::uint64_t seed) {
    const std::string text = read_file(dir / rel);
    if (!checksum.empty() && fnv1a_hex(text) != checksum) {
        throw ChecksumError("entry seed " + std::to_string(seed) + ": checksum mismatch for " + rel);
    }
    return text;
}

}  // namespace

Dataset Corpus::dataset(std::size_t i) const {
    const CorpusEntry& e = manifest_.entries.at(i);
    std::istringstream in(verified_text(dir_, e.dataset_path, e.dataset_checksum, e.seed));
    Dataset d = read_dataset_csv(in, e.n_classes, (dir_ / e.dataset_path).string());
    if (d.n_rows() != e.n_rows || d.n_features() != e.n_features) {
        throw SchemaError("entry seed " + std::to_string(e.seed) + ": dataset shape differs from the manifest");
    }
    return d;
}

TreeModel Corpus::tree(std::size_t i) const {
    const CorpusEntry& e = manifest_.entries.at(i);
    const std::string text = verified_text(dir_, e.tree_path, e.tree_checksum, e.seed);
    try {
        return tree_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError("entry seed " + std::to_string(e.seed) + ": cannot parse " + e.tree_path + ": " + ex.what());
    }
}

std::size_t Corpus::find_seed(std::uint64_t seed) const {
    for (std::size_t i = 0; i < manifest_.entries.size(); ++i) {
        if (manifest_.entries[i].seed == seed) return i;
    }
    throw Error("no corpus entry with seed " + std::to_string(seed));
}

Corpus read_corpus(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) {
        throw IoError("no manifest.json in " + dir.string());
    }
    CorpusManifest manifest;
    try {
        manifest = nlohmann::json::parse(read_file(manifest_path)).get<CorpusManifest>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("cannot parse " + manifest_path.string() + ": " + e.what());
    }
    std::set<std::uint64_t> seeds;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const CorpusEntry& e = manifest.entries[i];
        const std::string who = "entry " + std::to_string(i) + " (seed " + std::to_string(e.seed) + ")";
        if (!seeds.insert(e.seed).second) {
            throw SchemaError(who + " repeats a seed");
        }
        for (const std::string& rel : {e.dataset_path, e.tree_path}) {
            const fs::path p = fs::path(rel);
            if (p.is_absolute() || p.has_parent_path()) {
                throw SchemaError(who + " references " + rel + " outside the corpus directory");
            }
            if (!fs::exists(dir / p)) {
                throw IoError(who + " references missing file " + rel);
            }
        }
    }
    return Corpus(dir, std::move(manifest));
}

}  // namespace treeforge
