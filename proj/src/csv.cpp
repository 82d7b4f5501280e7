#include "treeforge/csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

#include "treeforge/error.hpp"

namespace treeforge {

std::string format_double(double value) {
    std::array<char, 32> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc()) {
        throw Error("failed to format double");
    }
    return std::string(buf.data(), end);
}

void write_dataset_csv(std::ostream& out, const Dataset& dataset) {
    const auto& names = dataset.feature_names();
    for (std::size_t c = 0; c < dataset.n_features(); ++c) {
        out << (names.empty() ? "x" + std::to_string(c) : names[c]) << ',';
    }
    out << "label\n";
    std::string line;
    for (std::size_t r = 0; r < dataset.n_rows(); ++r) {
        line.clear();
        for (double v : dataset.row(r)) {
            line += format_double(v);
            line += ',';
        }
        line += std::to_string(dataset.labels()[r]);
        line += '\n';
        out << line;
    }
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& dataset) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    write_dataset_csv(out, dataset);
    if (!out.flush()) {
        throw IoError("write failed for " + path.string());
    }
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

Dataset read_dataset_csv(std::istream& in, std::optional<int> n_classes, const std::string& source_name) {
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError(source_name + ": missing header row");
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }
    const auto header = split_fields(trim(line));
    if (header.size() < 2 || trim(header.back()) != "label") {
        throw SchemaError(source_name + ": header must have at least one feature column and end with 'label'");
    }
    const std::size_t n_features = header.size() - 1;
    std::vector<std::string> names;
    names.reserve(n_features);
    for (std::size_t c = 0; c < n_features; ++c) {
        names.emplace_back(trim(header[c]));
    }

    std::vector<double> features;
    std::vector<long long> raw_labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty()) {
            continue;
        }
        const auto fields = split_fields(view);
        if (fields.size() != header.size()) {
            throw SchemaError(source_name + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < n_features; ++c) {
            const auto f = trim(fields[c]);
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || ptr != f.data() + f.size()) {
                throw SchemaError(source_name + ":" + std::to_string(line_no) + ": cannot parse '" + std::string(f) +
                                  "' as a number");
            }
            features.push_back(v);
        }
        const auto lf = trim(fields.back());
        long long y = 0;
        const auto [ptr, ec] = std::from_chars(lf.data(), lf.data() + lf.size(), y);
        if (ec != std::errc() || ptr != lf.data() + lf.size()) {
            throw SchemaError(source_name + ":" + std::to_string(line_no) + ": label '" + std::string(lf) +
                              "' is not an integer");
        }
        raw_labels.push_back(y);
    }
    if (raw_labels.empty()) {
        throw SchemaError(source_name + ": no data rows");
    }

    LabelVector labels(raw_labels.size());
    int k = 0;
    if (n_classes) {
        k = *n_classes;
        for (std::size_t i = 0; i < raw_labels.size(); ++i) {
            if (raw_labels[i] < 0 || raw_labels[i] >= k) {
                throw SchemaError(source_name + ": label " + std::to_string(raw_labels[i]) +
                                  " outside declared range [0, " + std::to_string(k) + ")");
            }
            labels[i] = static_cast<ClassId>(raw_labels[i]);
        }
    } else {
        std::map<long long, ClassId> dense;
        for (long long y : raw_labels) dense.emplace(y, 0);
        ClassId next = 0;
        for (auto& [value, id] : dense) id = next++;
        for (std::size_t i = 0; i < raw_labels.size(); ++i) labels[i] = dense.at(raw_labels[i]);
        k = std::max<int>(2, static_cast<int>(dense.size()));
    }
    const std::size_t n_rows = labels.size();
    try {
        return Dataset(n_rows, n_features, std::move(features), std::move(labels), k, std::move(names), source_name);
    } catch (const ValidationError& e) {
        throw SchemaError(source_name + ": " + e.what());
    }
}

Dataset read_dataset_csv(const std::filesystem::path& path, std::optional<int> n_classes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return read_dataset_csv(in, n_classes, path.string());
}

}  // namespace treeforge
