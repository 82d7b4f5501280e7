#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "treeforge/dataset.hpp"

namespace treeforge {

/// Writes a header row (feature names, then `label`) and one line per row.
/// Floats use the shortest decimal form that parses back to the same double.
void write_dataset_csv(std::ostream& out, const Dataset& dataset);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& dataset);

/// Parses the CSV contract above. With a declared class count the label ids
/// are used as-is and must lie in [0, n_classes). Without one (external data)
/// the distinct label values are remapped to dense ids 0..K-1 in ascending
/// order and K is the number of distinct labels.
Dataset read_dataset_csv(std::istream& in, std::optional<int> n_classes = std::nullopt,
                         const std::string& source_name = "<stream>");
Dataset read_dataset_csv(const std::filesystem::path& path, std::optional<int> n_classes = std::nullopt);

/// Shortest round-trip decimal representation.
std::string format_double(double value);

}  // namespace treeforge
