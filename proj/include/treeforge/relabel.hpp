#pragma once

#include <cstddef>

#include "treeforge/dataset.hpp"
#include "treeforge/random.hpp"
#include "treeforge/tree.hpp"

namespace treeforge {

/// Replaces the labels with the tree's predictions; features and K unchanged.
Dataset relabel(const Dataset& dataset, const TreeModel& tree);

struct NoisyDataset {
    Dataset dataset;
    std::size_t flipped_count = 0;
};

/// Each row flips independently with probability `rate`; a flipped label is
/// redrawn uniformly from the other K - 1 classes, so it always changes.
NoisyDataset inject_noise(const Dataset& dataset, double rate, RandomSource& rng);

}  // namespace treeforge
