#include "treeforge/relabel.hpp"

#include "treeforge/error.hpp"

namespace treeforge {

Dataset relabel(const Dataset& dataset, const TreeModel& tree) {
    LabelVector predicted = apply_tree(tree, dataset);
    for (ClassId y : predicted) {
        if (y >= dataset.n_classes()) {
            throw StructuralError("tree predicts class " + std::to_string(y) + " but the dataset declares only " +
                                  std::to_string(dataset.n_classes()) + " classes");
        }
    }
    return dataset.with_labels(std::move(predicted));
}

NoisyDataset inject_noise(const Dataset& dataset, double rate, RandomSource& rng) {
    if (!(rate >= 0.0 && rate <= 1.0)) {
        throw ValidationError("noise rate must lie in [0, 1]");
    }
    const int k = dataset.n_classes();
    LabelVector labels(dataset.labels().begin(), dataset.labels().end());
    std::size_t flipped = 0;
    for (ClassId& y : labels) {
        if (!rng.bernoulli(rate)) continue;
        const auto draw = static_cast<ClassId>(rng.uniform_int(0, k - 2));
        y = draw < y ? draw : draw + 1;
        ++flipped;
    }
    return {dataset.with_labels(std::move(labels)), flipped};
}

}  // namespace treeforge
