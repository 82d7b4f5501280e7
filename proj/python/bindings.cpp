// Python bindings. Structured values (configs, trees, manifests) cross the
// boundary as JSON text; the package's __init__ turns them into dicts.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "treeforge/benchmark.hpp"
#include "treeforge/cart.hpp"
#include "treeforge/corpus.hpp"
#include "treeforge/filters.hpp"
#include "treeforge/optimal.hpp"
#include "treeforge/pipeline.hpp"

namespace py = pybind11;
using namespace treeforge;

namespace {

using Matrix = std::vector<std::vector<double>>;

Dataset make_dataset(const Matrix& x, const LabelVector& y, int n_classes) {
    if (x.empty()) throw ValidationError("no rows");
    const std::size_t d = x.front().size();
    std::vector<double> flat;
    flat.reserve(x.size() * d);
    for (const auto& row : x) {
        if (row.size() != d) throw ValidationError("rows have different lengths");
        flat.insert(flat.end(), row.begin(), row.end());
    }
    if (y.size() != x.size()) throw ValidationError("labels and rows differ in length");
    return Dataset(x.size(), d, std::move(flat), y, n_classes);
}

Matrix to_matrix(const Dataset& d) {
    Matrix x(d.n_rows());
    for (std::size_t r = 0; r < d.n_rows(); ++r) x[r].assign(d.row(r).begin(), d.row(r).end());
    return x;
}

}  // namespace

PYBIND11_MODULE(_treeforge, m) {
    m.doc() = "treeforge native core";
    m.attr("__version__") = kToolVersion;

    static py::exception<Error> base(m, "TreeforgeError");
    py::register_exception<StructuralError>(m, "StructuralError", base.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<GenerationError>(m, "GenerationError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
    py::register_exception<ChecksumError>(m, "ChecksumError", base.ptr());
    py::register_exception<IncompleteCorpusError>(m, "IncompleteCorpusError", base.ptr());
    py::register_exception<SolverBudgetExceeded>(m, "SolverBudgetExceeded", base.ptr());

    m.def(
        "class_imbalance",
        [](const std::vector<std::size_t>& counts) {
            const double raw = class_imbalance_raw_from_counts(counts);
            return std::make_pair(raw, raw / static_cast<double>(counts.size() - 1));
        },
        py::arg("counts"), "(raw, normalized) class imbalance of per-class counts");

    m.def("default_config", [] { return nlohmann::json(PipelineConfig{}).dump(); });

    m.def(
        "fit_cart",
        [](const Matrix& x, const LabelVector& y, int n_classes, int max_depth, std::size_t min_samples_leaf) {
            CartParams p;
            p.max_depth = max_depth;
            p.min_samples_leaf = min_samples_leaf;
            return tree_to_json(fit_cart(make_dataset(x, y, n_classes), p)).dump();
        },
        py::arg("x"), py::arg("y"), py::arg("n_classes"), py::arg("max_depth") = 4, py::arg("min_samples_leaf") = 1);

    m.def(
        "predict",
        [](const std::string& tree, const Matrix& x) {
            const TreeModel t = tree_from_json(nlohmann::json::parse(tree));
            LabelVector out;
            out.reserve(x.size());
            for (const auto& row : x) {
                if (t.max_feature_index() >= static_cast<int>(row.size())) {
                    throw StructuralError("tree uses feature " + std::to_string(t.max_feature_index()) +
                                          " but rows have " + std::to_string(row.size()));
                }
                out.push_back(t.predict(row));
            }
            return out;
        },
        py::arg("tree"), py::arg("x"));

    m.def(
        "solve_optimal",
        [](const Matrix& bits, const LabelVector& y, int n_classes, int max_depth, double leaf_penalty,
           std::uint64_t node_budget) {
            const Dataset d = make_dataset(bits, y, n_classes);
            std::vector<BitThreshold> th;
            for (std::size_t j = 0; j < d.n_features(); ++j) th.push_back({static_cast<int>(j), 0.5});
            OptParams p;
            p.max_depth = max_depth;
            p.leaf_penalty = leaf_penalty;
            p.node_budget = node_budget;
            const OptResult r = solve_optimal(binarize_with(d, th), p);
            return py::make_tuple(r.objective, r.errors, r.search_nodes, tree_to_json(r.tree).dump());
        },
        py::arg("bits"), py::arg("y"), py::arg("n_classes"), py::arg("max_depth") = 2, py::arg("leaf_penalty") = 0.0,
        py::arg("node_budget") = 10'000'000);

    m.def(
        "generate_corpus",
        [](const std::string& config, const std::string& out_dir) {
            const auto c = nlohmann::json::parse(config).get<PipelineConfig>();
            c.validate();
            return nlohmann::json(generate_corpus(c, out_dir)).dump();
        },
        py::arg("config"), py::arg("out_dir"), py::call_guard<py::gil_scoped_release>());

    m.def(
        "corpus_stats",
        [](const std::string& dir, int bins, double range_hi) {
            return diversity_to_json(corpus_stats(read_corpus(dir).manifest(), bins, range_hi)).dump();
        },
        py::arg("corpus_dir"), py::arg("bins") = 10, py::arg("range_hi") = 0.3);

    m.def(
        "load_entry",
        [](const std::string& dir, std::size_t index) {
            const Corpus c = read_corpus(dir);
            if (index >= c.size()) throw py::index_error("entry index out of range");
            const Dataset d = c.dataset(index);
            return py::make_tuple(to_matrix(d), LabelVector(d.labels().begin(), d.labels().end()), d.n_classes(),
                                  tree_to_json(c.tree(index)).dump());
        },
        py::arg("corpus_dir"), py::arg("index"));
}
