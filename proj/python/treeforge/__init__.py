"""Synthetic decision-tree corpora, CART and a depth-bounded optimal tree solver."""

import json
from os import fspath

from . import _treeforge as _native
from ._treeforge import (
    ChecksumError,
    GenerationError,
    IncompleteCorpusError,
    IoError,
    SchemaError,
    SolverBudgetExceeded,
    StructuralError,
    TreeforgeError,
    ValidationError,
    __version__,
    class_imbalance,
)

__all__ = [
    "ChecksumError",
    "GenerationError",
    "IncompleteCorpusError",
    "IoError",
    "SchemaError",
    "SolverBudgetExceeded",
    "StructuralError",
    "TreeforgeError",
    "ValidationError",
    "class_imbalance",
    "corpus_stats",
    "default_config",
    "fit_cart",
    "generate_corpus",
    "load_entry",
    "predict",
    "solve_optimal",
]


def default_config():
    return json.loads(_native.default_config())


def fit_cart(x, y, n_classes, max_depth=4, min_samples_leaf=1):
    """Fits CART and returns the tree as a nested dict."""
    return json.loads(_native.fit_cart(x, y, n_classes, max_depth, min_samples_leaf))


def predict(tree, x):
    return _native.predict(json.dumps(tree), x)


def solve_optimal(bits, y, n_classes, max_depth=2, leaf_penalty=0.0, node_budget=10_000_000):
    """Optimal tree over 0/1 columns. Returns a dict with objective, errors, search_nodes and tree."""
    objective, errors, nodes, tree = _native.solve_optimal(bits, y, n_classes, max_depth, leaf_penalty, node_budget)
    return {"objective": objective, "errors": errors, "search_nodes": nodes, "tree": json.loads(tree)}


def generate_corpus(out_dir, **overrides):
    """Generates a corpus; keyword arguments override top-level config fields."""
    config = default_config()
    config.update(overrides)
    return json.loads(_native.generate_corpus(json.dumps(config), fspath(out_dir)))


def corpus_stats(corpus_dir, bins=10, range_hi=0.3):
    return json.loads(_native.corpus_stats(fspath(corpus_dir), bins, range_hi))


def load_entry(corpus_dir, index):
    """Returns (features, labels, n_classes, tree) of one corpus entry."""
    x, y, k, tree = _native.load_entry(fspath(corpus_dir), index)
    return x, y, k, json.loads(tree)
