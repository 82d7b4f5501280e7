import pytest

import treeforge


def test_class_imbalance():
    raw, norm = treeforge.class_imbalance([9, 1, 0, 0, 0])
    assert raw == pytest.approx(3.1, abs=1e-12)
    assert norm == pytest.approx(0.775, abs=1e-12)


def test_cart_on_xor_stays_a_leaf():
    x = [[0, 0], [0, 1], [1, 0], [1, 1]]
    y = [0, 1, 1, 0]
    tree = treeforge.fit_cart(x, y, 2, max_depth=2)
    assert "class" in tree
    assert treeforge.predict(tree, x) == [0, 0, 0, 0]


def test_optimal_solves_xor():
    x = [[0, 0], [0, 1], [1, 0], [1, 1]]
    r = treeforge.solve_optimal(x, [0, 1, 1, 0], 2, max_depth=2)
    assert r["objective"] == 0.0
    assert r["errors"] == 0


def test_generate_and_reload(tmp_path):
    m = treeforge.generate_corpus(tmp_path / "c", target_count=3, master_seed=1)
    assert len(m["entries"]) == 3
    assert m["config"]["noise_rate"] == 0.05
    x, y, k, tree = treeforge.load_entry(tmp_path / "c", 0)
    pred = treeforge.predict(tree, x)
    mismatched = sum(p != t for p, t in zip(pred, y))
    assert mismatched == m["entries"][0]["flipped_count"]
    assert treeforge.corpus_stats(tmp_path / "c")["n_entries"] == 3


def test_errors_map_to_python():
    with pytest.raises(treeforge.ValidationError):
        treeforge.generate_corpus("unused", noise_rate=1.5)
    with pytest.raises(treeforge.TreeforgeError):
        treeforge.fit_cart([[0.0]], [5], 2)
