import math
from fractions import Fraction

import numpy as np
import pytest

from datasets import table_from_records
from errors import TechniqueError
from techniques import average_path_length, isolation_forest_fit, isolation_forest_score
from techniques.isolation_forest import depth_cap


def _blob_with_outlier(seed=42, n=500):
    rng = np.random.default_rng(seed)
    inliers = rng.normal(0.0, 1.0, size=(n, 2))
    outlier = np.array([[10.0, 0.0]])
    return np.vstack([inliers, outlier])


def test_average_path_length():
    assert average_path_length(2) == 1.0
    assert average_path_length(1) == 0.0
    exact = 2 * float(sum(Fraction(1, i) for i in range(1, 256))) - 2 * 255 / 256
    assert average_path_length(256) == pytest.approx(exact, abs=1e-9)
    assert average_path_length(256) == pytest.approx(10.24869, abs=1e-4)


def test_depth_cap():
    assert depth_cap(256) == 8
    assert depth_cap(2) == 1
    assert depth_cap(100) == 7


def test_far_outlier_scores_above_inliers():
    data = _blob_with_outlier()
    model = isolation_forest_fit(data, n_trees=100, psi=256, seed=5)
    scores = isolation_forest_score(model, data)
    assert ((scores > 0) & (scores < 1)).all()
    assert scores[-1] > np.percentile(scores[:-1], 95)
    assert all(tree.height <= depth_cap(256) for tree in model.trees)


def test_seeded_runs_are_bitwise_identical_across_workers():
    data = _blob_with_outlier(seed=9, n=300)
    single = isolation_forest_score(isolation_forest_fit(data, n_trees=50, seed=123, workers=1), data)
    again = isolation_forest_score(isolation_forest_fit(data, n_trees=50, seed=123, workers=1), data)
    threaded = isolation_forest_score(isolation_forest_fit(data, n_trees=50, seed=123, workers=4), data)
    assert np.array_equal(single, again)
    assert np.array_equal(single, threaded)
    other = isolation_forest_score(isolation_forest_fit(data, n_trees=50, seed=124, workers=1), data)
    assert not np.array_equal(single, other)


def test_duplicate_rows_score_identically():
    rng = np.random.default_rng(3)
    data = rng.normal(size=(100, 3))
    data[10] = data[20]
    scores = isolation_forest_score(isolation_forest_fit(data, n_trees=30, seed=1), data)
    assert scores[10] == scores[20]


def test_subsample_is_capped_by_rows():
    data = [[0.0, 1.0], [1.0, 0.0], [5.0, 5.0]]
    model = isolation_forest_fit(data, psi=256, seed=0)
    assert model.subsample_size == 3
    assert model.n_trees == 100


def test_fit_and_score_errors():
    with pytest.raises(TechniqueError, match="at least 2 rows"):
        isolation_forest_fit([[1.0, 2.0]], seed=0)
    with pytest.raises(TechniqueError, match="psi"):
        isolation_forest_fit([[1.0], [2.0]], psi=1, seed=0)
    with pytest.raises(TechniqueError, match="non-negative"):
        isolation_forest_fit([[1.0], [2.0]], seed=-1)
    text = table_from_records(["colour", "label"], [["red", "a"], ["blue", "b"]], "label")
    with pytest.raises(TechniqueError, match="non-numeric"):
        isolation_forest_fit(text, seed=0)
    model = isolation_forest_fit(np.arange(20, dtype=float).reshape(10, 2), seed=0)
    with pytest.raises(TechniqueError, match="schema mismatch"):
        isolation_forest_score(model, np.zeros((3, 3)))


def test_fit_on_labeled_table_uses_feature_columns():
    rows = [[f"{i}", f"{i % 3}", "a" if i % 2 else "b"] for i in range(30)]
    table = table_from_records(["x", "y", "label"], rows, "label")
    model = isolation_forest_fit(table, n_trees=10, seed=2)
    assert model.feature_names == ("x", "y")
    scores = isolation_forest_score(model, table)
    assert scores.shape == (30,)
    narrow = table_from_records(["x", "label"], [[r[0], r[2]] for r in rows], "label")
    with pytest.raises(TechniqueError, match="missing feature"):
        isolation_forest_score(model, narrow)
    assert math.isfinite(float(scores.max()))
