"""Isolation-forest outlier scoring, built from scratch so it is reproducible.

Each tree draws its own RNG stream from (seed, tree index); trees can be built
on a thread pool and the score reduction always runs in tree order, so scores
do not depend on scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from config import LOGGER
from datasets import LabeledTable
from errors import DatasetError, TechniqueError
from techniques.base import StepContext, StepResult, Technique, frame_to_csv, json_artifact

logger = LOGGER(__name__)

DEFAULT_TREES = 100
DEFAULT_PSI = 256


def average_path_length(m: int) -> float:
    """c(m): mean unsuccessful-search path length in a BST of m nodes (exact harmonic sum)."""
    if m <= 1:
        return 0.0
    harmonic = math.fsum(1.0 / i for i in range(1, m))
    return 2.0 * harmonic - 2.0 * (m - 1) / m


def depth_cap(psi: int) -> int:
    return int(math.ceil(math.log2(psi)))


@dataclass(frozen=True, eq=False)
class IsolationTree:
    # node arrays; feature == -1 marks a leaf
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    size: np.ndarray
    depth: np.ndarray

    @property
    def height(self) -> int:
        return int(self.depth.max())

    def path_lengths(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(x.shape[0], dtype=np.int64)
        while True:
            active = np.flatnonzero(self.feature[node] >= 0)
            if active.size == 0:
                break
            current = node[active]
            go_left = x[active, self.feature[current]] < self.threshold[current]
            node[active] = np.where(go_left, self.left[current], self.right[current])
        leaf_sizes = self.size[node]
        adjust = np.array([average_path_length(int(s)) for s in leaf_sizes], dtype=float)
        return self.depth[node].astype(float) + adjust


@dataclass(frozen=True)
class IsolationForestModel:
    trees: tuple
    psi: int
    n_trees: int
    seed: int
    subsample_size: int
    feature_names: tuple


def _grow(sample: np.ndarray, rng: np.random.Generator, cap: int) -> IsolationTree:
    feature, threshold, left, right, size, depth = [], [], [], [], [], []

    def node(rows: np.ndarray, level: int) -> int:
        nid = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        size.append(len(rows))
        depth.append(level)
        if len(rows) <= 1 or level >= cap:
            return nid
        lows, highs = rows.min(axis=0), rows.max(axis=0)
        splittable = np.flatnonzero(highs > lows)
        if splittable.size == 0:
            return nid
        q = int(rng.choice(splittable))
        p = float(rng.uniform(lows[q], highs[q]))
        mask = rows[:, q] < p
        feature[nid] = q
        threshold[nid] = p
        left[nid] = node(rows[mask], level + 1)
        right[nid] = node(rows[~mask], level + 1)
        return nid

    node(sample, 0)
    return IsolationTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        size=np.array(size, dtype=np.int64),
        depth=np.array(depth, dtype=np.int64),
    )


def _as_matrix(data, columns: Optional[Sequence[str]] = None):
    if isinstance(data, LabeledTable):
        columns = tuple(columns) if columns is not None else data.feature_columns
        try:
            return data.feature_matrix(columns), tuple(columns)
        except DatasetError as e:
            raise TechniqueError(str(e))
    x = np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise TechniqueError("features must be a 2-d matrix")
    return x, tuple(columns) if columns is not None else tuple(f"x{i}" for i in range(x.shape[1]))


def isolation_forest_fit(data, n_trees: int = DEFAULT_TREES, psi: int = DEFAULT_PSI,
                         seed: Optional[int] = None, workers: int = 1,
                         columns: Optional[Sequence[str]] = None) -> IsolationForestModel:
    """Fit `n_trees` isolation trees on seeded subsamples of min(psi, n) rows."""
    x, names = _as_matrix(data, columns)
    n = x.shape[0]
    if n < 2:
        raise TechniqueError("isolation forest needs at least 2 rows")
    if psi < 2:
        raise TechniqueError("psi must be >= 2")
    if n_trees < 1:
        raise TechniqueError("n_trees must be >= 1")
    if seed is None:
        seed = int(np.random.SeedSequence().generate_state(1)[0])
    if int(seed) < 0:
        raise TechniqueError("seed must be a non-negative integer")
    m = min(psi, n)
    cap = depth_cap(psi)

    def build(tree_index: int) -> IsolationTree:
        rng = np.random.default_rng([int(seed), tree_index])
        rows = rng.choice(n, size=m, replace=False)
        return _grow(x[rows], rng, cap)

    with ThreadPoolExecutor(max_workers=max(1, int(workers))) as pool:
        trees = tuple(pool.map(build, range(n_trees)))
    logger.debug(f"Built {n_trees} isolation trees (psi={psi}, m={m}, cap={cap}, seed={seed})")
    return IsolationForestModel(trees=trees, psi=psi, n_trees=n_trees, seed=int(seed),
                                subsample_size=m, feature_names=names)


def isolation_forest_score(model: IsolationForestModel, data) -> np.ndarray:
    """Anomaly scores s(x) = 2^(-E[h(x)] / c(m)), in (0, 1)."""
    if isinstance(data, LabeledTable):
        missing = [c for c in model.feature_names if c not in data.columns]
        if missing:
            raise TechniqueError(f"schema mismatch: missing feature(s) {', '.join(missing)}")
        x, _ = _as_matrix(data, model.feature_names)
    else:
        x, _ = _as_matrix(data)
        if x.shape[1] != len(model.feature_names):
            raise TechniqueError(
                f"schema mismatch: {x.shape[1]} features, model was fit on {len(model.feature_names)}"
            )
    total = np.zeros(x.shape[0], dtype=float)
    for tree in model.trees:
        total += tree.path_lengths(x)
    expected = total / model.n_trees
    return np.power(2.0, -expected / average_path_length(model.subsample_size))


class IsolationForestTechnique(Technique):
    """Registry key ``isolation_forest``. ``exclude`` is a comma-separated list of columns to ignore."""

    registry_key = "isolation_forest"

    def __init__(self, n_trees: int = DEFAULT_TREES, psi: int = DEFAULT_PSI,
                 seed: Optional[int] = None, exclude: str = "", top_k: int = 10):
        self.n_trees = n_trees
        self.psi = psi
        self.seed = seed
        self.exclude = exclude
        self.top_k = top_k

    def _columns(self, table: LabeledTable) -> tuple:
        skipped = {c.strip() for c in str(self.exclude or "").split(",") if c.strip()}
        return tuple(c for c in table.feature_columns if c not in skipped)

    def fit(self, table: LabeledTable, workers: int = 1):
        self.model_ = isolation_forest_fit(table, n_trees=int(self.n_trees), psi=int(self.psi),
                                           seed=self.seed, workers=workers, columns=self._columns(table))
        return self

    def score_samples(self, table: LabeledTable) -> np.ndarray:
        return isolation_forest_score(self.model_, table)

    def apply(self, context: StepContext) -> StepResult:
        table = context.table
        self.fit(table, workers=context.workers)
        scores = self.score_samples(table)
        order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
        top = order[: max(0, int(self.top_k))]
        frame = pd.DataFrame(
            [[i, table.labels[i], f"{scores[i]:.6f}"] for i in order],
            columns=["Index", "Label", "Score"],
        )
        report = {
            "n_rows": table.n_rows,
            "n_trees": self.model_.n_trees,
            "psi": self.model_.psi,
            "subsample_size": self.model_.subsample_size,
            "seed": self.model_.seed,
            "features": list(self.model_.feature_names),
            "top_indices": [int(i) for i in top],
            "top_scores": [round(float(scores[i]), 6) for i in top],
        }
        summary = f"max outlier score {float(scores.max()):.4f} at row {order[0]}"
        logger.info(f"Isolation forest on {table.n_rows} rows: {summary}")
        return StepResult(
            table=table,
            artifacts={"outlier_scores.csv": frame_to_csv(frame), "outlier_summary.json": json_artifact(report)},
            summary=summary,
        )
