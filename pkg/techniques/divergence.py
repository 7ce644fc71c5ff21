"""Distribution divergence between a reference table and the test table."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from config import LOGGER
from datasets import LabeledTable
from errors import TechniqueError
from techniques.base import StepContext, StepResult, Technique, json_artifact

logger = LOGGER(__name__)


def _kl2(p: np.ndarray, q: np.ndarray) -> float:
    return float(np.sum(p * np.log2(p / q)))


def jensen_shannon(counts_a, counts_b) -> float:
    """Jensen-Shannon divergence (base 2) of two count vectors after add-one smoothing."""
    a = np.asarray(counts_a, dtype=float) + 1.0
    b = np.asarray(counts_b, dtype=float) + 1.0
    p = a / a.sum()
    q = b / b.sum()
    m = (p + q) / 2.0
    value = 0.5 * _kl2(p, m) + 0.5 * _kl2(q, m)
    return min(1.0, max(0.0, value))


def feature_divergence(a: np.ndarray, b: np.ndarray, bins: int) -> float:
    combined = np.concatenate([a, b])
    lo, hi = float(combined.min()), float(combined.max())
    if hi == lo:
        return 0.0
    edges = np.linspace(lo, hi, bins + 1)
    counts_a, _ = np.histogram(a, bins=edges)
    counts_b, _ = np.histogram(b, bins=edges)
    return jensen_shannon(counts_a, counts_b)


@dataclass(frozen=True)
class DivergenceReport:
    values: tuple  # (feature, divergence) in column order
    flagged: tuple
    bins: int
    threshold: float
    label_divergence: float = None

    def as_dict(self) -> dict:
        return dict(self.values)


def representativity_report(reference: LabeledTable, test: LabeledTable, bins: int = 10,
                            threshold: float = 0.1, include_labels: bool = False) -> DivergenceReport:
    """Per numeric feature JSD over `bins` equal-width bins of the combined range."""
    if bins < 1:
        raise TechniqueError("bins must be >= 1")
    ref_cols, test_cols = reference.numeric_columns(), test.numeric_columns()
    if ref_cols != test_cols or reference.label_column != test.label_column:
        raise TechniqueError(f"schema mismatch: numeric features {list(ref_cols)} vs {list(test_cols)}")
    if not ref_cols:
        raise TechniqueError("no shared numeric feature columns")
    ref_x = reference.feature_matrix(ref_cols)
    test_x = test.feature_matrix(test_cols)
    values = tuple(
        (column, feature_divergence(ref_x[:, i], test_x[:, i], bins)) for i, column in enumerate(ref_cols)
    )
    label_value = None
    if include_labels:
        classes = sorted(set(reference.class_names) | set(test.class_names))
        ref_counts = [int((reference.labels == c).sum()) for c in classes]
        test_counts = [int((test.labels == c).sum()) for c in classes]
        label_value = jensen_shannon(ref_counts, test_counts)
    flagged = tuple(column for column, value in values if value > threshold)
    return DivergenceReport(values=values, flagged=flagged, bins=bins, threshold=threshold,
                            label_divergence=label_value)


class DivergenceCheck(Technique):
    """Registry key ``divergence_check``."""

    registry_key = "divergence_check"

    def __init__(self, bins: int = 10, threshold: float = 0.1, include_labels: bool = False):
        self.bins = bins
        self.threshold = threshold
        self.include_labels = include_labels

    def apply(self, context: StepContext) -> StepResult:
        report = representativity_report(context.reference(), context.table, bins=int(self.bins),
                                         threshold=float(self.threshold),
                                         include_labels=bool(self.include_labels))
        payload = {
            "bins": report.bins,
            "threshold": report.threshold,
            "divergence": report.as_dict(),
            "flagged": list(report.flagged),
        }
        if report.label_divergence is not None:
            payload["label_divergence"] = report.label_divergence
        summary = f"{len(report.flagged)} of {len(report.values)} feature(s) above {report.threshold}"
        logger.info(f"Divergence check: {summary}")
        return StepResult(table=context.table, artifacts={"divergence.json": json_artifact(payload)},
                          summary=summary)
