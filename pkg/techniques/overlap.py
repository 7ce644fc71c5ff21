"""Exact train/test overlap: is the test data really unseen?"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass

import pandas as pd

from config import LOGGER
from datasets import LabeledTable, is_numeric_column
from errors import TechniqueError
from techniques.base import StepContext, StepResult, Technique, json_artifact

logger = LOGGER(__name__)


@dataclass(frozen=True)
class OverlapReport:
    pairs: tuple  # (train index, test index), ascending
    fraction_test_overlapping: float
    n_train: int
    n_test: int

    @property
    def overlapping_test_indices(self) -> list:
        return sorted({j for _, j in self.pairs})


def _check_schema(first: LabeledTable, second: LabeledTable) -> None:
    if first.columns != second.columns or first.label_column != second.label_column:
        raise TechniqueError(
            f"schema mismatch: {list(first.columns)} (label {first.label_column}) vs "
            f"{list(second.columns)} (label {second.label_column})"
        )


def canonical_rows(train: LabeledTable, test: LabeledTable) -> tuple:
    """Serialize rows so equal content gives equal text.

    Text cells are trimmed; columns numeric in both tables are rendered at full
    float precision, so '1' and '1.0' agree.
    """
    _check_schema(train, test)
    combined = pd.concat([train.frame, test.frame], ignore_index=True)
    for column in combined.columns:
        cells = combined[column].str.strip()
        if column != train.label_column and is_numeric_column(cells):
            cells = pd.to_numeric(cells).map(lambda v: repr(float(v)))
        combined[column] = cells
    keys = [json.dumps(row, ensure_ascii=False) for row in combined.itertuples(index=False, name=None)]
    return keys[: train.n_rows], keys[train.n_rows:]


def detect_overlap(train: LabeledTable, test: LabeledTable) -> OverlapReport:
    """All (train, test) row pairs with identical canonical content, label included."""
    train_keys, test_keys = canonical_rows(train, test)
    seen = defaultdict(list)
    for i, key in enumerate(train_keys):
        seen[key].append(i)
    pairs = sorted((i, j) for j, key in enumerate(test_keys) for i in seen.get(key, ()))
    overlapping = len({j for _, j in pairs})
    return OverlapReport(
        pairs=tuple(pairs),
        fraction_test_overlapping=overlapping / len(test_keys),
        n_train=len(train_keys),
        n_test=len(test_keys),
    )


class OverlapCheck(Technique):
    """Registry key ``overlap_check``; the reference table is the training data."""

    registry_key = "overlap_check"

    def __init__(self, max_fraction: float = 0.0):
        self.max_fraction = max_fraction

    def apply(self, context: StepContext) -> StepResult:
        report = detect_overlap(context.reference(), context.table)
        passed = report.fraction_test_overlapping <= float(self.max_fraction)
        payload = {
            "n_train": report.n_train,
            "n_test": report.n_test,
            "pairs": [list(pair) for pair in report.pairs],
            "fraction_test_overlapping": report.fraction_test_overlapping,
            "max_fraction": float(self.max_fraction),
            "within_limit": passed,
        }
        summary = (
            f"{len(report.overlapping_test_indices)} of {report.n_test} test rows also occur in training data"
        )
        logger.info(f"Overlap check: {summary}")
        return StepResult(table=context.table, artifacts={"overlap.json": json_artifact(payload)}, summary=summary)
