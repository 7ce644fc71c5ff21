"""Label-fault detection with confident learning.

Variant used here:

* threshold t[j] is the mean predicted probability of class j over the rows
  labeled j;
* a row is confidently assigned the highest-probability class among those
  reaching their threshold (ties go to the lowest class index); rows with no
  such class are not counted;
* label issues are the rows whose confident class differs from their label,
  i.e. exactly the off-diagonal mass of the confident joint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from config import LOGGER
from datasets import PredictionMatrix
from errors import TechniqueError
from techniques.base import StepContext, StepResult, Technique, frame_to_csv, json_artifact, matrix_csv

logger = LOGGER(__name__)


@dataclass(frozen=True)
class ClassThresholds:
    values: tuple

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True, eq=False)
class ConfidentJoint:
    counts: np.ndarray
    uncounted: int

    @property
    def off_diagonal(self) -> int:
        return int(self.counts.sum() - np.trace(self.counts))


@dataclass(frozen=True)
class LabelIssue:
    index: int
    given_label: int
    suggested_label: int
    confidence: float


@dataclass(frozen=True)
class LabelIssueReport:
    entries: tuple  # most confident first

    @property
    def indices(self) -> list:
        return sorted(issue.index for issue in self.entries)

    def __len__(self):
        return len(self.entries)


def _validate(labels, probs):
    if isinstance(probs, PredictionMatrix):
        probs = probs.probabilities
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels)
    if probs.ndim != 2:
        raise TechniqueError("probabilities must be a 2-d n x K matrix")
    n, k = probs.shape
    if labels.shape != (n,):
        raise TechniqueError(f"{labels.shape[0] if labels.ndim else 0} labels for {n} probability rows")
    if not np.issubdtype(labels.dtype, np.integer) or (n and (labels.min() < 0 or labels.max() >= k)):
        raise TechniqueError(f"labels must be class indices in [0, {k})")
    counts = np.bincount(labels, minlength=k)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise TechniqueError(f"class index {int(empty[0])} has no labeled rows")
    return labels.astype(np.int64), probs


def class_thresholds(labels, probs) -> ClassThresholds:
    """Per-class mean self-confidence."""
    labels, probs = _validate(labels, probs)
    k = probs.shape[1]
    return ClassThresholds(values=tuple(float(probs[labels == j, j].mean()) for j in range(k)))


def _confident_classes(labels, probs):
    """Confident class per row, -1 where no class reaches its threshold."""
    thresholds = np.array(class_thresholds(labels, probs).values)
    above = probs >= thresholds[np.newaxis, :]
    masked = np.where(above, probs, -np.inf)
    assigned = np.argmax(masked, axis=1)
    assigned[~above.any(axis=1)] = -1
    return assigned


def compute_confident_joint(labels, probs) -> ConfidentJoint:
    """Count rows labeled i that are confidently class j."""
    labels, probs = _validate(labels, probs)
    k = probs.shape[1]
    assigned = _confident_classes(labels, probs)
    counted = assigned >= 0
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (labels[counted], assigned[counted]), 1)
    return ConfidentJoint(counts=counts, uncounted=int((~counted).sum()))


def find_label_issues(labels, probs) -> LabelIssueReport:
    """Rows that land off the diagonal of the confident joint."""
    labels, probs = _validate(labels, probs)
    assigned = _confident_classes(labels, probs)
    rows = np.flatnonzero((assigned >= 0) & (assigned != labels))
    entries = [
        LabelIssue(
            index=int(r),
            given_label=int(labels[r]),
            suggested_label=int(assigned[r]),
            confidence=float(probs[r, assigned[r]]),
        )
        for r in rows
    ]
    entries.sort(key=lambda issue: (-issue.confidence, issue.index))
    return LabelIssueReport(entries=tuple(entries))


class ConfidentLearning(Technique):
    """Registry key ``confident_learning``.

    ``candidate_label`` narrows an extra candidates table to rows whose given
    label is that class (e.g. unlabeled stop signs hiding in 'not_stop').
    """

    registry_key = "confident_learning"

    def __init__(self, candidate_label: Optional[str] = None):
        self.candidate_label = candidate_label

    def fit(self, probs, labels):
        self.thresholds_ = class_thresholds(labels, probs)
        self.confident_joint_ = compute_confident_joint(labels, probs)
        self.label_issues_ = find_label_issues(labels, probs)
        return self

    def apply(self, context: StepContext) -> StepResult:
        table = context.table
        names = table.class_names
        if self.candidate_label is not None and self.candidate_label not in names:
            raise TechniqueError(f"candidate_label {self.candidate_label!r} is not a class of the table")
        self.fit(context.predictions(), table.label_indices)
        joint = self.confident_joint_
        artifacts = {
            "confident_joint.csv": matrix_csv(
                "",
                [f"Original label: '{name}'" for name in names],
                [f"CL-Label: '{name}'" for name in names],
                joint.counts,
            ),
            "class_thresholds.json": json_artifact(
                {name: value for name, value in zip(names, self.thresholds_.values)}
            ),
            "label_issues.csv": self._issues_csv(self.label_issues_.entries, names),
        }
        if self.candidate_label is not None:
            chosen = [e for e in self.label_issues_.entries if names[e.given_label] == self.candidate_label]
            artifacts["label_fault_candidates.csv"] = self._issues_csv(chosen, names)
        summary = (
            f"{len(self.label_issues_)} label issue(s); {joint.uncounted} row(s) without a confident class"
        )
        logger.info(f"Confident learning on {table.n_rows} rows: {summary}")
        return StepResult(table=table, artifacts=artifacts, summary=summary)

    @staticmethod
    def _issues_csv(entries, names) -> str:
        frame = pd.DataFrame(
            [[e.index, names[e.given_label], names[e.suggested_label], f"{e.confidence:.6f}"] for e in entries],
            columns=["Index", "Original label", "CL-Label", "Confidence"],
        )
        return frame_to_csv(frame)
