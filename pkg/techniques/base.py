from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import ClassVar, Optional

import pandas as pd
from sklearn.base import BaseEstimator

from datasets import LabeledTable, PredictionMatrix, load_labeled_table, load_prediction_matrix
from errors import TechniqueError
from helper_func import canonical_json


@dataclass
class StepContext:
    """What a blueprint step can see while a realization runs."""

    table: LabeledTable
    probabilities_path: Optional[Path] = None
    reference_path: Optional[Path] = None
    workers: int = 1
    _predictions: Optional[PredictionMatrix] = field(default=None, repr=False)
    _reference: Optional[LabeledTable] = field(default=None, repr=False)

    def predictions(self) -> PredictionMatrix:
        # loaded against the table as prepared by earlier steps
        if self._predictions is None or self._predictions.class_names != self.table.class_names:
            if self.probabilities_path is None:
                raise TechniqueError("this step needs prediction probabilities (--probs)")
            self._predictions = load_prediction_matrix(self.probabilities_path, self.table)
        return self._predictions

    def reference(self) -> LabeledTable:
        if self._reference is None:
            if self.reference_path is None:
                raise TechniqueError("this step needs a reference table (--reference)")
            self._reference = load_labeled_table(
                self.reference_path, self.table.label_column, f"{self.table.data_version}-reference"
            )
        return self._reference


@dataclass
class StepResult:
    table: LabeledTable
    artifacts: dict = field(default_factory=dict)
    summary: str = ""


class Technique(BaseEstimator):
    """Base for registered techniques.

    Parameters are constructor arguments, so get_params/set_params give the
    parameter contract; `apply` runs the technique inside a realization.
    """

    registry_key: ClassVar[str] = ""

    def apply(self, context: StepContext) -> StepResult:
        raise NotImplementedError


def frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, lineterminator="\n")


def matrix_csv(corner: str, row_labels, column_labels, values) -> str:
    rows = [[label] + [int(v) for v in row] for label, row in zip(row_labels, values)]
    return frame_to_csv(pd.DataFrame(rows, columns=[corner] + list(column_labels)))


def json_artifact(payload) -> str:
    return canonical_json(payload)
