"""Ingestion of labeled tables and prediction-probability matrices."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from config import LOGGER
from errors import DatasetError

logger = LOGGER(__name__)

ROW_SUM_TOLERANCE = 1e-6


def is_numeric_column(values: pd.Series) -> bool:
    if values.empty:
        return False
    converted = pd.to_numeric(values.str.strip(), errors="coerce")
    return bool(converted.notna().all())


@dataclass(frozen=True)
class LabeledTable:
    """Rows of text cells with one categorical label column.

    Cells are kept as the text read from the file so rows can be compared
    exactly; numeric views are derived on demand.
    """

    frame: pd.DataFrame = field(repr=False, compare=False)
    label_column: str
    class_names: tuple
    data_version: str

    @property
    def columns(self) -> tuple:
        return tuple(self.frame.columns)

    @property
    def n_rows(self) -> int:
        return len(self.frame)

    @property
    def feature_columns(self) -> tuple:
        return tuple(c for c in self.frame.columns if c != self.label_column)

    @property
    def labels(self) -> np.ndarray:
        return self.frame[self.label_column].to_numpy(dtype=object)

    @property
    def label_indices(self) -> np.ndarray:
        """Labels as positions in class_names."""
        position = {name: i for i, name in enumerate(self.class_names)}
        return np.array([position[label] for label in self.labels], dtype=np.int64)

    def numeric_columns(self) -> tuple:
        return tuple(c for c in self.feature_columns if is_numeric_column(self.frame[c]))

    def feature_matrix(self, columns: Optional[Sequence[str]] = None) -> np.ndarray:
        """Float matrix of the given (default: all feature) columns; all must be numeric."""
        columns = list(columns) if columns is not None else list(self.feature_columns)
        if not columns:
            raise DatasetError("table has no feature columns")
        bad = [c for c in columns if c not in self.frame.columns or not is_numeric_column(self.frame[c])]
        if bad:
            raise DatasetError(f"non-numeric or missing feature column(s): {', '.join(bad)}")
        return self.frame[columns].apply(lambda s: pd.to_numeric(s.str.strip())).to_numpy(dtype=float)

    def with_labels(self, labels, class_names) -> "LabeledTable":
        frame = self.frame.copy()
        frame[self.label_column] = list(labels)
        return LabeledTable(frame=frame, label_column=self.label_column,
                            class_names=tuple(class_names), data_version=self.data_version)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledTable):
            return NotImplemented
        return (
            self.label_column == other.label_column
            and self.class_names == other.class_names
            and self.data_version == other.data_version
            and self.frame.equals(other.frame)
        )


@dataclass(frozen=True, eq=False)
class PredictionMatrix:
    """Per-row class probabilities, columns in the table's class order."""

    probabilities: np.ndarray = field(repr=False)
    class_names: tuple

    @property
    def shape(self) -> tuple:
        return self.probabilities.shape


# ---------------- LOADING ---------------- #

def _read_csv(path: Union[str, Path]) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"file not found: {path}")
    with path.open(newline="", encoding="utf-8") as handle:
        widths = {len(row) for row in csv.reader(handle) if row}
    if len(widths) > 1:
        raise DatasetError(f"{path} has ragged rows (field counts {sorted(widths)})")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise DatasetError(f"{path} is empty")
    except pd.errors.ParserError as e:
        raise DatasetError(f"{path} has ragged rows: {e}")
    if frame.isna().any().any():
        raise DatasetError(f"{path} has ragged rows (missing fields)")
    if len(set(frame.columns)) != len(frame.columns) or any(str(c).startswith("Unnamed:") for c in frame.columns):
        raise DatasetError(f"{path} needs a header row with unique, non-empty column names")
    return frame


def load_labeled_table(path: Union[str, Path], label_column: str, data_version: str) -> LabeledTable:
    """Read a CSV with a header row; class names are the sorted distinct labels."""
    frame = _read_csv(path)
    if label_column not in frame.columns:
        raise DatasetError(f"{path} has no label column {label_column!r}")
    if frame.empty:
        raise DatasetError(f"{path} has no data rows")
    frame[label_column] = frame[label_column].str.strip()
    class_names = tuple(sorted(frame[label_column].unique()))
    logger.info(f"Loaded {len(frame)} rows, {len(class_names)} classes from {path} ({data_version})")
    return LabeledTable(frame=frame.reset_index(drop=True), label_column=label_column,
                        class_names=class_names, data_version=data_version)


def collapse_classes(table: LabeledTable, keep: str, other_name: str) -> LabeledTable:
    """Relabel every class except `keep` as `other_name`."""
    if keep not in table.class_names:
        raise DatasetError(f"class {keep!r} does not occur in the table")
    if other_name == keep:
        raise DatasetError("the collapsed class name must differ from the kept class")
    labels = [label if label == keep else other_name for label in table.labels]
    return table.with_labels(labels, sorted({keep, other_name}))


def load_prediction_matrix(path: Union[str, Path], table: LabeledTable) -> PredictionMatrix:
    """Read per-class probabilities aligned with `table`.

    Columns follow the sorted class order; a header naming exactly the class
    names in another order is reordered.
    """
    frame = _read_csv(path)
    k = len(table.class_names)
    if frame.shape[1] != k:
        raise DatasetError(f"{path} has {frame.shape[1]} columns, table has {k} classes")
    if len(frame) != table.n_rows:
        raise DatasetError(f"{path} has {len(frame)} rows, table has {table.n_rows}")
    if set(frame.columns) == set(table.class_names):
        frame = frame[list(table.class_names)]
    try:
        probs = frame.apply(lambda s: pd.to_numeric(s.str.strip())).to_numpy(dtype=float)
    except (ValueError, TypeError) as e:
        raise DatasetError(f"{path} holds non-numeric probabilities: {e}")
    return validate_probabilities(probs, table.class_names)


def validate_probabilities(probs, class_names) -> PredictionMatrix:
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 2 or probs.shape[1] != len(class_names):
        raise DatasetError(f"probabilities must be n x {len(class_names)}, got {probs.shape}")
    if not np.isfinite(probs).all() or probs.min() < 0.0 or probs.max() > 1.0:
        raise DatasetError("probabilities must lie in [0, 1]")
    off = np.abs(probs.sum(axis=1) - 1.0)
    bad = np.flatnonzero(off > ROW_SUM_TOLERANCE)
    if bad.size:
        raise DatasetError(
            f"row {int(bad[0])} sums to {probs[bad[0]].sum():.9f}; rows must sum to 1 within {ROW_SUM_TOLERANCE}"
        )
    probs.setflags(write=False)
    return PredictionMatrix(probabilities=probs, class_names=tuple(class_names))


def table_from_records(columns: Sequence[str], rows: Sequence[Sequence], label_column: str,
                       data_version: str = "inline") -> LabeledTable:
    """Build a table from in-memory rows; cells are stored as text."""
    frame = pd.DataFrame([[str(cell) for cell in row] for row in rows], columns=list(columns), dtype=str)
    if label_column not in frame.columns:
        raise DatasetError(f"no label column {label_column!r}")
    if frame.empty:
        raise DatasetError("table has no rows")
    return LabeledTable(frame=frame, label_column=label_column,
                        class_names=tuple(sorted(frame[label_column].unique())), data_version=data_version)
