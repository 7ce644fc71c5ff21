"""Technique registry.

Every technique is a scikit-learn style estimator: its parameters are its
constructor arguments and `set_params` rejects anything else.
"""

from __future__ import annotations

import inspect
import typing
from dataclasses import dataclass, field
from typing import Optional

from errors import TechniqueError
from techniques.base import StepContext, StepResult, Technique
from techniques.confident_learning import (
    ClassThresholds,
    ConfidentJoint,
    ConfidentLearning,
    LabelIssue,
    LabelIssueReport,
    class_thresholds,
    compute_confident_joint,
    find_label_issues,
)
from techniques.divergence import DivergenceCheck, DivergenceReport, jensen_shannon, representativity_report
from techniques.isolation_forest import (
    IsolationForestModel,
    IsolationForestTechnique,
    average_path_length,
    isolation_forest_fit,
    isolation_forest_score,
)
from techniques.overlap import OverlapCheck, OverlapReport, detect_overlap
from techniques.preparation import CollapseClasses

REGISTRY = {
    cls.registry_key: cls
    for cls in (ConfidentLearning, IsolationForestTechnique, OverlapCheck, DivergenceCheck, CollapseClasses)
}

_SCALARS = (bool, int, float, str, type(None))


@dataclass(frozen=True)
class TechniqueSpec:
    name: str
    parameters: dict = field(default_factory=dict)
    seed: Optional[int] = None


def accepted_parameters(name: str) -> tuple:
    cls = _lookup(name)
    return tuple(sorted(cls().get_params(deep=False)))


def _lookup(name: str):
    try:
        return REGISTRY[name]
    except KeyError:
        raise TechniqueError(f"unknown technique {name!r}; registered: {', '.join(sorted(REGISTRY))}")


def _conform(technique: str, key: str, value, hint):
    """Fit a parameter value to the constructor annotation, or refuse it."""
    options = typing.get_args(hint) or (hint,)
    if value is None:
        if type(None) in options:
            return None
        raise TechniqueError(f"{technique}: parameter {key} must not be empty")
    expected = next((t for t in options if t is not type(None)), None)
    if expected is bool and isinstance(value, bool):
        return value
    if expected is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if expected is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if expected is str and isinstance(value, (str, int, float)) and not isinstance(value, bool):
        return str(value)
    if expected not in (bool, int, float, str):
        return value
    raise TechniqueError(f"{technique}: parameter {key} expects {expected.__name__}, got {value!r}")


def build_technique(spec: TechniqueSpec) -> Technique:
    """Instantiate a registered technique with the given parameters."""
    cls = _lookup(spec.name)
    hints = typing.get_type_hints(cls.__init__)
    parameters = {}
    for key, value in spec.parameters.items():
        if not isinstance(value, _SCALARS):
            raise TechniqueError(f"{spec.name}: parameter {key} must be a number, text or flag")
        parameters[key] = _conform(spec.name, key, value, hints[key]) if key in hints else value
    technique = cls()
    try:
        technique.set_params(**parameters)
    except ValueError as e:
        raise TechniqueError(f"{spec.name}: {e}")
    if spec.seed is not None and "seed" in inspect.signature(cls.__init__).parameters:
        if technique.get_params(deep=False).get("seed") is None:
            technique.set_params(seed=int(spec.seed))
    return technique


__all__ = [
    "REGISTRY",
    "TechniqueSpec",
    "accepted_parameters",
    "build_technique",
    "StepContext",
    "StepResult",
    "Technique",
    "ClassThresholds",
    "ConfidentJoint",
    "LabelIssue",
    "LabelIssueReport",
    "class_thresholds",
    "compute_confident_joint",
    "find_label_issues",
    "IsolationForestModel",
    "average_path_length",
    "isolation_forest_fit",
    "isolation_forest_score",
    "OverlapReport",
    "detect_overlap",
    "DivergenceReport",
    "jensen_shannon",
    "representativity_report",
]
