from __future__ import annotations

from typing import Optional

from config import LOGGER
from datasets import collapse_classes
from techniques.base import StepContext, StepResult, Technique, json_artifact

logger = LOGGER(__name__)


class CollapseClasses(Technique):
    """Registry key ``collapse_classes``: keep one class, merge every other into ``other_name``.

    Without ``keep`` the table passes through unchanged.
    """

    registry_key = "collapse_classes"

    def __init__(self, keep: Optional[str] = None, other_name: str = "other"):
        self.keep = keep
        self.other_name = other_name

    def apply(self, context: StepContext) -> StepResult:
        table = context.table
        if self.keep:
            table = collapse_classes(table, str(self.keep), str(self.other_name))
            summary = f"labels collapsed to {', '.join(table.class_names)}"
        else:
            summary = f"labels kept as loaded ({len(table.class_names)} classes)"
        counts = {name: int((table.labels == name).sum()) for name in table.class_names}
        logger.info(f"Prepared {table.n_rows} rows: {summary}")
        return StepResult(table=table, artifacts={"class_counts.json": json_artifact(counts)}, summary=summary)
