"""Rows emitted by parameter sweeps."""
from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class StudyRecord:
    """One row of a sweep: which study, which parameter moved, and named results.

    ``columns`` is insertion-ordered; every row of a study carries the same keys.
    Infinite values are allowed and are serialized explicitly by the writers.
    """

    study: str
    swept_name: str
    swept_value: float
    columns: dict[str, float] = field(default_factory=dict)

    def __getitem__(self, key):
        return self.columns[key]

    def is_finite(self) -> bool:
        return all(isinstance(v, str) or math.isfinite(v) for v in self.columns.values())
