"""Training-matrix container shared by every classifier."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError


@dataclass(frozen=True)
class DesignMatrix:
    """Finite (n, d) feature matrix with unique, ordered column names."""

    values: np.ndarray
    columns: tuple[str, ...]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise InvalidInputError(f"design matrix must be 2-D, got shape {values.shape}")
        if not np.isfinite(values).all():
            raise InvalidInputError("design matrix contains non-finite values")
        columns = tuple(str(c) for c in self.columns)
        if len(columns) != values.shape[1]:
            raise InvalidInputError(
                f"{len(columns)} column names for {values.shape[1]} columns"
            )
        if len(set(columns)) != len(columns):
            raise InvalidInputError("column names must be unique")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "columns", columns)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


def check_labels(y: np.ndarray, n: int) -> np.ndarray:
    """Validate binary {0,1} labels with both classes present."""
    y = np.asarray(y)
    if y.shape != (n,):
        raise InvalidInputError(f"labels must have shape ({n},), got {y.shape}")
    if not np.isin(y, (0, 1)).all():
        raise InvalidInputError("labels must be 0 or 1")
    y = y.astype(np.int64)
    if y.min() == y.max():
        raise InvalidInputError("training labels contain a single class")
    return y
