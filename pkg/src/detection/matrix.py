from dataclasses import dataclass
from typing import Any, Union

import numpy as np

from src.errors import DataValidationError

ArrayLike = Union["DataMatrix", np.ndarray, Any]


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """
    n observations x d numeric attributes. Rows are observations.
    A 1-D input becomes a single-column matrix; the values are copied,
    cast to float64 and checked for finiteness on construction.
    """
    values: np.ndarray

    def __post_init__(self) -> None:
        try:
            arr = np.array(self.values, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise DataValidationError(f"data is not a rectangular numeric grid: {exc}") from exc

        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise DataValidationError(f"expected a 2-D grid, got {arr.ndim} dimensions")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataValidationError(f"empty data matrix with shape {arr.shape}")

        bad = ~np.isfinite(arr)
        if bad.any():
            row, col = (int(v) for v in np.argwhere(bad)[0])
            raise DataValidationError(
                f"non-finite entry at row {row}, column {col}", row=row, column=col
            )

        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def d(self) -> int:
        return int(self.values.shape[1])

    def __array__(self, dtype=None, copy=None) -> np.ndarray:
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    def __len__(self) -> int:
        return self.n

    def take(self, rows: np.ndarray) -> "DataMatrix":
        """Sub-matrix of the given rows, in the given order."""
        return DataMatrix(self.values[np.asarray(rows, dtype=np.intp)])


def as_matrix(data: ArrayLike) -> DataMatrix:
    if isinstance(data, DataMatrix):
        return data
    return DataMatrix(data)
