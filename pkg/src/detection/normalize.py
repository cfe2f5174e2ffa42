from dataclasses import dataclass

import numpy as np

from src.detection.matrix import ArrayLike, DataMatrix, as_matrix


@dataclass(frozen=True)
class ColumnRange:
    min: float
    max: float

    @property
    def span(self) -> float:
        return self.max - self.min


def column_ranges(data: ArrayLike) -> list[ColumnRange]:
    values = as_matrix(data).values
    return [ColumnRange(float(lo), float(hi)) for lo, hi in zip(values.min(axis=0), values.max(axis=0))]


def unitize(data: ArrayLike) -> DataMatrix:
    """
    Column-wise min-max normalisation onto the unit hypercube.
    Constant columns carry no distance information and map to zeros.
    """
    values = as_matrix(data).values
    lo = values.min(axis=0)
    span = values.max(axis=0) - lo
    constant = span == 0

    safe_span = np.where(constant, 1.0, span)
    out = (values - lo) / safe_span
    out[:, constant] = 0.0

    # keep rounding inside [0, 1]
    np.clip(out, 0.0, 1.0, out=out)
    return DataMatrix(out)
