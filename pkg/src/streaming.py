import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.config import MIN_SERIES_LENGTH, TS_FEATURES
from src.core import AnomalyReport, StrayConfig, StrayDetector
from src.detection.matrix import DataMatrix, as_matrix
from src.errors import ConfigError, DataValidationError, InsufficientDataError, StrayError, WindowError

logger = logging.getLogger(__name__)

Row = Union[Sequence[float], np.ndarray, float]


@dataclass(frozen=True)
class WindowSpec:
    width: int
    step: int

    def __post_init__(self) -> None:
        if self.width < 2:
            raise ConfigError(f"window width must be >= 2, got {self.width}")
        if not 1 <= self.step <= self.width:
            raise ConfigError(f"window step must lie in [1, width={self.width}], got {self.step}")

    def validate_for(self, config: StrayConfig) -> None:
        if self.width <= config.k:
            raise ConfigError(f"window width {self.width} must exceed k={config.k}")


@dataclass(frozen=True, eq=False)
class WindowReport:
    """Report of one window; rows holds the global index of each window row."""
    window_id: int
    start: int
    end: int
    report: AnomalyReport

    @property
    def rows(self) -> np.ndarray:
        return np.arange(self.start, self.end)

    def flagged_global(self) -> np.ndarray:
        return self.start + self.report.outlier_rows()


@dataclass(frozen=True, eq=False)
class SeriesCollection:
    """n equal-length series, one per row."""
    values: np.ndarray
    ids: List[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        arr = as_matrix(self.values).values
        if arr.shape[1] < MIN_SERIES_LENGTH:
            raise InsufficientDataError(f"series length must be >= {MIN_SERIES_LENGTH}, got {arr.shape[1]}")
        ids = list(self.ids) or [f"series_{i}" for i in range(arr.shape[0])]
        if len(ids) != arr.shape[0]:
            raise DataValidationError(f"{len(ids)} ids for {arr.shape[0]} series")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def length(self) -> int:
        return int(self.values.shape[1])


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    values: np.ndarray
    names: Tuple[str, ...] = TS_FEATURES
    ids: List[str] = field(default_factory=list)

    def to_matrix(self) -> DataMatrix:
        return DataMatrix(self.values)


def sliding_windows(stream_length: int, spec: WindowSpec) -> List[Tuple[int, int]]:
    """
    [start, end) ranges of full windows every `step` rows. When the last of
    them stops short of the stream end, one more window ends exactly there,
    so every row is covered and no window is partial.
    """
    if stream_length < spec.width:
        raise InsufficientDataError(f"stream of length {stream_length} is shorter than window {spec.width}")
    ranges = [(s, s + spec.width) for s in range(0, stream_length - spec.width + 1, spec.step)]
    if ranges[-1][1] < stream_length:
        ranges.append((stream_length - spec.width, stream_length))
    return ranges


def _detect_window(detector: StrayDetector, window_id: int, start: int, block: np.ndarray) -> WindowReport:
    try:
        report = detector.detect(block)
    except StrayError as exc:
        raise WindowError(window_id, str(exc)) from exc
    logger.info("window %d [%d, %d): flagged=%d", window_id, start, start + len(block), report.n_flagged)
    return WindowReport(window_id=window_id, start=start, end=start + len(block), report=report)


def detect_stream(source: Union[DataMatrix, np.ndarray, Iterable[Row]], config: StrayConfig,
                  spec: WindowSpec, max_workers: int = 1) -> Iterator[WindowReport]:
    """
    Run the detector on every window of a stream; see sliding_windows.

    Windows are independent batches: each is unitized and thresholded on its
    own and reports are yielded in window order. An array source may be
    spread over `max_workers` threads; any other iterable is consumed lazily
    and a window is reported as soon as its last row arrives.
    """
    spec.validate_for(config)
    detector = StrayDetector(config)

    if isinstance(source, (DataMatrix, np.ndarray)):
        values = as_matrix(source).values
        ranges = sliding_windows(values.shape[0], spec)
        jobs = [(wid, s, values[s:e]) for wid, (s, e) in enumerate(ranges)]
        if max_workers > 1:
            with ThreadPoolExecutor(max_workers=max_workers) as pool:
                yield from pool.map(lambda job: _detect_window(detector, *job), jobs)
        else:
            for job in jobs:
                yield _detect_window(detector, *job)
        return

    buffer: deque = deque(maxlen=spec.width)
    seen = 0
    for row in source:
        buffer.append(np.atleast_1d(np.asarray(row, dtype=np.float64)))
        seen += 1
        if seen >= spec.width and (seen - spec.width) % spec.step == 0:
            start = seen - spec.width
            yield _detect_window(detector, start // spec.step, start, np.vstack(buffer))

    if seen < spec.width:
        raise InsufficientDataError(f"stream of length {seen} is shorter than window {spec.width}")
    # end-anchored tail window
    if (seen - spec.width) % spec.step:
        start = seen - spec.width
        yield _detect_window(detector, start // spec.step + 1, start, np.vstack(buffer))


def _acf1(centred: np.ndarray) -> np.ndarray:
    num = np.sum(centred[:, :-1] * centred[:, 1:], axis=1)
    den = np.sum(centred * centred, axis=1)
    out = np.zeros_like(den)
    np.divide(num, den, out=out, where=den > 0)
    return out


def _level_shift(values: np.ndarray, window: int) -> np.ndarray:
    csum = np.cumsum(np.pad(values, ((0, 0), (1, 0))), axis=1)
    means = (csum[:, window:] - csum[:, :-window]) / window
    return np.max(np.abs(means[:, window:] - means[:, :-window]), axis=1)


def ts_feature_matrix(collection: SeriesCollection) -> FeatureMatrix:
    """
    Seven features per series: mean, variance, lag-1 autocorrelation, OLS
    trend slope, spike (largest absolute step), level shift (largest jump
    between adjacent rolling means of width floor(w/4)) and lumpiness
    (variance of the first differences). ACF1 of a flat series is 0.
    """
    x = collection.values
    w = x.shape[1]
    t = np.arange(w, dtype=np.float64)
    t_centred = t - t.mean()

    mean = x.mean(axis=1)
    centred = x - mean[:, None]
    diffs = np.diff(x, axis=1)

    features = np.column_stack([
        mean,
        np.var(x, axis=1),
        _acf1(centred),
        centred @ t_centred / np.dot(t_centred, t_centred),
        np.max(np.abs(diffs), axis=1),
        _level_shift(x, max(w // 4, 1)),
        np.var(diffs, axis=1),
    ])
    return FeatureMatrix(values=features, names=TS_FEATURES, ids=list(collection.ids))


def detect_collection(collection: Union[SeriesCollection, FeatureMatrix],
                      config: Optional[StrayConfig] = None) -> AnomalyReport:
    """Score whole series against each other through their feature rows."""
    features = collection if isinstance(collection, FeatureMatrix) else ts_feature_matrix(collection)
    return StrayDetector(config).detect(features.to_matrix())
