import logging
import time
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
import pandas as pd

from src.config import (
    DEFAULT_ALPHA, DEFAULT_EPS, DEFAULT_K, DEFAULT_NORMALIZE, DEFAULT_SEARCH_METHOD,
    DEFAULT_START_PROPORTION, DEFAULT_TAIL_COUNT, MIN_THRESHOLD_SAMPLE,
    NORMALIZE_METHODS, SEARCH_METHODS,
)
from src.detection.matrix import ArrayLike, DataMatrix, as_matrix
from src.detection.neighbors import KnnResult, knn
from src.detection.normalize import unitize
from src.detection.scoring import max_gap_scores
from src.detection.threshold import ThresholdDecision, bottom_up_threshold
from src.errors import ConfigError, InsufficientDataError, SampleTooSmallError

logger = logging.getLogger(__name__)

SearchMethod = Literal["brute", "kdtree"]
NormalizeMethod = Literal["unitize", "none"]

__all__ = ["DataMatrix", "StrayConfig", "AnomalyReport", "StrayDetector", "detect"]


@dataclass(frozen=True)
class StrayConfig:
    """Detection parameters. Range checks run on construction; k against n at detection time."""
    k: int = DEFAULT_K
    alpha: float = DEFAULT_ALPHA
    search_method: SearchMethod = DEFAULT_SEARCH_METHOD
    normalize: NormalizeMethod = DEFAULT_NORMALIZE
    start_proportion: float = DEFAULT_START_PROPORTION
    tail_count: int = DEFAULT_TAIL_COUNT
    eps: float = DEFAULT_EPS
    gap_from_origin: bool = True

    def __post_init__(self) -> None:
        if int(self.k) != self.k or self.k < 1:
            raise ConfigError(f"k must be an integer >= 1, got {self.k}")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.search_method not in SEARCH_METHODS:
            raise ConfigError(f"search method must be one of {SEARCH_METHODS}, got {self.search_method!r}")
        if self.normalize not in NORMALIZE_METHODS:
            raise ConfigError(f"normalize must be one of {NORMALIZE_METHODS}, got {self.normalize!r}")
        if not 0 < self.start_proportion < 1:
            raise ConfigError(f"start proportion must lie in (0, 1), got {self.start_proportion}")
        if int(self.tail_count) != self.tail_count or self.tail_count < 2:
            raise ConfigError(f"tail count must be an integer >= 2, got {self.tail_count}")
        if self.eps < 0:
            raise ConfigError(f"eps must be >= 0, got {self.eps}")

    def validate_for(self, n: int) -> None:
        if n <= self.k:
            raise InsufficientDataError(f"too few observations for k: n={n}, k={self.k}")
        if n < MIN_THRESHOLD_SAMPLE:
            raise SampleTooSmallError(
                f"sample too small for threshold estimation: n={n} < {MIN_THRESHOLD_SAMPLE}"
            )


@dataclass(frozen=True, eq=False)
class AnomalyReport:
    """
    Scores, binary flags and the threshold that separates them.
    threshold is None when the search found no exceeding spacing.
    """
    scores: np.ndarray
    flags: np.ndarray
    threshold: Optional[float]
    gap_index: np.ndarray
    config: StrayConfig = field(default_factory=StrayConfig)
    knn: Optional[KnnResult] = None
    decision: Optional[ThresholdDecision] = None

    @property
    def n(self) -> int:
        return int(self.scores.shape[0])

    @property
    def n_flagged(self) -> int:
        return int(self.flags.sum())

    def outlier_rows(self) -> np.ndarray:
        return np.flatnonzero(self.flags)

    def to_frame(self, row_ids: Optional[np.ndarray] = None) -> pd.DataFrame:
        rows = np.arange(self.n) if row_ids is None else np.asarray(row_ids)
        return pd.DataFrame({
            "row_id": rows,
            "score": self.scores,
            "gap_index": self.gap_index,
            "flag": self.flags,
        })

    def header(self) -> dict:
        return {
            "threshold": self.threshold,
            "k": self.config.k,
            "alpha": self.config.alpha,
            "method": self.config.search_method,
            "n": self.n,
            "flagged": self.n_flagged,
        }


class StrayDetector:
    """
    Detection kernel: unitize -> k-NN distances -> max-gap scores -> bottom-up
    threshold. Holds only its configuration, so one instance may serve many
    threads.
    """
    def __init__(self, config: Optional[StrayConfig] = None) -> None:
        self.config = config or StrayConfig()

    def prepare(self, data: ArrayLike) -> DataMatrix:
        matrix = as_matrix(data)
        self.config.validate_for(matrix.n)
        if self.config.normalize == "unitize":
            return unitize(matrix)
        return matrix

    def detect(self, data: ArrayLike) -> AnomalyReport:
        cfg = self.config
        started = time.perf_counter()

        # 1. Validation & Scaling
        matrix = self.prepare(data)

        # 2. Neighbourhoods
        neighbours = knn(matrix, cfg.k, method=cfg.search_method, eps=cfg.eps)

        # 3. Scores
        score_set = max_gap_scores(neighbours, include_origin=cfg.gap_from_origin)

        # 4. Threshold
        decision = bottom_up_threshold(score_set.scores, cfg.alpha, p=cfg.start_proportion, tn=cfg.tail_count)

        report = AnomalyReport(
            scores=score_set.scores,
            flags=decision.flags,
            threshold=decision.bound,
            gap_index=score_set.gap_index,
            config=cfg,
            knn=neighbours,
            decision=decision,
        )
        logger.info("detect n=%d d=%d k=%d method=%s flagged=%d threshold=%s (%.3fs)",
                    matrix.n, matrix.d, cfg.k, cfg.search_method, report.n_flagged,
                    "none" if report.threshold is None else f"{report.threshold:.6g}",
                    time.perf_counter() - started)
        return report


def detect(data: ArrayLike, config: Optional[StrayConfig] = None) -> AnomalyReport:
    return StrayDetector(config).detect(data)
