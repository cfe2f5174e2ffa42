import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from src.config import DEFAULT_START_PROPORTION, DEFAULT_TAIL_COUNT, MIN_THRESHOLD_SAMPLE
from src.errors import ConfigError, DataValidationError, InsufficientDataError, SampleTooSmallError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ThresholdDecision:
    """
    Outcome of the bottom-up search over sorted scores.
    bound is None when no spacing exceeded its cut-off; then nothing is flagged.
    cutoff_rank is the 1-based rank of the first exceeding score.
    """
    bound: Optional[float]
    cutoff_rank: Optional[int]
    flags: np.ndarray
    log_alpha: float
    start: int
    window: int
    spacing_exceeded: Optional[float] = None
    expected: Optional[float] = None

    @property
    def found(self) -> bool:
        return self.bound is not None

    @property
    def outlier_bound(self) -> float:
        return math.inf if self.bound is None else self.bound


@dataclass(frozen=True, eq=False)
class SpacingDiagnostics:
    """Top order statistics X_(1) >= X_(2) >= ... of a sample and their spacings."""
    order_stats: np.ndarray
    spacings: np.ndarray
    standardized: np.ndarray


@dataclass(frozen=True)
class SpacingFit:
    statistic: float
    p_value: float
    pooled_mean: float
    rank_means: np.ndarray
    count: int

    def max_relative_deviation(self) -> float:
        """
        Smallest r such that every per-rank mean of i*D_i lies within a
        fraction r of one common constant.
        """
        hi, lo = float(self.rank_means.max()), float(self.rank_means.min())
        return (hi - lo) / (hi + lo) if hi + lo > 0 else 0.0


def _weights(n4: int) -> np.ndarray:
    j = np.arange(2, n4 + 1, dtype=np.float64)
    return j / (n4 - 1)


def expected_gap(gaps: Sequence[float], i: int, n4: int, include_candidate: bool = False) -> float:
    """
    Weighted estimate of the exponential mean spacing ahead of rank i.

    Ranks are 1-based: gaps[0] is g_1. The default uses g_(i-1) ... g_(i-n4+1),
    never the candidate gap g_i itself. include_candidate=True shifts the
    window up by one so g_i weighs into its own estimate.
    """
    g = np.asarray(gaps, dtype=np.float64)
    if n4 < 2:
        raise ConfigError(f"window count must be >= 2, got {n4}")

    shift = 1 if include_candidate else 0
    lowest = i - n4 + 1 + shift
    highest = i - 1 + shift
    if lowest < 1 or i > g.size or highest > g.size:
        raise InsufficientDataError(f"rank {i} with window {n4} is out of range for {g.size} gaps")

    # g_(i-j+1+shift) for j = 2..n4, i.e. descending from g_highest.
    window = g[lowest - 1:highest][::-1]
    return float(np.dot(_weights(n4), window))


def _check_params(alpha: float, p: float, tn: int) -> None:
    if not 0 < alpha < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0 < p < 1:
        raise ConfigError(f"start proportion must lie in (0, 1), got {p}")
    if tn < 2:
        raise ConfigError(f"tail count must be >= 2, got {tn}")


def bottom_up_threshold(scores: Sequence[float], alpha: float,
                        p: float = DEFAULT_START_PROPORTION,
                        tn: int = DEFAULT_TAIL_COUNT,
                        include_candidate: bool = False) -> ThresholdDecision:
    """
    Bottom-up search for the anomalous threshold.

    The lowest floor(n*p) scores seed the typical set. Walking upwards, each
    next spacing is tested against ln(1/alpha) times the exponential mean
    fitted to the spacings below it; the first exceedance ends the search and
    every score above the last typical one is flagged.
    """
    s_raw = np.asarray(scores, dtype=np.float64).ravel()
    n = s_raw.size
    _check_params(alpha, p, tn)
    if n < MIN_THRESHOLD_SAMPLE:
        raise SampleTooSmallError(
            f"sample too small for threshold estimation: n={n} < {MIN_THRESHOLD_SAMPLE}"
        )
    if not np.all(np.isfinite(s_raw)):
        raise DataValidationError("scores must be finite")

    s = np.sort(s_raw, kind="stable")
    gaps = np.diff(s, prepend=s[0])

    typical = int(math.floor(n * p))
    n4 = max(min(tn, typical), 2)
    # The estimator needs n4 - 1 gaps below the first candidate.
    start = max(typical + 1, n4)
    log_alpha = math.log(1.0 / alpha)

    for i in range(start, n + 1):
        ghat = expected_gap(gaps, i, n4, include_candidate=include_candidate)
        if gaps[i - 1] > log_alpha * ghat:
            bound = float(s[i - 2])
            flags = s_raw > bound
            logger.debug("threshold found at rank %d/%d: bound=%.6g, gap=%.6g, expected=%.6g",
                         i, n, bound, gaps[i - 1], ghat)
            return ThresholdDecision(bound=bound, cutoff_rank=i, flags=flags, log_alpha=log_alpha,
                                     start=start, window=n4, spacing_exceeded=float(gaps[i - 1]),
                                     expected=ghat)

    return ThresholdDecision(bound=None, cutoff_rank=None, flags=np.zeros(n, dtype=bool),
                             log_alpha=log_alpha, start=start, window=n4)


def standardized_spacings(sample: Sequence[float], kmax: int) -> SpacingDiagnostics:
    """
    Descending order statistics X_(1..kmax), spacings D_i = X_(i) - X_(i+1)
    and the standardised spacings i * D_i.
    """
    x = np.asarray(sample, dtype=np.float64).ravel()
    if kmax < 1:
        raise ConfigError(f"kmax must be >= 1, got {kmax}")
    if x.size <= kmax + 1:
        raise InsufficientDataError(f"need more than {kmax + 1} values for {kmax} spacings, got {x.size}")

    cut = x.size - kmax - 1
    top = np.sort(np.partition(x, cut)[cut:])[::-1]
    spacings = top[:-1] - top[1:]
    ranks = np.arange(1, kmax + 1, dtype=np.float64)
    return SpacingDiagnostics(order_stats=top[:-1].copy(), spacings=spacings, standardized=ranks * spacings)


def spacing_goodness_of_fit(diagnostics: Sequence[SpacingDiagnostics]) -> SpacingFit:
    """
    Pool i * D_i over replicates and test them against an exponential law
    whose mean is the pooled mean (Kolmogorov-Smirnov).
    """
    if not diagnostics:
        raise InsufficientDataError("no spacing diagnostics to pool")
    table = np.vstack([diag.standardized for diag in diagnostics])
    pooled = table.ravel()
    mean = float(pooled.mean())
    if mean <= 0:
        raise DataValidationError("standardised spacings are all zero; nothing to fit")

    result = stats.kstest(pooled, stats.expon(loc=0.0, scale=mean).cdf)
    return SpacingFit(statistic=float(result.statistic), p_value=float(result.pvalue),
                      pooled_mean=mean, rank_means=table.mean(axis=0), count=int(pooled.size))
