"""
HDoutliers, kept as the comparison subject for the stray detector.

Version 1 scores every row by its nearest-neighbour distance. Version 2 first
groups rows with the one-pass Leader algorithm, scores only the exemplars and
flags whole clusters. Both share the bottom-up threshold; the original's
off-by-one, where the spacing under test feeds its own cut-off, is available
through flawed_threshold.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from src.config import (
    BASELINE_ALPHA, DEFAULT_START_PROPORTION, DEFAULT_TAIL_COUNT, LEADER_RADIUS_SCALE,
    MIN_EXEMPLARS, MIN_THRESHOLD_SAMPLE,
)
from src.detection.matrix import ArrayLike, as_matrix
from src.detection.neighbors import euclidean_distances, knn_exact
from src.detection.normalize import unitize
from src.detection.threshold import ThresholdDecision, bottom_up_threshold
from src.errors import ConfigError, InsufficientDataError, SampleTooSmallError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ClusterModel:
    """Leader exemplars (row ids, in creation order) and each row's exemplar."""
    exemplar_rows: np.ndarray
    membership: np.ndarray
    radius: float

    @property
    def n_clusters(self) -> int:
        return int(self.exemplar_rows.size)

    def members(self, exemplar: int) -> np.ndarray:
        return np.flatnonzero(self.membership == exemplar)


@dataclass(frozen=True, eq=False)
class HDOutliersResult:
    flags: np.ndarray
    scored_rows: np.ndarray
    scores: np.ndarray
    decision: Optional[ThresholdDecision]
    clusters: Optional[ClusterModel] = None
    warnings: List[str] = field(default_factory=list)

    @property
    def n_flagged(self) -> int:
        return int(self.flags.sum())


def default_radius(n: int, d: int) -> float:
    """0.1 / (ln n)^(1/d): well below typical pair distances in the unit hypercube."""
    if n < 2:
        raise InsufficientDataError(f"radius needs n >= 2, got {n}")
    if d < 1:
        raise ConfigError(f"dimension must be >= 1, got {d}")
    return LEADER_RADIUS_SCALE / math.log(n) ** (1.0 / d)


def leader_clusters(data: ArrayLike, radius: float) -> ClusterModel:
    """
    One pass in row order: a row joins the first exemplar within `radius`,
    otherwise it founds a new cluster. Order-dependent by construction.
    """
    if not radius > 0:
        raise ConfigError(f"radius must be > 0, got {radius}")
    values = as_matrix(data).values
    n = values.shape[0]

    exemplars = np.empty(n, dtype=np.intp)
    centres = np.empty_like(values)
    count = 0
    membership = np.empty(n, dtype=np.intp)

    for i in range(n):
        if count:
            dist = euclidean_distances(values[i:i + 1], centres[:count])[0]
            inside = np.flatnonzero(dist <= radius)
            if inside.size:
                membership[i] = exemplars[inside[0]]
                continue
        exemplars[count] = i
        centres[count] = values[i]
        membership[i] = i
        count += 1

    return ClusterModel(exemplar_rows=exemplars[:count].copy(), membership=membership, radius=float(radius))


def hdoutliers_detect(data: ArrayLike, alpha: float = BASELINE_ALPHA, use_clustering: bool = False,
                      flawed_threshold: bool = True, radius: Optional[float] = None,
                      p: float = DEFAULT_START_PROPORTION, tn: int = DEFAULT_TAIL_COUNT) -> HDOutliersResult:
    """
    HDoutliers on unitized data.

    use_clustering=False scores all rows (version 1); True scores Leader
    exemplars only and spreads each exemplar's flag over its cluster
    (version 2). Fewer than 10 exemplars leaves the threshold unstable: the
    result then carries a warning and flags nothing.
    """
    matrix = as_matrix(data)
    n = matrix.n
    if n < MIN_THRESHOLD_SAMPLE:
        raise SampleTooSmallError(f"sample too small for threshold estimation: n={n} < {MIN_THRESHOLD_SAMPLE}")
    unit = unitize(matrix)

    if not use_clustering:
        scores = knn_exact(unit, 1).distances[:, 0]
        decision = bottom_up_threshold(scores, alpha, p=p, tn=tn, include_candidate=flawed_threshold)
        return HDOutliersResult(flags=decision.flags, scored_rows=np.arange(n), scores=scores, decision=decision)

    clusters = leader_clusters(unit, radius if radius is not None else default_radius(n, matrix.d))
    exemplars = clusters.exemplar_rows
    logger.debug("leader pass: %d rows -> %d clusters (radius %.4g)", n, exemplars.size, clusters.radius)

    if exemplars.size < MIN_EXEMPLARS:
        message = (f"only {exemplars.size} exemplars (< {MIN_EXEMPLARS}); "
                   "not large enough to yield a stable threshold estimate")
        logger.warning(message)
        return HDOutliersResult(flags=np.zeros(n, dtype=bool), scored_rows=exemplars,
                                scores=np.full(exemplars.size, np.nan), decision=None,
                                clusters=clusters, warnings=[message])

    scores = knn_exact(unit.take(exemplars), 1).distances[:, 0]
    decision = bottom_up_threshold(scores, alpha, p=p, tn=tn, include_candidate=flawed_threshold)
    flagged_exemplars = exemplars[decision.flags]
    flags = np.isin(clusters.membership, flagged_exemplars)
    return HDOutliersResult(flags=flags, scored_rows=exemplars, scores=scores, decision=decision, clusters=clusters)
