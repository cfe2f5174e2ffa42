from dataclasses import dataclass

import numpy as np

from src.detection.neighbors import KnnResult


@dataclass(frozen=True, eq=False)
class ScoreSet:
    """
    Max-gap anomaly scores. gap_index is 1-based into the ascending
    k-NN row, so scores[i] == distances[i, gap_index[i] - 1].
    """
    scores: np.ndarray
    gap_index: np.ndarray

    @property
    def n(self) -> int:
        return int(self.scores.shape[0])


def max_gap_scores(knn: KnnResult, include_origin: bool = True) -> ScoreSet:
    """
    Score each point by the k-NN distance that sits after the largest jump
    in its distance profile.

    include_origin=True measures the first jump from zero (d1 - 0), so an
    isolated point scores its nearest-neighbour distance. False only looks
    at jumps between consecutive neighbours and scores d at argmax + 1;
    with k = 1 both reduce to d1.
    """
    dist = knn.distances
    n, k = dist.shape

    if include_origin:
        gaps = np.diff(dist, axis=1, prepend=0.0)
        pos = np.argmax(gaps, axis=1)
    elif k == 1:
        pos = np.zeros(n, dtype=np.intp)
    else:
        pos = np.argmax(np.diff(dist, axis=1), axis=1) + 1

    # np.argmax returns the first maximum, the most conservative score.
    scores = dist[np.arange(n), pos]
    return ScoreSet(scores=scores, gap_index=pos.astype(np.intp) + 1)
