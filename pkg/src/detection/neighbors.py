import heapq
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from src.config import BRUTE_BLOCK_ROWS, LEAF_CAPACITY, PRUNE_SLACK, SEARCH_METHODS
from src.detection.matrix import ArrayLike, as_matrix
from src.errors import ConfigError, DataValidationError, InsufficientDataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class KnnResult:
    """
    Ascending k-nearest-neighbour distances and the matching row ids.
    Row i never lists itself.
    """
    distances: np.ndarray
    indices: np.ndarray

    def __post_init__(self) -> None:
        if self.distances.shape != self.indices.shape or self.distances.ndim != 2:
            raise DataValidationError(
                f"distances {self.distances.shape} and indices {self.indices.shape} must be matching n x k grids"
            )
        if self.distances.shape[1] < 1:
            raise DataValidationError("k must be at least 1")
        if np.any(np.diff(self.distances, axis=1) < 0):
            raise DataValidationError("k-NN distance rows must be ascending")

    @property
    def n(self) -> int:
        return int(self.distances.shape[0])

    @property
    def k(self) -> int:
        return int(self.distances.shape[1])


def _check_k(n: int, k: int) -> None:
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if k >= n:
        raise InsufficientDataError(f"too few observations for k: n={n}, k={k}")


def euclidean_distances(queries: np.ndarray, points: np.ndarray) -> np.ndarray:
    """
    Euclidean distances, queries x points.
    Squares are accumulated column by column in a fixed order so a pair
    gets the same bits whichever search method asks for it.
    """
    acc = np.zeros((queries.shape[0], points.shape[0]), dtype=np.float64)
    buf = np.empty_like(acc)
    for j in range(queries.shape[1]):
        np.subtract(queries[:, j, None], points[None, :, j], out=buf)
        np.multiply(buf, buf, out=buf)
        np.add(acc, buf, out=acc)
    return np.sqrt(acc, out=acc)


def _select_k(row: np.ndarray, k: int) -> np.ndarray:
    """Ids of the k smallest entries, ordered by (distance, id)."""
    if k < row.size:
        kth = row[np.argpartition(row, k - 1)[:k]].max()
        cand = np.flatnonzero(row <= kth)
    else:
        cand = np.arange(row.size)
    order = np.lexsort((cand, row[cand]))
    return cand[order[:k]]


def knn_exact(data: ArrayLike, k: int) -> KnnResult:
    """
    Brute-force k-NN: every pairing is measured.
    Equal distances are resolved towards the smaller row id.
    """
    values = as_matrix(data).values
    n = values.shape[0]
    _check_k(n, k)

    distances = np.empty((n, k), dtype=np.float64)
    indices = np.empty((n, k), dtype=np.intp)

    for start in range(0, n, BRUTE_BLOCK_ROWS):
        stop = min(start + BRUTE_BLOCK_ROWS, n)
        block = euclidean_distances(values[start:stop], values)
        for r, i in enumerate(range(start, stop)):
            row = block[r]
            row[i] = np.inf
            picked = _select_k(row, k)
            indices[i] = picked
            distances[i] = row[picked]

    return KnnResult(distances, indices)


@dataclass(eq=False)
class _Node:
    lo: np.ndarray
    hi: np.ndarray
    start: int
    stop: int
    left: Optional["_Node"] = None
    right: Optional["_Node"] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass(eq=False)
class SpatialIndex:
    """
    kd-tree over the rows of a matrix.
    Nodes are split at the median of their widest-spread dimension; each
    leaf owns a contiguous slice of `order` holding at most `leaf_capacity`
    row ids. Immutable after construction, so concurrent queries are safe.
    """
    points: np.ndarray
    leaf_capacity: int = LEAF_CAPACITY
    order: np.ndarray = field(init=False)
    root: _Node = field(init=False)
    leaf_count: int = field(init=False, default=0)

    def __post_init__(self) -> None:
        if self.leaf_capacity < 1:
            raise ConfigError(f"leaf capacity must be >= 1, got {self.leaf_capacity}")
        self.order = np.arange(self.points.shape[0], dtype=np.intp)
        self.root = self._build(0, self.points.shape[0])

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    def _build(self, start: int, stop: int) -> _Node:
        ids = self.order[start:stop]
        pts = self.points[ids]
        node = _Node(lo=pts.min(axis=0), hi=pts.max(axis=0), start=start, stop=stop)

        spread = node.hi - node.lo
        if stop - start <= self.leaf_capacity or not np.any(spread > 0):
            self.leaf_count += 1
            return node

        dim = int(np.argmax(spread))
        # Sort by (coordinate, row id) so the split is reproducible under duplicates.
        self.order[start:stop] = ids[np.lexsort((ids, pts[:, dim]))]
        mid = start + (stop - start) // 2

        node.left = self._build(start, mid)
        node.right = self._build(mid, stop)
        return node

    def leaves(self) -> List[np.ndarray]:
        """Row ids of every leaf, left to right."""
        out: List[np.ndarray] = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(self.order[node.start:node.stop])
            else:
                stack.append(node.right)
                stack.append(node.left)
        return out

    def query(self, point: np.ndarray, k: int, eps: float = 0.0,
              exclude: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
        """
        k nearest rows to `point`, ordered by (distance, row id).
        `exclude` drops one row id from consideration (the query's own row).
        With eps > 0 the i-th returned distance is within (1 + eps) of the
        true i-th distance.
        """
        if eps < 0:
            raise ConfigError(f"eps must be >= 0, got {eps}")
        available = self.n - (1 if exclude is not None else 0)
        if k < 1 or k > available:
            raise InsufficientDataError(f"cannot return {k} neighbours from {available} rows")

        q = np.asarray(point, dtype=np.float64).reshape(1, -1)
        # Max-heap on (distance, id) through negation.
        heap: List[Tuple[float, int]] = []
        shrink = 1.0 + eps
        slack = 1.0 + PRUNE_SLACK

        stack: List[_Node] = [self.root]
        while stack:
            node = stack.pop()
            if len(heap) == k and self._box_distance(node, q[0]) * shrink > -heap[0][0] * slack:
                continue

            if node.is_leaf:
                ids = self.order[node.start:node.stop]
                dists = euclidean_distances(q, self.points[ids])[0]
                for dist, idx in zip(dists.tolist(), ids.tolist()):
                    if idx == exclude:
                        continue
                    if len(heap) < k:
                        heapq.heappush(heap, (-dist, -idx))
                    elif (dist, idx) < (-heap[0][0], -heap[0][1]):
                        heapq.heapreplace(heap, (-dist, -idx))
                continue

            # Push the farther child first so the nearer one is explored next.
            near, far = node.left, node.right
            if self._box_distance(far, q[0]) < self._box_distance(near, q[0]):
                near, far = far, near
            stack.append(far)
            stack.append(near)

        best = sorted((-d, -i) for d, i in heap)
        return (np.array([d for d, _ in best], dtype=np.float64),
                np.array([i for _, i in best], dtype=np.intp))

    @staticmethod
    def _box_distance(node: _Node, q: np.ndarray) -> float:
        gap = np.maximum(np.maximum(node.lo - q, q - node.hi), 0.0)
        return float(np.sqrt(np.dot(gap, gap)))


def build_index(data: ArrayLike, leaf_capacity: int = LEAF_CAPACITY) -> SpatialIndex:
    values = as_matrix(data).values
    index = SpatialIndex(values, leaf_capacity=leaf_capacity)
    logger.debug("built kd-tree: n=%d, d=%d, leaves=%d", values.shape[0], values.shape[1], index.leaf_count)
    return index


def knn_kdtree(data: ArrayLike, k: int, eps: float = 0.0,
               index: Optional[SpatialIndex] = None) -> KnnResult:
    """
    k-NN through the kd-tree. eps = 0 gives the same answer as knn_exact,
    bit for bit, including the tie-break.
    """
    values = as_matrix(data).values
    n = values.shape[0]
    _check_k(n, k)
    if eps < 0:
        raise ConfigError(f"eps must be >= 0, got {eps}")

    if index is None:
        index = build_index(values)

    distances = np.empty((n, k), dtype=np.float64)
    indices = np.empty((n, k), dtype=np.intp)
    for i in range(n):
        distances[i], indices[i] = index.query(values[i], k, eps=eps, exclude=i)

    return KnnResult(distances, indices)


def knn(data: ArrayLike, k: int, method: str = "brute", eps: float = 0.0) -> KnnResult:
    if method == "brute":
        return knn_exact(data, k)
    if method == "kdtree":
        return knn_kdtree(data, k, eps=eps)
    raise ConfigError(f"unknown search method {method!r}; expected one of {SEARCH_METHODS}")
