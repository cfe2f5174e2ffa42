import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import cdist

from src.detection.neighbors import (
    KnnResult, build_index, euclidean_distances, knn, knn_exact, knn_kdtree,
)
from src.detection.scoring import max_gap_scores
from src.errors import ConfigError, DataValidationError, InsufficientDataError


def _oracle(values, k):
    full = cdist(values, values)
    np.fill_diagonal(full, np.inf)
    order = np.argsort(full, axis=1, kind="stable")[:, :k]
    return np.take_along_axis(full, order, axis=1), order


@st.composite
def knn_cases(draw):
    n = draw(st.integers(2, 90))
    d = draw(st.integers(1, 6))
    k = draw(st.integers(1, min(n - 1, 12)))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.Generator(np.random.PCG64(seed))
    if draw(st.booleans()):
        # coarse grid: many exact ties and duplicate rows
        values = rng.integers(0, 4, size=(n, d)).astype(np.float64)
    else:
        values = rng.random((n, d))
    return values, k


def test_line_example():
    res = knn_exact(np.array([0.0, 1.0, 3.0]), 2)
    np.testing.assert_array_equal(res.distances, [[1.0, 3.0], [1.0, 2.0], [2.0, 3.0]])
    np.testing.assert_array_equal(res.indices, [[1, 2], [0, 2], [1, 0]])


def test_duplicates_resolve_to_smaller_ids():
    values = np.ones((40, 3))
    for method in ("brute", "kdtree"):
        res = knn(values, 3, method=method)
        np.testing.assert_array_equal(res.distances, np.zeros((40, 3)))
        np.testing.assert_array_equal(res.indices[0], [1, 2, 3])
        np.testing.assert_array_equal(res.indices[5], [0, 1, 2])


def test_brute_matches_reference(rng):
    values = rng.random((60, 5))
    res = knn_exact(values, 7)
    ref_d, ref_i = _oracle(values, 7)
    np.testing.assert_allclose(res.distances, ref_d, rtol=1e-12)
    np.testing.assert_array_equal(res.indices, ref_i)
    assert not np.any(res.indices == np.arange(60)[:, None])


@given(knn_cases())
@settings(max_examples=80, deadline=None)
def test_kdtree_is_bit_identical_to_brute(case):
    values, k = case
    exact = knn_exact(values, k)
    tree = knn_kdtree(values, k)
    np.testing.assert_array_equal(tree.distances, exact.distances)
    np.testing.assert_array_equal(tree.indices, exact.indices)


@pytest.mark.slow
def test_kdtree_agreement_over_many_instances():
    seeds = np.random.SeedSequence(7).spawn(1000)
    for child in seeds:
        rng = np.random.Generator(np.random.PCG64(child))
        n = int(rng.integers(20, 501))
        d = int(rng.integers(1, 21))
        k = int(rng.integers(1, 16))
        values = rng.random((n, d))
        exact, tree = knn_exact(values, k), knn_kdtree(values, k)
        assert np.array_equal(exact.distances, tree.distances)
        assert np.array_equal(exact.indices, tree.indices)
        scores = max_gap_scores(tree).scores
        for i in range(n):
            gaps = np.diff(tree.distances[i], prepend=0.0)
            assert scores[i] == tree.distances[i, int(np.argmax(gaps))]


@pytest.mark.parametrize("eps", [0.1, 0.5, 2.0])
def test_approximate_search_respects_bound(rng, eps):
    values = rng.random((300, 4))
    exact = knn_exact(values, 10)
    approx = knn_kdtree(values, 10, eps=eps)
    assert np.all(approx.distances >= exact.distances)
    assert np.all(approx.distances <= (1.0 + eps) * exact.distances * (1.0 + 1e-12))


def test_closest_pair_is_mutual(rng):
    values = rng.random((200, 3))
    res = knn_exact(values, 5)
    i = int(np.argmin(res.distances[:, 0]))
    j = int(res.indices[i, 0])
    assert i in res.indices[j]


def test_distance_kernel_is_symmetric(rng):
    a = rng.random((30, 4))
    full = euclidean_distances(a, a)
    np.testing.assert_array_equal(full, full.T)
    np.testing.assert_array_equal(np.diag(full), np.zeros(30))


def test_build_index_single_point():
    index = build_index(np.array([[0.5, 0.5]]))
    assert index.leaf_count == 1
    leaves = index.leaves()
    assert len(leaves) == 1 and leaves[0].tolist() == [0]


def test_query_self_has_zero_distance(rng):
    values = rng.random((1000, 3))
    index = build_index(values)
    for i in (0, 17, 999):
        dist, idx = index.query(values[i], 1)
        assert dist[0] == 0.0 and idx[0] == i


def test_leaves_partition_rows(rng):
    values = rng.random((500, 2))
    index = build_index(values, leaf_capacity=8)
    leaves = index.leaves()
    assert all(leaf.size <= 8 for leaf in leaves)
    assert len(leaves) == index.leaf_count
    np.testing.assert_array_equal(np.sort(np.concatenate(leaves)), np.arange(500))


def test_identical_points_stay_in_one_leaf():
    index = build_index(np.zeros((100, 2)), leaf_capacity=4)
    assert index.leaf_count == 1


@pytest.mark.parametrize("k", [0, -1])
def test_rejects_non_positive_k(k):
    with pytest.raises(ConfigError):
        knn_exact(np.arange(5.0), k)


@pytest.mark.parametrize("method", ["brute", "kdtree"])
def test_rejects_k_not_below_n(method):
    with pytest.raises(InsufficientDataError, match="too few observations for k"):
        knn(np.arange(5.0), 5, method=method)


def test_rejects_negative_eps():
    with pytest.raises(ConfigError):
        knn_kdtree(np.arange(20.0), 3, eps=-0.1)


def test_rejects_unknown_method():
    with pytest.raises(ConfigError):
        knn(np.arange(20.0), 3, method="ball_tree")


def test_result_requires_ascending_rows():
    with pytest.raises(DataValidationError):
        KnnResult(np.array([[2.0, 1.0]]), np.array([[0, 1]]))
