import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from src.detection.neighbors import KnnResult, knn_exact
from src.detection.scoring import max_gap_scores


def _result(rows):
    dist = np.asarray(rows, dtype=np.float64)
    return KnnResult(dist, np.zeros(dist.shape, dtype=np.intp))


def _profiles(k_max=12):
    return st.tuples(st.integers(1, 30), st.integers(1, k_max)).flatmap(
        lambda shape: arrays(np.float64, shape, elements=st.floats(0.0, 100.0))
    ).map(lambda a: np.sort(a, axis=1))


@pytest.mark.parametrize("row, score, gap_index", [
    ([5.0, 5.0, 5.0], 5.0, 1),
    ([14.8, 15.0, 15.1, 15.3], 14.8, 1),
    ([0.7, 0.7, 9.0, 9.2], 9.0, 3),
    ([0.0, 0.0, 0.0], 0.0, 1),
])
def test_examples(row, score, gap_index):
    res = max_gap_scores(_result([row]))
    assert res.scores[0] == score
    assert res.gap_index[0] == gap_index


def test_without_origin_gap():
    res = max_gap_scores(_result([[0.7, 0.7, 9.0, 9.2], [14.8, 15.0, 15.1, 15.15]]), include_origin=False)
    np.testing.assert_array_equal(res.scores, [9.0, 15.0])
    np.testing.assert_array_equal(res.gap_index, [3, 2])


@pytest.mark.parametrize("include_origin", [True, False])
def test_single_neighbour_scores_are_nearest_distance(include_origin):
    res = max_gap_scores(_result([[0.3], [2.5], [0.0]]), include_origin=include_origin)
    np.testing.assert_array_equal(res.scores, [0.3, 2.5, 0.0])
    np.testing.assert_array_equal(res.gap_index, [1, 1, 1])


@given(_profiles())
@settings(max_examples=100, deadline=None)
def test_score_is_row_entry_after_largest_gap(dist):
    res = max_gap_scores(_result(dist))
    for i, row in enumerate(dist):
        gaps = np.diff(np.concatenate([[0.0], row]))
        j = res.gap_index[i] - 1
        assert res.scores[i] == row[j]
        assert gaps[j] == gaps.max()
        assert np.all(gaps[:j] < gaps[j])
        assert row[0] <= res.scores[i] <= row[-1]


def test_power_of_two_scaling_is_exact(rng):
    values = rng.random((80, 3))
    base = max_gap_scores(knn_exact(values, 8))
    scaled = max_gap_scores(knn_exact(values * 4.0, 8))
    np.testing.assert_array_equal(scaled.scores, base.scores * 4.0)
    np.testing.assert_array_equal(scaled.gap_index, base.gap_index)
