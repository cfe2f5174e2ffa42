import math

import numpy as np
import pytest

from src.baseline import default_radius, hdoutliers_detect, leader_clusters
from src.config import MIN_EXEMPLARS
from src.core import StrayConfig, detect
from src.detection.normalize import unitize
from src.errors import ConfigError, InsufficientDataError, SampleTooSmallError
from src.synth import scenario


class TestRadius:
    def test_examples(self):
        assert default_radius(10000, 1) == pytest.approx(0.1 / math.log(10000))
        assert default_radius(8, 2) == pytest.approx(0.0694, abs=1e-3)

    def test_high_dimension_approaches_scale(self):
        assert default_radius(100, 1000) == pytest.approx(0.1, rel=2e-3)

    def test_needs_two_rows(self):
        with pytest.raises(InsufficientDataError):
            default_radius(1, 2)


class TestLeader:
    def test_example(self):
        model = leader_clusters(np.array([0.0, 0.05, 1.0]), radius=0.1)
        np.testing.assert_array_equal(model.exemplar_rows, [0, 2])
        np.testing.assert_array_equal(model.membership, [0, 0, 2])
        assert model.n_clusters == 2
        np.testing.assert_array_equal(model.members(0), [0, 1])

    def test_joins_first_exemplar_in_creation_order(self):
        # row 2 lies within radius of both exemplars
        model = leader_clusters(np.array([0.0, 0.15, 0.08]), radius=0.1)
        np.testing.assert_array_equal(model.membership, [0, 1, 0])

    def test_radius_beyond_diameter(self, rng):
        model = leader_clusters(rng.random((50, 2)), radius=2.0)
        assert model.n_clusters == 1
        assert np.all(model.membership == 0)

    @pytest.mark.parametrize("radius", [0.0, -0.5])
    def test_rejects_non_positive_radius(self, radius):
        with pytest.raises(ConfigError):
            leader_clusters(np.arange(5.0), radius)

    def test_members_lie_within_radius(self, rng):
        values = rng.random((300, 2))
        model = leader_clusters(values, radius=0.05)
        gaps = np.linalg.norm(values - values[model.membership], axis=1)
        assert np.all(gaps <= 0.05 + 1e-12)
        assert np.all(np.isin(model.membership, model.exemplar_rows))


class TestHDOutliers:
    def test_version_one_equals_stray_with_one_neighbour(self, rng):
        values = rng.standard_normal((250, 2))
        values[:2] = [[7.0, 0.0], [0.0, -8.0]]
        hd = hdoutliers_detect(values, alpha=0.05, flawed_threshold=False)
        stray = detect(values, StrayConfig(k=1, alpha=0.05))
        np.testing.assert_array_equal(hd.flags, stray.flags)
        np.testing.assert_array_equal(hd.scores, stray.scores)

    def test_version_one_scores_every_row(self, rng):
        values = rng.standard_normal((120, 3))
        hd = hdoutliers_detect(values)
        np.testing.assert_array_equal(hd.scored_rows, np.arange(120))
        assert hd.clusters is None

    def test_version_two_flags_whole_clusters(self):
        ds = scenario("b", seed=11)
        hd = hdoutliers_detect(ds.data, use_clustering=True)
        for exemplar in hd.clusters.exemplar_rows:
            members = hd.clusters.members(exemplar)
            assert hd.flags[members].all() or not hd.flags[members].any()

    def test_version_two_default_radius(self):
        ds = scenario("a", seed=2)
        hd = hdoutliers_detect(ds.data, use_clustering=True)
        assert hd.clusters.radius == pytest.approx(default_radius(ds.data.n, 2))
        np.testing.assert_array_equal(hd.scored_rows, hd.clusters.exemplar_rows)

    def test_few_exemplars_warn_and_flag_nothing(self, rng):
        values = rng.random((60, 2)) * 1e-3
        values[0] = [1.0, 1.0]
        hd = hdoutliers_detect(values, use_clustering=True, radius=0.8)
        assert hd.warnings and "not large enough" in hd.warnings[0]
        assert hd.n_flagged == 0
        assert hd.decision is None

    def test_too_small(self):
        with pytest.raises(SampleTooSmallError):
            hdoutliers_detect(np.arange(9.0))


class TestCounterexamples:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_split_micro_cluster_escapes_clustering(self, seed):
        ds = scenario("c", seed=seed)
        model = leader_clusters(unitize(ds.data), default_radius(ds.data.n, 2))
        micro = ds.planted_anomaly_rows
        assert np.unique(model.membership[micro]).size >= 2
        hd = hdoutliers_detect(ds.data, alpha=0.01, use_clustering=True)
        assert not hd.flags[micro].any()
        assert detect(ds.data).flags[micro].all()

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_compact_class_collapses_to_one_exemplar(self, seed):
        ds = scenario("e", seed=seed)
        hd = hdoutliers_detect(ds.data, alpha=0.01, use_clustering=True)
        compact = np.arange(1000, 2000)
        assert hd.flags[compact].sum() >= 500
        stray = detect(ds.data)
        assert stray.flags[compact].sum() <= 10

    @pytest.mark.parametrize("flawed", [True, False])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_lone_outlier_missed_with_few_exemplars(self, seed, flawed):
        ds = scenario("f", seed=seed)
        outlier = int(ds.planted_anomaly_rows[0])
        hd = hdoutliers_detect(ds.data, alpha=0.01, use_clustering=True, flawed_threshold=flawed)
        assert hd.decision is None and hd.warnings
        assert not hd.flags[outlier]
        assert detect(ds.data).flags[outlier]

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_lone_outlier_is_its_own_cluster(self, seed):
        ds = scenario("f", seed=seed)
        outlier = int(ds.planted_anomaly_rows[0])
        model = leader_clusters(unitize(ds.data), default_radius(ds.data.n, 2))
        assert model.exemplar_rows[-1] == outlier
        np.testing.assert_array_equal(model.members(outlier), [outlier])
        assert model.n_clusters < MIN_EXEMPLARS
