import numpy as np
import pytest

from src.core import StrayConfig, detect
from src.errors import ConfigError, InsufficientDataError, WindowError
from src.streaming import (
    FeatureMatrix, SeriesCollection, WindowSpec, detect_collection, detect_stream,
    sliding_windows, ts_feature_matrix,
)


class TestWindows:
    def test_ranges(self):
        assert sliding_windows(10, WindowSpec(4, 3)) == [(0, 4), (3, 7), (6, 10)]
        assert sliding_windows(4, WindowSpec(4, 1)) == [(0, 4)]
        assert sliding_windows(10, WindowSpec(5, 5)) == [(0, 5), (5, 10)]

    @pytest.mark.parametrize("length, width, step, expected", [
        (10, 5, 3, [(0, 5), (3, 8), (5, 10)]),
        (9, 4, 3, [(0, 4), (3, 7), (5, 9)]),
        (7, 6, 6, [(0, 6), (1, 7)]),
    ])
    def test_tail_window_ends_at_stream_end(self, length, width, step, expected):
        ranges = sliding_windows(length, WindowSpec(width, step))
        assert ranges == expected
        assert all(e - s == width for s, e in ranges)

    def test_stream_shorter_than_window(self):
        with pytest.raises(InsufficientDataError):
            sliding_windows(3, WindowSpec(4, 2))

    @pytest.mark.parametrize("width, step", [(1, 1), (5, 0), (5, 6)])
    def test_bad_spec(self, width, step):
        with pytest.raises(ConfigError):
            WindowSpec(width, step)

    def test_width_must_exceed_k(self):
        with pytest.raises(ConfigError):
            list(detect_stream(np.zeros((50, 2)), StrayConfig(k=10), WindowSpec(10, 5)))


class TestDetectStream:
    def test_single_window_equals_batch(self, rng):
        values = rng.standard_normal((200, 3))
        values[50] = 7.0
        (win,) = list(detect_stream(values, StrayConfig(), WindowSpec(200, 200)))
        batch = detect(values)
        np.testing.assert_array_equal(win.report.scores, batch.scores)
        np.testing.assert_array_equal(win.report.flags, batch.flags)
        assert win.report.threshold == batch.threshold
        np.testing.assert_array_equal(win.rows, np.arange(200))

    def test_constant_stream(self):
        reports = list(detect_stream(np.full((120, 2), 4.0), StrayConfig(), WindowSpec(40, 20)))
        assert len(reports) == 5
        assert all(r.report.n_flagged == 0 for r in reports)

    def test_spike_flagged_in_covering_windows(self, rng):
        values = rng.standard_normal((300, 2))
        values[120] = [25.0, -25.0]
        reports = list(detect_stream(values, StrayConfig(), WindowSpec(100, 50)))
        assert [r.start for r in reports] == [0, 50, 100, 150, 200]
        for r in reports:
            if r.start <= 120 < r.end:
                assert 120 in r.flagged_global()
            else:
                assert 120 not in r.rows

    def test_rows_outside_window_do_not_matter(self, rng):
        values = rng.standard_normal((200, 2))
        shuffled = values.copy()
        shuffled[100:] = rng.permutation(values[100:])
        spec = WindowSpec(100, 100)
        first = next(detect_stream(values, StrayConfig(), spec))
        again = next(detect_stream(shuffled, StrayConfig(), spec))
        np.testing.assert_array_equal(first.report.scores, again.report.scores)

    def test_threaded_matches_sequential(self, rng):
        values = rng.standard_normal((400, 2))
        spec = WindowSpec(100, 25)
        seq = list(detect_stream(values, StrayConfig(), spec))
        par = list(detect_stream(values, StrayConfig(), spec, max_workers=4))
        assert [w.window_id for w in par] == [w.window_id for w in seq]
        for a, b in zip(seq, par):
            np.testing.assert_array_equal(a.report.flags, b.report.flags)

    def test_iterable_source_matches_array(self, rng):
        values = rng.standard_normal((150, 2))
        spec = WindowSpec(60, 30)
        from_array = list(detect_stream(values, StrayConfig(), spec))
        from_rows = list(detect_stream(iter(values), StrayConfig(), spec))
        assert [(w.window_id, w.start, w.end) for w in from_rows] == \
               [(w.window_id, w.start, w.end) for w in from_array]
        for a, b in zip(from_array, from_rows):
            np.testing.assert_array_equal(a.report.scores, b.report.scores)

    def test_iterable_tail_window_matches_array(self, rng):
        values = rng.standard_normal((110, 2))
        spec = WindowSpec(60, 30)
        from_array = list(detect_stream(values, StrayConfig(), spec))
        from_rows = list(detect_stream(iter(values), StrayConfig(), spec))
        assert [(w.window_id, w.start, w.end) for w in from_rows] == [(0, 0, 60), (1, 30, 90), (2, 50, 110)]
        assert [(w.window_id, w.start, w.end) for w in from_array] == [(0, 0, 60), (1, 30, 90), (2, 50, 110)]
        np.testing.assert_array_equal(from_rows[-1].report.scores, from_array[-1].report.scores)

    def test_short_iterable(self):
        with pytest.raises(InsufficientDataError):
            list(detect_stream(iter(np.zeros((10, 2))), StrayConfig(k=5), WindowSpec(20, 10)))

    def test_window_error_names_window(self, rng):
        rows = list(rng.standard_normal((60, 2)))
        rows[25] = np.array([np.nan, 0.0])
        stream = detect_stream(iter(rows), StrayConfig(k=5), WindowSpec(20, 20))
        first = next(stream)
        assert first.window_id == 0
        with pytest.raises(WindowError) as info:
            next(stream)
        assert info.value.window_id == 1


class TestFeatures:
    def test_constant_series(self):
        features = ts_feature_matrix(SeriesCollection(np.full((3, 12), 2.5)))
        np.testing.assert_array_equal(features.values[:, 0], [2.5, 2.5, 2.5])
        np.testing.assert_array_equal(features.values[:, 1:], np.zeros((3, 6)))

    def test_ramp(self):
        features = ts_feature_matrix(SeriesCollection(np.arange(20.0)[None, :]))
        names = list(features.names)
        row = features.values[0]
        assert row[names.index("trend")] == pytest.approx(1.0)
        assert row[names.index("spike")] == pytest.approx(1.0)
        assert row[names.index("lumpiness")] == pytest.approx(0.0)
        assert row[names.index("level_shift")] == pytest.approx(5.0)

    def test_ids_default(self):
        collection = SeriesCollection(np.zeros((2, 5)))
        assert collection.ids == ["series_0", "series_1"]
        assert collection.length == 5

    def test_short_series(self):
        with pytest.raises(InsufficientDataError):
            SeriesCollection(np.zeros((5, 3)))

    def test_scaled_series_stands_out(self, rng):
        series = np.cumsum(rng.standard_normal((60, 40)), axis=1)
        series[7] *= 100.0
        report = detect_collection(SeriesCollection(series))
        assert int(np.argmax(report.scores)) == 7

    def test_precomputed_features(self, rng):
        collection = SeriesCollection(rng.standard_normal((30, 16)))
        features = ts_feature_matrix(collection)
        assert isinstance(features, FeatureMatrix)
        direct = detect_collection(collection)
        via_features = detect_collection(features)
        np.testing.assert_array_equal(direct.scores, via_features.scores)
