import unittest

import numpy as np
import pandas as pd
import pytest

from errors import DimensionError, InputError
from normalize.models import SpeedSeries, ZScoreStats
from normalize.util import align_stations, compute_stats, filter_workdays, interpolate_missing, zscore
from normalize.windows import SplitSpec, make_windows, prepare_datasets, row_segments, split_counts, split_rows, window_count


def series_from(values, start='2024-01-01', freq='5min', ids=None):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, np.newaxis]
    stamps = pd.date_range(start, periods=values.shape[0], freq=freq)
    ids = ids or [f"s{j}" for j in range(values.shape[1])]
    return SpeedSeries(values, ids, stamps, 5)


class TestInterpolation(unittest.TestCase):
    def test_interior_gap_is_linear(self):
        out = interpolate_missing(series_from([60.0, np.nan, 62.0]))
        np.testing.assert_array_equal(out.values[:, 0], [60.0, 61.0, 62.0])

    def test_leading_and_trailing_gaps_take_nearest(self):
        out = interpolate_missing(series_from([np.nan, 50.0, 52.0, np.nan]))
        np.testing.assert_array_equal(out.values[:, 0], [50.0, 50.0, 52.0, 52.0])

    def test_complete_series_is_identity(self):
        series = series_from(np.random.default_rng(0).normal(60.0, 5.0, size=(20, 3)))
        self.assertIs(interpolate_missing(series), series)

    def test_all_missing_station_is_input_error(self):
        values = np.array([[1.0, np.nan], [2.0, np.nan]])
        with self.assertRaises(InputError) as ctx:
            interpolate_missing(series_from(values, ids=['a', 'b']))
        self.assertIn('b', str(ctx.exception))


class TestZScore(unittest.TestCase):
    def test_round_trip_and_population_std(self):
        series = series_from([1.0, 2.0, 3.0, 4.0])
        scaled, stats = zscore(series)
        self.assertEqual(stats.mean, 2.5)
        self.assertAlmostEqual(stats.std, np.sqrt(1.25), places=15)
        np.testing.assert_allclose(stats.denormalize(scaled.values), series.values, atol=1e-12)

    def test_constant_series_clamps_std(self):
        scaled, stats = zscore(series_from([7.0, 7.0, 7.0]))
        self.assertEqual(stats.std, 1.0)
        np.testing.assert_array_equal(scaled.values, np.zeros((3, 1)))

    def test_given_stats_are_reused(self):
        stats = ZScoreStats(10.0, 2.0)
        scaled, used = zscore(series_from([12.0, 8.0]), stats)
        self.assertIs(used, stats)
        np.testing.assert_array_equal(scaled.values[:, 0], [1.0, -1.0])

    def test_empty_or_missing_values_rejected(self):
        with self.assertRaises(InputError):
            compute_stats(np.zeros((0, 2)))
        with self.assertRaises(InputError):
            compute_stats(np.array([1.0, np.nan]))


class TestWorkdays(unittest.TestCase):
    def test_weekend_rows_removed(self):
        # 2024-01-05 is a Friday
        series = series_from(np.arange(4.0), start='2024-01-05', freq='1D')
        out = filter_workdays(series)
        self.assertEqual(list(out.timestamps.dayofweek), [4, 0])
        np.testing.assert_array_equal(out.values[:, 0], [0.0, 3.0])

    def test_weekend_only_input_is_empty(self):
        out = filter_workdays(series_from([1.0, 2.0], start='2024-01-06', freq='1D'))
        self.assertEqual(out.T, 0)

    def test_needs_timestamps(self):
        with self.assertRaises(InputError):
            filter_workdays(SpeedSeries(np.zeros((2, 1)), ['a']))


class TestSplitsAndWindows(unittest.TestCase):
    def test_split_counts(self):
        self.assertEqual(split_counts(10, (0.6, 0.2, 0.2)), (6, 2, 2))
        self.assertEqual(split_counts(44, (0.6, 0.2, 0.2)), (26, 9, 9))

    def test_window_count(self):
        self.assertEqual(window_count(100, 12, 9), 80)
        self.assertEqual(window_count(20, 12, 9), 0)

    def test_windows_are_exact_slices(self):
        rng = np.random.default_rng(1)
        series = series_from(rng.normal(60.0, 5.0, size=(40, 3)))
        stats = ZScoreStats(60.0, 5.0)
        ds = make_windows(series, 12, 3, [(0, 40)], stats)
        self.assertEqual(len(ds), 26)
        for i in (0, 7, 25):
            self.assertEqual(ds.history[i].tobytes(), series.values[i:i + 12].tobytes())
            self.assertEqual(ds.targets[i].tobytes(), series.values[i + 12:i + 15].tobytes())
            self.assertEqual(ds.target_rows[i], i + 12)
            self.assertEqual(ds.target_times[i], series.timestamps[i + 12])
        self.assertEqual(ds.inputs().shape, (26, 12, 3, 1))
        self.assertEqual(ds.normalized_targets(2).shape, (26, 3, 1))
        np.testing.assert_allclose(stats.denormalize(ds.inputs()[..., 0]), ds.history, atol=1e-12)

    def test_windows_never_cross_a_time_break(self):
        first = pd.date_range('2024-01-01 00:00', periods=20, freq='5min')
        second = pd.date_range('2024-01-01 06:00', periods=20, freq='5min')
        stamps = first.append(second)
        values = np.arange(40.0)[:, np.newaxis]
        series = SpeedSeries(values, ['a'], stamps, 5)
        segments = row_segments(series, np.arange(40))
        self.assertEqual(segments, [(0, 20), (20, 40)])
        ds = make_windows(series, 4, 2, segments, ZScoreStats(0.0, 1.0))
        self.assertEqual(ds.segment_counts, [15, 15])
        spans = ds.history[:, 0, 0], ds.targets[:, -1, 0]
        self.assertTrue(np.all((spans[1] < 20) | (spans[0] >= 20)))

    def test_short_segment_is_input_error(self):
        series = series_from(np.arange(10.0))
        with self.assertRaises(InputError):
            make_windows(series, 8, 3, [(0, 10)], ZScoreStats(0.0, 1.0))
        with self.assertRaises(InputError):
            make_windows(series, 4, 2, [], ZScoreStats(0.0, 1.0))

    def test_split_by_day_keeps_days_whole(self):
        stamps = pd.date_range('2024-01-01', periods=5 * 288, freq='5min')
        series = SpeedSeries(np.zeros((len(stamps), 1)), ['a'], stamps, 5)
        rows = split_rows(series, SplitSpec((0.6, 0.2, 0.2), 'day'))
        self.assertEqual([len(rows[k]) for k in ('train', 'val', 'test')], [3 * 288, 288, 288])
        self.assertEqual(series.timestamps[rows['val'][0]], pd.Timestamp('2024-01-04'))

    def test_split_by_step(self):
        series = series_from(np.zeros(10))
        rows = split_rows(series, SplitSpec((0.6, 0.2, 0.2), 'step'))
        np.testing.assert_array_equal(rows['test'], [8, 9])

    def test_split_spec_validation(self):
        with self.assertRaises(InputError):
            SplitSpec((0.5, 0.5, 0.5))
        with self.assertRaises(InputError):
            SplitSpec((0.6, 0.2, 0.2), 'week')


def test_prepare_datasets_uses_train_statistics():
    stamps = pd.bdate_range('2024-01-01', periods=10).repeat(288) + pd.to_timedelta(np.tile(np.arange(288) * 5, 10), unit='min')
    rng = np.random.default_rng(2)
    values = rng.normal(60.0, 4.0, size=(len(stamps), 2))
    values[5, 1] = np.nan
    series = SpeedSeries(values, ['a', 'b'], stamps, 5)
    prepared = prepare_datasets(series, 12, 3, SplitSpec((0.6, 0.2, 0.2), 'day'))
    train_values = prepared.series.values[prepared.rows['train']]
    assert prepared.stats.mean == pytest.approx(float(train_values.mean()))
    assert prepared.stats.std == pytest.approx(float(train_values.std()))
    assert not np.isnan(prepared.series.values).any()
    for name in ('train', 'val', 'test'):
        assert prepared.datasets[name].stats is prepared.stats
    # train holds Mon 2024-01-01 .. Mon 2024-01-08; the weekend splits it in two
    assert len(prepared.datasets['train']) > 0
    assert prepared.datasets['train'].segment_counts == [5 * 288 - 15, 288 - 15]


def test_gaps_are_filled_inside_their_segment(caplog):
    days = pd.bdate_range('2024-01-01', periods=10)
    stamps = days.repeat(288) + pd.to_timedelta(np.tile(np.arange(288) * 5, 10), unit='min')
    values = np.column_stack([np.repeat(40.0 + np.arange(10), 288), np.full(len(stamps), 70.0)])
    friday_end, monday_start, train_end = 5 * 288 - 1, 5 * 288, 6 * 288 - 1
    values[[friday_end, monday_start, train_end], 0] = np.nan
    values[8 * 288:, 1] = np.nan
    prepared = prepare_datasets(SpeedSeries(values, ['a', 'b'], stamps, 5), 12, 3, SplitSpec((0.6, 0.2, 0.2), 'day'))
    filled = prepared.series.values
    # neither the weekend nor the validation split feeds a training gap
    assert filled[friday_end, 0] == 44.0
    assert filled[monday_start, 0] == 45.0
    assert filled[train_end, 0] == 45.0
    np.testing.assert_array_equal(filled[8 * 288:, 1], 70.0)
    assert 'station-segment' in caplog.text


def test_align_stations_reorders_and_checks():
    series = SpeedSeries(np.array([[1.0, 2.0, 3.0]]), ['a', 'b', 'c'])
    aligned = align_stations(series, ['c', 'a'])
    assert aligned.station_ids == ['c', 'a']
    np.testing.assert_array_equal(aligned.values, [[3.0, 1.0]])
    with pytest.raises(InputError):
        align_stations(series, ['a', 'z'])


def test_series_shape_validation():
    with pytest.raises(DimensionError):
        SpeedSeries(np.zeros((3, 2)), ['only-one'])
