import math
import unittest

import numpy as np
import pandas as pd
import pytest

from errors import DimensionError, InputError
from normalize.models import SpeedSeries, ZScoreStats
from normalize.windows import make_windows
from scoring.baseline import HistoricalAverage, historical_average, time_slots
from scoring.metrics import horizon_reports, metrics


class TestMetrics(unittest.TestCase):
    def test_worked_example(self):
        r = metrics(np.array([1.0, 2.0, 3.0]), np.array([1.0, 1.0, 1.0]))
        self.assertEqual(r.mae, 1.0)
        self.assertAlmostEqual(r.rmse, math.sqrt(5.0 / 3.0), places=15)
        self.assertAlmostEqual(r.mape, 100.0, places=12)
        self.assertEqual(r.n, 3)
        self.assertEqual(r.mape_excluded, 0)

    def test_small_examples(self):
        r = metrics(np.array([1.0, 2.0]), np.array([1.0, 4.0]))
        self.assertEqual(r.mae, 1.0)
        self.assertAlmostEqual(r.rmse, math.sqrt(2.0), places=15)
        self.assertEqual(metrics(np.array([2.0]), np.array([4.0])).mape, 50.0)

    def test_perfect_forecast(self):
        truth = np.array([[55.0, 60.0], [62.5, 58.0]])
        r = metrics(truth.copy(), truth)
        self.assertEqual((r.mae, r.mape, r.rmse), (0.0, 0.0, 0.0))

    def test_rmse_bounds_mae(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            truth = rng.uniform(20.0, 70.0, size=(8, 5))
            pred = truth + rng.normal(0.0, 3.0, size=truth.shape)
            r = metrics(pred, truth)
            self.assertGreaterEqual(r.rmse, r.mae)

    def test_scale_equivariance(self):
        rng = np.random.default_rng(1)
        truth = rng.uniform(20.0, 70.0, size=30)
        pred = truth + rng.normal(0.0, 2.0, size=30)
        base, scaled = metrics(pred, truth), metrics(3.0 * pred, 3.0 * truth)
        self.assertAlmostEqual(scaled.mae, 3.0 * base.mae, places=10)
        self.assertAlmostEqual(scaled.rmse, 3.0 * base.rmse, places=10)
        self.assertAlmostEqual(scaled.mape, base.mape, places=10)

    def test_mape_skips_zero_truth(self):
        r = metrics(np.array([1.0, 1.0]), np.array([0.0, 2.0]))
        self.assertEqual(r.mape_excluded, 1)
        self.assertAlmostEqual(r.mape, 50.0, places=12)
        self.assertEqual(r.mae, 1.0)
        with self.assertRaises(InputError) as ctx:
            metrics(np.ones(2), np.zeros(2), 'ha', 3)
        self.assertIn('MAPE is undefined', str(ctx.exception))

    def test_invalid_inputs(self):
        with self.assertRaises(DimensionError):
            metrics(np.ones(3), np.ones(4))
        with self.assertRaises(InputError):
            metrics(np.ones(0), np.ones(0))


class TestHorizonReports(unittest.TestCase):
    def test_reports_per_horizon(self):
        truth = np.zeros((4, 3, 2))
        pred = np.zeros((4, 3, 2))
        pred[:, 2] = 2.0
        reports = horizon_reports(pred, truth + 1.0, [1, 3], 'stgcn', interval_minutes=5)
        self.assertEqual([r.horizon_minutes for r in reports], [5, 15])
        self.assertEqual([r.mae for r in reports], [1.0, 1.0])
        self.assertEqual([r.model for r in reports], ['stgcn', 'stgcn'])

    def test_horizon_out_of_range(self):
        with self.assertRaises(InputError):
            horizon_reports(np.zeros((2, 3, 1)), np.zeros((2, 3, 1)), [4], 'ha')
        with self.assertRaises(DimensionError):
            horizon_reports(np.zeros((2, 3)), np.zeros((2, 3)), [1], 'ha')


def slot_series():
    stamps = pd.DatetimeIndex(['2024-01-01 08:00', '2024-01-01 08:05', '2024-01-02 08:00'])
    return SpeedSeries(np.array([[2.0], [10.0], [4.0]]), ['a'], stamps, 5)


class TestHistoricalAverage(unittest.TestCase):
    def test_slot_mean(self):
        ha = HistoricalAverage.fit(slot_series(), np.arange(3))
        self.assertEqual(ha.profile.shape, (288, 1))
        np.testing.assert_array_equal(ha.predict_at(pd.DatetimeIndex(['2024-01-03 08:00', '2024-01-03 08:05'])), [[3.0], [10.0]])

    def test_unseen_slot_uses_station_mean(self):
        ha = HistoricalAverage.fit(slot_series(), np.arange(3))
        np.testing.assert_allclose(ha.predict_at(pd.DatetimeIndex(['2024-01-03 12:00'])), [[16.0 / 3.0]])

    def test_only_training_rows_count(self):
        ha = HistoricalAverage.fit(slot_series(), np.array([0, 1]))
        self.assertEqual(ha.predict_at(pd.DatetimeIndex(['2024-01-05 08:00']))[0, 0], 2.0)

    def test_needs_timestamps_and_rows(self):
        with self.assertRaises(InputError):
            HistoricalAverage.fit(SpeedSeries(np.ones((3, 1)), ['a']), np.arange(3))
        with self.assertRaises(InputError):
            HistoricalAverage.fit(slot_series(), np.array([], dtype=int))

    def test_time_slots(self):
        stamps = pd.DatetimeIndex(['2024-01-01 00:00', '2024-01-01 00:07', '2024-01-01 23:55'])
        np.testing.assert_array_equal(time_slots(stamps, 5), [0, 1, 287])


def test_historical_average_ignores_horizon():
    stamps = pd.date_range('2024-01-01', periods=2 * 288, freq='5min')
    rng = np.random.default_rng(4)
    series = SpeedSeries(rng.uniform(40.0, 70.0, size=(len(stamps), 2)), ['a', 'b'], stamps, 5)
    ha = HistoricalAverage.fit(series, np.arange(len(stamps)))
    windows = make_windows(series, 12, 3, [(0, 40)], ZScoreStats(55.0, 8.0))
    forecast = historical_average(ha, windows, 3)
    assert forecast.shape == (len(windows), 3, 2)
    # step s of window i targets the same timestamp as step s - 1 of window i + 1
    np.testing.assert_array_equal(forecast[:-1, 1], forecast[1:, 0])
    np.testing.assert_array_equal(forecast[:-2, 2], forecast[2:, 0])
    expected = (series.values[12] + series.values[12 + 288]) / 2.0
    np.testing.assert_allclose(forecast[0, 0], expected, atol=1e-12)


def test_repeated_daily_profile_is_reproduced_exactly():
    stamps = pd.date_range('2024-01-01', periods=3 * 288, freq='5min')
    day = 50.0 + 10.0 * np.sin(np.linspace(0.0, 2.0 * np.pi, 288, endpoint=False))
    series = SpeedSeries(np.tile(day, 3)[:, np.newaxis], ['a'], stamps, 5)
    ha = HistoricalAverage.fit(series, np.arange(2 * 288))
    np.testing.assert_allclose(ha.predict_at(stamps[2 * 288:])[:, 0], day, atol=1e-12)
    assert metrics(ha.predict_at(stamps[2 * 288:]), series.values[2 * 288:]).mae < 1e-12


def test_historical_average_needs_window_times():
    ha = HistoricalAverage.fit(slot_series(), np.arange(3))
    series = SpeedSeries(np.ones((10, 1)), ['a'])
    windows = make_windows(series, 4, 2, [(0, 10)], ZScoreStats(0.0, 1.0))
    with pytest.raises(InputError):
        historical_average(ha, windows, 2)


if __name__ == '__main__':
    unittest.main()
