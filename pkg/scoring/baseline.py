"""
Historical Average baseline.

The profile holds, for every (time-of-day slot, station), the mean training value observed
in that slot. A forecast for a target timestamp is the profile entry of its slot, so it
does not depend on the horizon. Slots never seen in training fall back to the station mean.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from errors import InputError
from normalize.models import SpeedSeries, WindowedDataset

logger = logging.getLogger(__name__)

MINUTES_PER_DAY = 24 * 60


def time_slots(stamps: pd.DatetimeIndex, interval_minutes: int) -> np.ndarray:
    minutes = stamps.hour.to_numpy() * 60 + stamps.minute.to_numpy()
    return minutes // interval_minutes


@dataclass
class HistoricalAverage:
    profile: np.ndarray  # (slots per day, n)
    interval_minutes: int

    @classmethod
    def fit(cls, series: SpeedSeries, train_rows: np.ndarray) -> 'HistoricalAverage':
        """Build the profile from the cleaned series restricted to ``train_rows``."""
        if series.timestamps is None:
            raise InputError("historical average needs timestamps")
        train_rows = np.asarray(train_rows, dtype=int)
        if train_rows.size == 0:
            raise InputError("historical average needs a nonempty training split")
        interval = series.interval_minutes
        slots_per_day = MINUTES_PER_DAY // interval
        values = series.values[train_rows]
        frame = pd.DataFrame(values)
        frame['slot'] = time_slots(series.timestamps[train_rows], interval)
        means = frame.groupby('slot').mean()
        profile = np.full((slots_per_day, series.n), np.nan)
        profile[means.index.to_numpy()] = means.to_numpy()
        unseen = np.isnan(profile)
        if unseen.any():
            station_mean = np.nanmean(values, axis=0)
            profile = np.where(unseen, station_mean[np.newaxis, :], profile)
            logger.info("Historical average: %d unseen slot(s) fall back to the station mean", int(unseen.all(axis=1).sum()))
        return cls(profile=profile, interval_minutes=interval)

    def predict_at(self, stamps: pd.DatetimeIndex) -> np.ndarray:
        """(len(stamps), n) predictions."""
        return self.profile[time_slots(stamps, self.interval_minutes) % self.profile.shape[0]]


def historical_average(model: HistoricalAverage, dataset: WindowedDataset, horizon: int) -> np.ndarray:
    """(N, H, n) forecasts for every window; step s targets the first target time + s intervals."""
    if dataset.target_times is None:
        raise InputError("historical average needs window timestamps")
    out = np.zeros((len(dataset), horizon, dataset.n))
    step = pd.Timedelta(minutes=model.interval_minutes)
    for s in range(horizon):
        out[:, s, :] = model.predict_at(dataset.target_times + s * step)
    return out


__all__ = ["HistoricalAverage", "historical_average", "time_slots"]
