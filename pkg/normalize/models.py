"""
Data models for speed series, normalization statistics and windowed datasets.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from errors import DimensionError

SPLITS = ('train', 'val', 'test')


@dataclass
class SpeedSeries:
    """
    Station speeds over time.

    values: (T, n) float64, NaN marks a missing reading
    timestamps: one per row, strictly increasing, or None for bare step-indexed data
    """

    values: np.ndarray
    station_ids: List[str]
    timestamps: Optional[pd.DatetimeIndex] = None
    interval_minutes: int = 5

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DimensionError(f"speed values must be (T, n), got shape {self.values.shape}")
        if len(self.station_ids) != self.values.shape[1]:
            raise DimensionError(f"{len(self.station_ids)} station ids for {self.values.shape[1]} value columns")
        if self.timestamps is not None and len(self.timestamps) != self.values.shape[0]:
            raise DimensionError(f"{len(self.timestamps)} timestamps for {self.values.shape[0]} rows")

    @property
    def T(self) -> int:
        return int(self.values.shape[0])

    @property
    def n(self) -> int:
        return int(self.values.shape[1])

    @property
    def missing_count(self) -> int:
        return int(np.isnan(self.values).sum())

    def take(self, rows: np.ndarray) -> 'SpeedSeries':
        rows = np.asarray(rows, dtype=int)
        stamps = self.timestamps[rows] if self.timestamps is not None else None
        return SpeedSeries(self.values[rows], list(self.station_ids), stamps, self.interval_minutes)

    def with_values(self, values: np.ndarray) -> 'SpeedSeries':
        return SpeedSeries(values, list(self.station_ids), self.timestamps, self.interval_minutes)

    def breaks(self) -> np.ndarray:
        """Row indices r > 0 where row r does not follow row r - 1 by exactly one interval."""
        if self.timestamps is None or self.T < 2:
            return np.zeros(0, dtype=int)
        deltas = np.diff(self.timestamps.values)
        return np.flatnonzero(deltas != np.timedelta64(self.interval_minutes, 'm')) + 1

    def segments(self) -> List[Tuple[int, int]]:
        """Maximal [start, stop) row ranges without a time discontinuity."""
        if self.T == 0:
            return []
        bounds = [0] + self.breaks().tolist() + [self.T]
        return [(a, b) for a, b in zip(bounds, bounds[1:]) if b > a]


@dataclass(frozen=True)
class ZScoreStats:
    """Scalar mean and population standard deviation (clamped to 1 when zero)."""

    mean: float
    std: float

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def denormalize(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) * self.std + self.mean

    def to_dict(self) -> dict:
        return {'mean': self.mean, 'std': self.std}


@dataclass
class WindowedDataset:
    """
    Windows of one split, stored in original units.

    history: (N, M, n) inputs; targets: (N, H, n) the H steps after each history;
    target_rows: (N,) series row of the first target step; target_times: matching timestamps
    when the series has them. Normalized views are computed on demand from ``stats``.
    """

    split: str
    history: np.ndarray
    targets: np.ndarray
    target_rows: np.ndarray
    stats: ZScoreStats
    target_times: Optional[pd.DatetimeIndex] = None
    segment_counts: List[int] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.history.shape[0])

    @property
    def M(self) -> int:
        return int(self.history.shape[1])

    @property
    def H(self) -> int:
        return int(self.targets.shape[1])

    @property
    def n(self) -> int:
        return int(self.history.shape[2])

    def inputs(self, indices: Optional[np.ndarray] = None) -> np.ndarray:
        """Normalized histories with a trailing channel axis: (N, M, n, 1)."""
        hist = self.history if indices is None else self.history[indices]
        return self.stats.normalize(hist)[..., np.newaxis]

    def normalized_targets(self, step: int = 0, indices: Optional[np.ndarray] = None) -> np.ndarray:
        """Normalized target at horizon ``step`` (0-based): (N, n, 1)."""
        tgt = self.targets if indices is None else self.targets[indices]
        return self.stats.normalize(tgt[:, step, :])[..., np.newaxis]

    def subset(self, indices: np.ndarray) -> 'WindowedDataset':
        indices = np.asarray(indices, dtype=int)
        times = self.target_times[indices] if self.target_times is not None else None
        return WindowedDataset(self.split, self.history[indices], self.targets[indices], self.target_rows[indices], self.stats, times)


__all__ = ["SpeedSeries", "ZScoreStats", "WindowedDataset", "SPLITS"]
