"""
Cleaning helpers for speed series: gap interpolation, Z-score scaling and workday filtering.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from errors import InputError
from normalize.models import SpeedSeries, ZScoreStats

logger = logging.getLogger(__name__)


def fill_gaps(values: np.ndarray) -> np.ndarray:
    """Linear interpolation down each column; edge gaps take the nearest observation. All-NaN columns stay NaN."""
    frame = pd.DataFrame(values)
    return frame.interpolate(method='linear', axis=0, limit_direction='both').bfill().ffill().to_numpy(dtype=np.float64)


def interpolate_missing(series: SpeedSeries) -> SpeedSeries:
    """
    Fill NaN readings per station by linear interpolation between the nearest observed
    neighbours (in row order); leading and trailing gaps take the nearest observed value.
    """
    if series.T == 0 or not np.isnan(series.values).any():
        return series
    empty = [series.station_ids[c] for c in np.flatnonzero(np.isnan(series.values).all(axis=0))]
    if empty:
        raise InputError(f"station(s) with no observed values: {', '.join(empty)}")
    logger.info("Interpolated %d missing reading(s) across %d station(s)", series.missing_count, series.n)
    return series.with_values(fill_gaps(series.values))


def compute_stats(values: np.ndarray) -> ZScoreStats:
    """Scalar mean and population std over all entries."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise InputError("cannot compute normalization statistics of an empty series")
    if np.isnan(values).any():
        raise InputError("normalization statistics need a series without missing values")
    mean = float(values.mean())
    std = float(values.std())
    if std == 0.0:
        logger.warning("Constant series: standard deviation clamped to 1")
        std = 1.0
    return ZScoreStats(mean=mean, std=std)


def zscore(series: SpeedSeries, stats: Optional[ZScoreStats] = None) -> Tuple[SpeedSeries, ZScoreStats]:
    """Scale to (x - mean) / std; without ``stats`` they are computed from ``series`` itself."""
    stats = stats or compute_stats(series.values)
    return series.with_values(stats.normalize(series.values)), stats


def filter_workdays(series: SpeedSeries) -> SpeedSeries:
    """Drop Saturday and Sunday rows; the removed days leave a break between segments."""
    if series.timestamps is None:
        raise InputError("workday filtering needs timestamps")
    keep = np.flatnonzero(series.timestamps.dayofweek < 5)
    dropped = series.T - keep.size
    if dropped:
        logger.info("Workday filter removed %d weekend row(s)", dropped)
    if keep.size == 0:
        logger.warning("No workday rows left after filtering")
    return series.take(keep)


def align_stations(series: SpeedSeries, node_ids: Sequence[str]) -> SpeedSeries:
    """Reorder columns to the graph's node order; stations absent from the graph are dropped."""
    position = {sid: k for k, sid in enumerate(series.station_ids)}
    missing = [sid for sid in node_ids if sid not in position]
    if missing:
        raise InputError(f"speed file has no column for graph station(s): {', '.join(missing)}")
    extra = len(series.station_ids) - len(node_ids)
    if extra > 0:
        logger.warning("Ignoring %d speed column(s) with no graph node", extra)
    columns = [position[sid] for sid in node_ids]
    return SpeedSeries(series.values[:, columns], list(node_ids), series.timestamps, series.interval_minutes)


__all__ = ["fill_gaps", "interpolate_missing", "compute_stats", "zscore", "filter_workdays", "align_stations"]
