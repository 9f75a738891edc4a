"""
Chronological splitting and sliding-window extraction.

Splits are contiguous in time (never shuffled). Windows have stride 1 and never cross a
segment boundary, whether it comes from a split edge or a gap in the timestamps.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from errors import InputError
from normalize.models import SPLITS, SpeedSeries, WindowedDataset, ZScoreStats
from normalize.util import compute_stats, fill_gaps, filter_workdays

logger = logging.getLogger(__name__)

SPLIT_UNITS = ('day', 'step')
DEFAULT_SPLIT = (0.6, 0.2, 0.2)


@dataclass(frozen=True)
class SplitSpec:
    ratios: Tuple[float, float, float] = DEFAULT_SPLIT
    unit: str = 'day'

    def __post_init__(self):
        if len(self.ratios) != 3:
            raise InputError(f"split needs three ratios (train, val, test), got {list(self.ratios)}")
        if any(r < 0 for r in self.ratios) or abs(sum(self.ratios) - 1.0) > 1e-6:
            raise InputError(f"split ratios must be nonnegative and sum to 1, got {list(self.ratios)}")
        if self.unit not in SPLIT_UNITS:
            raise InputError(f"split_unit must be one of {SPLIT_UNITS}, got '{self.unit}'")


def split_counts(total: int, ratios: Sequence[float]) -> Tuple[int, int, int]:
    train = int(round(total * ratios[0]))
    val = min(int(round(total * ratios[1])), total - train)
    return train, val, total - train - val


def split_rows(series: SpeedSeries, spec: SplitSpec) -> Dict[str, np.ndarray]:
    """Row indices per split. By day, whole calendar days go to one split."""
    if spec.unit == 'day' and series.timestamps is not None:
        days = series.timestamps.normalize()
        unique_days = days.unique()
        counts = split_counts(len(unique_days), spec.ratios)
        bounds = np.cumsum((0,) + counts)
        out = {}
        for name, lo, hi in zip(SPLITS, bounds[:-1], bounds[1:]):
            out[name] = np.flatnonzero(days.isin(unique_days[lo:hi]))
        logger.info("Split %d day(s) into train/val/test = %d/%d/%d", len(unique_days), *counts)
        return out
    counts = split_counts(series.T, spec.ratios)
    bounds = np.cumsum((0,) + counts)
    logger.info("Split %d step(s) into train/val/test = %d/%d/%d", series.T, *counts)
    return {name: np.arange(lo, hi) for name, lo, hi in zip(SPLITS, bounds[:-1], bounds[1:])}


def row_segments(series: SpeedSeries, rows: np.ndarray) -> List[Tuple[int, int]]:
    """Contiguous [start, stop) ranges of ``rows`` that also have no timestamp break."""
    rows = np.asarray(rows, dtype=int)
    if rows.size == 0:
        return []
    cuts = set(series.breaks().tolist())
    segments = []
    start = rows[0]
    for prev, row in zip(rows[:-1], rows[1:]):
        if row != prev + 1 or row in cuts:
            segments.append((int(start), int(prev) + 1))
            start = row
    segments.append((int(start), int(rows[-1]) + 1))
    return segments


def window_count(length: int, m: int, h: int) -> int:
    return max(0, length - m - h + 1)


def make_windows(series: SpeedSeries, m: int, h: int, segments: List[Tuple[int, int]], stats: ZScoreStats, split: str = 'train') -> WindowedDataset:
    """Stride-1 (history M, target H) pairs inside each segment."""
    if m < 1 or h < 1:
        raise InputError(f"history M and horizon H must be >= 1, got M={m}, H={h}")
    if not segments:
        raise InputError(f"{split} split is empty; nothing to window")
    histories, targets, rows, counts = [], [], [], []
    for start, stop in segments:
        if stop - start < m + h:
            raise InputError(f"{split} segment of {stop - start} step(s) at row {start} is shorter than M + H = {m + h}")
        block = series.values[start:stop]
        windows = sliding_window_view(block, window_shape=m + h, axis=0)  # (N, n, M + H)
        windows = np.moveaxis(windows, -1, 1)
        histories.append(windows[:, :m, :])
        targets.append(windows[:, m:, :])
        rows.append(np.arange(start + m, stop - h + 1))
        counts.append(windows.shape[0])
    target_rows = np.concatenate(rows)
    times = series.timestamps[target_rows] if series.timestamps is not None else None
    dataset = WindowedDataset(
        split=split,
        history=np.ascontiguousarray(np.concatenate(histories)),
        targets=np.ascontiguousarray(np.concatenate(targets)),
        target_rows=target_rows,
        stats=stats,
        target_times=times,
        segment_counts=counts,
    )
    logger.debug("%s: %d window(s) over %d segment(s)", split, len(dataset), len(segments))
    return dataset


def interpolate_segments(series: SpeedSeries, segments: Sequence[Tuple[int, int]], train_rows: np.ndarray) -> SpeedSeries:
    """
    Interpolate gaps inside each segment only, so no fill value is drawn across a split edge
    or a removed weekend. A station silent for a whole segment takes its mean training speed.
    """
    values = series.values
    if series.T == 0 or not np.isnan(values).any():
        return series
    empty = [series.station_ids[c] for c in np.flatnonzero(np.isnan(values).all(axis=0))]
    if empty:
        raise InputError(f"station(s) with no observed values: {', '.join(empty)}")
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', RuntimeWarning)
        fallback = np.nanmean(values[train_rows], axis=0) if len(train_rows) else np.full(series.n, np.nan)
    fallback = np.where(np.isnan(fallback), np.nanmean(values, axis=0), fallback)
    out = values.copy()
    silent = 0
    for start, stop in segments:
        block = fill_gaps(values[start:stop])
        gaps = np.isnan(block)
        if gaps.any():
            silent += int(gaps.all(axis=0).sum())
            block = np.where(gaps, fallback[np.newaxis, :], block)
        out[start:stop] = block
    if silent:
        logger.warning("%d station-segment(s) had no readings; filled with the station's mean training speed", silent)
    logger.info("Interpolated %d missing reading(s) within %d segment(s)", series.missing_count, len(segments))
    return series.with_values(out)


@dataclass
class PreparedData:
    """The cleaned series plus per-split windows sharing one set of training statistics."""

    series: SpeedSeries
    rows: Dict[str, np.ndarray]
    datasets: Dict[str, WindowedDataset]
    stats: ZScoreStats


def prepare_datasets(series: SpeedSeries, m: int, h: int, spec: SplitSpec = SplitSpec(), workdays_only: bool = True) -> PreparedData:
    """Filter workdays, split chronologically, interpolate per segment, fit Z-score on train and window every split."""
    if workdays_only:
        series = filter_workdays(series)
    if series.T == 0:
        raise InputError("speed series has no rows to window")
    rows = split_rows(series, spec)
    segments = {name: row_segments(series, rows[name]) for name in SPLITS}
    series = interpolate_segments(series, [seg for name in SPLITS for seg in segments[name]], rows['train'])
    stats = compute_stats(series.values[rows['train']])
    logger.info("Z-score statistics from train split: mean=%.6f std=%.6f", stats.mean, stats.std)
    datasets = {name: make_windows(series, m, h, segments[name], stats, name) for name in SPLITS}
    return PreparedData(series=series, rows=rows, datasets=datasets, stats=stats)


__all__ = [
    "SplitSpec",
    "PreparedData",
    "split_counts",
    "split_rows",
    "row_segments",
    "interpolate_segments",
    "window_count",
    "make_windows",
    "prepare_datasets",
    "SPLIT_UNITS",
]
