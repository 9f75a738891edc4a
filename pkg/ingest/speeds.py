"""
Speed file reader and writer.

Format: CSV whose first column is `timestamp` (ISO-8601) and whose remaining columns are
one per station id. Empty cells are missing readings.
"""

import logging
from typing import Optional

import numpy as np
import pandas as pd

from errors import InputError
from normalize.models import SpeedSeries

logger = logging.getLogger(__name__)

TIMESTAMP_COLUMN = 'timestamp'


def _parse_timestamps(raw: pd.Series, path: str) -> pd.DatetimeIndex:
    stamps = pd.to_datetime(raw, errors='coerce')
    bad = np.flatnonzero(stamps.isna().to_numpy())
    if bad.size:
        # +2: header line and 1-based numbering
        raise InputError(f"{path}:{bad[0] + 2}: cannot parse timestamp '{raw.iloc[bad[0]]}'")
    index = pd.DatetimeIndex(stamps)
    if not index.is_monotonic_increasing or index.has_duplicates:
        order = np.flatnonzero(np.diff(index.values) <= np.timedelta64(0, 'ns'))
        raise InputError(f"{path}:{order[0] + 3}: timestamps must be strictly increasing")
    return index


def _parse_values(frame: pd.DataFrame, path: str) -> np.ndarray:
    values = frame.apply(pd.to_numeric, errors='coerce')
    bad = values.isna() & frame.notna()
    if bad.to_numpy().any():
        row, col = np.argwhere(bad.to_numpy())[0]
        raise InputError(f"{path}:{row + 2}: station '{frame.columns[col]}' has non-numeric value '{frame.iat[row, col]}'")
    return values.to_numpy(dtype=np.float64)


def infer_interval(index: pd.DatetimeIndex) -> Optional[int]:
    """Most common spacing between rows, in whole minutes."""
    if len(index) < 2:
        return None
    deltas = pd.Series(np.diff(index.values)).dt.total_seconds() / 60.0
    return int(round(deltas.mode().iloc[0]))


def read_speed_csv(path: str, interval_minutes: Optional[int] = None) -> SpeedSeries:
    try:
        # header=None keeps duplicate column names visible (pandas would rename them)
        raw = pd.read_csv(path, dtype=str, header=None, keep_default_na=False, na_values=[''])
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise InputError(f"{path}: cannot read speed file: {exc}") from None
    header = ['' if pd.isna(c) else str(c).strip() for c in raw.iloc[0]]
    if header[0].lower() != TIMESTAMP_COLUMN:
        raise InputError(f"{path}:1: first column must be '{TIMESTAMP_COLUMN}'")
    stations = header[1:]
    if not stations:
        raise InputError(f"{path}:1: no station columns")
    if len(set(stations)) != len(stations):
        raise InputError(f"{path}:1: duplicate station ids")
    frame = raw.iloc[1:].reset_index(drop=True)
    frame.columns = header
    index = _parse_timestamps(frame.iloc[:, 0], path)
    values = _parse_values(frame.iloc[:, 1:], path)
    interval = interval_minutes or infer_interval(index) or 5
    series = SpeedSeries(values, stations, index, int(interval))
    logger.info("Read %d row(s) x %d station(s) from %s (%d missing)", series.T, series.n, path, series.missing_count)
    return series


def render_speed_csv(series: SpeedSeries) -> str:
    frame = pd.DataFrame(series.values, columns=series.station_ids)
    if series.timestamps is not None:
        stamps = series.timestamps.strftime('%Y-%m-%dT%H:%M:%S')
    else:
        stamps = [str(i) for i in range(series.T)]
    frame.insert(0, TIMESTAMP_COLUMN, stamps)
    return frame.to_csv(index=False, lineterminator='\n', float_format='%.6f', na_rep='')


def write_speed_csv(series: SpeedSeries, path: str) -> None:
    with open(path, 'w', encoding='utf-8', newline='') as fh:
        fh.write(render_speed_csv(series))


__all__ = ["read_speed_csv", "render_speed_csv", "write_speed_csv", "infer_interval", "TIMESTAMP_COLUMN"]
