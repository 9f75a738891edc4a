"""
Forecast error metrics: MAE, MAPE and RMSE per horizon.

MAPE skips entries whose |truth| is below MAPE_FLOOR; the number skipped is reported.
Input where every |truth| is below the floor is rejected, so every reported metric is finite.
"""

import logging
from typing import List, Sequence

import numpy as np

from errors import DimensionError, InputError
from scoring.models import MetricReport

logger = logging.getLogger(__name__)

MAPE_FLOOR = 1e-6


def metrics(pred: np.ndarray, truth: np.ndarray, model: str = 'stgcn', horizon_steps: int = 1, interval_minutes: int = 5) -> MetricReport:
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise DimensionError(f"metrics: prediction {pred.shape} and truth {truth.shape} differ")
    if pred.size == 0:
        raise InputError("metrics: empty input")
    err = pred - truth
    mae = float(np.mean(np.abs(err)))
    rmse = float(np.sqrt(np.mean(err * err)))
    usable = np.abs(truth) >= MAPE_FLOOR
    if not usable.any():
        raise InputError(f"metrics: MAPE is undefined for {model} at horizon {horizon_steps}, every |truth| is below {MAPE_FLOOR:g}")
    excluded = int(usable.size - usable.sum())
    if excluded:
        logger.warning("MAPE for %s at horizon %d excludes %d near-zero truth value(s)", model, horizon_steps, excluded)
    mape = float(np.mean(np.abs(err[usable]) / np.abs(truth[usable])) * 100.0)
    return MetricReport(
        model=model,
        horizon_steps=int(horizon_steps),
        horizon_minutes=int(horizon_steps) * int(interval_minutes),
        mae=mae,
        mape=mape,
        rmse=rmse,
        n=int(pred.size),
        mape_excluded=excluded,
    )


def horizon_reports(pred: np.ndarray, truth: np.ndarray, horizons: Sequence[int], model: str, interval_minutes: int = 5) -> List[MetricReport]:
    """
    Reports at each horizon (1-based steps) from (N, H, n) forecasts; horizon h compares
    pred[:, h - 1] with truth[:, h - 1].
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.ndim != 3 or pred.shape != truth.shape:
        raise DimensionError(f"horizon_reports expects matching (N, H, n) arrays, got {pred.shape} and {truth.shape}")
    reports = []
    for h in horizons:
        if not 1 <= h <= pred.shape[1]:
            raise InputError(f"horizon {h} outside the forecast range 1..{pred.shape[1]}")
        reports.append(metrics(pred[:, h - 1], truth[:, h - 1], model, h, interval_minutes))
    return reports


__all__ = ["metrics", "horizon_reports", "MAPE_FLOOR"]
