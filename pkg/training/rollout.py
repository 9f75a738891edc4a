"""
Inference helpers: batched forward passes on frozen parameters and multi-step rollout.

Forward passes run under no_grad. With ``workers > 1`` batches are fanned out over a thread
pool and reassembled by batch index, so the output matches the serial path exactly.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List

import numpy as np

from autograd.tensor import Tensor, no_grad
from errors import DimensionError, InputError
from normalize.models import ZScoreStats

logger = logging.getLogger(__name__)

DEFAULT_INFERENCE_BATCH = 256


def _forward_batch(model: Callable, batch: np.ndarray) -> np.ndarray:
    # grad mode is per thread, so each worker disables recording itself
    with no_grad():
        out = model(Tensor(batch))
    return out.data.reshape(batch.shape[0], -1)


def predict_batches(model: Callable, inputs: np.ndarray, batch_size: int = DEFAULT_INFERENCE_BATCH, workers: int = 1) -> np.ndarray:
    """Normalized next-step predictions (N, n) for normalized inputs (N, M, n, 1)."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 4:
        raise DimensionError(f"predict_batches expects (N, M, n, 1) inputs, got {inputs.shape}")
    if inputs.shape[0] == 0:
        return np.zeros((0, inputs.shape[2]))
    batches = [inputs[i:i + batch_size] for i in range(0, inputs.shape[0], batch_size)]
    if workers > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results: List[np.ndarray] = list(pool.map(lambda b: _forward_batch(model, b), batches))
    else:
        results = [_forward_batch(model, b) for b in batches]
    return np.concatenate(results, axis=0)


def rollout_many(
    model: Callable, history: np.ndarray, horizon: int, stats: ZScoreStats, batch_size: int = DEFAULT_INFERENCE_BATCH, workers: int = 1
) -> np.ndarray:
    """
    Iterative H-step forecasts in original units.

    history: (N, M, n) raw speeds. Each step feeds the prediction back as the newest frame
    and drops the oldest. Returns (N, H, n).
    """
    if horizon < 1:
        raise InputError(f"rollout horizon must be >= 1, got {horizon}")
    history = np.asarray(history, dtype=np.float64)
    if history.ndim != 3:
        raise DimensionError(f"rollout expects (N, M, n) histories, got {history.shape}")
    frames = stats.normalize(history)
    out = np.zeros((history.shape[0], horizon, history.shape[2]))
    for step in range(horizon):
        pred = predict_batches(model, frames[..., np.newaxis], batch_size, workers)
        out[:, step, :] = pred
        if step + 1 < horizon:
            frames = np.concatenate([frames[:, 1:, :], pred[:, np.newaxis, :]], axis=1)
    return stats.denormalize(out)


def rollout_predict(model: Callable, history: np.ndarray, horizon: int, stats: ZScoreStats) -> np.ndarray:
    """Single-window rollout: (M, n) raw history -> (H, n) raw forecast."""
    history = np.asarray(history, dtype=np.float64)
    if history.ndim != 2:
        raise DimensionError(f"rollout_predict expects an (M, n) history, got {history.shape}")
    return rollout_many(model, history[np.newaxis], horizon, stats)[0]


def direct_predict(model: Callable, history: np.ndarray, stats: ZScoreStats, batch_size: int = DEFAULT_INFERENCE_BATCH, workers: int = 1) -> np.ndarray:
    """One-shot predictions (N, n) in original units from a model trained on a single target step."""
    frames = stats.normalize(np.asarray(history, dtype=np.float64))
    return stats.denormalize(predict_batches(model, frames[..., np.newaxis], batch_size, workers))


__all__ = ["predict_batches", "rollout_many", "rollout_predict", "direct_predict", "DEFAULT_INFERENCE_BATCH"]
