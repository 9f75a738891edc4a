"""
Central finite-difference gradient checking.

The analytic gradient of a scalar closure is compared against
(f(x + h) - f(x - h)) / 2h, element by element, for every checked tensor.
The error reported per tensor is ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-8).
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from autograd.tensor import Tensor, backward, no_grad

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-4


@dataclass
class GradcheckResult:
    passed: bool
    max_relative_error: float
    per_tensor: Dict[str, float] = field(default_factory=dict)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    diff = float(np.linalg.norm(analytic - numeric))
    scale = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)), 1e-8)
    return diff / scale


def numerical_gradient(fn: Callable[[], Tensor], target: Tensor, indices: Sequence[int], step: float = DEFAULT_STEP) -> np.ndarray:
    """Central differences of ``fn`` w.r.t. the flat ``indices`` of ``target.data`` (restored afterwards)."""
    flat = target.data.reshape(-1)
    out = np.zeros(len(indices))
    with no_grad():
        for pos, idx in enumerate(indices):
            original = flat[idx]
            flat[idx] = original + step
            upper = fn().item()
            flat[idx] = original - step
            lower = fn().item()
            flat[idx] = original
            out[pos] = (upper - lower) / (2.0 * step)
    return out


def check_gradients(
    fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    names: Optional[Sequence[str]] = None,
    step: float = DEFAULT_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
    points: Optional[int] = None,
    seed: int = 0,
) -> GradcheckResult:
    """
    Compare backward() against finite differences for each tensor in ``tensors``.

    ``points`` limits the comparison to that many randomly chosen elements per tensor
    (all elements when None). Tensors must be contiguous leaves (their data is
    perturbed in place).
    """
    labels: List[str] = list(names) if names else [t.name or f"tensor{i}" for i, t in enumerate(tensors)]
    for t in tensors:
        t.zero_grad()
    loss = fn()
    backward(loss)

    rng = np.random.default_rng(seed)
    per_tensor: Dict[str, float] = {}
    for label, t in zip(labels, tensors):
        size = t.size
        if points is not None and points < size:
            indices = sorted(rng.choice(size, size=points, replace=False).tolist())
        else:
            indices = list(range(size))
        analytic_full = t.grad if t.grad is not None else np.zeros_like(t.data)
        analytic = analytic_full.reshape(-1)[indices]
        numeric = numerical_gradient(fn, t, indices, step)
        per_tensor[label] = relative_error(analytic, numeric)
        logger.debug("gradcheck %s: relative error %.3e over %d element(s)", label, per_tensor[label], len(indices))

    worst = max(per_tensor.values()) if per_tensor else 0.0
    return GradcheckResult(passed=worst < tolerance, max_relative_error=worst, per_tensor=per_tensor)


__all__ = ["GradcheckResult", "check_gradients", "numerical_gradient", "relative_error"]
