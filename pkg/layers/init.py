"""
Parameter initialisation.

Weights are drawn uniformly from +-sqrt(6 / (fan_in + fan_out)) where fan_out is the
trailing extent and fan_in the product of the others. Biases start at zero, layer-norm
gains at one.
"""

from typing import Sequence

import numpy as np


def fan_limit(shape: Sequence[int]) -> float:
    shape = tuple(int(s) for s in shape)
    fan_out = shape[-1] if shape else 1
    fan_in = int(np.prod(shape[:-1])) if len(shape) > 1 else 1
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def uniform_fan(shape: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    limit = fan_limit(shape)
    return rng.uniform(-limit, limit, size=tuple(shape))


def zeros(shape: Sequence[int]) -> np.ndarray:
    return np.zeros(tuple(shape))


def ones(shape: Sequence[int]) -> np.ndarray:
    return np.ones(tuple(shape))


__all__ = ["fan_limit", "uniform_fan", "zeros", "ones"]
