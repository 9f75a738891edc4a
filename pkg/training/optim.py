"""
RMSprop with per-parameter second-moment accumulators.

    s <- rho * s + (1 - rho) * g^2
    theta <- theta - lr * g / sqrt(s + eps)
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from autograd.tensor import Tensor
from errors import DimensionError, NumericError

logger = logging.getLogger(__name__)


class RMSprop:
    def __init__(self, named_params: Sequence[Tuple[str, Tensor]], rho: float = 0.9, eps: float = 1e-8):
        self.params: List[Tuple[str, Tensor]] = list(named_params)
        self.rho = float(rho)
        self.eps = float(eps)
        self.accumulators: Dict[str, np.ndarray] = {name: np.zeros_like(p.data) for name, p in self.params}

    def _gradients(self, grads: Optional[Dict[str, np.ndarray]]) -> Dict[str, np.ndarray]:
        out = {}
        for name, param in self.params:
            g = grads.get(name) if grads is not None else param.grad
            g = np.zeros_like(param.data) if g is None else np.asarray(g, dtype=np.float64)
            if g.shape != param.shape:
                raise DimensionError(f"gradient for {name} has shape {g.shape}, parameter has {param.shape}")
            out[name] = g
        return out

    def step(self, lr: float, grads: Optional[Dict[str, np.ndarray]] = None) -> None:
        """Apply one update; ``grads`` defaults to each parameter's ``.grad`` (None counts as zero)."""
        gradients = self._gradients(grads)
        bad = [name for name, g in gradients.items() if not np.all(np.isfinite(g))]
        if bad:
            # all gradients are checked before any parameter moves
            raise NumericError(f"non-finite gradient in {', '.join(bad)}")
        for name, param in self.params:
            g = gradients[name]
            s = self.accumulators[name]
            s *= self.rho
            s += (1.0 - self.rho) * g * g
            param.data -= lr * g / np.sqrt(s + self.eps)


@dataclass
class TrainState:
    """Mutable state of one training run."""

    optimizer: RMSprop
    epoch: int = 0
    lr: float = 0.0
    best_val_mae: float = float('inf')
    best_epoch: int = -1
    best_state: Dict[str, np.ndarray] = field(default_factory=dict)
    steps: int = 0


__all__ = ["RMSprop", "TrainState"]
