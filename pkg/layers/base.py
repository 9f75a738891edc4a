"""
Minimal container for trainable layers.

A Layer owns named parameter tensors and child layers, both kept in registration
order so that parameter listings, initialisation and checkpoints are deterministic.
"""

from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from autograd import functional as F
from autograd.tensor import Tensor, as_tensor
from errors import DimensionError, InputError


class Layer:
    def __init__(self, name: str = ''):
        self.name = name
        self._params: Dict[str, Tensor] = {}
        self._children: Dict[str, 'Layer'] = {}

    def add_parameter(self, name: str, data: np.ndarray) -> Tensor:
        param = F.parameter(data, name=name)
        self._params[name] = param
        return param

    def add_child(self, name: str, layer: 'Layer') -> 'Layer':
        self._children[name] = layer
        return layer

    def named_parameters(self, prefix: str = '') -> Iterator[Tuple[str, Tensor]]:
        for name, param in self._params.items():
            yield f"{prefix}{name}", param
        for child_name, child in self._children.items():
            yield from child.named_parameters(f"{prefix}{child_name}.")

    def parameters(self) -> List[Tensor]:
        return [p for _, p in self.named_parameters()]

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state(self, state: Dict[str, np.ndarray]) -> None:
        """Copy arrays into the existing parameters; every parameter must be present with its exact shape."""
        params = dict(self.named_parameters())
        missing = [name for name in params if name not in state]
        if missing:
            raise InputError(f"state is missing parameter(s): {', '.join(missing)}")
        unknown = [name for name in state if name not in params]
        if unknown:
            raise InputError(f"state has unknown parameter(s): {', '.join(unknown)}")
        for name, param in params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != param.shape:
                raise DimensionError(f"parameter {name}: expected shape {param.shape}, got {value.shape}")
            param.data[...] = value

    def forward(self, x: Tensor) -> Tensor:
        raise NotImplementedError

    def __call__(self, x) -> Tensor:
        return self.forward(as_tensor(x))


def ensure_batched(x: Tensor, ndim: int = 4) -> Tuple[Tensor, bool]:
    """Add a leading batch axis to an unbatched input; returns (tensor, was_unbatched)."""
    if x.ndim == ndim - 1:
        return F.reshape(x, (1,) + x.shape), True
    if x.ndim != ndim:
        raise DimensionError(f"expected a {ndim - 1}-D or batched {ndim}-D input, got shape {x.shape}")
    return x, False


def drop_batch(x: Tensor, unbatched: bool) -> Tensor:
    return F.reshape(x, x.shape[1:]) if unbatched else x


def check_channels(x: Tensor, channels: int, what: Optional[str] = None) -> None:
    if x.shape[-1] != channels:
        label = what or 'layer'
        raise DimensionError(f"{label} expects {channels} input channel(s), got input of shape {x.shape}")


__all__ = ["Layer", "ensure_batched", "drop_batch", "check_channels"]
