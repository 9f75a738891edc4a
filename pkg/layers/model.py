"""
The full forecaster: stacked ST-Conv blocks followed by the output head.

Input (B, M, n, 1) normalized speeds, output (B, n, 1) the next-step prediction.
Unbatched inputs (M, n, 1) give (n, 1).
"""

import logging
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from autograd import functional as F
from autograd.tensor import Tensor
from errors import DimensionError, InputError
from graph.models import LaplacianBundle
from layers import init
from layers.base import Layer, check_channels, drop_batch, ensure_batched
from layers.block import StConvBlock
from layers.temporal_conv import TemporalConvLayer

logger = logging.getLogger(__name__)

DEFAULT_CHANNELS = ((1, 16, 64), (64, 16, 64))


class OutputHead(Layer):
    """Gated temporal conv collapsing the remaining frames to one, then v = Z w + b per node."""

    def __init__(self, channels: int, steps: int, rng: Optional[np.random.Generator] = None, name: str = 'head'):
        super().__init__(name)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.channels = int(channels)
        self.steps = int(steps)
        self.collapse = self.add_child('collapse', TemporalConvLayer(channels, channels, steps, rng, name='collapse'))
        self.w = self.add_parameter('w', init.uniform_fan((channels, 1), rng))
        self.b = self.add_parameter('b', init.zeros(()))

    def forward(self, x: Tensor) -> Tensor:
        x, unbatched = ensure_batched(x)
        if x.shape[1] != self.steps:
            raise DimensionError(f"output head expects {self.steps} frame(s), got input of shape {x.shape}")
        z = self.collapse(x)
        batch, _, nodes, channels = z.shape
        z = F.reshape(z, (batch, nodes, channels))
        out = F.add(F.matmul(z, self.w), self.b)
        return drop_batch(out, unbatched)


class StgcnModel(Layer):
    def __init__(
        self,
        bundle: LaplacianBundle,
        history: int = 12,
        channels: Sequence[Sequence[int]] = DEFAULT_CHANNELS,
        kt: int = 3,
        variant: str = 'cheb',
        k: int = 3,
        seed: int = 0,
        node_ids: Optional[Sequence[str]] = None,
    ):
        super().__init__('stgcn')
        if not channels:
            raise InputError("model needs at least one ST-Conv block")
        self.bundle = bundle
        self.history = int(history)
        self.kt = int(kt)
        self.variant = variant
        self.k = 1 if variant == 'first_order' else int(k)
        self.seed = int(seed)
        self.channels: List[List[int]] = [[int(c) for c in triple] for triple in channels]
        self.node_ids = list(node_ids) if node_ids is not None else [str(i) for i in range(bundle.n)]

        if self.channels[0][0] != 1:
            raise InputError(f"the first block takes the single speed channel, got C_in={self.channels[0][0]}")
        for prev, nxt in zip(self.channels, self.channels[1:]):
            if prev[2] != nxt[0]:
                raise InputError(f"block channels do not chain: {prev} -> {nxt}")

        remaining = self.history - len(self.channels) * 2 * (self.kt - 1)
        if remaining < 1:
            raise DimensionError(
                f"history M={self.history} is too short for {len(self.channels)} block(s) with K_t={self.kt}; "
                f"need M >= {len(self.channels) * 2 * (self.kt - 1) + 1}"
            )
        rng = np.random.default_rng(self.seed)
        self.blocks: List[StConvBlock] = []
        for idx, triple in enumerate(self.channels):
            block = StConvBlock(bundle, triple, self.kt, variant, self.k, rng, name=f"block{idx}")
            self.blocks.append(self.add_child(f"block{idx}", block))
        self.head = self.add_child('head', OutputHead(self.channels[-1][2], remaining, rng))
        logger.debug("Built model: %d block(s), %d parameters", len(self.blocks), self.parameter_count())

    @property
    def n(self) -> int:
        return self.bundle.n

    def frame_lengths(self) -> List[int]:
        """Temporal length after each block, then after the head."""
        lengths = []
        steps = self.history
        for block in self.blocks:
            steps = block.output_length(steps)
            lengths.append(steps)
        lengths.append(1)
        return lengths

    def forward(self, v: Tensor) -> Tensor:
        v, unbatched = ensure_batched(v)
        if v.shape[1] != self.history:
            raise DimensionError(f"model expects M={self.history} frames, got input of shape {v.shape}")
        check_channels(v, 1, 'model')
        h = v
        for block in self.blocks:
            h = block(h)
        return drop_batch(self.head(h), unbatched)

    def parameter_shapes(self) -> List[str]:
        return [f"{name}: {tuple(p.shape)}" for name, p in self.named_parameters()]

    def descriptor(self) -> Dict[str, Any]:
        """Architecture description stored alongside parameters in checkpoints."""
        return {
            'variant': self.variant,
            'history': self.history,
            'channels': self.channels,
            'kt': self.kt,
            'k': self.k,
            'seed': self.seed,
            'n': self.n,
            'node_ids': self.node_ids,
        }

    @classmethod
    def from_descriptor(cls, descriptor: Dict[str, Any], bundle: LaplacianBundle) -> 'StgcnModel':
        n = int(descriptor.get('n', bundle.n))
        if n != bundle.n:
            raise DimensionError(f"checkpoint was built for n={n} nodes, graph has n={bundle.n}")
        try:
            return cls(
                bundle,
                history=int(descriptor['history']),
                channels=descriptor['channels'],
                kt=int(descriptor['kt']),
                variant=str(descriptor['variant']),
                k=int(descriptor['k']),
                seed=int(descriptor.get('seed', 0)),
                node_ids=descriptor.get('node_ids'),
            )
        except KeyError as exc:
            raise InputError(f"model descriptor is missing key {exc}") from None


def closed_form_parameter_count(channels: Sequence[Sequence[int]], n: int, kt: int, k: int, history: int) -> int:
    """Parameter count derived from the layer shapes alone."""

    def temporal(c_in: int, c_out: int, width: int) -> int:
        return width * c_in * 2 * c_out + 2 * c_out + (c_in * c_out if c_in != c_out else 0)

    total = 0
    for c_in, c_mid, c_out in channels:
        total += temporal(c_in, c_out, kt)
        total += k * c_out * c_mid + c_mid
        total += temporal(c_mid, c_out, kt)
        total += 2 * n * c_out
    remaining = history - len(channels) * 2 * (kt - 1)
    c_last = channels[-1][2]
    total += temporal(c_last, c_last, remaining) + c_last + 1
    return total


__all__ = ["StgcnModel", "OutputHead", "closed_form_parameter_count", "DEFAULT_CHANNELS"]
