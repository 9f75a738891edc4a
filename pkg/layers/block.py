"""
ST-Conv block: temporal conv -> graph conv -> ReLU -> temporal conv -> layer norm.

Channels (C_in, C_mid, C_out): the lower temporal conv maps C_in -> C_out, the graph conv
narrows C_out -> C_mid and the upper temporal conv widens C_mid -> C_out. Each block
shortens the sequence by 2 (K_t - 1).
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from autograd import functional as F
from autograd.tensor import Tensor
from errors import DimensionError, InputError
from graph.models import LaplacianBundle
from layers import init
from layers.base import Layer, drop_batch, ensure_batched
from layers.graph_conv import GraphConvLayer
from layers.temporal_conv import TemporalConvLayer

LAYER_NORM_EPS = 1e-5


class LayerNormParams(Layer):
    """Gain and bias of shape (n, C), normalising jointly over nodes and channels."""

    def __init__(self, n: int, channels: int, eps: float = LAYER_NORM_EPS, name: str = 'norm'):
        super().__init__(name)
        self.eps = float(eps)
        self.gain = self.add_parameter('gain', init.ones((n, channels)))
        self.bias = self.add_parameter('bias', init.zeros((n, channels)))

    def forward(self, x: Tensor) -> Tensor:
        return F.layer_norm(x, self.gain, self.bias, self.eps)


class StConvBlock(Layer):
    def __init__(
        self,
        bundle: LaplacianBundle,
        channels: Sequence[int],
        kt: int = 3,
        variant: str = 'cheb',
        k: int = 3,
        rng: Optional[np.random.Generator] = None,
        name: str = 'block',
    ):
        super().__init__(name)
        if len(channels) != 3:
            raise InputError(f"block channels must be a (C_in, C_mid, C_out) triple, got {list(channels)}")
        c_in, c_mid, c_out = (int(c) for c in channels)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.channels: Tuple[int, int, int] = (c_in, c_mid, c_out)
        self.kt = int(kt)
        self.lower = self.add_child('lower', TemporalConvLayer(c_in, c_out, kt, rng, name='lower'))
        self.spatial = self.add_child('spatial', GraphConvLayer(bundle, c_out, c_mid, variant, k, rng, name='spatial'))
        self.upper = self.add_child('upper', TemporalConvLayer(c_mid, c_out, kt, rng, name='upper'))
        self.norm = self.add_child('norm', LayerNormParams(bundle.n, c_out))

    def output_length(self, steps: int) -> int:
        return steps - 2 * (self.kt - 1)

    def forward(self, v: Tensor) -> Tensor:
        v, unbatched = ensure_batched(v)
        steps = v.shape[1]
        if self.output_length(steps) < 1:
            raise DimensionError(f"ST-Conv block needs M >= {2 * (self.kt - 1) + 1} for K_t={self.kt}, got M={steps}")
        h = self.lower(v)
        h = F.relu(self.spatial(h))
        h = self.upper(h)
        return drop_batch(self.norm(h), unbatched)


__all__ = ["StConvBlock", "LayerNormParams", "LAYER_NORM_EPS"]
