"""
Multi-channel graph convolution.

For every frame and every output channel j: y_j = sum_i Theta_{i,j}(L) x_i + b_j, with the
same kernel shared across frames. The Chebyshev variant expands Theta_{i,j} in T_k(L~)
for k < K; the first-order variant applies the renormalized propagation matrix once.
"""

import logging
from typing import Optional

import numpy as np

from autograd import functional as F
from autograd.tensor import Tensor
from errors import DimensionError, InputError
from graph.models import LaplacianBundle
from layers import init
from layers.base import Layer, check_channels, drop_batch, ensure_batched

logger = logging.getLogger(__name__)

VARIANTS = ('cheb', 'first_order')


class GraphConvLayer(Layer):
    """Theta *_G X with Theta of shape (K, C_i, C_o) plus a per-channel bias."""

    def __init__(
        self,
        bundle: LaplacianBundle,
        c_in: int,
        c_out: int,
        variant: str = 'cheb',
        k: int = 3,
        rng: Optional[np.random.Generator] = None,
        name: str = 'spatial',
    ):
        super().__init__(name)
        if variant not in VARIANTS:
            raise InputError(f"unknown graph conv variant '{variant}', expected one of {VARIANTS}")
        if variant == 'first_order':
            k = 1
        if k < 1:
            raise InputError(f"graph conv kernel size K must be >= 1, got {k}")
        if c_in < 1 or c_out < 1:
            raise InputError(f"graph conv channels must be >= 1, got ({c_in}, {c_out})")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.bundle = bundle
        self.variant = variant
        self.k = int(k)
        self.c_in = int(c_in)
        self.c_out = int(c_out)
        self.theta = self.add_parameter('theta', init.uniform_fan((self.k, c_in, c_out), rng))
        self.bias = self.add_parameter('bias', init.zeros((c_out,)))

    def _chebyshev_terms(self, x: Tensor) -> Tensor:
        """[T_0(L~) x, ..., T_{K-1}(L~) x] stacked on the channel axis (k-major)."""
        terms = [x]
        if self.k > 1:
            terms.append(F.propagate_nodes(x, self.bundle.scaled))
        for _ in range(2, self.k):
            nxt = F.sub(F.scale(F.propagate_nodes(terms[-1], self.bundle.scaled), 2.0), terms[-2])
            terms.append(nxt)
        return F.concat_last(terms)

    def forward(self, x: Tensor) -> Tensor:
        x, unbatched = ensure_batched(x)
        if x.shape[-2] != self.bundle.n:
            raise DimensionError(f"graph conv: input has {x.shape[-2]} nodes, graph has n={self.bundle.n} (input shape {x.shape})")
        check_channels(x, self.c_in, 'graph conv')
        if self.variant == 'cheb':
            features = self._chebyshev_terms(x)
        else:
            features = F.propagate_nodes(x, self.bundle.propagation)
        weights = F.reshape(self.theta, (self.k * self.c_in, self.c_out))
        out = F.add_bias(F.matmul(features, weights), self.bias)
        return drop_batch(out, unbatched)


__all__ = ["GraphConvLayer", "VARIANTS"]
