"""
Gated temporal convolution.

A valid (unpadded) width-K_t convolution along time produces [P Q] with 2 C_o channels,
the same kernel applied at every node. The residual r is the input cropped to the last
M - K_t + 1 frames, projected to C_o channels when C_i != C_o. Output: (P + r) * sigmoid(Q).
"""

from typing import Optional

import numpy as np

from autograd import functional as F
from autograd.tensor import Tensor
from errors import DimensionError, InputError
from layers import init
from layers.base import Layer, check_channels, drop_batch, ensure_batched


class TemporalConvLayer(Layer):
    def __init__(self, c_in: int, c_out: int, kt: int = 3, rng: Optional[np.random.Generator] = None, name: str = 'temporal'):
        super().__init__(name)
        if kt < 1:
            raise InputError(f"temporal kernel size K_t must be >= 1, got {kt}")
        if c_in < 1 or c_out < 1:
            raise InputError(f"temporal conv channels must be >= 1, got ({c_in}, {c_out})")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.c_in = int(c_in)
        self.c_out = int(c_out)
        self.kt = int(kt)
        self.kernel = self.add_parameter('kernel', init.uniform_fan((self.kt, c_in, 2 * c_out), rng))
        self.bias = self.add_parameter('bias', init.zeros((2 * c_out,)))
        # identity residual when channel counts agree
        self.projection = None
        if c_in != c_out:
            self.projection = self.add_parameter('projection', init.uniform_fan((1, c_in, c_out), rng))

    def output_length(self, steps: int) -> int:
        return steps - self.kt + 1

    def forward(self, x: Tensor) -> Tensor:
        x, unbatched = ensure_batched(x)
        check_channels(x, self.c_in, 'temporal conv')
        steps = x.shape[1]
        if steps < self.kt:
            raise DimensionError(f"temporal length M={steps} is shorter than kernel K_t={self.kt}")
        windows = F.unfold_time(x, self.kt)
        kernel = F.reshape(self.kernel, (self.kt * self.c_in, 2 * self.c_out))
        pq = F.add_bias(F.matmul(windows, kernel), self.bias)
        p = F.slice_axis(pq, -1, 0, self.c_out)
        q = F.slice_axis(pq, -1, self.c_out, 2 * self.c_out)
        residual = F.slice_axis(x, 1, self.kt - 1, None)
        if self.projection is not None:
            residual = F.matmul(residual, F.reshape(self.projection, (self.c_in, self.c_out)))
        out = F.mul(F.add(p, residual), F.sigmoid(q))
        return drop_batch(out, unbatched)


__all__ = ["TemporalConvLayer"]
