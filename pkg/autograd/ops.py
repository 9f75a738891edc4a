"""
Differentiable operations recorded by the engine.

Binary elementwise ops require equal shapes; the only implicit broadcast is a
0-d (scalar) operand. Everything the layers need beyond that (bias add over the
trailing axis, node-axis propagation, temporal unfolding) is an explicit op.
"""

from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import sparse
from scipy.special import expit

from autograd.tensor import Function
from errors import DimensionError


def _is_scalar(arr: np.ndarray) -> bool:
    return arr.ndim == 0


def _check_binary(op: str, a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape and not (_is_scalar(a) or _is_scalar(b)):
        raise DimensionError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def _reduce_to(grad: np.ndarray, like: np.ndarray) -> np.ndarray:
    """Collapse a gradient onto a scalar operand that was implicitly broadcast."""
    if _is_scalar(like) and not _is_scalar(grad):
        return np.asarray(grad.sum())
    return grad


class Add(Function):
    op = 'add'

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _check_binary(self.op, a, b)
        return a + b

    def backward(self, grad: np.ndarray):
        a, b = self.inputs
        return _reduce_to(grad, a.data), _reduce_to(grad, b.data)


class Sub(Function):
    op = 'sub'

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _check_binary(self.op, a, b)
        return a - b

    def backward(self, grad: np.ndarray):
        a, b = self.inputs
        return _reduce_to(grad, a.data), _reduce_to(-grad, b.data)


class Mul(Function):
    """Hadamard product."""

    op = 'mul'

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _check_binary(self.op, a, b)
        return a * b

    def backward(self, grad: np.ndarray):
        a, b = self.inputs
        return _reduce_to(grad * b.data, a.data), _reduce_to(grad * a.data, b.data)


class Scale(Function):
    op = 'scale'

    def forward(self, a: np.ndarray, factor: float = 1.0) -> np.ndarray:
        self.factor = float(factor)
        return a * self.factor

    def backward(self, grad: np.ndarray):
        return (grad * self.factor,)


class Sigmoid(Function):
    op = 'sigmoid'

    def forward(self, a: np.ndarray) -> np.ndarray:
        self.out = expit(a)
        return self.out

    def backward(self, grad: np.ndarray):
        return (grad * self.out * (1.0 - self.out),)


class Relu(Function):
    # relu'(0) is taken as 0
    op = 'relu'

    def forward(self, a: np.ndarray) -> np.ndarray:
        self.mask = a > 0.0
        return np.where(self.mask, a, 0.0)

    def backward(self, grad: np.ndarray):
        return (np.where(self.mask, grad, 0.0),)


class SumAll(Function):
    op = 'sum'

    def forward(self, a: np.ndarray) -> np.ndarray:
        self.shape = a.shape
        return np.asarray(a.sum())

    def backward(self, grad: np.ndarray):
        return (np.full(self.shape, float(grad)),)


class MeanAll(Function):
    op = 'mean'

    def forward(self, a: np.ndarray) -> np.ndarray:
        self.shape = a.shape
        return np.asarray(a.mean())

    def backward(self, grad: np.ndarray):
        count = max(1, int(np.prod(self.shape)))
        return (np.full(self.shape, float(grad) / count),)


class MatMul(Function):
    """(..., m, k) @ (k, p) -> (..., m, p); the right operand is never batched."""

    op = 'matmul'

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.ndim < 2 or b.ndim != 2 or a.shape[-1] != b.shape[0]:
            raise DimensionError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
        return np.matmul(a, b)

    def backward(self, grad: np.ndarray):
        a, b = self.inputs
        grad_a = np.matmul(grad, b.data.T) if a.requires_grad else None
        grad_b = None
        if b.requires_grad:
            k, p = b.data.shape
            grad_b = a.data.reshape(-1, k).T @ grad.reshape(-1, p)
        return grad_a, grad_b


class Reshape(Function):
    op = 'reshape'

    def forward(self, a: np.ndarray, shape: Sequence[int] = ()) -> np.ndarray:
        self.in_shape = a.shape
        try:
            return a.reshape(tuple(shape))
        except ValueError as exc:
            raise DimensionError(f"reshape: cannot view {a.shape} as {tuple(shape)}") from exc

    def backward(self, grad: np.ndarray):
        return (grad.reshape(self.in_shape),)


class SliceAxis(Function):
    op = 'slice'

    def forward(self, a: np.ndarray, axis: int = 0, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
        self.in_shape = a.shape
        index = [slice(None)] * a.ndim
        index[axis] = slice(start, stop)
        self.index = tuple(index)
        return a[self.index]

    def backward(self, grad: np.ndarray):
        out = np.zeros(self.in_shape)
        out[self.index] = grad
        return (out,)


class ConcatLast(Function):
    """Concatenate along the trailing axis."""

    op = 'concat'

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        lead = {arr.shape[:-1] for arr in arrays}
        if len(lead) != 1:
            raise DimensionError(f"concat: leading shapes differ {[arr.shape for arr in arrays]}")
        self.widths = [arr.shape[-1] for arr in arrays]
        return np.concatenate(arrays, axis=-1)

    def backward(self, grad: np.ndarray):
        bounds = np.cumsum(self.widths)[:-1]
        return tuple(np.split(grad, bounds, axis=-1))


class UnfoldTime(Function):
    """
    Valid temporal windows: (B, M, n, C) -> (B, M - w + 1, n, w * C).

    Trailing index is offset-major, so element [b, t, i, k * C + c] = x[b, t + k, i, c].
    """

    op = 'unfold_time'

    def forward(self, a: np.ndarray, width: int = 1) -> np.ndarray:
        if a.ndim != 4:
            raise DimensionError(f"unfold_time expects (B, M, n, C), got {a.shape}")
        batch, steps, nodes, channels = a.shape
        if width < 1 or steps < width:
            raise DimensionError(f"temporal length M={steps} is shorter than kernel K_t={width}")
        self.in_shape = a.shape
        self.width = width
        windows = sliding_window_view(a, window_shape=width, axis=1)  # (B, M', n, C, w)
        windows = np.swapaxes(windows, -1, -2)  # (B, M', n, w, C)
        return np.ascontiguousarray(windows).reshape(batch, steps - width + 1, nodes, width * channels)

    def backward(self, grad: np.ndarray):
        batch, steps, nodes, channels = self.in_shape
        out_steps = steps - self.width + 1
        split = grad.reshape(batch, out_steps, nodes, self.width, channels)
        out = np.zeros(self.in_shape)
        for k in range(self.width):
            out[:, k:k + out_steps] += split[:, :, :, k, :]
        return (out,)


class PropagateNodes(Function):
    """
    Apply a constant n x n operator along the node axis (second to last):
    out[..., i, c] = sum_j S[i, j] * x[..., j, c]. S may be a scipy sparse matrix.
    """

    op = 'propagate'

    def forward(self, a: np.ndarray, matrix=None) -> np.ndarray:
        if a.ndim < 2 or matrix.shape != (a.shape[-2], a.shape[-2]):
            raise DimensionError(f"propagate: operator {matrix.shape} does not match node axis of {a.shape}")
        self.matrix = matrix
        return self._apply(matrix, a)

    @staticmethod
    def _apply(matrix, a: np.ndarray) -> np.ndarray:
        moved = np.moveaxis(a, -2, 0)
        flat = moved.reshape(moved.shape[0], -1)
        out = matrix @ flat
        if sparse.issparse(out):
            out = out.toarray()
        return np.moveaxis(np.asarray(out).reshape(moved.shape), 0, -2)

    def backward(self, grad: np.ndarray):
        return (self._apply(self.matrix.T, grad),)


class AddBias(Function):
    """Explicit bias add over the trailing axis: (..., C) + (C,)."""

    op = 'add_bias'

    def forward(self, a: np.ndarray, bias: np.ndarray) -> np.ndarray:
        if bias.ndim != 1 or a.shape[-1] != bias.shape[0]:
            raise DimensionError(f"add_bias: bias {bias.shape} does not match trailing axis of {a.shape}")
        return a + bias

    def backward(self, grad: np.ndarray):
        return grad, grad.reshape(-1, grad.shape[-1]).sum(axis=0)


class LayerNorm(Function):
    """Normalise over the last two axes (node, channel) for every leading index."""

    op = 'layer_norm'

    def forward(self, x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float = 1e-5) -> np.ndarray:
        if x.ndim < 2 or gain.shape != x.shape[-2:] or bias.shape != x.shape[-2:]:
            raise DimensionError(f"layer_norm: input {x.shape} with gain {gain.shape} and bias {bias.shape}")
        mean = x.mean(axis=(-2, -1), keepdims=True)
        centered = x - mean
        var = (centered * centered).mean(axis=(-2, -1), keepdims=True)
        self.inv_std = 1.0 / np.sqrt(var + eps)
        self.normed = centered * self.inv_std
        self.gain = gain
        return gain * self.normed + bias

    def backward(self, grad: np.ndarray):
        count = self.normed.shape[-1] * self.normed.shape[-2]
        lead = tuple(range(grad.ndim - 2))
        grad_gain = (grad * self.normed).sum(axis=lead) if lead else grad * self.normed
        grad_bias = grad.sum(axis=lead) if lead else grad.copy()
        d_normed = grad * self.gain
        sum_d = d_normed.sum(axis=(-2, -1), keepdims=True)
        sum_dn = (d_normed * self.normed).sum(axis=(-2, -1), keepdims=True)
        grad_x = self.inv_std / count * (count * d_normed - sum_d - self.normed * sum_dn)
        return grad_x, grad_gain, grad_bias


__all__: Tuple[str, ...] = (
    "Add",
    "Sub",
    "Mul",
    "Scale",
    "Sigmoid",
    "Relu",
    "SumAll",
    "MeanAll",
    "MatMul",
    "Reshape",
    "SliceAxis",
    "ConcatLast",
    "UnfoldTime",
    "PropagateNodes",
    "AddBias",
    "LayerNorm",
)
