"""
Functional API over the recorded operations.

These are the entry points the layers use; Tensor's operator overloads route here.
"""

from typing import Any, Optional, Sequence

from autograd import ops
from autograd.tensor import Tensor, as_tensor, backward
from errors import InputError

ELEMENTWISE_OPS = ('add', 'sub', 'mul', 'sigmoid', 'relu')


def tensor(data: Any, requires_grad: bool = False, name: Optional[str] = None) -> Tensor:
    return Tensor(data, requires_grad=requires_grad, name=name)


def parameter(data: Any, name: Optional[str] = None) -> Tensor:
    """A leaf tensor that owns a private copy of ``data`` and tracks gradients."""
    return Tensor(as_tensor(data).data.copy(), requires_grad=True, name=name)


def matmul(a: Any, b: Any) -> Tensor:
    return ops.MatMul.apply(a, b)


def add(a: Any, b: Any) -> Tensor:
    return ops.Add.apply(a, b)


def sub(a: Any, b: Any) -> Tensor:
    return ops.Sub.apply(a, b)


def mul(a: Any, b: Any) -> Tensor:
    return ops.Mul.apply(a, b)


def scale(a: Any, factor: float) -> Tensor:
    return ops.Scale.apply(a, factor=factor)


def sigmoid(a: Any) -> Tensor:
    return ops.Sigmoid.apply(a)


def relu(a: Any) -> Tensor:
    return ops.Relu.apply(a)


def elementwise(op: str, a: Any, b: Any = None) -> Tensor:
    """Dispatch one of the pointwise ops by name: add, sub, mul (Hadamard), sigmoid, relu."""
    if op in ('add', 'sub', 'mul'):
        if b is None:
            raise InputError(f"elementwise '{op}' needs two operands")
        return {'add': add, 'sub': sub, 'mul': mul}[op](a, b)
    if op == 'sigmoid':
        return sigmoid(a)
    if op == 'relu':
        return relu(a)
    raise InputError(f"unknown elementwise op '{op}', expected one of {ELEMENTWISE_OPS}")


def sum_all(a: Any) -> Tensor:
    return ops.SumAll.apply(a)


def mean_all(a: Any) -> Tensor:
    return ops.MeanAll.apply(a)


def reshape(a: Any, shape: Sequence[int]) -> Tensor:
    return ops.Reshape.apply(a, shape=tuple(shape))


def slice_axis(a: Any, axis: int, start: int, stop: Optional[int] = None) -> Tensor:
    return ops.SliceAxis.apply(a, axis=axis, start=start, stop=stop)


def concat_last(tensors: Sequence[Any]) -> Tensor:
    if len(tensors) == 1:
        return as_tensor(tensors[0])
    return ops.ConcatLast.apply(*tensors)


def unfold_time(a: Any, width: int) -> Tensor:
    return ops.UnfoldTime.apply(a, width=int(width))


def propagate_nodes(a: Any, matrix) -> Tensor:
    return ops.PropagateNodes.apply(a, matrix=matrix)


def add_bias(a: Any, bias: Any) -> Tensor:
    return ops.AddBias.apply(a, bias)


def layer_norm(x: Any, gain: Any, bias: Any, eps: float = 1e-5) -> Tensor:
    """gain * (x - mean) / sqrt(var + eps) + bias, statistics over the joint (node, channel) axes."""
    if eps <= 0:
        raise InputError(f"layer_norm eps must be positive, got {eps}")
    return ops.LayerNorm.apply(x, gain, bias, eps=float(eps))


__all__ = [
    "tensor",
    "parameter",
    "matmul",
    "add",
    "sub",
    "mul",
    "scale",
    "sigmoid",
    "relu",
    "elementwise",
    "sum_all",
    "mean_all",
    "reshape",
    "slice_axis",
    "concat_last",
    "unfold_time",
    "propagate_nodes",
    "add_bias",
    "layer_norm",
    "backward",
]
