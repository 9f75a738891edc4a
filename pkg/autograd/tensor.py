"""
Tensor and compute-graph node for the tape-based reverse-mode engine.

A Tensor wraps a float64 numpy array. When gradient tracking is enabled and an
operation consumes at least one tensor with ``requires_grad``, the result keeps a
reference to the Function that produced it. ``backward`` replays that graph in
reverse topological order and accumulates gradients into the leaf tensors.
"""

import logging
import threading
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from errors import ContractError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float, int, Sequence[float], Sequence[Sequence[float]]]

# grad mode and node counter are per thread: distinct graphs may be built concurrently
_state = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_state, 'enabled', True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the block (inference, finite differences)."""
    previous = is_grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = previous


def graph_node_count() -> int:
    """Number of graph nodes recorded on this thread since the last reset."""
    return getattr(_state, 'nodes', 0)


def reset_graph_node_count() -> None:
    _state.nodes = 0


def _record_node() -> None:
    _state.nodes = graph_node_count() + 1


class Function:
    """
    Compute-graph node: one recorded operation.

    Subclasses set ``op`` and implement ``forward`` (numpy in, numpy out) and
    ``backward`` (gradient of the output in, one gradient per input out, ``None``
    for inputs that receive no gradient). Values needed by ``backward`` are cached
    on the instance during ``forward``.
    """

    op = 'function'

    def __init__(self, *inputs: 'Tensor'):
        self.inputs: Tuple['Tensor', ...] = inputs

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError(f"forward not implemented for {self.op}")

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError(f"backward not implemented for {self.op}")

    @classmethod
    def apply(cls, *inputs: Any, **kwargs: Any) -> 'Tensor':
        tensors = tuple(as_tensor(t) for t in inputs)
        fn = cls(*tensors)
        out_data = fn.forward(*(t.data for t in tensors), **kwargs)
        track = is_grad_enabled() and any(t.requires_grad for t in tensors)
        out = Tensor(out_data, requires_grad=track)
        if track:
            out.node = fn
            _record_node()
        return out

    def __repr__(self) -> str:
        return f"<{self.op} node, {len(self.inputs)} input(s)>"


class Tensor:
    """
    Dense float64 array with optional gradient tracking.

    ``grad`` is ``None`` until a backward pass reaches this tensor; afterwards it is
    a numpy array with the same shape as ``data``.
    """

    def __init__(self, data: ArrayLike, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self.node: Optional[Function] = None
        self.name = name

    # --- introspection ---

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self.node is None

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float('nan')

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ''
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    # --- arithmetic (delegates to autograd.functional) ---

    def __add__(self, other: Any) -> 'Tensor':
        from autograd import functional as F

        return F.add(self, other)

    __radd__ = __add__

    def __sub__(self, other: Any) -> 'Tensor':
        from autograd import functional as F

        return F.sub(self, other)

    def __rsub__(self, other: Any) -> 'Tensor':
        from autograd import functional as F

        return F.sub(other, self)

    def __mul__(self, other: Any) -> 'Tensor':
        from autograd import functional as F

        if isinstance(other, (int, float)):
            return F.scale(self, float(other))
        return F.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self) -> 'Tensor':
        from autograd import functional as F

        return F.scale(self, -1.0)

    def __truediv__(self, other: float) -> 'Tensor':
        from autograd import functional as F

        return F.scale(self, 1.0 / float(other))

    def __matmul__(self, other: 'Tensor') -> 'Tensor':
        from autograd import functional as F

        return F.matmul(self, other)

    def sum(self) -> 'Tensor':
        from autograd import functional as F

        return F.sum_all(self)

    def mean(self) -> 'Tensor':
        from autograd import functional as F

        return F.mean_all(self)

    def reshape(self, *shape: int) -> 'Tensor':
        from autograd import functional as F

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.reshape(self, shape)

    def sigmoid(self) -> 'Tensor':
        from autograd import functional as F

        return F.sigmoid(self)

    def relu(self) -> 'Tensor':
        from autograd import functional as F

        return F.relu(self)


def as_tensor(value: Any) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value, requires_grad=False)


def _topological_order(root: Tensor) -> List[Tensor]:
    """Post-order over the recorded graph: every tensor appears after its inputs."""
    order: List[Tensor] = []
    visited = set()
    stack: List[Tuple[Tensor, bool]] = [(root, False)]
    while stack:
        tensor, expanded = stack.pop()
        if expanded:
            order.append(tensor)
            continue
        if id(tensor) in visited:
            continue
        visited.add(id(tensor))
        stack.append((tensor, True))
        if tensor.node is not None:
            for parent in tensor.node.inputs:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """
    Accumulate dLoss/dT into ``grad`` of every leaf tensor reachable from ``loss``.

    Each node is visited once, in reverse topological order. A tensor consumed by
    several operations receives the sum of the branch gradients, and repeated
    backward calls keep adding to existing ``grad`` buffers.
    """
    if loss.size != 1:
        raise ContractError(f"backward requires a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ContractError("loss is not connected to any tensor with requires_grad=True")

    pending: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for tensor in reversed(_topological_order(loss)):
        grad = pending.pop(id(tensor), None)
        if grad is None:
            continue
        if tensor.node is None:
            tensor.grad = grad.copy() if tensor.grad is None else tensor.grad + grad
            continue
        input_grads = tensor.node.backward(grad)
        for parent, parent_grad in zip(tensor.node.inputs, input_grads):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            pending[key] = parent_grad if key not in pending else pending[key] + parent_grad


__all__ = [
    "Tensor",
    "Function",
    "as_tensor",
    "backward",
    "no_grad",
    "is_grad_enabled",
    "graph_node_count",
    "reset_graph_node_count",
]
