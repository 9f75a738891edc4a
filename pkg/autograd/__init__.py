"""
Autograd package: float64 tensors with tape-based reverse-mode differentiation.
"""

from .tensor import Tensor, Function, backward, no_grad, graph_node_count, reset_graph_node_count
from .functional import matmul, elementwise, layer_norm, parameter, tensor

__all__ = [
    "Tensor",
    "Function",
    "backward",
    "no_grad",
    "graph_node_count",
    "reset_graph_node_count",
    "matmul",
    "elementwise",
    "layer_norm",
    "parameter",
    "tensor",
]
