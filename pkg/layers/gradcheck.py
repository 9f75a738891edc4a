"""
Finite-difference gradient checks for every layer type on small random instances.

Each case builds a layer on a random graph (n <= 6) and a random input (M <= 8), and checks
the analytic gradient of sum(out * R) for a fixed random R against central differences,
over all parameters and the input.
"""

import logging
from typing import Callable, List, Tuple

import numpy as np

from autograd import functional as F
from autograd.gradcheck import DEFAULT_TOLERANCE, GradcheckResult, check_gradients
from autograd.tensor import Tensor
from graph.adjacency import build_adjacency
from graph.models import AdjacencyConfig, LaplacianBundle
from graph.spectral import normalized_laplacian
from layers.base import Layer
from layers.block import LayerNormParams, StConvBlock
from layers.graph_conv import GraphConvLayer
from layers.model import OutputHead, StgcnModel
from layers.temporal_conv import TemporalConvLayer

logger = logging.getLogger(__name__)

GRADCHECK_NODES = 5
GRADCHECK_STEPS = 8


def random_bundle(n: int, rng: np.random.Generator) -> LaplacianBundle:
    """Random geometric graph on [0, 3]^2 with the default distance kernel."""
    points = rng.uniform(0.0, 3.0, size=(n, 2))
    distances = [(i, j, float(np.linalg.norm(points[i] - points[j]))) for i in range(n) for j in range(i + 1, n)]
    return normalized_laplacian(build_adjacency(distances, n, AdjacencyConfig()))


def _perturb(layer: Layer, rng: np.random.Generator) -> None:
    # move biases and norm parameters off their initial values so every term is exercised
    for _, param in layer.named_parameters():
        param.data += rng.normal(0.0, 0.1, size=param.shape)


def check_layer(layer: Layer, x_shape: Tuple[int, ...], rng: np.random.Generator, tolerance: float = DEFAULT_TOLERANCE) -> GradcheckResult:
    _perturb(layer, rng)
    x = F.parameter(rng.normal(size=x_shape), name='input')
    weights = rng.normal(size=layer(x).shape)

    def loss() -> Tensor:
        return F.sum_all(F.mul(layer(x), weights))

    names, tensors = zip(*([('input', x)] + list(layer.named_parameters())))
    return check_gradients(loss, list(tensors), names=list(names), tolerance=tolerance)


def layer_cases(seed: int = 0) -> List[Tuple[str, Callable[[np.random.Generator], Tuple[Layer, Tuple[int, ...]]]]]:
    n, m = GRADCHECK_NODES, GRADCHECK_STEPS

    def cheb(rng):
        return GraphConvLayer(random_bundle(n, rng), 2, 3, 'cheb', 3, rng), (2, 3, n, 2)

    def first_order(rng):
        return GraphConvLayer(random_bundle(n, rng), 2, 3, 'first_order', 1, rng), (2, 3, n, 2)

    def temporal(rng):
        return TemporalConvLayer(2, 3, 3, rng), (2, m, n, 2)

    def temporal_identity_residual(rng):
        return TemporalConvLayer(3, 3, 2, rng), (2, 4, n, 3)

    def norm(rng):
        return LayerNormParams(n, 3), (2, 4, n, 3)

    def block(rng):
        return StConvBlock(random_bundle(n, rng), (2, 2, 3), 2, 'cheb', 2, rng), (2, 5, n, 2)

    def head(rng):
        return OutputHead(3, 4, rng), (2, 4, n, 3)

    def model(rng):
        return StgcnModel(random_bundle(n, rng), history=m, channels=((1, 2, 3), (3, 2, 3)), kt=2, k=2, seed=seed), (2, m, n, 1)

    return [
        ('graph_conv_cheb', cheb),
        ('graph_conv_first_order', first_order),
        ('temporal_conv', temporal),
        ('temporal_conv_identity_residual', temporal_identity_residual),
        ('layer_norm', norm),
        ('st_block', block),
        ('output_head', head),
        ('model', model),
    ]


def run_layer_gradchecks(seed: int = 0, tolerance: float = DEFAULT_TOLERANCE) -> List[Tuple[str, GradcheckResult]]:
    results = []
    for name, build in layer_cases(seed):
        rng = np.random.default_rng([seed, len(results)])
        layer, x_shape = build(rng)
        result = check_layer(layer, x_shape, rng, tolerance)
        logger.info("gradcheck %s: max relative error %.3e (%s)", name, result.max_relative_error, 'PASS' if result.passed else 'FAIL')
        results.append((name, result))
    return results


__all__ = ["run_layer_gradchecks", "check_layer", "layer_cases", "random_bundle"]
