"""
Graph data models: weighted adjacency, thresholds for the distance kernel, and the
bundle of Laplacian-derived operators used by the graph convolutions.
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy import sparse

from errors import InputError

# sigma^2 and epsilon used for the PeMS distance kernel
DEFAULT_SIGMA_SQ = 10.0
DEFAULT_EPSILON = 0.5


@dataclass(frozen=True)
class AdjacencyConfig:
    """Bandwidth (squared, same units as d^2) and sparsity threshold for exp(-d^2 / sigma^2)."""

    sigma_sq: float = DEFAULT_SIGMA_SQ
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not self.sigma_sq > 0:
            raise InputError(f"sigma_sq must be positive, got {self.sigma_sq}")
        if not 0 < self.epsilon < 1:
            raise InputError(f"epsilon must lie in (0, 1), got {self.epsilon}")


@dataclass
class WeightedGraph:
    """
    Symmetric, nonnegative weighted adjacency with a zero diagonal.

    ``weights`` is stored as a scipy CSR matrix; ``node_ids`` are the external station identifiers
    in index order.
    """

    weights: sparse.csr_matrix
    node_ids: List[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return int(self.weights.shape[0])

    @property
    def edge_count(self) -> int:
        """Undirected edges with nonzero weight."""
        upper = sparse.triu(self.weights, k=1)
        return int(upper.count_nonzero())

    def dense(self) -> np.ndarray:
        return self.weights.toarray()

    def permuted(self, perm: np.ndarray) -> 'WeightedGraph':
        """Relabel nodes so that new node k is old node perm[k]."""
        perm = np.asarray(perm)
        dense = self.dense()[np.ix_(perm, perm)]
        ids = [self.node_ids[i] for i in perm] if self.node_ids else []
        return WeightedGraph(sparse.csr_matrix(dense), ids)


@dataclass(frozen=True)
class LaplacianBundle:
    """
    Operators derived from one WeightedGraph.

    laplacian: I - D^-1/2 W D^-1/2 (dense, n x n)
    lambda_max: largest eigenvalue of ``laplacian``
    scaled: 2 L / lambda_max - I as CSR, used by the Chebyshev recurrence
    propagation: D~^-1/2 (W + I) D~^-1/2 as CSR, used by the first-order variant
    """

    laplacian: np.ndarray
    lambda_max: float
    scaled: sparse.csr_matrix
    propagation: sparse.csr_matrix

    @property
    def n(self) -> int:
        return int(self.laplacian.shape[0])


__all__ = ["AdjacencyConfig", "WeightedGraph", "LaplacianBundle", "DEFAULT_SIGMA_SQ", "DEFAULT_EPSILON"]
