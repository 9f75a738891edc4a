"""
Graph package: distance-kernel adjacency and spectral operators.
"""

from .models import AdjacencyConfig, WeightedGraph, LaplacianBundle
from .adjacency import build_adjacency, read_distance_csv, read_adjacency_csv
from .spectral import normalized_laplacian, cheb_filter, spectral_oracle, first_order_propagate

__all__ = [
    "AdjacencyConfig",
    "WeightedGraph",
    "LaplacianBundle",
    "build_adjacency",
    "read_distance_csv",
    "read_adjacency_csv",
    "normalized_laplacian",
    "cheb_filter",
    "spectral_oracle",
    "first_order_propagate",
]
