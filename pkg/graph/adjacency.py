"""
Adjacency construction from station distances and CSV readers/writers for graph files.

Weights follow the thresholded Gaussian kernel w_ij = exp(-d_ij^2 / sigma^2), kept only
when >= epsilon. Inputs are symmetrized as W := (W + W^T) / 2; a pair listed in one
direction only is mirrored first so undirected distance lists keep their full weight.
"""

import csv
import io
import logging
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from errors import InputError
from graph.models import AdjacencyConfig, WeightedGraph

logger = logging.getLogger(__name__)

DISTANCE_HEADER = ('from', 'to', 'distance')

Distance = Tuple[int, int, float]


def kernel_weight(distance: float, cfg: AdjacencyConfig) -> float:
    """exp(-d^2 / sigma^2) if that is >= epsilon, else 0."""
    w = math.exp(-(distance * distance) / cfg.sigma_sq)
    return w if w >= cfg.epsilon else 0.0


def _validate_distance(i: int, j: int, d: float, n: int) -> None:
    if not (0 <= i < n and 0 <= j < n):
        raise InputError(f"node index out of range: ({i}, {j}) for n={n}")
    if i == j:
        raise InputError(f"self-distance given for node {i}")
    if not d >= 0 or math.isinf(d):
        raise InputError(f"distance must be finite and nonnegative, got {d} for ({i}, {j})")


def build_adjacency(
    distances: Iterable[Distance], n: int, cfg: Optional[AdjacencyConfig] = None, node_ids: Optional[Sequence[str]] = None
) -> WeightedGraph:
    """Build the symmetric weighted graph for ``n`` nodes; missing pairs have weight 0."""
    cfg = cfg or AdjacencyConfig()
    if n < 1:
        raise InputError(f"graph needs at least one node, got n={n}")
    dense = np.zeros((n, n))
    given = np.zeros((n, n), dtype=bool)
    for i, j, d in distances:
        i, j, d = int(i), int(j), float(d)
        _validate_distance(i, j, d, n)
        dense[i, j] = kernel_weight(d, cfg)
        given[i, j] = True
    mirror = given.T & ~given
    dense[mirror] = dense.T[mirror]
    dense = (dense + dense.T) / 2.0
    np.fill_diagonal(dense, 0.0)
    ids = list(node_ids) if node_ids is not None else [str(k) for k in range(n)]
    graph = WeightedGraph(sparse.csr_matrix(dense), ids)
    logger.info("Built adjacency: n=%d, edges=%d (sigma_sq=%s, epsilon=%s)", n, graph.edge_count, cfg.sigma_sq, cfg.epsilon)
    return graph


def from_dense(matrix: np.ndarray, node_ids: Optional[Sequence[str]] = None) -> WeightedGraph:
    """Wrap a verbatim adjacency matrix, symmetrizing it and clearing the diagonal."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InputError(f"adjacency matrix must be square, got shape {matrix.shape}")
    if np.any(matrix < 0) or not np.all(np.isfinite(matrix)):
        raise InputError("adjacency weights must be finite and nonnegative")
    sym = (matrix + matrix.T) / 2.0
    np.fill_diagonal(sym, 0.0)
    ids = list(node_ids) if node_ids is not None else [str(k) for k in range(matrix.shape[0])]
    return WeightedGraph(sparse.csr_matrix(sym), ids)


def _parse_distance_row(row: List[str], lineno: int, path: str) -> Tuple[str, str, float]:
    if len(row) != 3:
        raise InputError(f"{path}:{lineno}: expected 3 columns (from,to,distance), got {len(row)}")
    src, dst, raw = (cell.strip() for cell in row)
    try:
        dist = float(raw)
    except ValueError:
        raise InputError(f"{path}:{lineno}: distance '{raw}' is not a number") from None
    if not src or not dst:
        raise InputError(f"{path}:{lineno}: empty station id")
    return src, dst, dist


def parse_distance_rows(lines: Iterable[str], path: str = '<distances>') -> Tuple[List[Distance], List[str]]:
    """Parse ``from,to,distance`` rows; station ids map to dense indices in first-seen order."""
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(h.strip().lower() for h in header) != DISTANCE_HEADER:
        raise InputError(f"{path}:1: expected header 'from,to,distance', got {header}")
    index: Dict[str, int] = {}
    raw: List[Tuple[str, str, float]] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        src, dst, dist = _parse_distance_row(row, lineno, path)
        if src == dst:
            raise InputError(f"{path}:{lineno}: self-distance for station '{src}'")
        if dist < 0:
            raise InputError(f"{path}:{lineno}: negative distance {dist}")
        for station in (src, dst):
            index.setdefault(station, len(index))
        raw.append((src, dst, dist))
    distances = [(index[s], index[t], d) for s, t, d in raw]
    return distances, list(index.keys())


def read_distance_csv(path: str, cfg: Optional[AdjacencyConfig] = None) -> WeightedGraph:
    with open(path, 'r', encoding='utf-8', newline='') as fh:
        distances, node_ids = parse_distance_rows(fh, path)
    if not node_ids:
        raise InputError(f"{path}: no distance rows")
    return build_adjacency(distances, len(node_ids), cfg, node_ids)


def read_adjacency_csv(path: str) -> WeightedGraph:
    """Read an n x n matrix whose header row holds the station ids."""
    with open(path, 'r', encoding='utf-8', newline='') as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise InputError(f"{path}: empty adjacency file")
    node_ids = [cell.strip() for cell in rows[0]]
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(node_ids):
            raise InputError(f"{path}:{lineno}: expected {len(node_ids)} values, got {len(row)}")
        try:
            values.append([float(cell) for cell in row])
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-numeric adjacency value") from None
    if len(values) != len(node_ids):
        raise InputError(f"{path}: expected {len(node_ids)} matrix rows, got {len(values)}")
    return from_dense(np.array(values), node_ids)


def render_adjacency_csv(graph: WeightedGraph) -> str:
    """Header of station ids, then one row per node; floats use repr so they round-trip exactly."""
    output = io.StringIO()
    writer = csv.writer(output, lineterminator='\n')
    writer.writerow(graph.node_ids)
    for row in graph.dense():
        writer.writerow([repr(float(v)) for v in row])
    return output.getvalue()


__all__ = [
    "build_adjacency",
    "from_dense",
    "kernel_weight",
    "parse_distance_rows",
    "read_distance_csv",
    "read_adjacency_csv",
    "render_adjacency_csv",
]
