"""Personalized-PageRank importance scores and fixed-size subgraph extraction.

Scores follow the teleport resolvent S = t * (I - (1 - t) * An)^-1 with An the
column-normalized adjacency, so column j of S is the stationary visit
distribution of a random walk restarting at node j. Small graphs use a dense
solve; larger ones an all-rows power iteration on the same fixed point.

Each node gets a subgraph of exactly ``k`` nodes: the node itself first, then
the k-1 best-scoring nodes of its score row. When fewer than k nodes are
reachable the index list is padded by repeating the center, so every subgraph
costs O(k^2) downstream regardless of graph shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, GraphParseError, SizeError
from .graph import Graph
from .util import parallel_map

DENSE_CUTOFF = 2000
POWER_MAX_ITERS = 1000
POWER_TOL = 1e-6          # l1 residual per row
DEFAULT_TELEPORT = 0.15


@dataclass(frozen=True)
class ImportanceScores:
    matrix: np.ndarray       # (n, n), entries >= 0
    teleport: float


@dataclass(frozen=True)
class Subgraph:
    parent_indices: np.ndarray   # (k,) parent node ids, center first
    features: np.ndarray         # (k, dim)
    adjacency: np.ndarray        # (k, k) dense 0/1
    center: int

    @property
    def size(self) -> int:
        return len(self.parent_indices)


def column_normalize(adjacency: sp.csr_array) -> sp.csr_array:
    """A @ D^-1; zero-degree columns stay all-zero."""
    deg = np.asarray(adjacency.sum(axis=0)).ravel()
    inv = np.divide(1.0, deg, out=np.zeros_like(deg, dtype=np.float64), where=deg > 0)
    return (adjacency @ sp.diags_array(inv)).tocsr()


def compute_ppr_scores(graph: Graph, teleport: float = DEFAULT_TELEPORT,
                       method: str = "auto") -> ImportanceScores:
    """Full score matrix. method: "auto" (dense below DENSE_CUTOFF), "dense",
    or "power"."""
    if not (0.0 < teleport < 1.0):
        raise ValueError(f"teleport must be in (0, 1), got {teleport}")
    if method not in ("auto", "dense", "power"):
        raise ValueError(f"unknown method {method!r}")
    n = graph.n_nodes
    normalized = column_normalize(graph.adjacency)
    if method == "auto":
        method = "dense" if n <= DENSE_CUTOFF else "power"
    if method == "dense":
        system = np.eye(n) - (1.0 - teleport) * normalized.toarray()
        scores = np.linalg.solve(system, teleport * np.eye(n))
    else:
        scores = _power_iteration_scores(normalized, teleport)
    np.maximum(scores, 0.0, out=scores)   # clear solver noise below zero
    return ImportanceScores(matrix=scores, teleport=teleport)


def _power_iteration_scores(normalized: sp.csr_array, teleport: float,
                            tol: float = POWER_TOL, max_iters: int = POWER_MAX_ITERS) -> np.ndarray:
    # Row i solves z = teleport * e_i + (1 - teleport) * z @ An; iterating all
    # rows at once is the same fixed point stacked.
    n = normalized.shape[0]
    target = teleport * np.eye(n)
    scores = target.copy()
    for _ in range(max_iters):
        updated = target + (1.0 - teleport) * (scores @ normalized)
        residual = np.abs(updated - scores).sum(axis=1).max()
        scores = updated
        if residual < tol:
            return scores
    raise ConvergenceError(
        f"power iteration did not reach residual {tol} within {max_iters} iterations")


def top_rank(score_row: np.ndarray, k: int, center: int) -> np.ndarray:
    """Indices of the k largest scores, descending, ties by ascending id;
    the center is always forced into position 0."""
    score_row = np.asarray(score_row, dtype=np.float64)
    n = score_row.shape[0]
    if k < 1:
        raise SizeError(f"k must be >= 1, got {k}")
    if k > n:
        raise SizeError(f"k={k} exceeds node count {n}")
    if not (0 <= center < n):
        raise IndexError(f"center {center} out of range [0, {n})")
    order = np.lexsort((np.arange(n), -score_row))
    order = order[order != center]
    return np.concatenate([[center], order[: k - 1]]).astype(np.int64)


def extract_subgraph(graph: Graph, indices: np.ndarray) -> Subgraph:
    """Induced feature and adjacency restriction, in index order
    (repeated indices duplicate their rows)."""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size == 0:
        raise SizeError("indices must be non-empty")
    if indices.min() < 0 or indices.max() >= graph.n_nodes:
        raise IndexError(f"subgraph index out of range [0, {graph.n_nodes})")
    sub_adj = graph.adjacency[indices, :][:, indices].toarray()
    return Subgraph(
        parent_indices=indices,
        features=graph.features[indices],
        adjacency=np.asarray(sub_adj, dtype=np.float64),
        center=int(indices[0]),
    )


def sample_all_subgraphs(graph: Graph, k: int, teleport: float = DEFAULT_TELEPORT,
                         method: str = "auto", scores: ImportanceScores | None = None,
                         workers: int | None = None) -> list[Subgraph]:
    """One size-k subgraph per node, deterministically.

    Only strictly positive scores count as reachable; the center pads the
    remainder when a component runs out of nodes.
    """
    if k < 1:
        raise SizeError(f"k must be >= 1, got {k}")
    if scores is None:
        scores = compute_ppr_scores(graph, teleport, method)
    matrix = scores.matrix
    n = graph.n_nodes

    def indices_for(node: int) -> np.ndarray:
        row = matrix[node]
        ranked = top_rank(row, min(k, n), node)
        cutoff = row.max() * 1e-12
        keep = ranked[(ranked == node) | (row[ranked] > cutoff)]
        if keep.size < k:
            keep = np.concatenate([keep, np.full(k - keep.size, node, dtype=np.int64)])
        return keep

    return parallel_map(lambda i: extract_subgraph(graph, indices_for(i)), range(n), workers)


def save_subgraph_indices(subgraphs: list[Subgraph], path) -> None:
    """Cache format: one line per node, comma-separated parent ids, center first."""
    with Path(path).open("w") as fh:
        for sub in subgraphs:
            fh.write(",".join(str(int(i)) for i in sub.parent_indices) + "\n")


def load_subgraph_indices(path, graph: Graph) -> list[Subgraph]:
    subgraphs = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        text = line.strip()
        if not text:
            continue
        try:
            ids = np.asarray([int(p) for p in text.split(",")], dtype=np.int64)
        except ValueError:
            raise GraphParseError(f"{path}:{lineno}: non-integer subgraph index") from None
        subgraphs.append(extract_subgraph(graph, ids))
    return subgraphs
