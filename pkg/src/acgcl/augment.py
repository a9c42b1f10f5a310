"""Pair-wise mirror-graph augmentation.

For every unordered node pair (a, b) of a subgraph we look for a mirror pair
(c, d) among the other subgraph nodes: the pair minimizing
``d(x_c, x_a) + d(x_d, x_b)`` subject to that sum being strictly below
``2 * gamma``. A *positive* mirror must match both semantic values
(y_c == y_a and y_d == y_b); a *negative* mirror must differ in at least one.
The augmented graphs copy each mirror pair's edge state onto (a, b); pairs
with no admissible mirror keep their original edge, so gamma = 0 is the
identity augmentation. Mirror graphs share the node set and features of the
source subgraph; only edges move.

The search is restricted to the subgraph's own nodes, which keeps the cost
O(k^2) per pair and O(k^4) per subgraph (chunked to O(k^3) memory).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, EmptyDistributionError, ShapeError, SizeError
from .graph import Graph
from .sampler import Subgraph

METRICS = ("euclidean", "manhattan", "cosine")
POSITIVE = "positive"
NEGATIVE = "negative"


def _check_metric(metric: str) -> None:
    if metric not in METRICS:
        raise ConfigError(f"distance_metric: unknown metric {metric!r}, expected one of {METRICS}")


def pair_distance(x_a: np.ndarray, x_b: np.ndarray, metric: str = "euclidean") -> float:
    x_a = np.asarray(x_a, dtype=np.float64)
    x_b = np.asarray(x_b, dtype=np.float64)
    if x_a.shape != x_b.shape:
        raise ShapeError(f"feature shapes differ: {x_a.shape} vs {x_b.shape}")
    _check_metric(metric)
    if metric == "euclidean":
        return float(np.sqrt(np.sum((x_a - x_b) ** 2)))
    if metric == "manhattan":
        return float(np.sum(np.abs(x_a - x_b)))
    na, nb = np.linalg.norm(x_a), np.linalg.norm(x_b)
    if na == 0.0 or nb == 0.0:
        return 1.0   # zero vectors have no direction
    return float(1.0 - np.dot(x_a, x_b) / (na * nb))


def pairwise_distances(features: np.ndarray, metric: str = "euclidean") -> np.ndarray:
    """(k, k) distance matrix between feature rows."""
    _check_metric(metric)
    x = np.asarray(features, dtype=np.float64)
    if metric == "euclidean":
        diff = x[:, None, :] - x[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=-1))
    if metric == "manhattan":
        return np.abs(x[:, None, :] - x[None, :, :]).sum(axis=-1)
    norms = np.linalg.norm(x, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    cos = (x @ x.T) / np.outer(safe, safe)
    dist = 1.0 - np.clip(cos, -1.0, 1.0)
    zero = norms == 0
    dist[zero, :] = 1.0
    dist[:, zero] = 1.0
    return dist


@dataclass(frozen=True)
class SemanticAssignment:
    """Per-node integer semantics: class labels, or equal-frequency degree buckets."""
    kind: str                 # "label" or "degree-bucket"
    values: np.ndarray        # one integer per parent-graph node
    n_buckets: int | None = None


def semantic_assignment(graph: Graph, kind: str = "label", n_buckets: int = 4) -> SemanticAssignment:
    if kind == "label":
        if graph.labels is None:
            raise ConfigError("semantics: kind 'label' requires a labeled graph")
        return SemanticAssignment(kind="label", values=graph.labels.astype(np.int64))
    if kind == "degree-bucket":
        if n_buckets < 1:
            raise ConfigError("degree_buckets: must be >= 1")
        degrees = graph.degrees()
        edges = np.quantile(degrees, np.linspace(0, 1, n_buckets + 1)[1:-1])
        values = np.searchsorted(edges, degrees, side="right")
        return SemanticAssignment(kind="degree-bucket", values=values.astype(np.int64), n_buckets=n_buckets)
    raise ConfigError(f"semantics: unknown kind {kind!r}, expected 'label' or 'degree-bucket'")


@dataclass(frozen=True)
class DistanceDistribution:
    values: np.ndarray        # sorted ascending
    sample_budget: int


def estimate_distance_distribution(subgraphs: list[Subgraph], metric: str,
                                   sample_budget: int, seed: int) -> DistanceDistribution:
    """Pool up to ``sample_budget`` uniformly sampled within-subgraph pair
    distances (distinct parent nodes only), deterministically per seed."""
    if sample_budget < 1:
        raise SizeError(f"sample_budget must be >= 1, got {sample_budget}")
    _check_metric(metric)
    pair_lists = []
    counts = []
    for sub in subgraphs:
        iu, iv = np.triu_indices(sub.size, k=1)
        distinct = sub.parent_indices[iu] != sub.parent_indices[iv]
        pair_lists.append((iu[distinct], iv[distinct]))
        counts.append(int(distinct.sum()))
    total = int(np.sum(counts))
    if total == 0:
        raise EmptyDistributionError("no subgraph contains two distinct nodes")

    rng = np.random.default_rng(seed)
    if sample_budget >= total:
        chosen = np.arange(total)
    else:
        chosen = np.sort(rng.choice(total, size=sample_budget, replace=False))

    offsets = np.concatenate([[0], np.cumsum(counts)])
    owner = np.searchsorted(offsets, chosen, side="right") - 1
    values = np.empty(len(chosen))
    for sg in np.unique(owner):
        sel = chosen[owner == sg] - offsets[sg]
        iu, iv = pair_lists[sg]
        xa = subgraphs[sg].features[iu[sel]]
        xb = subgraphs[sg].features[iv[sel]]
        values[owner == sg] = _rowwise_distance(xa, xb, metric)
    values.sort()
    return DistanceDistribution(values=values, sample_budget=sample_budget)


def _rowwise_distance(xa: np.ndarray, xb: np.ndarray, metric: str) -> np.ndarray:
    if metric == "euclidean":
        return np.sqrt(np.sum((xa - xb) ** 2, axis=1))
    if metric == "manhattan":
        return np.abs(xa - xb).sum(axis=1)
    na = np.linalg.norm(xa, axis=1)
    nb = np.linalg.norm(xb, axis=1)
    safe = (na > 0) & (nb > 0)
    out = np.ones(len(xa))
    dots = np.sum(xa * xb, axis=1)
    out[safe] = 1.0 - np.clip(dots[safe] / (na[safe] * nb[safe]), -1.0, 1.0)
    return out


def quantile(dist: DistanceDistribution, theta: float) -> float:
    """theta-th percentile (linear interpolation between order statistics)."""
    if not (0.0 <= theta <= 100.0):
        raise ValueError(f"theta must be in [0, 100], got {theta}")
    if dist.values.size == 0:
        raise EmptyDistributionError("empty distance distribution")
    return float(np.percentile(dist.values, theta))


class Replacement(NamedTuple):
    a: int
    b: int
    c: int
    d: int
    distance_sum: float
    original_edge: int
    mirror_edge: int


@dataclass
class MirrorStats:
    gamma: float
    pos_replacements: list[Replacement] = field(default_factory=list)
    neg_replacements: list[Replacement] = field(default_factory=list)
    pos_unmatched: int = 0
    neg_unmatched: int = 0


@dataclass(frozen=True)
class MirrorGraphs:
    positive_adjacency: np.ndarray
    negative_adjacency: np.ndarray
    stats: MirrorStats


def _candidate_masks(subgraph: Subgraph, semantics: SemanticAssignment):
    parents = subgraph.parent_indices
    labels = semantics.values[parents]
    parent_neq = parents[:, None] != parents[None, :]
    label_eq = labels[:, None] == labels[None, :]
    return parents, labels, parent_neq, label_eq


def find_mirror_pair(subgraph: Subgraph, pair: tuple[int, int], gamma: float,
                     semantics: SemanticAssignment, metric: str = "euclidean",
                     polarity: str = POSITIVE,
                     dmat: np.ndarray | None = None) -> tuple[int, int] | None:
    """Best admissible mirror of (a, b), or None. Positions index the
    subgraph; ties break to the lexicographically smallest (c, d)."""
    a, b = pair
    k = subgraph.size
    if not (0 <= a < k and 0 <= b < k) or a == b:
        raise ValueError(f"pair {pair} invalid for subgraph of size {k}")
    if polarity not in (POSITIVE, NEGATIVE):
        raise ValueError(f"polarity must be '{POSITIVE}' or '{NEGATIVE}'")
    if dmat is None:
        dmat = pairwise_distances(subgraph.features, metric)
    parents, labels, parent_neq, label_eq = _candidate_masks(subgraph, semantics)

    sums = dmat[:, a][:, None] + dmat[:, b][None, :]
    excluded = (parents == parents[a]) | (parents == parents[b])
    valid = (~excluded[:, None]) & (~excluded[None, :]) & parent_neq
    if polarity == POSITIVE:
        valid &= label_eq[:, a][:, None] & label_eq[:, b][None, :]
    else:
        valid &= (~label_eq[:, a][:, None]) | (~label_eq[:, b][None, :])
    valid &= sums < 2.0 * gamma
    if not valid.any():
        return None
    masked = np.where(valid, sums, np.inf)
    flat = int(np.argmin(masked))   # first minimum in row-major order = lexicographic
    return flat // k, flat % k


def mirror_augment(subgraph: Subgraph, gamma: float, semantics: SemanticAssignment,
                   metric: str = "euclidean") -> MirrorGraphs:
    """Build the positive and negative mirror adjacencies of a subgraph.

    Each unordered pair is processed exactly once; results are symmetric with
    a zero diagonal and the features are untouched.
    """
    k = subgraph.size
    adj = subgraph.adjacency
    dmat = pairwise_distances(subgraph.features, metric)
    parents, labels, parent_neq, label_eq = _candidate_masks(subgraph, semantics)
    excluded_by = parents[:, None] == parents[None, :]   # excluded_by[a, c]

    pos_adj = adj.copy()
    neg_adj = adj.copy()
    stats = MirrorStats(gamma=float(gamma))

    # Chunk over the first pair element: (b, c, d) tensors of shape (k, k, k).
    base_valid = parent_neq[None, :, :]                   # c != d by parent
    for a in range(k):
        # sums[b, c, d] = dmat[a, c] + dmat[b, d]
        sums = dmat[a][None, :, None] + dmat[:, None, :]
        ok_c = ~(excluded_by[a][None, :] | excluded_by)   # ok_c[b, c]
        valid = ok_c[:, :, None] & ok_c[:, None, :] & base_valid & (sums < 2.0 * gamma)
        pos_valid = valid & label_eq[a][None, :, None] & label_eq[:, None, :]
        neg_valid = valid & ((~label_eq[a])[None, :, None] | (~label_eq)[:, None, :])
        for mask, target, replaced, unmatched_attr in (
            (pos_valid, pos_adj, stats.pos_replacements, "pos_unmatched"),
            (neg_valid, neg_adj, stats.neg_replacements, "neg_unmatched"),
        ):
            masked = np.where(mask, sums, np.inf).reshape(k, k * k)
            best = masked.min(axis=1)
            best_flat = masked.argmin(axis=1)
            for b in range(a + 1, k):
                if not parent_neq[a, b]:
                    continue   # padded duplicates are not a real pair
                if np.isfinite(best[b]):
                    c, d = int(best_flat[b] // k), int(best_flat[b] % k)
                    edge = adj[c, d]
                    target[a, b] = target[b, a] = edge
                    replaced.append(Replacement(a, b, c, d, float(best[b]),
                                                int(adj[a, b]), int(edge)))
                else:
                    setattr(stats, unmatched_attr, getattr(stats, unmatched_attr) + 1)

    np.fill_diagonal(pos_adj, 0.0)
    np.fill_diagonal(neg_adj, 0.0)
    return MirrorGraphs(positive_adjacency=pos_adj, negative_adjacency=neg_adj, stats=stats)
