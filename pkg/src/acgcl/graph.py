"""Graph data model, file ingestion and synthetic block-model generation.

A :class:`Graph` is an undirected graph held as a symmetric sparse 0/1
adjacency plus a dense feature matrix. Node ids are 0-based and contiguous;
loaders reject out-of-range ids instead of remapping them, which keeps index
provenance explicit when debugging augmentations.

File formats (one directory per dataset):

* ``edges.txt``   : one ``src dst`` pair of decimal integers per line,
  whitespace separated; blank lines and lines starting with ``#`` ignored.
* ``features.csv``: one node per row, comma-separated reals; row count
  defines the number of nodes.
* ``labels.csv``  : optional, ``node_id,label`` with integer labels covering
  every node exactly once.
* ``splits.json`` : optional, ``{"train": [...], "val": [...], "test": [...]}``.

Graphs are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, GraphParseError, ShapeError
from .util import ROLE_SPLITS, rng_for

EDGE_FILE = "edges.txt"
FEATURE_FILE = "features.csv"
LABEL_FILE = "labels.csv"
SPLIT_FILE = "splits.json"


@dataclass(frozen=True)
class Splits:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


@dataclass(frozen=True)
class Graph:
    features: np.ndarray            # (n_nodes, dim) float64
    adjacency: sp.csr_array         # (n_nodes, n_nodes) symmetric 0/1
    labels: np.ndarray | None = None
    splits: Splits | None = None

    def __post_init__(self):
        self.features.setflags(write=False)
        if self.labels is not None:
            self.labels.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        if self.labels is None:
            return 0
        return int(self.labels.max()) + 1

    def degrees(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1)).ravel()


def validate_graph(graph: Graph, allow_self_loops: bool = False) -> None:
    """Raise if any structural invariant is violated."""
    n = graph.n_nodes
    adj = graph.adjacency
    if adj.shape != (n, n):
        raise ShapeError(f"adjacency is {adj.shape}, expected ({n}, {n})")
    if (adj != adj.T).nnz != 0:
        raise ShapeError("adjacency is not symmetric")
    data = adj.data
    if data.size and not np.isin(data, (0.0, 1.0)).all():
        raise ShapeError("adjacency entries must be 0 or 1")
    if not allow_self_loops and adj.diagonal().any():
        raise ShapeError("adjacency has self loops")
    if not np.isfinite(graph.features).all():
        raise ShapeError("features contain non-finite values")
    if graph.labels is not None:
        if graph.labels.shape != (n,):
            raise ShapeError(f"labels shape {graph.labels.shape}, expected ({n},)")
        if graph.labels.min() < 0:
            raise ShapeError("negative label")
    if graph.splits is not None:
        seen: set[int] = set()
        for name in ("train", "val", "test"):
            part = getattr(graph.splits, name)
            ids = set(int(i) for i in part)
            if ids & seen:
                raise ShapeError(f"split '{name}' overlaps another split")
            if part.size and (part.min() < 0 or part.max() >= n):
                raise ShapeError(f"split '{name}' has out-of-range node ids")
            seen |= ids


def _adjacency_from_edges(n: int, rows: np.ndarray, cols: np.ndarray) -> sp.csr_array:
    """Symmetrized 0/1 CSR from (possibly duplicated, directed) edge pairs."""
    if len(rows):
        r = np.concatenate([rows, cols])
        c = np.concatenate([cols, rows])
    else:
        r = c = np.zeros(0, dtype=np.int64)
    adj = sp.coo_array((np.ones(len(r)), (r, c)), shape=(n, n)).tocsr()
    adj.data = np.minimum(adj.data, 1.0)   # duplicates collapse to a single edge
    return adj


def load_graph(edge_path, feature_path, label_path=None) -> Graph:
    """Load a graph from an edge list, a feature CSV and an optional label CSV.

    The feature file defines the node count; edge endpoints must stay below
    it. Directed input edges are symmetrized, duplicate edges collapse.
    """
    features = _read_features(Path(feature_path))
    n = features.shape[0]
    rows, cols = _read_edges(Path(edge_path), n)
    labels = _read_labels(Path(label_path), n) if label_path is not None else None
    return Graph(features=features, adjacency=_adjacency_from_edges(n, rows, cols), labels=labels)


def _read_features(path: Path) -> np.ndarray:
    rows = []
    width = None
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = [p for p in text.split(",") if p.strip()]
        try:
            row = [float(p) for p in parts]
        except ValueError as exc:
            raise GraphParseError(f"{path}:{lineno}: bad feature value ({exc})") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ShapeError(f"{path}:{lineno}: row has {len(row)} values, expected {width}")
        rows.append(row)
    if not rows:
        raise GraphParseError(f"{path}: no feature rows")
    return np.asarray(rows, dtype=np.float64)


def _read_edges(path: Path, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = [], []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split()
        if len(parts) != 2:
            raise GraphParseError(f"{path}:{lineno}: expected 'src dst', got {text!r}")
        try:
            src, dst = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError(f"{path}:{lineno}: non-integer endpoint in {text!r}") from None
        if src < 0 or dst < 0:
            raise GraphParseError(f"{path}:{lineno}: negative node id")
        if src >= n_nodes or dst >= n_nodes:
            raise IndexError(f"{path}:{lineno}: edge endpoint {max(src, dst)} >= {n_nodes} nodes")
        rows.append(src)
        cols.append(dst)
    return np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64)


def _read_labels(path: Path, n_nodes: int) -> np.ndarray:
    labels = np.full(n_nodes, -1, dtype=np.int64)
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split(",")
        if len(parts) != 2:
            raise GraphParseError(f"{path}:{lineno}: expected 'node_id,label', got {text!r}")
        try:
            node, label = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError(f"{path}:{lineno}: non-integer field in {text!r}") from None
        if node < 0 or node >= n_nodes:
            raise IndexError(f"{path}:{lineno}: node id {node} out of range [0, {n_nodes})")
        if labels[node] != -1:
            raise GraphParseError(f"{path}:{lineno}: duplicate label for node {node}")
        if label < 0:
            raise GraphParseError(f"{path}:{lineno}: negative label")
        labels[node] = label
    missing = np.flatnonzero(labels == -1)
    if missing.size:
        raise GraphParseError(f"{path}: missing label for node {missing[0]}")
    return labels


def load_dataset(directory) -> Graph:
    directory = Path(directory)
    label_path = directory / LABEL_FILE
    graph = load_graph(
        directory / EDGE_FILE,
        directory / FEATURE_FILE,
        label_path if label_path.exists() else None,
    )
    split_path = directory / SPLIT_FILE
    if split_path.exists():
        raw = json.loads(split_path.read_text())
        splits = Splits(
            train=np.asarray(raw["train"], dtype=np.int64),
            val=np.asarray(raw["val"], dtype=np.int64),
            test=np.asarray(raw["test"], dtype=np.int64),
        )
        graph = Graph(graph.features, graph.adjacency, graph.labels, splits)
    return graph


def save_dataset(graph: Graph, directory) -> None:
    """Write a graph in the load format; round-trips bit-exactly."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    coo = sp.triu(graph.adjacency).tocoo()
    with (directory / EDGE_FILE).open("w") as fh:
        for i, j in zip(coo.row, coo.col):
            fh.write(f"{i} {j}\n")
    with (directory / FEATURE_FILE).open("w") as fh:
        for row in graph.features:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    if graph.labels is not None:
        with (directory / LABEL_FILE).open("w") as fh:
            for node, label in enumerate(graph.labels):
                fh.write(f"{node},{int(label)}\n")
    if graph.splits is not None:
        payload = {
            "train": [int(i) for i in graph.splits.train],
            "val": [int(i) for i in graph.splits.val],
            "test": [int(i) for i in graph.splits.test],
        }
        (directory / SPLIT_FILE).write_text(json.dumps(payload))


@dataclass(frozen=True)
class SbmConfig:
    """Stochastic block model: dense intra-block, sparse inter-block wiring,
    Gaussian features around a per-block center, labels = block ids."""
    block_sizes: tuple[int, ...]
    p_intra: float
    p_inter: float
    feature_dim: int
    feature_centers: np.ndarray | None = None   # (n_blocks, feature_dim)
    feature_noise: float = 1.0
    center_scale: float = 1.0                   # used when centers are derived

    def __post_init__(self):
        if not self.block_sizes or any(b <= 0 for b in self.block_sizes):
            raise ConfigError("block_sizes: all block sizes must be positive")
        if not (0.0 <= self.p_inter <= self.p_intra <= 1.0):
            raise ConfigError("p_inter/p_intra: need 0 <= p_inter <= p_intra <= 1")
        if self.feature_dim <= 0:
            raise ConfigError("feature_dim: must be positive")
        if self.feature_noise < 0:
            raise ConfigError("feature_noise: must be >= 0")
        if self.feature_centers is not None:
            shape = (len(self.block_sizes), self.feature_dim)
            if self.feature_centers.shape != shape:
                raise ConfigError(f"feature_centers: shape {self.feature_centers.shape}, expected {shape}")


def _default_centers(config: SbmConfig) -> np.ndarray:
    centers = np.zeros((len(config.block_sizes), config.feature_dim))
    for b in range(len(config.block_sizes)):
        centers[b, b % config.feature_dim] = config.center_scale
    return centers


def generate_sbm(config: SbmConfig, seed: int) -> Graph:
    """Sample a block-model graph; identical seeds give identical graphs."""
    rng = np.random.default_rng(seed)
    sizes = np.asarray(config.block_sizes, dtype=np.int64)
    n = int(sizes.sum())
    starts = np.concatenate([[0], np.cumsum(sizes)])
    labels = np.repeat(np.arange(len(sizes)), sizes)

    rows, cols = [], []
    for bi in range(len(sizes)):
        for bj in range(bi, len(sizes)):
            p = config.p_intra if bi == bj else config.p_inter
            draw = rng.random((sizes[bi], sizes[bj]))
            hit = draw < p
            if bi == bj:
                hit = np.triu(hit, k=1)   # no self loops, each pair once
            r, c = np.nonzero(hit)
            rows.append(r + starts[bi])
            cols.append(c + starts[bj])
    rows = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    cols = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)

    centers = config.feature_centers if config.feature_centers is not None else _default_centers(config)
    features = centers[labels] + config.feature_noise * rng.standard_normal((n, config.feature_dim))
    return Graph(
        features=features,
        adjacency=_adjacency_from_edges(n, rows, cols),
        labels=labels,
    )


def make_splits(graph: Graph, seed: int, train_frac: float = 0.3, val_frac: float = 0.2) -> Splits:
    """Deterministic disjoint train/val/test node split via a seeded shuffle."""
    if not (0 < train_frac and 0 <= val_frac and train_frac + val_frac < 1):
        raise ConfigError("split fractions must satisfy 0 < train, 0 <= val, train + val < 1")
    order = rng_for(seed, ROLE_SPLITS).permutation(graph.n_nodes)
    n_train = max(1, int(round(train_frac * graph.n_nodes)))
    n_val = int(round(val_frac * graph.n_nodes))
    return Splits(
        train=np.sort(order[:n_train]),
        val=np.sort(order[n_train:n_train + n_val]),
        test=np.sort(order[n_train + n_val:]),
    )


def with_splits(graph: Graph, splits: Splits) -> Graph:
    return Graph(graph.features, graph.adjacency, graph.labels, splits)
