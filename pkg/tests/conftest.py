import sys
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp

sys.path.insert(0, str(Path(__file__).parent))

from acgcl.graph import Graph


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def graph_from_edges(n, edges, features=None, labels=None):
    """Small test helper: build a Graph from an explicit edge list."""
    dense = np.zeros((n, n))
    for i, j in edges:
        dense[i, j] = dense[j, i] = 1.0
    if features is None:
        features = np.arange(n, dtype=float)[:, None]
    return Graph(
        features=np.asarray(features, dtype=float),
        adjacency=sp.csr_array(dense),
        labels=None if labels is None else np.asarray(labels, dtype=np.int64),
    )


def random_graph(rng, n, p=0.15, dim=4, n_classes=3, min_degree_ring=True):
    """Random undirected graph; a ring keeps every degree >= 1."""
    dense = (rng.random((n, n)) < p).astype(float)
    dense = np.triu(dense, k=1)
    dense = dense + dense.T
    if min_degree_ring:
        for i in range(n):
            j = (i + 1) % n
            dense[i, j] = dense[j, i] = 1.0
    return Graph(
        features=rng.standard_normal((n, dim)),
        adjacency=sp.csr_array(dense),
        labels=rng.integers(0, n_classes, size=n),
    )
