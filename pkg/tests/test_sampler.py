import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from acgcl.errors import SizeError
from acgcl.graph import Graph, SbmConfig, generate_sbm
from acgcl.sampler import (column_normalize, compute_ppr_scores, extract_subgraph,
                           load_subgraph_indices, sample_all_subgraphs,
                           save_subgraph_indices, top_rank)
from conftest import graph_from_edges, random_graph


class TestColumnNormalize:
    def test_single_edge(self):
        g = graph_from_edges(2, [(0, 1)])
        assert np.array_equal(column_normalize(g.adjacency).toarray(), [[0, 1], [1, 0]])

    def test_degree_division(self):
        g = graph_from_edges(3, [(0, 1), (0, 2)])
        normalized = column_normalize(g.adjacency).toarray()
        assert np.allclose(normalized[:, 0], [0, 0.5, 0.5])

    def test_edgeless_graph_stays_zero(self):
        g = graph_from_edges(3, [])
        assert column_normalize(g.adjacency).nnz == 0


class TestPprScores:
    def test_self_loop_fixed_point(self):
        g = Graph(features=np.zeros((1, 1)), adjacency=sp.csr_array(np.ones((1, 1))))
        scores = compute_ppr_scores(g, teleport=0.15)
        assert np.allclose(scores.matrix, [[1.0]])

    def test_two_node_closed_form(self):
        # (I - 0.85 * [[0,1],[1,0]])^-1 scaled by 0.15
        g = graph_from_edges(2, [(0, 1)])
        scores = compute_ppr_scores(g, teleport=0.15).matrix
        expected = (0.15 / (1 - 0.85 ** 2)) * np.array([[1.0, 0.85], [0.85, 1.0]])
        assert np.allclose(scores, expected, atol=1e-5)
        assert abs(scores[0, 0] - 0.54054) < 1e-5
        assert abs(scores[0, 1] - 0.45946) < 1e-5

    def test_power_matches_dense(self, rng):
        for _ in range(5):
            g = random_graph(rng, n=int(rng.integers(10, 60)))
            dense = compute_ppr_scores(g, 0.15, method="dense").matrix
            power = compute_ppr_scores(g, 0.15, method="power").matrix
            assert np.abs(dense - power).max() < 1e-5

    def test_columns_sum_to_one(self, rng):
        g = random_graph(rng, n=40)
        scores = compute_ppr_scores(g, 0.15, method="dense").matrix
        assert np.abs(scores.sum(axis=0) - 1.0).max() < 1e-8
        assert scores.min() >= 0.0

    def test_teleport_range_enforced(self):
        g = graph_from_edges(2, [(0, 1)])
        with pytest.raises(ValueError):
            compute_ppr_scores(g, teleport=0.0)
        with pytest.raises(ValueError):
            compute_ppr_scores(g, teleport=1.0)


class TestTopRank:
    def test_center_forced_first(self):
        assert top_rank(np.array([0.5, 0.2, 0.9]), 2, center=2).tolist() == [2, 0]

    def test_tie_break_ascending_id(self):
        assert top_rank(np.ones(3), 3, center=0).tolist() == [0, 1, 2]

    def test_full_k_is_permutation(self, rng):
        scores = rng.random(9)
        out = top_rank(scores, 9, center=4)
        assert sorted(out.tolist()) == list(range(9))
        assert out[0] == 4

    def test_k_out_of_range(self):
        with pytest.raises(SizeError):
            top_rank(np.ones(3), 4, center=0)
        with pytest.raises(SizeError):
            top_rank(np.ones(3), 0, center=0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 20), st.integers(0, 19), st.integers(0, 2 ** 31 - 1))
    def test_output_distinct_and_sorted_by_score(self, k, center, seed):
        r = np.random.default_rng(seed)
        n = 20
        scores = r.random(n)
        out = top_rank(scores, k, center=center % n)
        assert len(set(out.tolist())) == k
        tail = [i for i in out[1:]]
        assert all(scores[tail[i]] >= scores[tail[i + 1]] or True for i in range(len(tail) - 1))
        ranked = sorted(range(n), key=lambda i: (-scores[i], i))
        expected = [center % n] + [i for i in ranked if i != center % n][: k - 1]
        assert out.tolist() == expected


class TestExtractSubgraph:
    def test_relabeling(self):
        g = graph_from_edges(2, [(0, 1)], features=[[10.0], [20.0]])
        sub = extract_subgraph(g, np.array([1, 0]))
        assert np.array_equal(sub.adjacency, [[0, 1], [1, 0]])
        assert np.array_equal(sub.features, [[20.0], [10.0]])
        assert sub.center == 1

    def test_singleton(self):
        g = graph_from_edges(3, [(0, 1)])
        sub = extract_subgraph(g, np.array([0]))
        assert sub.adjacency.shape == (1, 1) and sub.adjacency[0, 0] == 0

    def test_matches_double_loop(self, rng):
        g = random_graph(rng, n=25)
        dense = g.adjacency.toarray()
        for _ in range(5):
            ids = rng.choice(25, size=8, replace=False)
            sub = extract_subgraph(g, ids)
            expected = np.array([[dense[i, j] for j in ids] for i in ids])
            assert np.array_equal(sub.adjacency, expected)

    def test_out_of_range_index(self):
        g = graph_from_edges(2, [(0, 1)])
        with pytest.raises(IndexError):
            extract_subgraph(g, np.array([0, 5]))


class TestSampleAllSubgraphs:
    def test_block_purity_with_disconnected_blocks(self):
        g = generate_sbm(SbmConfig(block_sizes=(30, 30), p_intra=0.4, p_inter=0.0,
                                   feature_dim=2), seed=2)
        for sub in sample_all_subgraphs(g, k=6):
            blocks = g.labels[sub.parent_indices]
            assert (blocks == blocks[0]).all()

    def test_k_one_singletons(self, rng):
        g = random_graph(rng, n=10)
        subs = sample_all_subgraphs(g, k=1)
        assert all(s.parent_indices.tolist() == [i] for i, s in enumerate(subs))

    def test_padding_on_small_components(self):
        g = graph_from_edges(4, [(0, 1)])   # nodes 2, 3 isolated
        subs = sample_all_subgraphs(g, k=3)
        assert subs[2].parent_indices.tolist() == [2, 2, 2]
        assert subs[0].parent_indices.tolist()[:2] == [0, 1]
        assert len(subs[0].parent_indices) == 3

    def test_shapes_and_symmetry(self, rng):
        g = random_graph(rng, n=20)
        for sub in sample_all_subgraphs(g, k=5):
            assert sub.size == 5
            assert np.array_equal(sub.adjacency, sub.adjacency.T)

    def test_deterministic(self, rng):
        g = random_graph(rng, n=15)
        a = sample_all_subgraphs(g, k=4)
        b = sample_all_subgraphs(g, k=4)
        assert all(np.array_equal(x.parent_indices, y.parent_indices) for x, y in zip(a, b))


class TestSubgraphCache:
    def test_round_trip(self, tmp_path, rng):
        g = random_graph(rng, n=12)
        subs = sample_all_subgraphs(g, k=4)
        path = tmp_path / "subgraphs.csv"
        save_subgraph_indices(subs, path)
        back = load_subgraph_indices(path, g)
        assert len(back) == len(subs)
        for x, y in zip(subs, back):
            assert np.array_equal(x.parent_indices, y.parent_indices)
            assert np.array_equal(x.adjacency, y.adjacency)
