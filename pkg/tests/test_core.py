import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planted.core import (
    Graph, ParameterError, ProblemParams, RandomStream, Support, Verdict,
    graph_from_dense, permute_support, split_stream, uniform_subset,
    verdict_from,
)


class TestRandomStream:
    def test_path_extension(self):
        s = RandomStream(7)
        assert split_stream(s, 0) == RandomStream(7, (0,))

    def test_determinism(self):
        a = RandomStream(7, (1, 2)).generator().standard_normal(100)
        b = RandomStream(7, (1, 2)).generator().standard_normal(100)
        assert np.array_equal(a, b)

    def test_child_independence(self):
        s = RandomStream(7)
        u0 = s.split(0).generator().random(100_000)
        u1 = s.split(1).generator().random(100_000)
        r = np.corrcoef(u0, u1)[0, 1]
        assert abs(r) <= 0.02

    def test_negative_child_rejected(self):
        with pytest.raises(ParameterError):
            RandomStream(7).split(-1)

    def test_distinct_seeds_differ(self):
        a = RandomStream(1).generator().random(8)
        b = RandomStream(2).generator().random(8)
        assert not np.array_equal(a, b)


class TestGraph:
    def test_rejects_self_loops(self):
        adj = np.ones((3, 3), dtype=bool)
        with pytest.raises(ParameterError):
            Graph(adj)

    def test_rejects_asymmetric(self):
        adj = np.zeros((3, 3), dtype=bool)
        adj[0, 1] = True
        with pytest.raises(ParameterError):
            Graph(adj)

    def test_complement_involution(self):
        adj = np.zeros((4, 4), dtype=bool)
        adj[0, 1] = adj[1, 0] = True
        g = Graph(adj)
        assert np.array_equal(g.complement().complement().adj, g.adj)

    @given(st.integers(2, 8), st.integers(0, 2 ** 20))
    @settings(max_examples=25, deadline=None)
    def test_from_dense_always_valid(self, n, seed):
        gen = RandomStream(seed).generator()
        g = graph_from_dense(gen.random((n, n)) < 0.5)
        assert not np.any(np.diag(g.adj))
        assert np.array_equal(g.adj, g.adj.T)

    def test_permuted_preserves_edges(self):
        gen = RandomStream(3).generator()
        g = graph_from_dense(gen.random((6, 6)) < 0.5)
        sigma = gen.permutation(6)
        assert g.permuted(sigma).edge_count() == g.edge_count()


class TestSupport:
    def test_sorted_distinct_required(self):
        with pytest.raises(ParameterError):
            Support((2, 1))
        with pytest.raises(ParameterError):
            Support((1, 1))
        with pytest.raises(ParameterError):
            Support((-1, 2))

    def test_from_iterable_dedups(self):
        assert Support.from_iterable([3, 1, 3]).indices == (1, 3)

    def test_permute_support_tracks_positions(self):
        sigma = np.array([2, 0, 1])  # new i holds old sigma[i]
        s = Support((2,))
        assert permute_support(s, sigma).indices == (0,)

    def test_uniform_subset_bounds(self):
        gen = RandomStream(5).generator()
        s = uniform_subset(10, 4, gen)
        assert len(s) == 4 and max(s.indices) < 10


class TestProblemParams:
    def test_k_bounds(self):
        with pytest.raises(ParameterError):
            ProblemParams("PC", n=5, k=6)

    def test_probability_bounds(self):
        with pytest.raises(ParameterError):
            ProblemParams("PDS", n=5, k=2, p=1.5)

    def test_ssbm_rho_bound(self):
        with pytest.raises(ParameterError):
            ProblemParams("SSBM", n=10, k=4, q=0.1, rho=0.2)
        ProblemParams("SSBM", n=10, k=4, q=0.5, rho=0.2)

    def test_sample_problems_need_d(self):
        with pytest.raises(ParameterError):
            ProblemParams("SPCA", n=10, k=2)
        ProblemParams("SPCA", n=10, k=2, d=4)


class TestVerdict:
    def test_consistency_enforced(self):
        with pytest.raises(ParameterError):
            Verdict("H1", statistic=0.0, threshold=1.0, direction=">=")

    def test_verdict_from(self):
        v = verdict_from(2.0, 1.0, ">=")
        assert v.decision == "H1" and v.rejects()
        v = verdict_from(0.5, 1.0, "<")
        assert v.decision == "H1"
