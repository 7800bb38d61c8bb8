import math

import numpy as np
import pytest
from scipy import stats

from planted.core import ParameterError, ProblemParams, RandomStream
from planted.harness import two_sample_test
from planted.instances import (
    gen_graph, gen_matrix, gen_spca, in_unit_sparse_family,
    instance_from_json, instance_to_json, sparse_sign_spike,
)


class TestGenGraph:
    def test_pc_full_clique_covers_graph(self, rng):
        pp = ProblemParams("PC", n=10, k=10, p=0.5)
        inst = gen_graph(pp, "H1", rng)
        off_diag = ~np.eye(10, dtype=bool)
        assert inst.graph.adj[off_diag].all()

    def test_pis_empty_at_q_zero(self, rng):
        pp = ProblemParams("PIS", n=50, k=5, q=0.0)
        inst = gen_graph(pp, "H0", rng)
        assert inst.graph.edge_count() == 0

    def test_pc_support_is_clique_every_sample(self, rng):
        pp = ProblemParams("PC", n=40, k=8, p=0.3)
        for t in range(5):
            inst = gen_graph(pp, "H1", rng.split(t))
            idx = inst.support.as_array()
            sub = inst.graph.adj[np.ix_(idx, idx)]
            assert sub[~np.eye(8, dtype=bool)].all()

    def test_pis_support_is_independent_set(self, rng):
        pp = ProblemParams("PIS", n=40, k=8, q=0.5)
        inst = gen_graph(pp, "H1", rng)
        idx = inst.support.as_array()
        assert not inst.graph.adj[np.ix_(idx, idx)].any()

    def test_pds_p_equals_q_indistinguishable(self, rng):
        """With p = q the H1 edge-count law equals H0's (KS over 1e4 trials)."""
        pp = ProblemParams("PDS", n=100, k=20, p=0.3, q=0.3)
        counts0, counts1 = [], []
        for t in range(10_000):
            counts0.append(gen_graph(pp, "H0", rng.split(2 * t)).graph.edge_count())
            counts1.append(gen_graph(pp, "H1", rng.split(2 * t + 1)).graph.edge_count())
        report = two_sample_test(np.array(counts0, float), np.array(counts1, float),
                                 method="ks")
        assert report.p_value > 1e-3

    def test_ssbm_community_sizes_and_support(self, rng):
        pp = ProblemParams("SSBM", n=100, k=20, q=0.5, rho=0.3, delta_ssbm=0.2)
        inst = gen_graph(pp, "H1", rng)
        s1, s2 = inst.communities
        window = 20 ** (1 - 0.2)
        assert 10 - window <= len(s1) <= 10 + window
        assert len(s1) + len(s2) == 20
        assert not set(s1.indices) & set(s2.indices)

    def test_ssbm_extremal_probabilities(self, rng):
        pp = ProblemParams("SSBM", n=60, k=30, q=0.5, rho=0.5, delta_ssbm=0.2)
        inst = gen_graph(pp, "H1", rng)
        i1 = inst.communities[0].as_array()
        i2 = inst.communities[1].as_array()
        within = inst.graph.adj[np.ix_(i1, i1)]
        assert within[~np.eye(len(i1), dtype=bool)].all()  # q + rho = 1
        assert not inst.graph.adj[np.ix_(i1, i2)].any()    # q - rho = 0

    def test_hypothesis_validation(self, rng):
        pp = ProblemParams("PC", n=10, k=2, p=0.5)
        with pytest.raises(ParameterError):
            gen_graph(pp, "h1", rng)


class TestGenMatrix:
    def test_bc_h0_mean_small(self, rng):
        pp = ProblemParams("BC", n=200, k=10, mu=1.0)
        inst = gen_matrix(pp, "H0", rng)
        assert abs(inst.matrix.mean()) <= 4.0 / 200

    def test_bc_all_planted_mean(self, rng):
        """n = k = 4, mu = 3: every entry has mean 3 (1e4 draws)."""
        pp = ProblemParams("BC", n=4, k=4, mu=3.0)
        total = np.zeros((4, 4))
        draws = 10_000
        for t in range(draws):
            total += gen_matrix(pp, "H1", rng.split(t)).matrix
        overall = total.sum() / (16 * draws)
        assert 2.9 <= overall <= 3.1

    def test_ssw_h0_goe(self, rng):
        pp = ProblemParams("SSW", n=100, k=5, mu=1.0)
        diags = []
        for t in range(1000):
            inst = gen_matrix(pp, "H0", rng.split(t))
            assert np.array_equal(inst.matrix, inst.matrix.T)
            diags.append(np.diag(inst.matrix))
        var = np.concatenate(diags).var()
        assert abs(var - 2.0) <= 0.2  # +-10%

    def test_ros_spikes_in_family(self, rng):
        pp = ProblemParams("ROS", n=100, k=9, mu=2.0)
        for t in range(5):
            inst = gen_matrix(pp, "H1", rng.split(t))
            assert in_unit_sparse_family(inst.spike_row, 9)
            assert in_unit_sparse_family(inst.spike_col, 9)

    def test_sros_symmetric_spike(self, rng):
        pp = ProblemParams("SROS", n=50, k=5, mu=2.0)
        inst = gen_matrix(pp, "H1", rng)
        assert np.array_equal(inst.spike_row, inst.spike_col)

    def test_k_above_n_rejected(self):
        with pytest.raises(ParameterError):
            ProblemParams("BC", n=5, k=6, mu=1.0)


class TestGenSpca:
    def test_theta_zero_matches_h0(self, rng):
        pp = ProblemParams("SPCA", n=2000, d=20, k=4, theta=0.0)
        h0 = gen_spca(pp, "H0", rng.split(0))
        h1 = gen_spca(pp, "H1", rng.split(1))
        report = two_sample_test(h0.samples.ravel(), h1.samples.ravel(), "ks")
        assert report.p_value > 1e-3

    def test_projected_variance_is_one_plus_theta(self, rng):
        pp = ProblemParams("SPCA", n=10_000, d=50, k=10, theta=1.5)
        inst = gen_spca(pp, "H1", rng)
        proj = inst.spike @ inst.samples
        assert abs(proj.var() - 2.5) <= 0.05 * 2.5

    def test_ubspca_spike_values(self, rng):
        pp = ProblemParams("UBSPCA", n=10, d=8, k=4, theta=1.0)
        inst = gen_spca(pp, "H1", rng)
        nz = inst.spike[inst.spike != 0]
        assert len(nz) == 4
        assert np.allclose(nz, 0.5)

    def test_uspca_signs_varied(self, rng):
        pp = ProblemParams("USPCA", n=10, d=50, k=20, theta=1.0)
        inst = gen_spca(pp, "H1", rng)
        nz = inst.spike[inst.spike != 0]
        assert set(np.sign(nz)) == {-1.0, 1.0}

    def test_spike_is_unit(self, rng):
        pp = ProblemParams("BSPCA", n=10, d=30, k=7, theta=2.0)
        inst = gen_spca(pp, "H1", rng)
        assert np.linalg.norm(inst.spike) == pytest.approx(1.0)


class TestSpikePrior:
    def test_sparse_sign_spike_norm(self, rng):
        v = sparse_sign_spike(20, 5, rng.generator())
        assert np.linalg.norm(v) == pytest.approx(1.0)
        assert np.count_nonzero(v) == 5


class TestSerialization:
    def test_graph_round_trip(self, rng):
        pp = ProblemParams("PDS", n=33, k=7, p=0.8, q=0.3)
        inst = gen_graph(pp, "H1", rng)
        back = instance_from_json(instance_to_json(inst))
        assert np.array_equal(back.graph.adj, inst.graph.adj)
        assert back.support == inst.support
        assert back.params == inst.params

    def test_matrix_round_trip_bit_exact(self, rng):
        pp = ProblemParams("ROS", n=17, k=4, mu=1.7)
        inst = gen_matrix(pp, "H1", rng)
        back = instance_from_json(instance_to_json(inst))
        assert np.array_equal(back.matrix, inst.matrix)  # exact, not approx
        assert np.array_equal(back.spike_row, inst.spike_row)

    def test_spca_round_trip_bit_exact(self, rng):
        pp = ProblemParams("UBSPCA", n=9, d=6, k=3, theta=0.7)
        inst = gen_spca(pp, "H1", rng)
        back = instance_from_json(instance_to_json(inst))
        assert np.array_equal(back.samples, inst.samples)
        assert np.array_equal(back.spike, inst.spike)

    def test_ssbm_round_trip(self, rng):
        pp = ProblemParams("SSBM", n=30, k=10, q=0.5, rho=0.2)
        inst = gen_graph(pp, "H1", rng)
        back = instance_from_json(instance_to_json(inst))
        assert back.communities == inst.communities
