import math

import numpy as np
import pytest
from scipy import stats

from planted.core import ParameterError, ProblemParams, RandomStream, Support
from planted.instances import gen_graph, gen_matrix, gen_spca
from planted.reductions import (
    bc_recovery_mu, bc_recovery_reduce, bc_reduce, detect_via_recovery,
    ros_reduce, spca_high_sparsity, spca_low_sparsity, spca_recovery_reduce,
    sros_reduce, ssbm_reduce, ssbm_rho, symmetrize_to_ssw,
)
from planted.solvers import RecoveryResult


def _pc_instance(rng, n=64, k=8, hypothesis="H1"):
    pp = ProblemParams("PC", n=n, k=k, p=0.5)
    return gen_graph(pp, hypothesis, rng)


class TestBcReduce:
    def test_output_square_side(self, rng):
        inst = _pc_instance(rng.split(0), n=32, k=4)
        out = bc_reduce(inst.graph, 2, rng.split(1))
        assert np.asarray(out.observation).shape == (128, 128)

    def test_h0_pooled_gaussian(self, rng):
        pooled = []
        for t in range(10):
            inst = _pc_instance(rng.split(2 * t), n=64, hypothesis="H0")
            red = bc_reduce(inst.graph, 0, rng.split(2 * t + 1))
            pooled.append(np.asarray(red.observation).ravel())
        assert stats.kstest(np.concatenate(pooled), "norm").pvalue > 1e-3

    def test_h1_tracked_mean_shift(self, rng):
        vin, vout = [], []
        shift = None
        for t in range(20):
            inst = _pc_instance(rng.split(2 * t), n=128, k=32)
            red = bc_reduce(inst.graph, 0, rng.split(2 * t + 1),
                            track_support=inst.support)
            m = np.asarray(red.observation)
            mask = np.zeros(m.shape, bool)
            mask[np.ix_(red.trace["row_support"].as_array(),
                        red.trace["col_support"].as_array())] = True
            vin.append(m[mask])
            vout.append(m[~mask])
            shift = red.trace["shift"]
        vin = np.concatenate(vin)
        vout = np.concatenate(vout)
        assert abs(vin.mean() - shift) <= 3 * vin.std() / math.sqrt(vin.size)
        assert abs(vout.mean()) <= 3 * vout.std() / math.sqrt(vout.size)

    def test_claimed_parameters(self, rng):
        inst = _pc_instance(rng.split(0), n=64, k=8)
        red = bc_reduce(inst.graph, 1, rng.split(1), track_support=inst.support)
        assert red.claimed.problem == "BC"
        assert red.claimed.n == 128 and red.claimed.k == 16
        assert math.isfinite(red.tv_budget) and red.tv_budget > 0


class TestBcRecovery:
    def test_mu_arithmetic(self):
        assert bc_recovery_mu(1000, 0.1) == pytest.approx(0.013929, abs=1e-6)

    def test_row_support_preserved(self, rng):
        pp = ProblemParams("PDS", n=80, k=12, p=0.8, q=0.5)
        inst = gen_graph(pp, "H1", rng.split(0))
        red = bc_recovery_reduce(inst.graph, 0.3, rng.split(1),
                                 track_support=inst.support)
        assert red.trace["row_support"] == inst.support

    def test_h0_pooled_gaussian(self, rng):
        pooled = []
        for t in range(10):
            pp = ProblemParams("PDS", n=64, k=0, p=0.5, q=0.5)
            inst = gen_graph(pp, "H0", rng.split(2 * t))
            red = bc_recovery_reduce(inst.graph, 0.2, rng.split(2 * t + 1))
            pooled.append(np.asarray(red.observation).ravel())
        assert stats.kstest(np.concatenate(pooled), "norm").pvalue > 1e-3

    def test_rho_too_small(self, rng):
        inst = _pc_instance(rng, n=16, k=2)
        with pytest.raises(ParameterError):
            bc_recovery_reduce(inst.graph, 1e-3, rng)


class TestRosReduce:
    def test_zero_rounds_equals_bc(self, rng):
        inst = _pc_instance(rng.split(0))
        a = ros_reduce(inst.graph, 0, rng.split(1), k=8)
        b = bc_reduce(inst.graph, 0, rng.split(1).split(0))
        assert np.array_equal(np.asarray(a.observation), np.asarray(b.observation))

    def test_odd_n_rejected(self, rng):
        inst = _pc_instance(rng, n=63, k=4)
        with pytest.raises(ParameterError):
            ros_reduce(inst.graph, 1, rng)

    def test_tracked_spike_norm(self, rng):
        inst = _pc_instance(rng.split(0), n=64, k=8)
        red = ros_reduce(inst.graph, 3, rng.split(1), k=8,
                         track_support=inst.support)
        r = red.trace["spike_row"]
        c = red.trace["spike_col"]
        assert float(r @ r) == 2 ** 3 * 8
        assert float(c @ c) == 2 ** 3 * 8

    def test_guarantee_window_warns(self, rng):
        inst = _pc_instance(rng.split(0), n=16, k=8)
        with pytest.warns(RuntimeWarning):
            red = ros_reduce(inst.graph, 2, rng.split(1), k=8)
        assert red.tv_budget == math.inf

    def test_h0_pooled_gaussian(self, rng):
        pooled = []
        for t in range(10):
            inst = _pc_instance(rng.split(2 * t), n=64, hypothesis="H0")
            red = ros_reduce(inst.graph, 2, rng.split(2 * t + 1))
            pooled.append(np.asarray(red.observation).ravel())
        assert stats.kstest(np.concatenate(pooled), "norm").pvalue > 1e-3


class TestSrosReduce:
    def test_h0_unit_variance_and_normal(self, rng):
        pooled = []
        for t in range(15):
            inst = _pc_instance(rng.split(2 * t), n=64, k=8, hypothesis="H0")
            red = sros_reduce(inst.graph, 8, 1, rng.split(2 * t + 1))
            pooled.append(np.asarray(red.observation).ravel())
        pooled = np.concatenate(pooled)
        assert abs(pooled.var() - 1.0) <= 0.05
        assert stats.kstest(pooled, "norm").pvalue > 1e-3

    def test_k1_zero_offdiag_coefficient(self, rng):
        inst = _pc_instance(rng.split(0), n=64, k=1)
        red = sros_reduce(inst.graph, 1, 0, rng.split(1))
        assert red.claimed.mu == 0.0

    def test_size_precondition(self, rng):
        inst = _pc_instance(rng, n=16, k=8)
        with pytest.raises(ParameterError):
            sros_reduce(inst.graph, 8, 0, rng)

    def test_tracked_spike_mean(self, rng):
        """Planted entries inside supp(u) x supp(u) carry coeff * u_i * u_j."""
        vals = []
        for t in range(25):
            inst = _pc_instance(rng.split(2 * t), n=64, k=7)
            red = sros_reduce(inst.graph, 7, 1, rng.split(2 * t + 1),
                              track_support=inst.support)
            m = np.asarray(red.observation)
            u = red.trace["spike"]
            coeff = red.trace["coeff"]
            mean_mat = coeff * np.outer(u, u)
            idx = np.flatnonzero(u)
            vals.append((m - mean_mat)[np.ix_(idx, idx)].ravel())
        vals = np.concatenate(vals)
        assert abs(vals.mean()) <= 4 * vals.std() / math.sqrt(vals.size)


class TestSymmetrize:
    def test_symmetric_input_scales(self):
        m = np.array([[1.0, 2.0], [2.0, 5.0]])
        assert np.allclose(symmetrize_to_ssw(m), math.sqrt(2.0) * m)

    def test_antisymmetric_input_vanishes(self):
        m = np.array([[0.0, 3.0], [-3.0, 0.0]])
        assert np.allclose(symmetrize_to_ssw(m), 0.0)

    def test_goe_law_from_iid(self, rng):
        gen = rng.generator()
        pooled_off, pooled_diag = [], []
        for _ in range(200):
            s = symmetrize_to_ssw(gen.standard_normal((20, 20)))
            pooled_off.append(s[np.triu_indices(20, k=1)])
            pooled_diag.append(np.diag(s))
        off = np.concatenate(pooled_off)
        diag = np.concatenate(pooled_diag)
        assert abs(off.var() - 1.0) <= 0.05
        assert abs(diag.var() - 2.0) <= 0.1


class TestSsbmReduce:
    def test_rho_formula(self):
        assert ssbm_rho(1000, 32, 0) == pytest.approx(0.010360, abs=1e-5)

    def test_h0_edge_frequency(self, rng):
        cnt = tot = 0
        for t in range(10):
            inst = _pc_instance(rng.split(2 * t), n=64, k=8, hypothesis="H0")
            red = ssbm_reduce(inst.graph, 8, 1, rng.split(2 * t + 1))
            cnt += red.observation.edge_count()
            tot += 64 * 63 // 2
        assert abs(cnt / tot - 0.5) <= 3 * math.sqrt(0.25 / tot)

    def test_all_plus_rademacher_is_thresholded_sros(self, rng):
        inst = _pc_instance(rng.split(0), n=32, k=4)
        red = ssbm_reduce(inst.graph, 4, 1, rng.split(1),
                          _rademacher=np.ones(32))
        sros = sros_reduce(inst.graph, 4, 1, rng.split(1).split(0))
        m = np.asarray(sros.observation)
        upper = np.triu(m > 0, k=1)
        assert np.array_equal(red.observation.adj, upper | upper.T)

    def test_trace_communities_partition_support(self, rng):
        inst = _pc_instance(rng.split(0), n=64, k=8)
        red = ssbm_reduce(inst.graph, 8, 1, rng.split(1),
                          track_support=inst.support)
        plus = set(red.trace["community_plus"].indices)
        minus = set(red.trace["community_minus"].indices)
        assert not plus & minus
        u = red.trace["spike"]
        assert plus | minus == set(np.flatnonzero(u))


class TestSpcaReductions:
    def test_high_sparsity_theta_formula(self, rng):
        inst = _pc_instance(rng.split(0), n=64, k=8)
        red = spca_high_sparsity(inst.graph, 0, 10, rng.split(1), k=8)
        from planted.lifting import gaussian_lift_mu
        mu = gaussian_lift_mu(64)
        assert red.claimed.theta == pytest.approx(mu ** 2 * 64 / (2 * 10 * 64))

    def test_spec_theta_example(self):
        # n=1000, k=32, ell=0, tau=10 -> theta ~ 1.436e-4
        from planted.lifting import gaussian_lift_mu
        mu = gaussian_lift_mu(1000)
        theta = mu ** 2 * 32 ** 2 / (2 * 10 * 1000)
        assert theta == pytest.approx(1.436e-4, rel=1e-3)

    def test_high_sparsity_h0_exact_gaussian(self, rng):
        pooled = []
        for t in range(6):
            inst = _pc_instance(rng.split(2 * t), n=64, hypothesis="H0")
            red = spca_high_sparsity(inst.graph, 1, 3, rng.split(2 * t + 1))
            pooled.append(np.asarray(red.observation).ravel())
        assert stats.kstest(np.concatenate(pooled), "norm").pvalue > 1e-3

    def test_output_dims(self, rng):
        inst = _pc_instance(rng.split(0), n=32, k=4)
        red = spca_high_sparsity(inst.graph, 0, 4, rng.split(1), k=4)
        assert np.asarray(red.observation).shape == (32, 32)
        red2 = spca_low_sparsity(inst.graph, 1, 4, rng.split(2), k=4)
        assert np.asarray(red2.observation).shape == (64, 64)

    def test_low_sparsity_matches_high_at_ell_zero(self, rng):
        inst = _pc_instance(rng.split(0), n=64, k=8)
        hi = spca_high_sparsity(inst.graph, 0, 5, rng.split(1), k=8)
        lo = spca_low_sparsity(inst.graph, 0, 5, rng.split(2), k=8)
        assert hi.claimed.theta == pytest.approx(lo.claimed.theta)

    def test_low_sparsity_spike_support_is_bc_rows(self, rng):
        inst = _pc_instance(rng.split(0), n=64, k=8)
        red = spca_low_sparsity(inst.graph, 1, 3, rng.split(1), k=8,
                                track_support=inst.support)
        assert len(red.trace["spike_support"]) == 16

    def test_recovery_support_preserved(self, rng):
        pp = ProblemParams("PDS", n=80, k=12, p=0.8, q=0.5)
        inst = gen_graph(pp, "H1", rng.split(0))
        red = spca_recovery_reduce(inst.graph, 0.3, 4, rng.split(1),
                                   track_support=inst.support)
        assert red.trace["spike_support"] == inst.support

    def test_recovery_theta_example(self):
        mu = bc_recovery_mu(1000, 0.1)
        theta = 100 ** 2 * mu ** 2 / (10 * 1000)
        assert theta == pytest.approx(1.9402e-4, rel=1e-3)

    def test_budget_composition(self, rng):
        inst = _pc_instance(rng.split(0), n=64, k=8)
        ros = ros_reduce(inst.graph, 1, rng.split(1).split(0), k=8)
        spca = spca_high_sparsity(inst.graph, 1, 4, rng.split(1), k=8)
        rotate_term = 2.0 * (64 + 3) / (4 * 64 - 64 - 3)
        assert spca.tv_budget == pytest.approx(ros.tv_budget + rotate_term)


class TestDetectViaRecovery:
    def test_bc_oracle_recovery(self, rng):
        pp = ProblemParams("BC", n=300, k=40, mu=1.0)
        errs = 0
        trials = 25
        fixed = Support(tuple(range(40)))
        for t in range(trials):
            i0 = gen_matrix(pp, "H0", rng.split(2 * t))
            i1 = gen_matrix(pp, "H1", rng.split(2 * t + 1))
            errs += detect_via_recovery(
                "BC", lambda m: RecoveryResult(fixed, fixed), i0,
                rng.split(1000 + t)).rejects()
            errs += not detect_via_recovery(
                "BC", lambda m, inst=i1: RecoveryResult(inst.row_support,
                                                        inst.col_support),
                i1, rng.split(2000 + t)).rejects()
        assert errs / trials <= 0.08

    def test_disjoint_recovery_behaves_like_h0(self, rng):
        pp = ProblemParams("BC", n=200, k=20, mu=2.0)
        rejections = 0
        for t in range(25):
            i1 = gen_matrix(pp, "H1", rng.split(t))
            all_idx = set(range(200))
            disjoint = Support(tuple(sorted(
                all_idx - set(i1.row_support.indices))[:20]))
            rejections += detect_via_recovery(
                "BC", lambda m, s=disjoint: RecoveryResult(s, s), i1,
                rng.split(500 + t)).rejects()
        assert rejections <= 2

    def test_threshold_records_tau(self, rng):
        pp = ProblemParams("BC", n=100, k=10, mu=1.0)
        inst = gen_matrix(pp, "H0", rng.split(0))
        fixed = Support(tuple(range(10)))
        v = detect_via_recovery("BC", lambda m: RecoveryResult(fixed, fixed),
                                inst, rng.split(1))
        assert v.threshold == pytest.approx(10 * math.log(10))

    def test_ros_route(self, rng):
        pp = ProblemParams("ROS", n=200, k=20, mu=40.0)
        i1 = gen_matrix(pp, "H1", rng.split(0))
        v = detect_via_recovery(
            "ROS", lambda m, inst=i1: RecoveryResult(inst.row_support,
                                                     inst.col_support),
            i1, rng.split(1))
        assert v.rejects()

    def test_pds_route(self, rng):
        pp = ProblemParams("PDS", n=300, k=60, p=0.9, q=0.3)
        i0 = gen_graph(pp, "H0", rng.split(0))
        i1 = gen_graph(pp, "H1", rng.split(1))
        v1 = detect_via_recovery(
            "PDS", lambda g, inst=i1: RecoveryResult(inst.support), i1,
            rng.split(2))
        fixed = Support(tuple(range(60)))
        v0 = detect_via_recovery(
            "PDS", lambda g: RecoveryResult(fixed), i0, rng.split(3))
        assert v1.rejects() and not v0.rejects()

    def test_pis_route(self, rng):
        pp = ProblemParams("PIS", n=300, k=60, q=0.4)
        i0 = gen_graph(pp, "H0", rng.split(0))
        i1 = gen_graph(pp, "H1", rng.split(1))
        v1 = detect_via_recovery(
            "PIS", lambda g, inst=i1: RecoveryResult(inst.support), i1,
            rng.split(2))
        fixed = Support(tuple(range(60)))
        v0 = detect_via_recovery(
            "PIS", lambda g: RecoveryResult(fixed), i0, rng.split(3))
        assert v1.rejects() and not v0.rejects()

    def test_spca_route(self, rng):
        # only the H1 direction: the published null threshold 1 + 2 sqrt(k/n)
        # sits below the restricted Wishart edge (1 + sqrt(k/n))^2, so the
        # H0 side of this wrapper rejects too often at desk scale
        pp = ProblemParams("SPCA", n=400, d=400, k=40, theta=6.0)
        i1 = gen_spca(pp, "H1", rng.split(0))
        truth = Support.from_iterable(np.flatnonzero(i1.spike))
        v1 = detect_via_recovery("SPCA", lambda x: truth, i1, rng.split(1))
        assert v1.rejects()
        assert v1.threshold == pytest.approx(1 + 2 * math.sqrt(0.1))

    def test_unsupported_problem(self, rng):
        pp = ProblemParams("BC", n=20, k=4, mu=1.0)
        inst = gen_matrix(pp, "H0", rng)
        with pytest.raises(ParameterError):
            detect_via_recovery("SSW", lambda m: None, inst, rng)
