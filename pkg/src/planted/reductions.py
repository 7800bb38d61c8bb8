"""End-to-end composite reductions and the detection-from-recovery wrappers."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from math import comb
from typing import Callable, Optional, Union

import numpy as np
from scipy.stats import norm

from .core import (
    Graph, ParameterError, ProblemParams, RandomStream, Support, Verdict,
    require_square, verdict_from,
)
from .cloning import (
    gaussian_clone, pds_clone, pds_clone_pds_preset, pds_clone_pis_preset,
    random_rotate, reflection_clone,
)
from .instances import PlantedGraphInstance, PlantedMatrixInstance, SpcaInstance
from .lifting import (
    gaussian_family, gaussian_lift, gaussian_lift_mu, lift_tv_budget,
    _kernel_matrix,
)
from .linalg import top_eigenvalue, top_singular_value
from .rejection import gaussian_kernel_spec, make_kernel_g


@dataclass(frozen=True)
class ReductionOutput:
    """Observation plus the target-problem claim and error bookkeeping.

    tv_budget sums the stages' stated total-variation bounds with unit
    constants (asymptotic O(.) factors dropped); it is inf when a stage ran
    outside its guarantee window and nan when the planted size needed for the
    bookkeeping was not supplied.
    """

    observation: Union[Graph, np.ndarray]
    claimed: ProblemParams
    tv_budget: float
    trace: Optional[dict] = None


def _rk_budget(n: int) -> float:
    return comb(n, 2) * n ** (-3.0)


def _perm_step_budget(shift: float) -> float:
    # sqrt(chi^2(N(0,1), N(shift,1)) / 2) with the paper's e^(2 shift^2) bookkeeping
    return math.sqrt(math.expm1(2.0 * shift * shift) / 2.0)


# ---------------------------------------------------------------------------
# Biclustering
# ---------------------------------------------------------------------------

def _antisymmetrize(w: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    n = w.shape[0]
    low = np.tril(gen.standard_normal((n, n)), k=-1)
    a = low - low.T
    return (w + a) / math.sqrt(2.0)


def bc_reduce(g: Graph, ell: int, rng: RandomStream,
              track_support: Optional[Support] = None) -> ReductionOutput:
    """PC(n, k, 1/2) -> BC(2^ell n, 2^ell k, 2^(-ell-1/2) mu).

    Gaussian lifting without thresholding, fresh N(0, 2) diagonal,
    antisymmetrization, then a one-sided column relabeling.
    """
    n = g.n
    lifted = gaussian_lift(g, ell, rng.split(0), emit="matrix",
                           track_support=track_support)
    if track_support is not None:
        w, support = lifted
    else:
        w, support = lifted, None
    gen = rng.split(1).generator()
    w = w.copy()
    nn = w.shape[0]
    np.fill_diagonal(w, math.sqrt(2.0) * gen.standard_normal(nn))
    w = _antisymmetrize(w, gen)
    sigma = gen.permutation(nn)
    out = w[:, sigma]

    mu = gaussian_lift_mu(n)
    shift = 2.0 ** (-ell - 0.5) * mu
    k_claim = len(track_support) * 2 ** ell if track_support is not None else 0
    claimed = ProblemParams("BC", n=nn, k=k_claim, mu=shift)
    budget = _rk_budget(n) + lift_tv_budget(n, ell, gaussian_family(mu)) \
        + _perm_step_budget(shift)
    trace = None
    if support is not None:
        inv = np.argsort(sigma)
        col_support = Support.from_iterable(inv[support.as_array()])
        trace = {"row_support": support, "col_support": col_support,
                 "shift": shift}
    return ReductionOutput(out, claimed, budget, trace)


def bc_recovery_mu(n: int, rho: float) -> float:
    return math.log1p(2.0 * rho) / (2.0 * math.sqrt(6.0 * math.log(n) + 2.0 * math.log(2.0)))


def bc_recovery_reduce(g: Graph, rho: float, rng: RandomStream,
                       track_support: Optional[Support] = None) -> ReductionOutput:
    """PDS(n, k, 1/2+rho, 1/2) -> BC(n, k, mu), planted row support preserved.

    Uses the published mu = log(1+2 rho) / (2 sqrt(6 log n + 2 log 2)) and
    budget N = ceil(6 log n / log(1+2 rho)); this mu exceeds the generic
    Gaussian-kernel bound by a constant factor, so the kernel is built
    directly from these values.
    """
    n = g.n
    if rho < 1.0 / n:
        raise ParameterError("need rho >= 1/n")
    if rho > 0.5:
        raise ParameterError("need rho <= 1/2")
    mu = bc_recovery_mu(n, rho)
    n_iters = math.ceil(6.0 * math.log(n) / math.log1p(2.0 * rho))
    spec = gaussian_kernel_spec(n, 0.5 + rho, 0.5, mu, n_iters,
                                note="bc-recovery published parameters")
    w = _kernel_matrix(g, spec, rng.split(0))
    gen = rng.split(1).generator()
    np.fill_diagonal(w, math.sqrt(2.0) * gen.standard_normal(n))
    w = _antisymmetrize(w, gen)
    sigma = gen.permutation(n)
    out = w[:, sigma]

    shift = mu / math.sqrt(2.0)
    k_claim = len(track_support) if track_support is not None else 0
    claimed = ProblemParams("BC", n=n, k=k_claim, mu=shift)
    budget = _rk_budget(n) + _perm_step_budget(shift)
    trace = None
    if track_support is not None:
        inv = np.argsort(sigma)
        trace = {"row_support": track_support,
                 "col_support": Support.from_iterable(inv[track_support.as_array()]),
                 "shift": shift}
    return ReductionOutput(out, claimed, budget, trace)


# ---------------------------------------------------------------------------
# Rank-1 submatrix and sparse spiked Wigner
# ---------------------------------------------------------------------------

def _guarantee_window_ok(n: int, k: Optional[int], ell: int) -> bool:
    if k is None or k < 3:
        return True
    return 2 ** ell * k < n / math.log(k)


def ros_reduce(g: Graph, ell: int, rng: RandomStream, k: Optional[int] = None,
               track_support: Optional[Support] = None) -> ReductionOutput:
    """PC(n, k, 1/2) -> ROS(n, 2^ell k, mu k / sqrt(2)) via zero-round
    biclustering then reflection cloning."""
    n = g.n
    if n % 2 != 0:
        raise ParameterError("reflection cloning needs even n")
    if k is None and track_support is not None:
        k = len(track_support)
    if not _guarantee_window_ok(n, k, ell):
        warnings.warn("2^ell * k >= n / log k: reduction runs but the "
                      "TV guarantee does not apply", RuntimeWarning)
    bc = bc_reduce(g, 0, rng.split(0), track_support=track_support)
    spikes = None
    if bc.trace is not None:
        r0 = np.zeros(n)
        r0[bc.trace["row_support"].as_array()] = 1.0
        c0 = np.zeros(n)
        c0[bc.trace["col_support"].as_array()] = 1.0
        spikes = [r0, c0]
    res = reflection_clone(bc.observation, ell, rng.split(1), spikes=spikes)
    if spikes is not None:
        out, (r, c) = res
    else:
        out, r, c = res, None, None

    mu = gaussian_lift_mu(n)
    k_claim = 2 ** ell * k if k is not None else 0
    claimed = ProblemParams("ROS", n=n, k=min(k_claim, n),
                            mu=mu * (k or 0) / math.sqrt(2.0))
    if k is None:
        budget = float("nan")
    else:
        budget = bc.tv_budget + 8.0 / k
        if not _guarantee_window_ok(n, k, ell):
            budget = math.inf
    trace = None
    if r is not None:
        trace = {"spike_row": r, "spike_col": c,
                 "coeff": bc.trace["shift"] / 2 ** ell}
    return ReductionOutput(out, claimed, budget, trace)


def sros_reduce(g: Graph, k: int, ell: int, rng: RandomStream,
                track_support: Optional[Support] = None) -> ReductionOutput:
    """PC(n, k, 1/2) -> SROS(n, 2^ell k, mu k (k-1) / (2 sqrt(n-1))).

    The clique signal is spread onto the diagonal by averaging a row sum with
    auxiliary noise so the spike stays symmetric; reflection cloning then
    doubles its support ell times.
    """
    n = g.n
    if n % 2 != 0:
        raise ParameterError("reflection cloning needs even n")
    if (k - 1) ** 2 > n - 1:
        raise ParameterError("need (k-1)^2 <= n-1")
    if not _guarantee_window_ok(n, k, ell):
        warnings.warn("2^ell * k >= n / log k: reduction runs but the "
                      "TV guarantee does not apply", RuntimeWarning)
    spec = make_kernel_g(n, 1.0, 0.5)
    mu = spec.params["mu"]
    w = _kernel_matrix(g, spec, rng.split(0))
    gen = rng.split(1).generator()
    low = np.tril(gen.standard_normal((n, n)), k=-1)
    a = low - low.T
    b = gen.standard_normal((n, n))
    np.fill_diagonal(b, 0.0)
    c_noise = gen.standard_normal((n, n))
    np.fill_diagonal(c_noise, 0.0)
    coeff = (k - 1) / (2.0 * math.sqrt(n - 1))
    resid = math.sqrt(1.0 - (k - 1) ** 2 / (n - 1))
    m = coeff * (w + a + math.sqrt(2.0) * b) + resid * c_noise
    diag = (w + a - math.sqrt(2.0) * b).sum(axis=1) / (2.0 * math.sqrt(n - 1))
    np.fill_diagonal(m, diag)

    spikes = None
    if track_support is not None:
        u0 = np.zeros(n)
        u0[track_support.as_array()] = 1.0
        spikes = [u0]
    res = reflection_clone(m, ell, rng.split(2), spikes=spikes)
    if spikes is not None:
        m, (u,) = res
    else:
        m, u = res, None
    sigma = rng.split(3).generator().permutation(n)
    out = m[np.ix_(sigma, sigma)]
    if u is not None:
        u = u[sigma]

    theta0 = (k - 1) * mu / (2.0 * math.sqrt(n - 1))
    claimed = ProblemParams("SROS", n=n, k=min(2 ** ell * k, n),
                            mu=mu * k * (k - 1) / (2.0 * math.sqrt(n - 1)))
    budget = _rk_budget(n) + 8.0 / k
    if not _guarantee_window_ok(n, k, ell):
        budget = math.inf
    trace = None
    if u is not None:
        trace = {"spike": u, "coeff": theta0 / 2 ** ell}
    return ReductionOutput(out, claimed, budget, trace)


def symmetrize_to_ssw(m: np.ndarray) -> np.ndarray:
    """(M + M^T)/sqrt(2): an SROS instance becomes sparse spiked Wigner with
    spike strength mu*sqrt(2) ... mu/sqrt(2) and GOE noise."""
    m = require_square(m)
    return (m + m.T) / math.sqrt(2.0)


def ssbm_rho(n: int, k: int, ell: int) -> float:
    mu = gaussian_lift_mu(n)
    return float(norm.cdf(mu * (k - 1) / (2.0 ** (ell + 1) * math.sqrt(n - 1)))) - 0.5


def ssbm_reduce(g: Graph, k: int, ell: int, rng: RandomStream,
                track_support: Optional[Support] = None,
                _rademacher: Optional[np.ndarray] = None) -> ReductionOutput:
    """PC(n, k, 1/2) -> a member of the subgraph stochastic block model
    G_B(n, 2^ell k, 1/2, rho) with rho = Phi(mu(k-1)/(2^(ell+1) sqrt(n-1))) - 1/2."""
    sros = sros_reduce(g, k, ell, rng.split(0), track_support=track_support)
    m = np.asarray(sros.observation).copy()
    n = m.shape[0]
    x = _rademacher
    if x is None:
        x = rng.split(1).generator().choice((-1.0, 1.0), size=n)
    x = np.asarray(x, dtype=float)
    m *= np.outer(x, x)
    upper = np.triu(m > 0.0, k=1)
    adj = upper | upper.T
    rho = ssbm_rho(g.n, k, ell)
    claimed = ProblemParams("SSBM", n=n, k=min(2 ** ell * k, n), q=0.5, rho=rho)
    budget = sros.tv_budget + 2.0 / k ** 2
    trace = None
    if sros.trace is not None:
        u = sros.trace["spike"]
        signed = x * u
        trace = {"spike": signed,
                 "community_plus": Support.from_iterable(np.flatnonzero(signed > 0)),
                 "community_minus": Support.from_iterable(np.flatnonzero(signed < 0)),
                 "rho": rho}
    return ReductionOutput(Graph(adj), claimed, budget, trace)


# ---------------------------------------------------------------------------
# Sparse PCA
# ---------------------------------------------------------------------------

def _rotate_budget(n: int, tau: int) -> float:
    return 2.0 * (n + 3.0) / (tau * n - n - 3.0)


def spca_high_sparsity(g: Graph, ell: int, tau: int, rng: RandomStream,
                       k: Optional[int] = None,
                       track_support: Optional[Support] = None) -> ReductionOutput:
    """PC(n, k, 1/2) -> SPCA(n, 2^ell k, d=n, theta = mu^2 k^2 / (2 tau n))."""
    ros = ros_reduce(g, ell, rng.split(0), k=k, track_support=track_support)
    x = random_rotate(ros.observation, tau, rng.split(1))
    n = g.n
    mu = gaussian_lift_mu(n)
    kk = k if k is not None else 0
    claimed = ProblemParams("SPCA", n=n, d=n, k=min(2 ** ell * kk, n) if kk else 0,
                            theta=mu ** 2 * kk ** 2 / (2.0 * tau * n))
    budget = ros.tv_budget + _rotate_budget(n, tau)
    trace = None
    if ros.trace is not None:
        r = ros.trace["spike_row"]
        trace = {"spike_support": Support.from_iterable(np.flatnonzero(r)),
                 "spike_integer": r}
    return ReductionOutput(x, claimed, budget, trace)


def spca_low_sparsity(g: Graph, ell: int, tau: int, rng: RandomStream,
                      k: Optional[int] = None,
                      track_support: Optional[Support] = None) -> ReductionOutput:
    """PC(n, k, 1/2) -> UBSPCA(2^ell n, 2^ell k, d = 2^ell n,
    theta = mu^2 k^2 / (2^(ell+1) tau n))."""
    bc = bc_reduce(g, ell, rng.split(0), track_support=track_support)
    x = random_rotate(bc.observation, tau, rng.split(1))
    n = g.n
    nn = x.shape[0]
    mu = gaussian_lift_mu(n)
    kk = k if k is not None else (len(track_support) if track_support else 0)
    claimed = ProblemParams("UBSPCA", n=nn, d=nn,
                            k=min(2 ** ell * kk, nn) if kk else 0,
                            theta=mu ** 2 * kk ** 2 / (2.0 ** (ell + 1) * tau * n))
    budget = bc.tv_budget + _rotate_budget(nn, tau)
    trace = None
    if bc.trace is not None:
        trace = {"spike_support": bc.trace["row_support"]}
    return ReductionOutput(x, claimed, budget, trace)


def spca_recovery_reduce(g: Graph, rho: float, tau: int, rng: RandomStream,
                         track_support: Optional[Support] = None) -> ReductionOutput:
    """PDS(n, k, 1/2+rho, 1/2) -> UBSPCA(n, k, n, theta = k^2 mu^2/(tau n)),
    spike supported exactly on the planted subgraph vertices."""
    bc = bc_recovery_reduce(g, rho, rng.split(0), track_support=track_support)
    x = random_rotate(bc.observation, tau, rng.split(1))
    n = g.n
    mu = bc_recovery_mu(n, rho)
    kk = len(track_support) if track_support is not None else 0
    claimed = ProblemParams("UBSPCA", n=n, d=n, k=kk,
                            theta=kk ** 2 * mu ** 2 / (tau * n))
    budget = bc.tv_budget + _rotate_budget(n, tau)
    trace = None
    if bc.trace is not None:
        trace = {"spike_support": bc.trace["row_support"]}
    return ReductionOutput(x, claimed, budget, trace)


# ---------------------------------------------------------------------------
# Detection from recovery
# ---------------------------------------------------------------------------

def _as_row_col(res) -> tuple[Support, Optional[Support]]:
    if isinstance(res, Support):
        return res, None
    if isinstance(res, tuple) and len(res) == 2:
        return res[0], res[1]
    rows = getattr(res, "row_support", None)
    cols = getattr(res, "col_support", None)
    if rows is None:
        raise ParameterError("recovery procedure returned no support")
    return rows, cols


def detect_via_recovery(problem: str, recover: Callable, instance,
                        rng: RandomStream, tau_k: Optional[float] = None) -> Verdict:
    """Clone the instance, recover on copy 1, test copy 2 on the recovered set.

    Statistics per problem: BC restricted sum >= k*tau(k) (tau(k) = log k by
    default); ROS sigma_1 of the restricted block >= 2 sqrt(k)+sqrt(2 log k);
    PIS/PDS restricted edge count against a binomial deviation band; SPCA
    lambda_1 of the restricted empirical covariance >= 1 + 2 sqrt(k/n).
    """
    if problem not in ("BC", "ROS", "PIS", "PDS", "SPCA"):
        raise ParameterError(f"unsupported problem {problem!r}")
    params = instance.params
    k = params.k
    if k < 2:
        raise ParameterError("need k >= 2")

    if problem in ("BC", "ROS"):
        m1, m2 = gaussian_clone(np.asarray(instance.matrix), rng.split(0))
        rows, cols = _as_row_col(recover(m1))
        if cols is None:
            cols = rows
        block = m2[np.ix_(rows.as_array(), cols.as_array())]
        if problem == "BC":
            thr = k * (tau_k if tau_k is not None else math.log(k))
            return verdict_from(float(block.sum()), thr, ">=")
        thr = 2.0 * math.sqrt(k) + math.sqrt(2.0 * math.log(k))
        stat = top_singular_value(block, rng.split(1)) if block.size else 0.0
        return verdict_from(stat, thr, ">=")

    if problem == "SPCA":
        x1, x2 = gaussian_clone(np.asarray(instance.samples), rng.split(0))
        rows, _ = _as_row_col(recover(x1))
        n = x2.shape[1]
        sub = x2[rows.as_array(), :]
        sigma = sub @ sub.T / n
        stat = top_eigenvalue(sigma, rng.split(1)) if sigma.size else 0.0
        return verdict_from(stat, 1.0 + 2.0 * math.sqrt(k / n), ">=")

    if problem == "PIS":
        q = params.q
        comp = instance.graph.complement()
        p1, q1, pp, qq = pds_clone_pis_preset(q)
        g1, g2 = pds_clone(comp, p1, q1, pp, qq, rng.split(0))
        c1, c2 = g1.complement(), g2.complement()
        rows, _ = _as_row_col(recover(c1))
        idx = rows.as_array()
        stat = float(np.triu(c2.adj[np.ix_(idx, idx)], k=1).sum())
        q_eff = 1.0 - qq  # cloned complement-instance ambient density
        thr = comb(k, 2) * q_eff - k * math.sqrt(q_eff * (1 - q_eff) * math.log(k))
        return verdict_from(stat, thr, "<=")

    # PDS
    p, q = params.p, params.q
    pp, qq = pds_clone_pds_preset(p, q)
    g1, g2 = pds_clone(instance.graph, p, q, pp, qq, rng.split(0))
    rows, _ = _as_row_col(recover(g1))
    idx = rows.as_array()
    stat = float(np.triu(g2.adj[np.ix_(idx, idx)], k=1).sum())
    thr = comb(k, 2) * qq + k * math.sqrt(qq * (1 - qq) * math.log(k))
    return verdict_from(stat, thr, ">=")
