"""Instance-growing reductions: planted-clique lifting, the generic
distributional lifting engine, its Poisson/Gaussian instantiations, and the
two-stage reduction to the general planted-dense-subgraph regime."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.stats import norm

from .core import (
    Graph, ParameterError, RandomStream, Support,
    require_symmetric_zero_diag,
)
from .rejection import (
    KernelSpec, gaussian_kernel_mu_bound, make_kernel_g, make_kernel_p1,
    make_kernel_p2, rejection_kernel,
)


# ---------------------------------------------------------------------------
# Clone families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CloneFamily:
    """A parameterized (P_lam, Q_lam) pair with an exact 4-way cloning map.

    `clone` maps a vector of P_lam/Q_lam variates to a (4, m) array of
    independent P/Q variates at the updated parameter; `noise_sampler` draws
    from the anti-diagonal filler Q'_lam; `chi2_q_p` gives
    chi^2(Q_lam, P_lam) for error bookkeeping.
    """

    name: str
    clone: Callable[[np.ndarray, np.random.Generator], np.ndarray]
    param_update: Callable[[float], float]
    noise_sampler: Callable[[float, int, np.random.Generator], np.ndarray]
    threshold: float
    lam0: float
    chi2_q_p: Callable[[float], float]


def poisson_family(lam0: float, c: float) -> CloneFamily:
    """P_lam = Pois(c*lam), Q_lam = Q'_lam = Pois(lam); 4-way multinomial
    thinning halves the rate twice: g(lam) = lam/4."""
    if c <= 1:
        raise ParameterError("need c > 1")

    def clone(values, gen):
        counts = np.rint(np.asarray(values)).astype(np.int64)
        if np.any(counts < 0):
            raise ParameterError("Poisson cloning needs nonnegative integers")
        return gen.multinomial(counts, [0.25] * 4).T.astype(float)

    def noise(lam, size, gen):
        return gen.poisson(lam, size).astype(float)

    def chi2(lam):
        return math.expm1((c - 1.0) ** 2 * lam / c)

    return CloneFamily("poisson", clone, lambda lam: lam / 4.0, noise, 0.0, lam0, chi2)


def gaussian_family(lam0: float) -> CloneFamily:
    """P_lam = N(lam, 1), Q_lam = Q'_lam = N(0, 1); the orthogonal +-1 clone
    halves the mean: g(lam) = lam/2.

    The published per-coordinate formulas reduce to x_i = (x +- G1 +- G2 +- G3)/2
    with the sign rows of the 4x4 orthonormal +-1/2 matrix; the shift terms
    cancel, so the map needs no knowledge of lam.
    """

    def clone(values, gen):
        x = np.asarray(values, dtype=float)
        g1, g2, g3 = gen.standard_normal((3, x.size))
        return 0.5 * np.stack([
            x + g1 + g2 + g3,
            x - g1 + g2 - g3,
            x + g1 - g2 - g3,
            x - g1 - g2 + g3,
        ])

    def noise(lam, size, gen):
        return gen.standard_normal(size)

    def chi2(lam):
        # stated bookkeeping bound for chi^2(N(0,1), N(lam,1))
        return math.expm1(2.0 * lam * lam)

    return CloneFamily("gaussian", clone, lambda lam: lam / 2.0, noise, 0.0, lam0, chi2)


# ---------------------------------------------------------------------------
# Generic distributional lifting
# ---------------------------------------------------------------------------

def _doubling_indices(m: int):
    """Placement slots for one doubling round: unordered source pairs i<j map
    to the four cells (i,j), (anti(i),j), (i,anti(j)), (anti(i),anti(j)) of the
    2m-sized matrix, with anti(i) = 2m-1-i."""
    iu, ju = np.triu_indices(m, k=1)
    return iu, ju, 2 * m - 1 - iu, 2 * m - 1 - ju


def _lift_round(w: np.ndarray, family: CloneFamily, lam_next: float,
                gen: np.random.Generator,
                support: Optional[np.ndarray]):
    m = w.shape[0]
    iu, ju, ai, aj = _doubling_indices(m)
    x = family.clone(w[iu, ju], gen)
    big = np.zeros((2 * m, 2 * m))
    big[iu, ju] = x[0]
    big[ai, ju] = x[1]
    big[iu, aj] = x[2]
    big[ai, aj] = x[3]
    big = big + big.T
    anti = family.noise_sampler(lam_next, m, gen)
    rows = np.arange(m)
    big[rows, 2 * m - 1 - rows] = anti
    big[2 * m - 1 - rows, rows] = anti
    sigma = gen.permutation(2 * m)
    out = big[np.ix_(sigma, sigma)]
    new_support = None
    if support is not None:
        doubled = np.concatenate([support, 2 * m - 1 - support])
        inv = np.argsort(sigma)
        new_support = np.sort(inv[doubled])
    return out, new_support


def distributional_lift(m: np.ndarray, ell: int, family: CloneFamily,
                        rng: RandomStream, emit: str = "matrix",
                        track_support: Optional[Support] = None):
    """ell entrywise-cloning doubling rounds, then optional thresholding.

    The input must be symmetric with zero diagonal.  Each round 4-way clones
    every below-diagonal entry, places the copies in the doubled matrix,
    draws the anti-diagonal i.i.d. from Q'_lam, and applies a uniform
    symmetric relabeling.  `emit="graph"` thresholds entries at the family
    threshold.  With `track_support` the planted index set is carried through
    the relabelings and returned alongside the output.
    """
    if emit not in ("matrix", "graph"):
        raise ParameterError("emit must be 'matrix' or 'graph'")
    if ell < 0:
        raise ParameterError("ell must be nonnegative")
    w = require_symmetric_zero_diag(np.asarray(m, dtype=float)).copy()
    gen = rng.generator()
    lam = family.lam0
    support = None if track_support is None else track_support.as_array()
    for _ in range(ell):
        lam = family.param_update(lam)
        w, support = _lift_round(w, family, lam, gen, support)
    if emit == "graph":
        adj = w > family.threshold  # symmetric since w is
        np.fill_diagonal(adj, False)
        out = Graph(adj)
    else:
        out = w
    if track_support is None:
        return out
    return out, Support.from_iterable(support)


def lift_tv_budget(n: int, ell: int, family: CloneFamily) -> float:
    """Stated per-round error bookkeeping: sum of sqrt(chi2(Q,P)/2) over the
    rounds (the anti-diagonal filler is exact for the shipped families)."""
    lam = family.lam0
    total = 0.0
    for _ in range(ell):
        lam = family.param_update(lam)
        total += math.sqrt(family.chi2_q_p(lam) / 2.0)
    return total


# ---------------------------------------------------------------------------
# Planted clique lifting
# ---------------------------------------------------------------------------

def pc_lift(g: Graph, ell: int, rng: RandomStream, w: float | None = None,
            track_support: Optional[Support] = None):
    """Densify a planted clique instance and double it ell times.

    Step 1 adds each non-edge with probability 1 - 2/w (w defaults to log n,
    any slowly growing function above 2 works); each round then 4-way splits
    edge indicators with the conditioned Bernoulli pattern law, forces the
    anti-diagonal edges, and relabels uniformly.  A clique of size k maps to
    a clique of size 2^ell k; the edge density follows p -> p^(1/4) per round.
    """
    if ell < 0:
        raise ParameterError("ell must be nonnegative")
    n = g.n
    if w is None:
        w = math.log(n)
    if w < 2:
        raise ParameterError("need w >= 2 (w(n) -> infinity); increase n or pass w")
    gen = rng.generator()

    adj = g.adj.copy()
    iu = np.triu_indices(n, k=1)
    nonedge = ~adj[iu]
    fill = gen.random(nonedge.sum()) < 1.0 - 2.0 / w
    upd = adj[iu].copy()
    upd[nonedge] = fill
    adj[iu] = upd
    adj.T[iu] = upd

    p = 1.0 - 1.0 / w
    m = n
    support = None if track_support is None else track_support.as_array()
    for _ in range(ell):
        p4 = p ** 0.25
        # pattern law over {0,1}^4 minus all-ones for non-edges
        weights = np.array([
            p4 ** bin(v).count("1") * (1 - p4) ** (4 - bin(v).count("1"))
            for v in range(16)])
        weights[15] = 0.0
        weights /= 1.0 - p
        iu2, ju2, ai, aj = _doubling_indices(m)
        is_edge = adj[iu2, ju2]
        patterns = np.full(is_edge.size, 15, dtype=np.int64)
        n0 = int((~is_edge).sum())
        if n0:
            patterns[~is_edge] = gen.choice(16, size=n0, p=weights)
        big = np.zeros((2 * m, 2 * m), dtype=bool)
        big[iu2, ju2] = (patterns & 8) > 0
        big[ai, ju2] = (patterns & 4) > 0
        big[iu2, aj] = (patterns & 2) > 0
        big[ai, aj] = (patterns & 1) > 0
        big |= big.T
        rows = np.arange(m)
        big[rows, 2 * m - 1 - rows] = True
        big[2 * m - 1 - rows, rows] = True
        sigma = gen.permutation(2 * m)
        adj = big[np.ix_(sigma, sigma)]
        if support is not None:
            inv = np.argsort(sigma)
            support = np.sort(inv[np.concatenate([support, 2 * m - 1 - support])])
        m *= 2
        p = p4
    out = Graph(adj)
    if track_support is None:
        return out
    return out, Support.from_iterable(support)


def pc_lift_target_density(n: int, ell: int, w: float | None = None) -> float:
    if w is None:
        w = math.log(n)
    return (1.0 - 1.0 / w) ** (0.25 ** ell)


def pc_lift_tv_budget(n: int, w: float | None = None) -> float:
    if w is None:
        w = math.log(n)
    return 2.0 / math.sqrt(w)


# ---------------------------------------------------------------------------
# Poisson and Gaussian lifting from graphs
# ---------------------------------------------------------------------------

def _kernel_matrix(g: Graph, spec: KernelSpec, rng: RandomStream) -> np.ndarray:
    """Apply a rejection kernel entrywise to the edge indicators."""
    n = g.n
    iu = np.triu_indices(n, k=1)
    vals = rejection_kernel(g.adj[iu].astype(np.uint8), spec, rng)
    m = np.zeros((n, n))
    m[iu] = vals
    return m + m.T


def poisson_lift(g: Graph, ell: int, gamma: float, eps: float, c: float,
                 rng: RandomStream, track_support: Optional[Support] = None):
    """Map PC(n, k, gamma) toward PDS(2^ell n, 2^ell k, p, q) with
    p = 1-exp(-4^-ell c lam0), q = 1-exp(-4^-ell lam0), lam0 = n^-eps."""
    n = g.n
    spec = make_kernel_p1(n, c, gamma, eps)
    m = _kernel_matrix(g, spec, rng.split(0))
    fam = poisson_family(spec.params["lam"], c)
    return distributional_lift(m, ell, fam, rng.split(1), emit="graph",
                               track_support=track_support)


def poisson_lift_targets(n: int, ell: int, eps: float, c: float) -> tuple[float, float]:
    lam = n ** (-eps) * 0.25 ** ell
    return -math.expm1(-c * lam), -math.expm1(-lam)


def gaussian_lift(g: Graph, ell: int, rng: RandomStream, emit: str = "graph",
                  track_support: Optional[Support] = None):
    """Map PC(n, k, 1/2) toward PDS(2^ell n, 2^ell k, Phi(2^-ell mu), 1/2),
    or emit the pre-threshold Gaussian matrix."""
    n = g.n
    spec = make_kernel_g(n, 1.0, 0.5)
    m = _kernel_matrix(g, spec, rng.split(0))
    fam = gaussian_family(spec.params["mu"])
    return distributional_lift(m, ell, fam, rng.split(1), emit=emit,
                               track_support=track_support)


def gaussian_lift_mu(n: int) -> float:
    """The planted mean used by Gaussian lifting at input size n."""
    return gaussian_kernel_mu_bound(n, 1.0, 0.5)


def gaussian_lift_targets(n: int, ell: int) -> tuple[float, float]:
    return float(norm.cdf(2.0 ** (-ell) * gaussian_lift_mu(n))), 0.5


def general_pds_reduce(g: Graph, ell1: int, ell2: int, eps: float,
                       rng: RandomStream, track_support: Optional[Support] = None):
    """Gaussian-lift ell1 rounds, then Poisson-lift ell2 rounds through the
    biased-coin kernel at rho = Phi(2^-ell1 mu) - 1/2."""
    if not 0 < eps < 1:
        raise ParameterError("need eps in (0, 1)")
    n = g.n
    step1 = gaussian_lift(g, ell1, rng.split(0), emit="graph",
                          track_support=track_support)
    if track_support is not None:
        h, support = step1
    else:
        h, support = step1, None
    mu = gaussian_lift_mu(n)
    phi = float(norm.cdf(2.0 ** (-ell1) * mu))
    rho = phi - 0.5
    c = (2.0 * phi) ** (eps / 4.0)
    n1 = h.n
    spec = make_kernel_p2(n1, rho, c, eps, K=1.0)
    m = _kernel_matrix(h, spec, rng.split(1))
    fam = poisson_family(spec.params["lam"], c)
    return distributional_lift(m, ell2, fam, rng.split(2), emit="graph",
                               track_support=support)


def general_pds_targets(n: int, ell1: int, ell2: int, eps: float) -> tuple[float, float]:
    mu = gaussian_lift_mu(n)
    phi = float(norm.cdf(2.0 ** (-ell1) * mu))
    lam = (2 ** ell1 * n) ** (-eps) * 0.25 ** ell2
    p = -math.expm1(-lam * (2.0 * phi) ** (eps / 4.0))
    q = -math.expm1(-lam)
    return p, q
