"""Detection tests and recovery algorithms (the non-SDP toolbox)."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from math import comb
from typing import Optional

import numpy as np

from .core import (
    Graph, ParameterError, RandomStream, RefusalError, Support, Verdict,
    require_square, verdict_from,
)
from .cloning import gaussian_clone
from .linalg import top_eigenpair, top_eigenvalue, top_singular_triplet, top_singular_value


@dataclass(frozen=True)
class RecoveryResult:
    row_support: Support
    col_support: Optional[Support] = None
    marked: bool = True


def _two_branch_verdict(branches) -> Verdict:
    """Combine (statistic, threshold, direction) branches: H1 iff any fires.

    The recorded branch is the one with the largest threshold-normalized
    margin, so diagnostics show the closest or firing comparison.
    """
    best = None
    for stat, thr, direction in branches:
        sign = 1.0 if direction in (">", ">=") else -1.0
        margin = sign * (stat - thr) / max(abs(thr), 1.0)
        if best is None or margin > best[0]:
            best = (margin, stat, thr, direction)
    _, stat, thr, direction = best
    fired = any(
        (s > t if d == ">" else s >= t if d == ">=" else s < t if d == "<" else s <= t)
        for s, t, d in branches)
    if fired and not verdict_from(stat, thr, direction).rejects():
        # a different branch fired; report that one instead
        for s, t, d in branches:
            v = verdict_from(s, t, d)
            if v.rejects():
                return v
    return verdict_from(stat, thr, direction)


# ---------------------------------------------------------------------------
# Biclustering / PDS / SSBM detection
# ---------------------------------------------------------------------------

def bc_sum_max_test(m: np.ndarray, k: int, mu: float, c: float = 1.0) -> Verdict:
    """H1 iff sum(M) > mu k^2 / 2 or max(M) > sqrt((4+c) log n)."""
    m = require_square(m)
    n = m.shape[0]
    return _two_branch_verdict([
        (float(m.sum()), mu * k * k / 2.0, ">"),
        (float(m.max()), math.sqrt((4.0 + c) * math.log(n)), ">"),
    ])


def pds_edge_tests(g: Graph, k: int, p: float, q: float,
                   scan_subgraphs: bool = False) -> Verdict:
    """Total edge count against C(n,2)q + C(k,2)(p-q)/2, optionally also the
    max k-subgraph count against C(k,2)(p+q)/2 (exhaustive, n <= 30)."""
    if p == q:
        raise ParameterError("p = q carries no signal")
    n = g.n
    direction = ">" if p > q else "<"
    branches = [(float(g.edge_count()),
                 comb(n, 2) * q + comb(k, 2) * (p - q) / 2.0, direction)]
    if scan_subgraphs:
        if n > 30:
            raise RefusalError("subgraph scan is exponential; need n <= 30")
        if comb(n, k) > 2_000_000:
            raise RefusalError("too many k-subsets to scan")
        adj = g.adj
        best = -math.inf if p > q else math.inf
        for subset in itertools.combinations(range(n), k):
            idx = np.fromiter(subset, dtype=np.intp)
            cnt = float(adj[np.ix_(idx, idx)].sum()) / 2.0
            best = max(best, cnt) if p > q else min(best, cnt)
        branches.append((best, comb(k, 2) * (p + q) / 2.0, direction))
    return _two_branch_verdict(branches)


def ssbm_spectral_test(g: Graph, q: float, rng: Optional[RandomStream] = None) -> Verdict:
    """H1 iff lambda_1(A - qJ) >= 2 sqrt(n), J the off-diagonal all-ones matrix."""
    if not 0 < q < 1:
        raise ParameterError("need q in (0, 1)")
    n = g.n
    jmat = np.full((n, n), -q)
    np.fill_diagonal(jmat, 0.0)
    m = g.adj.astype(float) + jmat
    return verdict_from(top_eigenvalue(m, rng), 2.0 * math.sqrt(n), ">=")


# ---------------------------------------------------------------------------
# Rank-1 submatrix
# ---------------------------------------------------------------------------

def ros_svd_test(m: np.ndarray, mu: float, rng: Optional[RandomStream] = None) -> Verdict:
    """H1 iff sigma_1(M) >= mu / 2."""
    if mu <= 0:
        raise ParameterError("need mu > 0")
    return verdict_from(top_singular_value(np.asarray(m, dtype=float), rng),
                        mu / 2.0, ">=")


def ros_max_test(m: np.ndarray) -> tuple[Verdict, RecoveryResult]:
    """H1 iff any |M_ij| > sqrt(6 log n); the exceeding set projects to the
    recovered row/column supports."""
    m = require_square(m)
    n = m.shape[0]
    thr = math.sqrt(6.0 * math.log(n))
    hits = np.abs(m) > thr
    verdict = verdict_from(float(np.abs(m).max()), thr, ">")
    rows = Support.from_iterable(np.flatnonzero(hits.any(axis=1)))
    cols = Support.from_iterable(np.flatnonzero(hits.any(axis=0)))
    return verdict, RecoveryResult(rows, cols, marked=verdict.rejects())


def ros_search_inner_max(a: np.ndarray, v: np.ndarray, k1: int):
    """For fixed v, the u in S_k1 maximizing u^T A v: support on the k1
    largest |(Av)_i| with matching signs."""
    av = a @ v
    order = np.argsort(-np.abs(av), kind="stable")[:k1]
    signs = np.sign(av[order])
    signs[signs == 0] = 1.0
    u = np.zeros(a.shape[0])
    u[order] = signs
    return u, float(np.abs(av[order]).sum())


def _sign_patterns(t: int) -> np.ndarray:
    """All sign vectors in {+-1}^t with first entry +1 (global-sign orbit reps)."""
    if t == 1:
        return np.ones((1, 1))
    rest = np.array(list(itertools.product((1.0, -1.0), repeat=t - 1)))
    return np.concatenate([np.ones((rest.shape[0], 1)), rest], axis=1)


def ros_search(m: np.ndarray, k: int, rho: float, rng: RandomStream,
               c1: float = 0.5) -> RecoveryResult:
    """Exhaustive sparse rank-1 search with an independent-copy mark test.

    Splits M into independent copies A and B, maximizes u^T A v over sign
    vectors with sparsities k1, k2 in [c1 k, k] (closed-form inner
    maximization over u), marks a pair when the B-side row sums recover
    exactly supp(u) and supp(v) against thresholds k2*rho/2 and k1*rho/2,
    and returns the marked pair with the largest total support.
    """
    m = require_square(m)
    n = m.shape[0]
    if n > 40 or k > 5:
        raise RefusalError("ros_search enumerates supports; need n <= 40, k <= 5")
    if not 0 < c1 < 1:
        raise ParameterError("need c1 in (0, 1)")
    if rho <= 0:
        raise ParameterError("need rho > 0")
    a, b = gaussian_clone(m, rng)
    lo = max(1, math.ceil(c1 * k))
    sparsities = list(range(lo, k + 1))

    best = {}  # (k1, k2) -> (score, support tuple, sign tuple)
    for k2 in sparsities:
        signs = _sign_patterns(k2)  # (m_signs, k2)
        combos = np.array(list(itertools.combinations(range(n), k2)))
        for start in range(0, combos.shape[0], 2048):
            chunk = combos[start:start + 2048]
            cols = a[:, chunk]                      # (n, C, k2)
            prods = np.einsum("nck,mk->ncm", cols, signs)
            ab = np.sort(np.abs(prods), axis=0)     # ascending over rows
            for k1 in sparsities:
                scores = ab[n - k1:].sum(axis=0)    # (C, m_signs)
                ci, si = np.unravel_index(np.argmax(scores), scores.shape)
                sc = float(scores[ci, si])
                key = (k1, k2)
                if key not in best or sc > best[key][0]:
                    best[key] = (sc, tuple(chunk[ci]), tuple(signs[si]))

    marked = []
    for (k1, k2), (_, supp_v, sign_v) in best.items():
        v = np.zeros(n)
        v[list(supp_v)] = sign_v
        u, _ = ros_search_inner_max(a, v, k1)
        row_stat = u * (b @ v)
        col_stat = v * (b.T @ u)
        row_set = np.flatnonzero(row_stat >= 0.5 * k2 * rho)
        col_set = np.flatnonzero(col_stat >= 0.5 * k1 * rho)
        if (set(row_set) == set(np.flatnonzero(u))
                and set(col_set) == set(np.flatnonzero(v))):
            marked.append((k1 + k2, k1, np.flatnonzero(u), np.flatnonzero(v)))
    if not marked:
        return RecoveryResult(Support(()), Support(()), marked=False)
    marked.sort(key=lambda t: (t[0], t[1]), reverse=True)
    _, _, rows, cols = marked[0]
    return RecoveryResult(Support.from_iterable(rows),
                          Support.from_iterable(cols), marked=True)


def _largest_gap_cluster(values: np.ndarray) -> np.ndarray:
    """Indices whose |value| lies above the largest consecutive gap of the
    sorted absolute values (ties broken toward the smaller cluster index)."""
    mags = np.abs(values)
    order = np.argsort(-mags, kind="stable")
    sorted_mags = mags[order]
    gaps = sorted_mags[:-1] - sorted_mags[1:]
    split = int(np.argmax(gaps))  # argmax takes the first maximal gap
    return np.sort(order[:split + 1])


def ros_spectral_projection(m: np.ndarray, rng: RandomStream) -> RecoveryResult:
    """Split into copies A, B; project B onto A's top singular directions and
    cluster the projection magnitudes at their largest gap.

    Row support comes from B V (entries ~ mu * r_i), column support from
    U^T B (entries ~ mu * c_j); clustering uses absolute values so signed
    spikes separate from noise with a single gap.
    """
    m = require_square(m)
    a, b = gaussian_clone(m, rng.split(0))
    u, _, v = top_singular_triplet(a, rng.split(1))
    rows = _largest_gap_cluster(b @ v)
    cols = _largest_gap_cluster(u @ b)
    return RecoveryResult(Support.from_iterable(rows), Support.from_iterable(cols))


# ---------------------------------------------------------------------------
# Sparse PCA
# ---------------------------------------------------------------------------

def empirical_covariance(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x @ x.T / x.shape[1]


def spca_spectral_test(x: np.ndarray, c_ratio: float,
                       rng: Optional[RandomStream] = None) -> Verdict:
    """H1 iff lambda_1 of the empirical covariance exceeds 1 + 2 sqrt(c)."""
    x = np.asarray(x, dtype=float)
    d, n = x.shape
    if c_ratio < d / n:
        raise ParameterError("need c_ratio >= d/n")
    lam = top_eigenvalue(empirical_covariance(x), rng)
    return verdict_from(lam, 1.0 + 2.0 * math.sqrt(c_ratio), ">")


def bspca_sum_test(x: np.ndarray, k: int, theta: float, delta: float) -> Verdict:
    """H1 iff 1^T Sigma-hat 1 > d + 2 delta^2 k theta (needs 2 delta^2 k theta <= d)."""
    x = np.asarray(x, dtype=float)
    d, n = x.shape
    if 2.0 * delta * delta * k * theta > d:
        raise ParameterError("precondition 2 delta^2 k theta <= d violated")
    col_sums = x.sum(axis=0)
    stat = float((col_sums ** 2).sum() / n)
    return verdict_from(stat, d + 2.0 * delta * delta * k * theta, ">")


def spca_sparse_eig(sigma: np.ndarray, k: int) -> tuple[float, np.ndarray]:
    """Maximal k-sparse eigenvalue and its embedded eigenvector, by scanning
    every k x k principal minor (d <= 20)."""
    sigma = require_square(sigma)
    d = sigma.shape[0]
    if not 1 <= k <= d:
        raise ParameterError("need 1 <= k <= d")
    if d > 20:
        raise RefusalError("minor enumeration needs d <= 20")
    best_val = -math.inf
    best_vec = None
    for subset in itertools.combinations(range(d), k):
        idx = np.fromiter(subset, dtype=np.intp)
        w, v = np.linalg.eigh(sigma[np.ix_(idx, idx)])
        if w[-1] > best_val:
            best_val = float(w[-1])
            vec = np.zeros(d)
            vec[idx] = v[:, -1]
            best_vec = vec
    i = int(np.argmax(np.abs(best_vec)))
    if best_vec[i] < 0:
        best_vec = -best_vec
    return best_val, best_vec


def spca_spectral_recover(x: np.ndarray, k: int, rng: RandomStream) -> Support:
    """Support of the leading covariance eigenvector via the fourth-power
    threshold log(d) / (k d); rows are padded with fresh standard normals to
    dimension 2n when d <= n so the aspect ratio exceeds one."""
    x = np.asarray(x, dtype=float)
    d, n = x.shape
    if d <= n:
        pad = rng.split(0).generator().standard_normal((2 * n - d, n))
        xp = np.concatenate([x, pad], axis=0)
    else:
        xp = x
    dp = xp.shape[0]
    _, vec = top_eigenpair(empirical_covariance(xp), rng.split(1))
    thr = math.log(dp) / (k * dp)
    hits = np.flatnonzero(vec[:d] ** 4 >= thr)
    return Support.from_iterable(hits)


def spca_kmax_recover(x: np.ndarray, k: int) -> Support:
    """Coordinates of the k-sparse leading eigenvector with magnitude at least
    1 / (2 sqrt(k))."""
    sigma = empirical_covariance(np.asarray(x, dtype=float))
    _, vec = spca_sparse_eig(sigma, k)
    return Support.from_iterable(np.flatnonzero(np.abs(vec) >= 0.5 / math.sqrt(k)))
