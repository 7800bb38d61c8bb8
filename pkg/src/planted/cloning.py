"""Signal-preserving transforms: reflection cloning, random rotations,
Haar column sampling, and the two-copy cloning maps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Graph, ParameterError, RandomStream, require_square


# ---------------------------------------------------------------------------
# Reflection cloning
# ---------------------------------------------------------------------------

def _reflect_conjugate(t: np.ndarray) -> np.ndarray:
    """(A+B) T (A+B) / 2 with A = diag(I, -I) and B the anti-identity."""
    n = t.shape[0]
    a = np.ones(n)
    a[n // 2:] = -1.0
    left = t * a[:, None] + t[::-1, :]
    return 0.5 * (left * a[None, :] + left[:, ::-1])


def _reflect_vector(v: np.ndarray) -> np.ndarray:
    n = v.shape[0]
    a = np.ones(n)
    a[n // 2:] = -1.0
    return a * v + v[::-1]


def reflection_clone(m: np.ndarray, ell: int, rng: RandomStream,
                     spikes: list[np.ndarray] | None = None):
    """ell rounds of the orthogonal reflect-and-fold conjugation.

    Each round permutes rows and columns by a fresh uniform sigma and applies
    W <- (A+B) W^{sigma,sigma} (A+B) / 2, where (A+B)/sqrt(2) is orthogonal.
    The i.i.d. standard normal law is preserved exactly; a rank-one mean
    lambda*r*c^T becomes (lambda/2^ell)*r'c'^T with ||r'||^2 = 2^ell ||r||^2.

    When `spikes` is given, each vector is tracked through the same
    permutations and returned alongside the output matrix.
    """
    m = require_square(m)
    n = m.shape[0]
    if n % 2 != 0:
        raise ParameterError("reflection cloning needs even n")
    if ell < 0:
        raise ParameterError("ell must be nonnegative")
    gen = rng.generator()
    w = m.copy()
    tracked = None if spikes is None else [np.asarray(s).copy() for s in spikes]
    for _ in range(ell):
        sigma = gen.permutation(n)
        w = _reflect_conjugate(w[np.ix_(sigma, sigma)])
        if tracked is not None:
            tracked = [_reflect_vector(s[sigma]) for s in tracked]
    if spikes is None:
        return w
    return w, tracked


# ---------------------------------------------------------------------------
# Haar column sampling and random rotation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HaarColumns:
    ambient: int
    cols: int
    entries: np.ndarray


def haar_columns(ambient: int, cols: int, rng: RandomStream) -> HaarColumns:
    """First `cols` columns of a Haar-distributed orthogonal matrix.

    Computed by orthonormalizing fresh Gaussian columns (QR with the R
    diagonal forced positive, which equals Gram-Schmidt); columns are redrawn
    on numerically rank-deficient draws.
    """
    if not 1 <= cols <= ambient:
        raise ParameterError("need 1 <= cols <= ambient")
    gen = rng.generator()
    for _ in range(8):
        g = gen.standard_normal((ambient, cols))
        q, r = np.linalg.qr(g)
        d = np.diag(r)
        if np.min(np.abs(d)) < 1e-12:
            continue  # probability-zero event, redraw
        q = q * np.sign(d)[None, :]
        return HaarColumns(ambient, cols, q)
    raise RuntimeError("repeated rank-deficient Gaussian draws")


def random_rotate(m: np.ndarray, tau: int, rng: RandomStream) -> np.ndarray:
    """Pad an m x n matrix to m x tau*n with fresh normals, then right-multiply
    by Haar columns.  Preserves the i.i.d. N(0,1) law; sends
    lambda*u*v^T + noise close to the spiked covariance with
    theta = lambda^2 / (tau n)."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ParameterError("need a matrix")
    if tau < 2:
        raise ParameterError("need tau >= 2")
    rows, n = m.shape
    gen = rng.split(0).generator()
    padded = np.concatenate([m, gen.standard_normal((rows, tau * n - n))], axis=1)
    r = haar_columns(tau * n, n, rng.split(1))
    return padded @ r.entries


# ---------------------------------------------------------------------------
# Two-copy cloning maps
# ---------------------------------------------------------------------------

def gaussian_clone(m: np.ndarray, rng: RandomStream) -> tuple[np.ndarray, np.ndarray]:
    """Split A + N(0,1) noise into two independent copies with signal A/sqrt(2)."""
    m = np.asarray(m, dtype=float)
    g = rng.generator().standard_normal(m.shape)
    inv = 1.0 / math.sqrt(2.0)
    return (m + g) * inv, (m - g) * inv


def pds_clone_pattern_probs(p: float, q: float, P: float, Q: float):
    """Two-bit pattern laws for edges and non-edges; patterns ordered
    (0,0), (0,1), (1,0), (1,1).  Raises unless the validity window holds."""
    if not (0 < p <= 1 and 0 <= q < p):
        raise ParameterError("need 0 <= q < p <= 1")
    if Q in (0.0, 1.0):
        raise ParameterError("Q must avoid {0, 1}")
    lo = math.sqrt((1 - p) / (1 - q))
    hi = math.sqrt(p / q) if q > 0 else math.inf
    for name, ratio in (("P/Q", P / Q),
                        ("(1-P)/(1-Q)", (1 - P) / (1 - Q))):
        if not (lo - 1e-12 <= ratio <= hi + 1e-12):
            raise ParameterError(
                f"validity window violated: {name} = {ratio:.6g} "
                f"outside [{lo:.6g}, {hi:.6g}]")
    patterns = [(0, 0), (0, 1), (1, 0), (1, 1)]
    edge = np.empty(4)
    nonedge = np.empty(4)
    for i, (a, b) in enumerate(patterns):
        w1 = a + b
        mp = P ** w1 * (1 - P) ** (2 - w1)
        mq = Q ** w1 * (1 - Q) ** (2 - w1)
        edge[i] = ((1 - q) * mp - (1 - p) * mq) / (p - q)
        nonedge[i] = (p * mq - q * mp) / (p - q)
    for name, v in (("edge", edge), ("non-edge", nonedge)):
        if np.any(v < -1e-12):
            raise ParameterError(f"negative {name} pattern probability")
        if abs(v.sum() - 1.0) > 1e-9:
            raise ParameterError(f"{name} pattern probabilities do not normalize")
    return np.clip(edge, 0, None), np.clip(nonedge, 0, None)


def pds_clone(g: Graph, p: float, q: float, P: float, Q: float,
              rng: RandomStream) -> tuple[Graph, Graph]:
    """Split one PDS-type graph into two independent copies.

    G ~ G(n,S,p,q) maps to independent G(n,S,P,Q) pairs and G ~ G(n,q) to
    independent G(n,Q) pairs, provided (P,Q) lies in the validity window in
    which both per-pair pattern laws are genuine distributions.
    """
    edge_probs, nonedge_probs = pds_clone_pattern_probs(p, q, P, Q)
    gen = rng.generator()
    n = g.n
    iu = np.triu_indices(n, k=1)
    is_edge = g.adj[iu]
    npairs = is_edge.size
    patterns = gen.choice(4, size=npairs, p=nonedge_probs)
    if is_edge.any():
        patterns[is_edge] = gen.choice(4, size=int(is_edge.sum()), p=edge_probs)
    bit1 = (patterns >> 1).astype(bool)  # pattern index 2,3 -> first copy edge
    bit2 = (patterns & 1).astype(bool)
    out = []
    for bits in (bit1, bit2):
        a = np.zeros((n, n), dtype=bool)
        a[iu] = bits
        out.append(Graph(a | a.T))
    return out[0], out[1]


def pds_clone_pis_preset(q: float) -> tuple[float, float, float, float]:
    """(p', q', P, Q) for cloning the complement of a planted independent set
    instance with ambient density q: complement has p'=1, q'=1-q; copies get
    P=1, Q=1-q/2."""
    if not 0 < q < 1:
        raise ParameterError("need q in (0, 1)")
    return 1.0, 1.0 - q, 1.0, 1.0 - q / 2.0


def pds_clone_pds_preset(p: float, q: float, w: float = 0.25) -> tuple[float, float]:
    """(P, Q) = ((w p + (1-w) q)/2, q/2); valid while (p-q)/q <= (1-2w)/w^2."""
    if not 0 < w < 0.5:
        raise ParameterError("need w in (0, 1/2)")
    if not 0 < q < p <= 1:
        raise ParameterError("need 0 < q < p <= 1")
    if (p - q) / q > (1 - 2 * w) / w ** 2 + 1e-12:
        raise ParameterError("preset invalid: (p-q)/q exceeds (1-2w)/w^2")
    return (w * p + (1 - w) * q) / 2.0, q / 2.0
