"""Iterative extremal eigen/singular value helpers used by solvers and reductions."""

from __future__ import annotations

import numpy as np
from scipy.sparse.linalg import eigsh, svds

from .core import ParameterError, RandomStream, require_square

TOL = 1e-6
SMALL_N = 8  # dense fallback below this size


def top_eigenvalue(m: np.ndarray, rng: RandomStream | None = None) -> float:
    """Largest (algebraic) eigenvalue of a symmetric matrix to 1e-6 relative.

    Lanczos with a deterministic start vector; dense solve for tiny inputs or
    on non-convergence.
    """
    m = require_square(m)
    n = m.shape[0]
    if n <= SMALL_N:
        return float(np.linalg.eigvalsh(m)[-1])
    v0 = _start_vector(n, rng)
    try:
        vals = eigsh(m, k=1, which="LA", tol=TOL, v0=v0,
                     maxiter=10_000, return_eigenvectors=False)
        return float(vals[0])
    except Exception:
        return float(np.linalg.eigvalsh(m)[-1])


def top_eigenpair(m: np.ndarray, rng: RandomStream | None = None):
    m = require_square(m)
    n = m.shape[0]
    if n <= SMALL_N:
        w, v = np.linalg.eigh(m)
        return float(w[-1]), v[:, -1]
    v0 = _start_vector(n, rng)
    try:
        w, v = eigsh(m, k=1, which="LA", tol=TOL, v0=v0, maxiter=10_000)
        return float(w[0]), v[:, 0]
    except Exception:
        w, v = np.linalg.eigh(m)
        return float(w[-1]), v[:, -1]


def top_singular_value(m: np.ndarray, rng: RandomStream | None = None) -> float:
    """Largest singular value to 1e-6 relative."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ParameterError("need a matrix")
    if min(m.shape) <= SMALL_N:
        return float(np.linalg.svd(m, compute_uv=False)[0])
    v0 = _start_vector(min(m.shape), rng)
    try:
        s = svds(m, k=1, tol=TOL, v0=v0, maxiter=10_000,
                 return_singular_vectors=False)
        return float(s[0])
    except Exception:
        return float(np.linalg.svd(m, compute_uv=False)[0])


def top_singular_triplet(m: np.ndarray, rng: RandomStream | None = None):
    m = np.asarray(m, dtype=float)
    if min(m.shape) <= SMALL_N:
        u, s, vt = np.linalg.svd(m)
        return u[:, 0], float(s[0]), vt[0]
    v0 = _start_vector(min(m.shape), rng)
    try:
        u, s, vt = svds(m, k=1, tol=TOL, v0=v0, maxiter=10_000)
        return u[:, 0], float(s[0]), vt[0]
    except Exception:
        u, s, vt = np.linalg.svd(m)
        return u[:, 0], float(s[0]), vt[0]


def _start_vector(n: int, rng: RandomStream | None) -> np.ndarray:
    if rng is None:
        rng = RandomStream(0x5eed, (n,))
    return rng.generator().standard_normal(n)
