"""Rejection kernels: bounded-budget changes of measure from Bernoulli bits.

A kernel simultaneously maps Bern(p) approximately to a target density f and
Bern(q) to g via at most N accept/reject rounds.  Three concrete kernels are
provided: Bernoulli-to-Poisson at p=1 and at p=1/2+rho, and
Bernoulli-to-Gaussian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .core import ParameterError, RandomStream


# ---------------------------------------------------------------------------
# Density models (point evaluation in log space + sampling)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianModel:
    """N(mean, 1)."""

    mean: float = 0.0

    def logpdf(self, x):
        return -0.5 * (np.asarray(x, dtype=float) - self.mean) ** 2 - 0.5 * math.log(2 * math.pi)

    def sample(self, gen: np.random.Generator, size):
        return gen.standard_normal(size) + self.mean

    def cdf(self, x):
        from scipy.stats import norm
        return norm.cdf(x, loc=self.mean)

    def tail_above(self, t: float) -> float:
        from scipy.stats import norm
        return float(norm.sf(t, loc=self.mean))


@dataclass(frozen=True)
class PoissonModel:
    """Pois(lam)."""

    lam: float

    def __post_init__(self):
        if self.lam <= 0:
            raise ParameterError("Poisson rate must be positive")

    def logpdf(self, x):
        k = np.asarray(x, dtype=float)
        return k * math.log(self.lam) - self.lam - gammaln(k + 1.0)

    def sample(self, gen: np.random.Generator, size):
        return gen.poisson(self.lam, size).astype(float)

    def tail_above(self, t: float) -> float:
        from scipy.stats import poisson
        return float(poisson.sf(t, self.lam))


# ---------------------------------------------------------------------------
# Kernel specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelSpec:
    """Fully resolved rejection kernel rk(p -> f, q -> g, N)."""

    p: float
    q: float
    f: object
    g: object
    n_iters: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.q < self.p <= 1.0):
            raise ParameterError("need 0 <= q < p <= 1")
        if self.n_iters < 1:
            raise ParameterError("iteration budget must be >= 1")


def rejection_kernel(bits, spec: KernelSpec, rng: RandomStream,
                     return_exhausted: bool = False):
    """Apply the kernel to an array of bits; returns floats of the same shape.

    Each output starts at 0; up to N rounds draw a proposal from g (bit 0) or
    f (bit 1) and accept with the change-of-measure probability.  Samples
    whose budget is exhausted stay 0; their mask is available via
    `return_exhausted` for diagnostics.
    """
    bits_arr = np.asarray(bits)
    scalar = bits_arr.ndim == 0
    b = np.atleast_1d(bits_arr).astype(bool).ravel()
    if bits_arr.size and not np.isin(np.atleast_1d(bits_arr).ravel(), (0, 1)).all():
        raise ParameterError("bits must be 0/1")

    gen = rng.generator()
    out = np.zeros(b.shape, dtype=float)
    alive = np.ones(b.shape, dtype=bool)
    p, q = spec.p, spec.q
    log_q_over_p = math.log(q / p) if q > 0 else -math.inf
    log_1p_over_1q = math.log((1 - p) / (1 - q)) if p < 1 else -math.inf

    for _ in range(spec.n_iters):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        bi = b[idx]
        z = np.empty(idx.size, dtype=float)
        n1 = int(bi.sum())
        if n1 < idx.size:
            z[~bi] = spec.g.sample(gen, idx.size - n1)
        if n1 > 0:
            z[bi] = spec.f.sample(gen, n1)
        lf = np.asarray(spec.f.logpdf(z), dtype=float)
        lg = np.asarray(spec.g.logpdf(z), dtype=float)
        if not (np.all(np.isfinite(lf[bi])) if n1 else True):
            raise ParameterError("non-finite density evaluation under f")
        # log of the rejection ratio; accept with prob 1 - exp(ratio) when <= 0
        log_ratio = np.where(bi,
                             log_1p_over_1q + lg - lf,
                             log_q_over_p + lf - lg)
        cond = log_ratio <= 0
        u = gen.random(idx.size)
        with np.errstate(over="ignore"):
            accept = cond & (u >= np.exp(np.minimum(log_ratio, 0.0)))
        hit = idx[accept]
        out[hit] = z[accept]
        alive[hit] = False

    out = out.reshape(np.atleast_1d(bits_arr).shape)
    alive = alive.reshape(np.atleast_1d(bits_arr).shape)
    if scalar:
        out_val = float(out[0])
        return (out_val, bool(alive[0])) if return_exhausted else out_val
    return (out, alive) if return_exhausted else out


# ---------------------------------------------------------------------------
# Concrete kernels
# ---------------------------------------------------------------------------

def make_kernel_p1(n: int, c: float, q: float, eps: float) -> KernelSpec:
    """rk(1 -> Pois(c*lam), q -> Pois(lam), N) with lam = n^-eps.

    Valid when c > 1, q in (0,1) and 3/eps <= log_c(1/q); the output then
    matches its targets to O(n^-3) in total variation.
    """
    if n < 2:
        raise ParameterError("n must be >= 2")
    if c <= 1:
        raise ParameterError("need c > 1")
    if not 0 < q < 1:
        raise ParameterError("need q in (0, 1)")
    if eps <= 0:
        raise ParameterError("need eps > 0")
    if 3.0 / eps > math.log(1.0 / q) / math.log(c) + 1e-9:
        raise ParameterError(
            "precondition 3/eps <= log_c(1/q) violated: "
            f"3/eps = {3.0 / eps:.6g} > log_c(1/q) = {math.log(1 / q) / math.log(c):.6g}")
    lam = n ** (-eps)
    n_iters = math.ceil(6 * math.log(n) / math.log(1.0 / q))
    return KernelSpec(
        p=1.0, q=q, f=PoissonModel(c * lam), g=PoissonModel(lam),
        n_iters=n_iters, params={"lam": lam, "c": c, "eps": eps, "n": n})


def make_kernel_p2(n: int, rho: float, c: float, eps: float, K: float = 1.0) -> KernelSpec:
    """rk(1/2+rho -> Pois(c*lam), 1/2 -> Pois(lam), N) with lam = n^-eps.

    K is the polynomial exponent bounding 1/rho; the validity condition is
    (K+3)/eps <= log_c(1+2*rho).
    """
    if n < 2:
        raise ParameterError("n must be >= 2")
    if not 0 < rho < 0.5:
        raise ParameterError("need rho in (0, 1/2)")
    if c <= 1:
        raise ParameterError("need c > 1")
    if not 0 < eps < 1:
        raise ParameterError("need eps in (0, 1)")
    lam = n ** (-eps)
    if lam > 1:
        raise ParameterError("need lam = n^-eps <= 1")
    if (K + 3.0) / eps > math.log1p(2 * rho) / math.log(c) + 1e-9:
        raise ParameterError(
            "precondition (K+3)/eps <= log_c(1+2*rho) violated: "
            f"{(K + 3.0) / eps:.6g} > {math.log1p(2 * rho) / math.log(c):.6g}")
    n_iters = math.ceil(6 * math.log(n) / rho)
    return KernelSpec(
        p=0.5 + rho, q=0.5, f=PoissonModel(c * lam), g=PoissonModel(lam),
        n_iters=n_iters, params={"lam": lam, "c": c, "eps": eps, "rho": rho, "K": K, "n": n})


def gaussian_kernel_delta(p: float, q: float) -> float:
    """delta = min(log(p/q), log((1-q)/(1-p))), with the +inf convention at p=1."""
    first = math.log(p / q)
    second = math.inf if p == 1.0 else math.log((1 - q) / (1 - p))
    return min(first, second)


def gaussian_kernel_mu_bound(n: int, p: float, q: float) -> float:
    delta = gaussian_kernel_delta(p, q)
    return delta / (2.0 * math.sqrt(6 * math.log(n) + 2 * math.log(1.0 / (p - q))))


def make_kernel_g(n: int, p: float, q: float, mu: float | None = None) -> KernelSpec:
    """rk(p -> N(mu, 1), q -> N(0, 1), N) with N = ceil(6 log n / delta).

    mu defaults to its maximum permitted value
    delta / (2 sqrt(6 log n + 2 log 1/(p-q))); an explicit mu must not exceed
    that bound.
    """
    if n < 2:
        raise ParameterError("n must be >= 2")
    if not (0 < q < 1):
        raise ParameterError("q must lie strictly inside (0, 1)")
    if not (q < p <= 1):
        raise ParameterError("need q < p <= 1")
    delta = gaussian_kernel_delta(p, q)
    bound = gaussian_kernel_mu_bound(n, p, q)
    if mu is None:
        mu = bound
    elif mu > bound * (1 + 1e-9):
        raise ParameterError(f"mu = {mu:.6g} exceeds the permitted bound {bound:.6g}")
    elif mu <= 0:
        raise ParameterError("mu must be positive")
    n_iters = math.ceil(6 * math.log(n) / delta)
    return KernelSpec(
        p=p, q=q, f=GaussianModel(mu), g=GaussianModel(0.0),
        n_iters=n_iters, params={"mu": mu, "delta": delta, "n": n})


def gaussian_kernel_spec(n: int, p: float, q: float, mu: float, n_iters: int,
                         note: str = "") -> KernelSpec:
    """Gaussian kernel with caller-supplied mu and budget, bypassing the
    mu-bound check.  Used by reductions whose published parameter choices
    exceed the generic bound by a constant factor."""
    return KernelSpec(
        p=p, q=q, f=GaussianModel(mu), g=GaussianModel(0.0),
        n_iters=n_iters, params={"mu": mu, "n": n, "note": note})
