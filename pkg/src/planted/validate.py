"""Named distributional-identity validators runnable from the CLI.

Each validator realizes one of the library's exactness claims as a
statistical (or exact-enumeration) check and returns TestReports.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import stats

from .core import Graph, ProblemParams, RandomStream
from .cloning import gaussian_clone, haar_columns, random_rotate, reflection_clone
from .harness import TestReport, exact_tv_small, gof_test, two_sample_test
from .instances import gen_graph
from .lifting import gaussian_family, poisson_family
from .reductions import ros_reduce
from .rejection import GaussianModel, make_kernel_g, rejection_kernel


def poisson_pmf_table(lam: float, tail: float = 1e-12) -> dict:
    out = {}
    k = 0
    acc = 0.0
    while acc < 1.0 - tail and k < 200:
        p = stats.poisson.pmf(k, lam)
        out[k] = float(p)
        acc += p
        k += 1
    return out


def check_poisson_splitting(rng: RandomStream, lam: float = 0.8,
                            samples: int = 100_000) -> list[TestReport]:
    """4-way thinning of Pois(lam): coordinates are Pois(lam/4) and
    uncorrelated."""
    fam = poisson_family(lam, c=2.0)
    gen = rng.generator()
    draws = gen.poisson(lam, samples).astype(float)
    parts = fam.clone(draws, gen)
    table = poisson_pmf_table(lam / 4.0)
    reports = [gof_test(parts[i], table, method="chisq") for i in range(4)]
    corr = np.corrcoef(parts)
    max_corr = float(np.abs(corr[np.triu_indices(4, k=1)]).max())
    reports.append(TestReport("correlation", max_corr, None, max_corr <= 0.02,
                              1e-3, (samples,), detail="pairwise |corr| <= 0.02"))
    return reports


def check_gaussian_clone_cov(rng: RandomStream, lam: float = 1.0,
                             samples: int = 100_000) -> list[TestReport]:
    """4-way Gaussian clone of N(lam,1): identity covariance, means lam/2."""
    fam = gaussian_family(lam)
    gen = rng.generator()
    draws = gen.standard_normal(samples) + lam
    parts = fam.clone(draws, gen)
    cov_err = float(np.abs(np.cov(parts) - np.eye(4)).max())
    mean_err = float(np.abs(parts.mean(axis=1) - lam / 2.0).max())
    return [
        TestReport("mean-cov", cov_err, None, cov_err <= 0.02, 1e-3,
                   (samples,), detail="covariance within 0.02 of identity"),
        TestReport("mean-cov", mean_err, None, mean_err <= 0.01, 1e-3,
                   (samples,), detail="means within 0.01 of lam/2"),
    ]


def check_rk_gaussian_endpoints(rng: RandomStream, n: int = 1000,
                                samples: int = 100_000) -> list[TestReport]:
    """rk_G(1 -> N(mu,1), 1/2 -> N(0,1)) endpoint laws."""
    spec = make_kernel_g(n, 1.0, 0.5)
    mu = spec.params["mu"]
    ones = rejection_kernel(np.ones(samples, dtype=np.uint8), spec, rng.split(0))
    gen = rng.split(1).generator()
    bits = (gen.random(samples) < 0.5).astype(np.uint8)
    mix = rejection_kernel(bits, spec, rng.split(2))
    return [
        gof_test(ones, GaussianModel(mu), method="ks"),
        gof_test(mix, GaussianModel(0.0), method="ks"),
    ]


def check_rk_poisson_endpoints(rng: RandomStream, n: int = 1000,
                               samples: int = 100_000) -> list[TestReport]:
    """rk_P1 on b ~ Bern(q) matches Pois(lam); on b = 1 matches Pois(c lam)."""
    from .rejection import make_kernel_p1
    spec = make_kernel_p1(n, c=2.0, q=0.5, eps=0.5)
    lam = spec.params["lam"]
    ones = rejection_kernel(np.ones(samples, dtype=np.uint8), spec, rng.split(0))
    gen = rng.split(1).generator()
    bits = (gen.random(samples) < 0.5).astype(np.uint8)
    mix = rejection_kernel(bits, spec, rng.split(2))
    return [
        gof_test(ones, poisson_pmf_table(2.0 * lam), method="chisq"),
        gof_test(mix, poisson_pmf_table(lam), method="chisq"),
    ]


def permuted_diagonal_law(n: int, p: float, q: float) -> dict:
    """Exact law of a matrix with Bern(p) diagonal and Bern(q) off-diagonal
    entries after a uniform column permutation; keys are entry tuples."""
    perms = list(itertools.permutations(range(n)))
    law = {}
    for x in itertools.product((0, 1), repeat=n * n):
        total = 0.0
        for sigma in perms:
            prob = 1.0
            for i in range(n):
                for j in range(n):
                    planted = (i == sigma[j])
                    pr = p if planted else q
                    prob *= pr if x[i * n + j] else (1.0 - pr)
            total += prob
        law[x] = total / len(perms)
    return law


def product_bernoulli_law(n: int, q: float) -> dict:
    law = {}
    for x in itertools.product((0, 1), repeat=n * n):
        ones = sum(x)
        law[x] = q ** ones * (1 - q) ** (n * n - ones)
    return law


def check_lemma_permuted_diagonal(n: int = 3, p: float = 0.9,
                                  q: float = 0.5) -> list[TestReport]:
    """Exact TV of the permuted-planted-diagonal law against pure noise is at
    most sqrt(chi^2(Bern(p), Bern(q)) / 2)."""
    tv = exact_tv_small(permuted_diagonal_law(n, p, q), product_bernoulli_law(n, q))
    chi2 = (p - q) ** 2 / q + (p - q) ** 2 / (1 - q)
    bound = math.sqrt(chi2 / 2.0)
    return [TestReport("exact-tv", tv, None, tv <= bound, 0.0,
                       (2 ** (n * n),),
                       detail=f"tv={tv:.6f} <= sqrt(chi2/2)={bound:.6f}")]


def check_haar_first_coordinate(rng: RandomStream, ambient: int = 100,
                                draws: int = 100_000) -> list[TestReport]:
    """First coordinate of a Haar column is approximately N(0, 1/ambient)."""
    gen = rng.generator()
    g = gen.standard_normal((draws, ambient))
    first = g[:, 0] / np.linalg.norm(g, axis=1)
    return [gof_test(first * math.sqrt(ambient), GaussianModel(0.0), method="ks")]


def check_reduction_h0(rng: RandomStream, n: int = 128, ell: int = 2,
                       trials: int = 10) -> list[TestReport]:
    """Pooled ros_reduce H0 entries match N(0,1)."""
    pooled = []
    for t in range(trials):
        params = ProblemParams("PC", n=n, k=0, p=0.5)
        inst = gen_graph(params, "H0", rng.split(2 * t))
        out = ros_reduce(inst.graph, ell, rng.split(2 * t + 1))
        pooled.append(np.asarray(out.observation).ravel())
    return [gof_test(np.concatenate(pooled), GaussianModel(0.0), method="ks")]


def check_random_rotate_h0(rng: RandomStream, n: int = 128, tau: int = 4,
                           trials: int = 10) -> list[TestReport]:
    pooled = []
    for t in range(trials):
        gen = rng.split(2 * t).generator()
        m = gen.standard_normal((n, n))
        pooled.append(random_rotate(m, tau, rng.split(2 * t + 1)).ravel())
    return [gof_test(np.concatenate(pooled), GaussianModel(0.0), method="ks")]


def check_gaussian_clone_independence(rng: RandomStream, side: int = 320) -> list[TestReport]:
    gen = rng.split(0).generator()
    m = gen.standard_normal((side, side))
    m1, m2 = gaussian_clone(m, rng.split(1))
    r = float(np.corrcoef(m1.ravel(), m2.ravel())[0, 1])
    resid = float(np.abs(m1 + m2 - math.sqrt(2.0) * m).max())
    return [
        TestReport("correlation", abs(r), None, abs(r) <= 0.02, 1e-3,
                   (side * side,), detail="cross-copy |corr| <= 0.02"),
        TestReport("identity", resid, None, resid <= 1e-12, 0.0,
                   (side * side,), detail="M1 + M2 = sqrt(2) M"),
    ]


def check_reflection_frobenius(rng: RandomStream, n: int = 512,
                               iters: int = 3) -> list[TestReport]:
    gen = rng.split(0).generator()
    m = gen.standard_normal((n, n))
    before = float(np.linalg.norm(m))
    worst = 0.0
    w = m
    for i in range(iters):
        w = reflection_clone(w, 1, rng.split(i + 1))
        after = float(np.linalg.norm(w))
        worst = max(worst, abs(after - before) / before)
        before = after
    return [TestReport("identity", worst, None, worst <= 1e-9, 0.0, (n * n,),
                       detail="per-iteration relative Frobenius drift")]


VALIDATORS = {
    "poisson-splitting": check_poisson_splitting,
    "gaussian-clone-cov": check_gaussian_clone_cov,
    "rk-gaussian-endpoints": check_rk_gaussian_endpoints,
    "rk-poisson-endpoints": check_rk_poisson_endpoints,
    "lemma-permuted-diagonal": lambda rng: check_lemma_permuted_diagonal(),
    "haar-first-coordinate": check_haar_first_coordinate,
    "reduction-h0-ros": check_reduction_h0,
    "random-rotate-h0": check_random_rotate_h0,
    "gaussian-clone-independence": check_gaussian_clone_independence,
    "reflection-frobenius": check_reflection_frobenius,
}
