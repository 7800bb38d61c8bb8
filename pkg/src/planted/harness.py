"""Monte Carlo experiments, statistical validators, and hardness-theorem
parameter schedules."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Optional

import numpy as np
from scipy import stats

from .core import (
    GRAPH_PROBLEMS, MATRIX_PROBLEMS, SAMPLE_PROBLEMS,
    ParameterError, ProblemParams, RandomStream, RefusalError, Verdict,
)
from .instances import gen_graph, gen_matrix, gen_spca
from .lifting import (
    gaussian_lift, gaussian_lift_mu, general_pds_reduce, general_pds_targets,
    pc_lift, poisson_lift, poisson_lift_targets,
)
from .reductions import (
    ReductionOutput, bc_recovery_mu, bc_recovery_reduce, bc_reduce,
    detect_via_recovery, ros_reduce, spca_high_sparsity, spca_low_sparsity,
    spca_recovery_reduce, sros_reduce, ssbm_reduce, ssbm_rho,
)
from . import solvers as slv


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestReport:
    method: str
    statistic: float
    p_value: Optional[float]
    passed: bool
    alpha: float
    n_samples: tuple
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "method": self.method, "statistic": self.statistic,
            "p_value": self.p_value, "passed": self.passed,
            "alpha": self.alpha, "n_samples": list(self.n_samples),
            "detail": self.detail,
        }


@dataclass(frozen=True)
class ErrorReport:
    type_i: float
    type_ii: float
    type_i_interval: tuple
    type_ii_interval: tuple
    trials: int
    failures: int
    seed: int
    config: dict

    @property
    def total_error(self) -> float:
        return self.type_i + self.type_ii

    def to_json(self) -> str:
        d = {
            "type_i": self.type_i, "type_ii": self.type_ii,
            "type_i_interval": list(self.type_i_interval),
            "type_ii_interval": list(self.type_ii_interval),
            "trials": self.trials, "failures": self.failures,
            "seed": self.seed, "config": self.config,
        }
        return json.dumps(d, sort_keys=True)


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple:
    """95% Wilson score interval."""
    if trials == 0:
        return (0.0, 1.0)
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials ** 2)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


# ---------------------------------------------------------------------------
# Goodness-of-fit machinery
# ---------------------------------------------------------------------------

def _merge_bins(labels, expected, observed, min_expected=5.0):
    """Left-to-right accumulation so every merged bin has expected >= min."""
    out_e, out_o = [], []
    acc_e = acc_o = 0.0
    for e, o in zip(expected, observed):
        acc_e += e
        acc_o += o
        if acc_e >= min_expected:
            out_e.append(acc_e)
            out_o.append(acc_o)
            acc_e = acc_o = 0.0
    if acc_e > 0 or acc_o > 0:
        if out_e:
            out_e[-1] += acc_e
            out_o[-1] += acc_o
        else:
            out_e.append(acc_e)
            out_o.append(acc_o)
    return np.array(out_e), np.array(out_o)


def gof_test(samples, reference, method: str | None = None,
             alpha: float = 1e-3) -> TestReport:
    """One-sample goodness of fit.

    `reference` is a CDF callable (or an object with .cdf) for the KS test, or
    a {value: probability} mass table for the chi-square test.  Bins with
    expected count below 5 are merged automatically.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 100:
        raise ParameterError("need at least 100 samples")
    if method is None:
        method = "chisq" if isinstance(reference, dict) else "ks"

    if method == "ks":
        cdf = reference.cdf if hasattr(reference, "cdf") else reference
        stat, p = stats.kstest(samples, cdf)
        return TestReport("ks", float(stat), float(p), p > alpha, alpha,
                          (samples.size,))
    if method != "chisq":
        raise ParameterError("method must be 'ks' or 'chisq'")
    if not isinstance(reference, dict):
        raise ParameterError("chi-square reference must be a {value: prob} table")
    values = sorted(reference)
    probs = np.array([reference[v] for v in values], dtype=float)
    leftover = 1.0 - probs.sum()
    if leftover < -1e-9:
        raise ParameterError("reference probabilities exceed 1")
    counts = np.array([(samples == v).sum() for v in values], dtype=float)
    extra = samples.size - counts.sum()
    expected = probs * samples.size
    if leftover > 1e-12 or extra > 0:
        counts = np.append(counts, extra)
        expected = np.append(expected, max(leftover, 0.0) * samples.size)
    expected_m, observed_m = _merge_bins(values, expected, counts)
    if len(expected_m) < 2:
        raise ParameterError("too few bins after merging")
    # renormalize exactly so the chi-square sums agree
    expected_m *= observed_m.sum() / expected_m.sum()
    stat, p = stats.chisquare(observed_m, expected_m)
    return TestReport("chisq", float(stat), float(p), p > alpha, alpha,
                      (samples.size,), detail=f"bins={len(expected_m)}")


def two_sample_test(samples_a, samples_b, method: str = "ks",
                    alpha: float = 1e-3) -> TestReport:
    """Two-sample comparison: KS, chi-square contingency, or mean/covariance
    agreement at 4-sigma bands."""
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    if method == "ks":
        if a.size < 100 or b.size < 100:
            raise ParameterError("need at least 100 samples per side")
        stat, p = stats.ks_2samp(a.ravel(), b.ravel())
        return TestReport("ks", float(stat), float(p), p > alpha, alpha,
                          (a.size, b.size))
    if method == "chisq":
        values = np.union1d(np.unique(a), np.unique(b))
        ca = np.array([(a == v).sum() for v in values], dtype=float)
        cb = np.array([(b == v).sum() for v in values], dtype=float)
        keep = (ca + cb) >= 5
        ca2 = np.append(ca[keep], ca[~keep].sum())
        cb2 = np.append(cb[keep], cb[~keep].sum())
        nz = (ca2 + cb2) > 0
        table = np.vstack([ca2[nz], cb2[nz]])
        if table.shape[1] < 2:
            raise ParameterError("too few categories")
        stat, p, _, _ = stats.chi2_contingency(table)
        return TestReport("chisq", float(stat), float(p), p > alpha, alpha,
                          (a.size, b.size))
    if method == "meancov":
        if a.ndim != 2 or b.ndim != 2:
            raise ParameterError("meancov expects 2-d sample arrays (obs x dim)")
        z_band = 4.0
        na, nb = a.shape[0], b.shape[0]
        se = np.sqrt(a.var(axis=0, ddof=1) / na + b.var(axis=0, ddof=1) / nb)
        z_mean = np.abs(a.mean(axis=0) - b.mean(axis=0)) / np.maximum(se, 1e-12)
        ca_, cb_ = np.cov(a.T), np.cov(b.T)
        scale = math.sqrt(2.0 / min(na, nb))
        z_cov = np.abs(ca_ - cb_).max() / max(scale, 1e-12)
        stat = float(max(z_mean.max(), z_cov))
        return TestReport("meancov", stat, None, stat <= z_band, alpha,
                          (na, nb), detail=f"z_band={z_band}")
    raise ParameterError("method must be 'ks', 'chisq', or 'meancov'")


def exact_tv_small(law_a: dict, law_b: dict) -> float:
    """Exact total variation between finite discrete laws, by enumeration."""
    if len(law_a) > 10_000_000 or len(law_b) > 10_000_000:
        raise RefusalError("supports too large for exact enumeration")
    for name, law in (("first", law_a), ("second", law_b)):
        total = math.fsum(law.values())
        if abs(total - 1.0) > 1e-9:
            raise ParameterError(f"{name} law sums to {total}, not 1")
        if any(p < -1e-15 for p in law.values()):
            raise ParameterError(f"{name} law has negative mass")
    keys = set(law_a) | set(law_b)
    return 0.5 * math.fsum(abs(law_a.get(k, 0.0) - law_b.get(k, 0.0)) for k in keys)


# ---------------------------------------------------------------------------
# Parameter schedules from the hardness theorems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScheduleResult:
    theorem: str
    inputs: dict
    outputs: dict

    def to_json(self) -> str:
        return json.dumps({"theorem": self.theorem, "inputs": self.inputs,
                           "outputs": self.outputs}, sort_keys=True)


class RegionError(ParameterError):
    """(alpha, beta) fall outside a theorem's stated region."""


def _require(cond: bool, inequality: str):
    if not cond:
        raise RegionError(f"schedule region violated: requires {inequality}")


def _ceil_tol(x: float) -> int:
    """Ceiling that forgives float noise just above an integer."""
    return max(0, math.ceil(x - 1e-9))


def _schedule_w(n: int) -> float:
    """Densification speed for the clique-lifting schedule: any sub-polynomial
    increasing function works asymptotically; log log n keeps the finite-n
    log-ratios close to their limits at desk scale."""
    return max(2.1, math.log(math.log(n)))


def param_schedule(theorem: str, alpha: float, beta: float,
                   gamma: Optional[float] = None, n: int = 1024,
                   q: float = 0.5, c: float = 2.0) -> ScheduleResult:
    """Evaluate a hardness theorem's closed-form parameter sequence at n."""
    if n < 8:
        raise ParameterError("n too small for schedule evaluation")
    t = theorem.lower()
    log2n = math.log2(n)
    mu_lift = gaussian_lift_mu(n)
    inputs = {"alpha": alpha, "beta": beta, "n": n}
    if gamma is not None:
        inputs["gamma"] = gamma

    if t in ("pc-lifting", "pis"):
        _require(0 <= alpha < 2, "0 <= alpha < 2")
        _require(0 < beta < 1, "0 < beta < 1")
        _require(beta < 0.5 + alpha / 4, "beta < 1/2 + alpha/4")
        _require(2 * beta > alpha, "2*beta > alpha (the clique-size exponent must be positive)")
        g = (2 * beta - alpha) / (2 - alpha)
        ell = _ceil_tol(alpha * log2n / (2 - alpha))
        k = _ceil_tol(n ** g)
        w = _schedule_w(n)
        q_n = 1.0 - (1.0 - 1.0 / w) ** (0.25 ** ell)
        return ScheduleResult(t, inputs, {
            "gamma_exponent": g, "ell": ell, "k": k,
            "N": 2 ** ell * n, "K": 2 ** ell * k, "q": q_n})

    if t == "pds-poisson":
        _require(0 < alpha < 2, "0 < alpha < 2")
        _require(0 < beta < 1, "0 < beta < 1")
        _require(beta < 0.5 + alpha / 4, "beta < 1/2 + alpha/4")
        _require(2 * beta > alpha, "2*beta > alpha (the clique-size exponent must be positive)")
        eps = min(alpha / 2, 0.9 * (0.5 + alpha / 4 - beta) / (1 - beta))
        g = (2 * beta - alpha + eps * (1 - beta)) / (2 - alpha)
        ell = _ceil_tol((alpha - eps) * log2n / (2 - alpha))
        k = _ceil_tol(n ** g)
        p_n, q_n = poisson_lift_targets(n, ell, eps, c)
        return ScheduleResult(t, inputs, {
            "eps": eps, "c": c, "gamma_exponent": g, "ell": ell, "k": k,
            "N": 2 ** ell * n, "K": 2 ** ell * k, "p": p_n, "q": q_n})

    if t == "pds-gaussian":
        _require(0 <= alpha < 1, "0 <= alpha < 1")
        _require(0 < beta < 1, "0 < beta < 1")
        _require(beta < 0.5 + alpha / 2, "beta < 1/2 + alpha/2")
        _require(beta > alpha, "beta > alpha (the clique-size exponent must be positive)")
        g = (beta - alpha) / (1 - alpha)
        ell = _ceil_tol(alpha * log2n / (1 - alpha))
        k = _ceil_tol(n ** g)
        p_n = float(stats.norm.cdf(2.0 ** (-ell) * mu_lift))
        return ScheduleResult(t, inputs, {
            "gamma_exponent": g, "ell": ell, "k": k,
            "N": 2 ** ell * n, "K": 2 ** ell * k, "p": p_n, "q": 0.5})

    if t == "bc":
        _require(alpha > 0, "alpha > 0")
        _require(0 < beta < 1, "0 < beta < 1")
        _require(alpha < 1, "alpha < 1 (the lifting exponent needs alpha/(1-alpha))")
        _require(beta < 0.5 + alpha / 2, "beta < 1/2 + alpha/2")
        _require(beta >= alpha, "beta >= alpha")
        g = (beta - alpha) / (1 - alpha)
        ell = _ceil_tol(alpha * log2n / (1 - alpha))
        k = _ceil_tol(n ** g)
        return ScheduleResult(t, inputs, {
            "gamma_exponent": g, "ell": ell, "k": k,
            "N": 2 ** ell * n, "K": 2 ** ell * k,
            "mu": 2.0 ** (-ell - 0.5) * mu_lift})

    if t == "bc-recovery":
        _require(alpha > 0, "alpha > 0")
        _require(0 < beta < 1, "0 < beta < 1")
        if beta >= 0.5:
            _require(beta < 0.5 + alpha, "beta < 1/2 + alpha")
            rho = n ** (-alpha)
        else:
            rho = 0.5
        k = _ceil_tol(n ** beta)
        return ScheduleResult(t, inputs, {
            "rho": rho, "k": k, "N": n, "K": k, "ell": 0,
            "mu": bc_recovery_mu(n, rho)})

    if t == "ros":
        _require(alpha > 0, "alpha > 0")
        _require(0 < beta < 1, "0 < beta < 1")
        _require(beta < 0.5 + alpha, "beta < 1/2 + alpha")
        _require(beta > alpha, "beta > alpha (the clique-size exponent must be positive)")
        g = beta - alpha
        ell = _ceil_tol(alpha * log2n)
        k = _ceil_tol(n ** g)
        return ScheduleResult(t, inputs, {
            "gamma_exponent": g, "ell": ell, "k": k,
            "N": 2 * n, "K": 2 ** ell * k,
            "mu": mu_lift * k / math.sqrt(2.0)})

    if t in ("sros", "ssw", "ssbm"):
        _require(alpha > 0, "alpha > 0")
        _require(0 < beta < 1, "0 < beta < 1")
        _require(beta < 0.5 + alpha, "beta < 1/2 + alpha")
        if beta >= 0.5:
            eps = 0.5 * (alpha + 0.5 - beta)
            ell = _ceil_tol((beta - 0.5 + eps) * log2n)
            k = _ceil_tol(n ** (0.5 - eps))
            big_n = 2 * n
            mu_eff = mu_lift
        else:
            eps = min(alpha / (2 * (alpha + beta)), 0.5 - beta)
            ell = 0
            k = _ceil_tol(n ** (0.5 - eps))
            big_n = 2 * _ceil_tol(n ** ((0.5 - eps) / beta))
            mu_eff = mu_lift * n ** (eps - (alpha / beta) * (0.5 - eps))
        out = {"eps": eps, "ell": ell, "k": k, "N": big_n, "K": 2 ** ell * k}
        if t == "ssbm":
            _require(0 < q < 1, "0 < q < 1")
            phi = float(stats.norm.cdf(mu_eff * (k - 1) /
                                       (2.0 ** (ell + 1) * math.sqrt(n - 1))))
            scale = 2 * q if q <= 0.5 else 2 * (1 - q)
            out.update({"q": q, "rho": scale * (phi - 0.5)})
        else:
            out["mu"] = mu_eff * k * (k - 1) / (2.0 * math.sqrt(n - 1))
            if t == "ssw":
                out["mu"] /= math.sqrt(2.0)
        return ScheduleResult(t, inputs, out)

    if t == "spca":
        _require(0 < alpha < 1, "0 < alpha < 1")
        _require(0 < beta < 1, "0 < beta < 1")
        _require(alpha > max(1 - 2 * beta, 0.0), "alpha > max(1 - 2*beta, 0)")
        g = (1 - alpha) / 2
        ell = _ceil_tol((beta - g) * log2n)
        k = _ceil_tol(n ** g)
        tau = math.log(n)
        return ScheduleResult(t, inputs, {
            "gamma_exponent": g, "ell": ell, "k": k, "tau": tau,
            "N": n, "d": n, "K": 2 ** ell * k,
            "theta": mu_lift ** 2 * k ** 2 / (2 * tau * n)})

    if t in ("uspca", "ubspca"):
        _require(0 < alpha < 1, "0 < alpha < 1")
        _require((1 - alpha) / 2 < beta < (1 + alpha) / 2,
                 "(1-alpha)/2 < beta < (1+alpha)/2")
        g = (1 - alpha) / (3 - alpha - 2 * beta)
        ell = _ceil_tol((alpha + 2 * beta - 1) / (3 - alpha - 2 * beta) * log2n)
        k = _ceil_tol(n ** g)
        tau = math.log(n)
        return ScheduleResult(t, inputs, {
            "gamma_exponent": g, "ell": ell, "k": k, "tau": tau,
            "N": 2 ** ell * n, "d": 2 ** ell * n, "K": 2 ** ell * k,
            "theta": mu_lift ** 2 * k ** 2 / (2 ** (ell + 1) * tau * n)})

    if t in ("spca-recovery", "ubspca-recovery"):
        _require(alpha > 0, "alpha > 0")
        _require(beta > 0.5, "beta > 1/2")
        g = beta - (1 - alpha) / 2
        _require(g > 0, "beta > (1 - alpha)/2")
        k = _ceil_tol(n ** beta)
        rho = n ** (-g)
        tau = math.log(n)
        mu = bc_recovery_mu(n, min(rho, 0.5))
        return ScheduleResult(t, inputs, {
            "gamma_exponent": g, "k": k, "K": k, "N": n, "d": n, "rho": rho,
            "tau": tau, "ell": 0, "theta": k ** 2 * mu ** 2 / (tau * n)})

    if t == "pds-general":
        if gamma is None:
            raise ParameterError("pds-general needs gamma")
        _require(0 <= alpha < 2, "0 <= alpha < 2")
        _require(gamma >= alpha, "gamma >= alpha")
        _require(0 < beta < 1, "0 < beta < 1")
        _require(beta < 0.5 + gamma / 2 - alpha / 4, "beta < 1/2 + gamma/2 - alpha/4")
        eps = min(0.5, alpha / 2 if alpha > 0 else 0.25)
        for _ in range(64):
            denom = 2 - alpha - (2 - eps) * (gamma - alpha)
            if denom > 0 and (alpha == 0 or eps < alpha):
                eta = 1 - (1 - beta) * (2 - eps) / denom
                if 0 < eta < 0.5:
                    break
            eps /= 2
        else:
            raise RegionError("could not find a workable eps for pds-general")
        ell1 = _ceil_tol((gamma - alpha) * (2 - eps) * log2n / denom)
        ell2 = _ceil_tol((alpha - eps) * log2n / denom)
        k = _ceil_tol(n ** eta)
        p_n, q_n = general_pds_targets(n, ell1, ell2, eps)
        return ScheduleResult(t, inputs, {
            "eps": eps, "eta_exponent": eta, "ell1": ell1, "ell2": ell2,
            "k": k, "N": 2 ** (ell1 + ell2) * n, "K": 2 ** (ell1 + ell2) * k,
            "p": p_n, "q": q_n})

    raise ParameterError(f"unknown theorem tag {theorem!r}")


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    params: dict
    solver: str
    trials: int
    seed: int
    solver_params: dict = field(default_factory=dict)
    pipeline: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "problem": self.problem, "params": dict(sorted(self.params.items())),
            "solver": self.solver,
            "solver_params": dict(sorted(self.solver_params.items())),
            "trials": self.trials, "seed": self.seed,
            "pipeline": self.pipeline,
        }


def generate_instance(params: ProblemParams, hypothesis: str, rng: RandomStream):
    if params.problem in GRAPH_PROBLEMS:
        return gen_graph(params, hypothesis, rng)
    if params.problem in MATRIX_PROBLEMS:
        return gen_matrix(params, hypothesis, rng)
    if params.problem in SAMPLE_PROBLEMS:
        return gen_spca(params, hypothesis, rng)
    raise ParameterError(f"unknown problem {params.problem}")


def _observation(instance):
    for attr in ("graph", "matrix", "samples"):
        if hasattr(instance, attr):
            return getattr(instance, attr)
    raise ParameterError("unrecognized instance")


REDUCTIONS: dict[str, Callable] = {}


def _register_reduction(name):
    def deco(fn):
        REDUCTIONS[name] = fn
        return fn
    return deco


@_register_reduction("pc_lift")
def _red_pc_lift(instance, args, rng):
    g = pc_lift(instance.graph, args.get("ell", 1), rng, w=args.get("w"))
    n = g.n
    claimed = ProblemParams("PC", n=n, k=min(n, 2 ** args.get("ell", 1) * instance.params.k))
    from .lifting import pc_lift_tv_budget
    return ReductionOutput(g, claimed, pc_lift_tv_budget(instance.graph.n, args.get("w")))


@_register_reduction("poisson_lift")
def _red_poisson_lift(instance, args, rng):
    ell = args.get("ell", 1)
    eps = args["eps"]
    c = args.get("c", 2.0)
    gamma = args.get("gamma", instance.params.p or instance.params.q)
    g = poisson_lift(instance.graph, ell, gamma, eps, c, rng)
    p, q = poisson_lift_targets(instance.graph.n, ell, eps, c)
    claimed = ProblemParams("PDS", n=g.n, k=min(g.n, 2 ** ell * instance.params.k),
                            p=p, q=q)
    return ReductionOutput(g, claimed, float("nan"))


@_register_reduction("gaussian_lift")
def _red_gaussian_lift(instance, args, rng):
    ell = args.get("ell", 1)
    g = gaussian_lift(instance.graph, ell, rng, emit="graph")
    from .lifting import gaussian_lift_targets
    p, q = gaussian_lift_targets(instance.graph.n, ell)
    claimed = ProblemParams("PDS", n=g.n, k=min(g.n, 2 ** ell * instance.params.k),
                            p=p, q=q)
    return ReductionOutput(g, claimed, float("nan"))


@_register_reduction("general_pds")
def _red_general_pds(instance, args, rng):
    ell1, ell2, eps = args.get("ell1", 1), args.get("ell2", 1), args["eps"]
    g = general_pds_reduce(instance.graph, ell1, ell2, eps, rng)
    p, q = general_pds_targets(instance.graph.n, ell1, ell2, eps)
    claimed = ProblemParams("PDS", n=g.n,
                            k=min(g.n, 2 ** (ell1 + ell2) * instance.params.k),
                            p=p, q=q)
    return ReductionOutput(g, claimed, float("nan"))


@_register_reduction("bc_reduce")
def _red_bc(instance, args, rng):
    out = bc_reduce(instance.graph, args.get("ell", 0), rng,
                    track_support=instance.support)
    return out


@_register_reduction("bc_recovery")
def _red_bc_recovery(instance, args, rng):
    rho = args.get("rho", instance.params.p - instance.params.q)
    return bc_recovery_reduce(instance.graph, rho, rng,
                              track_support=instance.support)


@_register_reduction("ros_reduce")
def _red_ros(instance, args, rng):
    return ros_reduce(instance.graph, args.get("ell", 0), rng,
                      k=instance.params.k or None,
                      track_support=instance.support)


@_register_reduction("sros_reduce")
def _red_sros(instance, args, rng):
    return sros_reduce(instance.graph, instance.params.k, args.get("ell", 0),
                       rng, track_support=instance.support)


@_register_reduction("ssbm_reduce")
def _red_ssbm(instance, args, rng):
    return ssbm_reduce(instance.graph, instance.params.k, args.get("ell", 0),
                       rng, track_support=instance.support)


@_register_reduction("spca_high_sparsity")
def _red_spca_high(instance, args, rng):
    return spca_high_sparsity(instance.graph, args.get("ell", 0),
                              args.get("tau", 2), rng,
                              k=instance.params.k or None,
                              track_support=instance.support)


@_register_reduction("spca_low_sparsity")
def _red_spca_low(instance, args, rng):
    return spca_low_sparsity(instance.graph, args.get("ell", 0),
                             args.get("tau", 2), rng,
                             k=instance.params.k or None,
                             track_support=instance.support)


@_register_reduction("spca_recovery")
def _red_spca_recovery(instance, args, rng):
    rho = args.get("rho", instance.params.p - instance.params.q)
    return spca_recovery_reduce(instance.graph, rho, args.get("tau", 2), rng,
                                track_support=instance.support)


SOLVERS: dict[str, Callable] = {}


def _register_solver(name):
    def deco(fn):
        SOLVERS[name] = fn
        return fn
    return deco


@_register_solver("bc_sum_max")
def _solver_bc(obs, params: ProblemParams, sp: dict, rng) -> Verdict:
    return slv.bc_sum_max_test(obs, sp.get("k", params.k), sp.get("mu", params.mu),
                               c=sp.get("c", 1.0))


@_register_solver("pds_edges")
def _solver_pds(obs, params, sp, rng) -> Verdict:
    return slv.pds_edge_tests(obs, sp.get("k", params.k), sp.get("p", params.p),
                              sp.get("q", params.q),
                              scan_subgraphs=sp.get("scan_subgraphs", False))


@_register_solver("ssbm_spectral")
def _solver_ssbm(obs, params, sp, rng) -> Verdict:
    return slv.ssbm_spectral_test(obs, sp.get("q", params.q), rng)


@_register_solver("ros_svd")
def _solver_ros_svd(obs, params, sp, rng) -> Verdict:
    return slv.ros_svd_test(obs, sp.get("mu", params.mu), rng)


@_register_solver("ros_max")
def _solver_ros_max(obs, params, sp, rng) -> Verdict:
    return slv.ros_max_test(obs)[0]


@_register_solver("spca_spectral")
def _solver_spca(obs, params, sp, rng) -> Verdict:
    d, n = obs.shape
    return slv.spca_spectral_test(obs, sp.get("c_ratio", d / n), rng)


@_register_solver("bspca_sum")
def _solver_bspca(obs, params, sp, rng) -> Verdict:
    return slv.bspca_sum_test(obs, sp.get("k", params.k),
                              sp.get("theta", params.theta),
                              sp.get("delta", params.delta_bspca))


RECOVERERS: dict[str, Callable] = {
    "ros_max_recover": lambda obs, params, sp, rng: slv.ros_max_test(obs)[1],
    "ros_search": lambda obs, params, sp, rng: slv.ros_search(
        obs, sp.get("k", params.k), sp.get("rho", params.mu / max(params.k, 1)), rng),
    "ros_spectral_projection": lambda obs, params, sp, rng:
        slv.ros_spectral_projection(obs, rng),
    "spca_spectral_recover": lambda obs, params, sp, rng:
        slv.spca_spectral_recover(obs, sp.get("k", params.k), rng),
    "spca_kmax_recover": lambda obs, params, sp, rng:
        slv.spca_kmax_recover(obs, sp.get("k", params.k)),
}


@_register_solver("detect_via_recovery")
def _solver_dvr(obs, params, sp, rng) -> Verdict:
    raise ParameterError("detect_via_recovery needs the full instance; "
                         "use run_error_experiment")


def run_error_experiment(config: ExperimentConfig, rng: Optional[RandomStream] = None) -> ErrorReport:
    """Run `trials` H0 and `trials` H1 instances through the optional
    pipeline and the named solver; aggregate Type I/II rates."""
    if config.trials < 1:
        raise ParameterError("trials must be >= 1")
    if config.solver not in SOLVERS:
        raise ParameterError(f"unknown solver {config.solver!r}")
    if rng is None:
        rng = RandomStream(config.seed)
    params = ProblemParams(problem=config.problem, **config.params)
    errors = {"H0": 0, "H1": 0}
    failures = 0
    for t in range(config.trials):
        for hi, hyp in enumerate(("H0", "H1")):
            stream = rng.split(2 * t + hi)
            try:
                inst = generate_instance(params, hyp, stream.split(0))
                if config.solver == "detect_via_recovery":
                    sp = config.solver_params
                    recover_name = sp["recover"]
                    rec_stream = stream.split(1)

                    def recover(obs, _sp=sp, _rs=rec_stream):
                        return RECOVERERS[_sp["recover"]](obs, params, _sp, _rs)

                    verdict = detect_via_recovery(sp.get("problem", config.problem),
                                                  recover, inst, stream.split(2))
                elif config.pipeline is not None:
                    red = REDUCTIONS[config.pipeline["name"]](
                        inst, config.pipeline.get("args", {}), stream.split(1))
                    verdict = SOLVERS[config.solver](
                        red.observation, red.claimed, config.solver_params,
                        stream.split(2))
                else:
                    verdict = SOLVERS[config.solver](
                        _observation(inst), params, config.solver_params,
                        stream.split(2))
                wrong = verdict.rejects() if hyp == "H0" else not verdict.rejects()
                if wrong:
                    errors[hyp] += 1
            except (ParameterError, RefusalError):
                raise
            except Exception:
                failures += 1
    t1 = errors["H0"] / config.trials
    t2 = errors["H1"] / config.trials
    return ErrorReport(
        type_i=t1, type_ii=t2,
        type_i_interval=wilson_interval(errors["H0"], config.trials),
        type_ii_interval=wilson_interval(errors["H1"], config.trials),
        trials=config.trials, failures=failures, seed=config.seed,
        config=config.to_dict())


# ---------------------------------------------------------------------------
# Phase sweeps
# ---------------------------------------------------------------------------

SWEEP_HEADER = ["alpha", "beta", "n", "k", "extra_params", "solver",
                "type1", "type2", "trials", "seed"]


def phase_sweep(grid: list[dict], config: ExperimentConfig,
                rng: Optional[RandomStream] = None) -> str:
    """One CSV row per grid point; returns the CSV text.

    A grid point is a dict of parameter overrides; `alpha` and `beta` keys are
    bookkeeping columns recorded verbatim.  Failed points record NaN errors.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    base = rng if rng is not None else RandomStream(config.seed)
    for i, point in enumerate(grid):
        overrides = {k: v for k, v in point.items() if k not in ("alpha", "beta")}
        merged = {**config.params, **overrides}
        cfg = ExperimentConfig(problem=config.problem, params=merged,
                               solver=config.solver, trials=config.trials,
                               seed=config.seed,
                               solver_params=config.solver_params,
                               pipeline=config.pipeline)
        extra = {k: v for k, v in sorted(merged.items()) if k not in ("n", "k")}
        try:
            report = run_error_experiment(cfg, base.split(i))
            t1, t2 = report.type_i, report.type_ii
        except Exception:
            t1 = t2 = float("nan")
        writer.writerow([
            point.get("alpha", ""), point.get("beta", ""),
            merged.get("n", ""), merged.get("k", ""),
            json.dumps(extra, sort_keys=True), config.solver,
            repr(t1), repr(t2), config.trials, config.seed])
    return buf.getvalue()
