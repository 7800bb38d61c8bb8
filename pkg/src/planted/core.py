"""Shared domain types: graphs, supports, parameter records, splittable randomness."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np


class ParameterError(ValueError):
    """A parameter violates an operation's preconditions."""


class RefusalError(RuntimeError):
    """An exhaustive operation was requested above its size limits."""


# ---------------------------------------------------------------------------
# Splittable randomness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RandomStream:
    """Deterministic splittable randomness.

    A stream is identified by a 64-bit seed and a path of child indices.
    Distinct (seed, path) pairs yield statistically independent variate
    sequences; the same pair reproduces bit-identical sequences.  Backed by
    the counter-based Philox generator so Monte Carlo trials can be given
    per-trial derived streams in any order.
    """

    seed: int
    path: tuple[int, ...] = ()

    def split(self, child_index: int) -> "RandomStream":
        if child_index < 0:
            raise ParameterError("child_index must be nonnegative")
        return RandomStream(self.seed, self.path + (int(child_index),))

    def generator(self) -> np.random.Generator:
        """A fresh Generator for this stream; same stream, same sequence."""
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(ss))


def split_stream(parent: RandomStream, child_index: int) -> RandomStream:
    return parent.split(child_index)


# ---------------------------------------------------------------------------
# Graphs and supports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on n labeled vertices, dense boolean adjacency."""

    adj: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adj, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ParameterError("adjacency must be square")
        if a.shape[0] < 1:
            raise ParameterError("graph needs at least one vertex")
        if np.any(np.diag(a)):
            raise ParameterError("self-loops are not allowed")
        if not np.array_equal(a, a.T):
            raise ParameterError("adjacency must be symmetric")
        object.__setattr__(self, "adj", a)

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    def edge_count(self) -> int:
        return int(np.triu(self.adj, k=1).sum())

    def complement(self) -> "Graph":
        a = ~self.adj
        np.fill_diagonal(a, False)
        return Graph(a)

    def permuted(self, sigma: np.ndarray) -> "Graph":
        """Relabel so that new vertex i is old vertex sigma[i]."""
        return Graph(self.adj[np.ix_(sigma, sigma)])


def graph_from_dense(upper: np.ndarray) -> Graph:
    """Build a graph from any square 0/1 array, symmetrizing its upper triangle."""
    u = np.triu(np.asarray(upper, dtype=bool), k=1)
    return Graph(u | u.T)


@dataclass(frozen=True)
class Support:
    """Sorted distinct vertex/coordinate indices inside [0, n)."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if list(idx) != sorted(set(idx)):
            raise ParameterError("support indices must be sorted and distinct")
        if idx and idx[0] < 0:
            raise ParameterError("support indices must be nonnegative")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_iterable(cls, it) -> "Support":
        return cls(tuple(sorted({int(i) for i in it})))

    def as_array(self) -> np.ndarray:
        return np.array(self.indices, dtype=np.intp)

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, i) -> bool:
        return int(i) in set(self.indices)


def permute_support(support: Support, sigma: np.ndarray) -> Support:
    """Image of a support when positions are relabeled by new[i] = old[sigma[i]]."""
    inv = np.argsort(sigma)
    return Support.from_iterable(inv[support.as_array()])


# ---------------------------------------------------------------------------
# Problem parameters
# ---------------------------------------------------------------------------

PROBLEMS = (
    "PC", "PIS", "PDS", "SSBM", "BC", "ROS", "SROS", "SSW",
    "SPCA", "BSPCA", "USPCA", "UBSPCA",
)

GRAPH_PROBLEMS = ("PC", "PIS", "PDS", "SSBM")
MATRIX_PROBLEMS = ("BC", "ROS", "SROS", "SSW")
SAMPLE_PROBLEMS = ("SPCA", "BSPCA", "USPCA", "UBSPCA")


@dataclass(frozen=True)
class ProblemParams:
    """Parameter record shared by generators, reductions, and solvers."""

    problem: str
    n: int = 0
    k: int = 0
    d: int = 0
    p: float = 0.0
    q: float = 0.0
    rho: float = 0.0
    mu: float = 0.0
    theta: float = 0.0
    delta_ssbm: float = 0.1
    delta_bspca: float = 0.3

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ParameterError(f"unknown problem tag {self.problem!r}")
        if self.n < 1:
            raise ParameterError("n must be positive")
        if not 0 <= self.k <= max(self.n, self.d):
            raise ParameterError("need 0 <= k <= n (or d for sample problems)")
        for name in ("p", "q"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1]")
        if self.theta < 0 or self.mu < 0:
            raise ParameterError("mu and theta must be nonnegative")
        if self.problem == "SSBM":
            if self.rho > min(self.q, 1.0 - self.q) + 1e-12:
                raise ParameterError("SSBM needs rho <= min(q, 1-q)")
            if not 0 < self.delta_ssbm < 0.5:
                raise ParameterError("delta_ssbm must lie in (0, 1/2)")
        if self.problem in ("BSPCA", "UBSPCA") and not 0 < self.delta_bspca < 0.5:
            raise ParameterError("delta_bspca must lie in (0, 1/2)")
        if self.problem in SAMPLE_PROBLEMS:
            if self.d < 1:
                raise ParameterError("sample problems need d >= 1")
            if self.k > self.d:
                raise ParameterError("need k <= d")
        elif self.k > self.n:
            raise ParameterError("need k <= n")

    def with_(self, **kw) -> "ProblemParams":
        return replace(self, **kw)


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    """Binary test outcome with the comparison that produced it."""

    decision: str
    statistic: float
    threshold: float
    direction: str = ">="

    def __post_init__(self):
        if self.decision not in ("H0", "H1"):
            raise ParameterError("decision must be 'H0' or 'H1'")
        if self.direction not in (">=", "<=", ">", "<"):
            raise ParameterError("invalid comparison direction")
        if self.decision != ("H1" if self.holds() else "H0"):
            raise ParameterError("decision inconsistent with statistic/threshold")

    def holds(self) -> bool:
        s, t = self.statistic, self.threshold
        return {
            ">=": s >= t, "<=": s <= t, ">": s > t, "<": s < t,
        }[self.direction]

    def rejects(self) -> bool:
        return self.decision == "H1"


def verdict_from(statistic: float, threshold: float, direction: str = ">=") -> Verdict:
    s, t = float(statistic), float(threshold)
    holds = {">=": s >= t, "<=": s <= t, ">": s > t, "<": s < t}[direction]
    return Verdict("H1" if holds else "H0", s, t, direction)


# ---------------------------------------------------------------------------
# Matrix helpers shared across modules
# ---------------------------------------------------------------------------

def require_square(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError("matrix must be square")
    return m


def require_symmetric_zero_diag(m: np.ndarray, tol: float = 0.0) -> np.ndarray:
    m = require_square(m)
    if not np.allclose(m, m.T, atol=tol, rtol=0):
        raise ParameterError("matrix must be symmetric")
    if not np.allclose(np.diag(m), 0.0, atol=tol, rtol=0):
        raise ParameterError("matrix must have zero diagonal")
    return m


def uniform_subset(n: int, k: int, gen: np.random.Generator) -> Support:
    """Uniformly random k-subset of [0, n)."""
    if not 0 <= k <= n:
        raise ParameterError("need 0 <= k <= n")
    return Support.from_iterable(gen.choice(n, size=k, replace=False))
