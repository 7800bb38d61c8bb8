"""Observation generators for every H0/H1 pair, with latent structure recorded."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    GRAPH_PROBLEMS, MATRIX_PROBLEMS, SAMPLE_PROBLEMS,
    Graph, ParameterError, ProblemParams, RandomStream, Support,
    uniform_subset,
)


@dataclass(frozen=True)
class PlantedGraphInstance:
    graph: Graph
    hypothesis: str
    params: ProblemParams
    support: Optional[Support] = None
    communities: Optional[tuple[Support, Support]] = None

    def __post_init__(self):
        if self.hypothesis not in ("H0", "H1"):
            raise ParameterError("hypothesis must be 'H0' or 'H1'")
        if (self.support is not None or self.communities is not None) != (self.hypothesis == "H1"):
            raise ParameterError("latent structure present iff hypothesis is H1")


@dataclass(frozen=True)
class PlantedMatrixInstance:
    matrix: np.ndarray
    hypothesis: str
    params: ProblemParams
    row_support: Optional[Support] = None
    col_support: Optional[Support] = None
    spike_row: Optional[np.ndarray] = None
    spike_col: Optional[np.ndarray] = None


@dataclass(frozen=True)
class SpcaInstance:
    samples: np.ndarray  # d x n, one column per observation
    hypothesis: str
    params: ProblemParams
    spike: Optional[np.ndarray] = None

    @property
    def d(self) -> int:
        return self.samples.shape[0]

    @property
    def n(self) -> int:
        return self.samples.shape[1]


# ---------------------------------------------------------------------------
# Spike priors
# ---------------------------------------------------------------------------

def sparse_sign_spike(n: int, k: int, gen: np.random.Generator,
                      signs: str = "pm") -> np.ndarray:
    """k-sparse unit vector with entries +-1/sqrt(k) on a uniform support.

    signs: "pm" for uniform random signs, "plus" for all-positive.
    """
    if not 1 <= k <= n:
        raise ParameterError("need 1 <= k <= n")
    v = np.zeros(n)
    idx = uniform_subset(n, k, gen).as_array()
    if signs == "pm":
        s = gen.choice((-1.0, 1.0), size=k)
    elif signs == "plus":
        s = np.ones(k)
    else:
        raise ParameterError("signs must be 'pm' or 'plus'")
    v[idx] = s / math.sqrt(k)
    return v


def in_unit_sparse_family(v: np.ndarray, k: int) -> bool:
    """Membership in the near-uniform-magnitude k-sparse unit vector family:
    unit norm, k - k/log k <= ||v||_0 <= k, and |v_i| >= 1/sqrt(k) on support."""
    v = np.asarray(v, dtype=float)
    nnz = int(np.count_nonzero(v))
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        return False
    lo = k - (k / math.log(k) if k > 1 else 0.0)
    if not lo <= nnz <= k:
        return False
    support_vals = np.abs(v[v != 0])
    return bool(nnz == 0 or support_vals.min() >= 1.0 / math.sqrt(k) - 1e-12)


# ---------------------------------------------------------------------------
# Graph generators
# ---------------------------------------------------------------------------

def _er_graph(n: int, p: float, gen: np.random.Generator) -> np.ndarray:
    u = np.triu(gen.random((n, n)) < p, k=1)
    return u | u.T


def gen_graph(params: ProblemParams, hypothesis: str, rng: RandomStream) -> PlantedGraphInstance:
    """Sample a PC/PIS/PDS/SSBM observation.

    H0 is G(n, q) (G(n, p) for PC); under H1 the planted structure has
    deterministic size k and its location is recorded.
    """
    if params.problem not in GRAPH_PROBLEMS:
        raise ParameterError(f"{params.problem} is not a graph problem")
    if hypothesis not in ("H0", "H1"):
        raise ParameterError("hypothesis must be 'H0' or 'H1'")
    n, k = params.n, params.k
    gen = rng.generator()

    if params.problem == "PC":
        base_p = params.p
        adj = _er_graph(n, base_p, gen)
        if hypothesis == "H0":
            return PlantedGraphInstance(Graph(adj), "H0", params)
        s = uniform_subset(n, k, gen)
        ii = s.as_array()
        block = np.zeros((n, n), dtype=bool)
        block[np.ix_(ii, ii)] = True
        np.fill_diagonal(block, False)
        return PlantedGraphInstance(Graph(adj | block), "H1", params, support=s)

    if params.problem == "PIS":
        adj = _er_graph(n, params.q, gen)
        if hypothesis == "H0":
            return PlantedGraphInstance(Graph(adj), "H0", params)
        s = uniform_subset(n, k, gen)
        ii = s.as_array()
        mask = np.zeros((n, n), dtype=bool)
        mask[np.ix_(ii, ii)] = True
        return PlantedGraphInstance(Graph(adj & ~mask), "H1", params, support=s)

    if params.problem == "PDS":
        adj = _er_graph(n, params.q, gen)
        if hypothesis == "H0":
            return PlantedGraphInstance(Graph(adj), "H0", params)
        s = uniform_subset(n, k, gen)
        ii = s.as_array()
        sub = _er_graph(k, params.p, gen)
        adj[np.ix_(ii, ii)] = sub
        return PlantedGraphInstance(Graph(adj), "H1", params, support=s)

    # SSBM: within-community probability exactly q+rho, across exactly q-rho.
    q, rho, delta = params.q, params.rho, params.delta_ssbm
    if not (0 <= q - rho and q + rho <= 1):
        raise ParameterError("need q +- rho inside [0, 1]")
    if hypothesis == "H0":
        return PlantedGraphInstance(Graph(_er_graph(n, q, gen)), "H0", params)
    window = k ** (1 - delta)
    lo = max(1, math.ceil(k / 2 - window))
    hi = min(k - 1, math.floor(k / 2 + window))
    if lo > hi:
        raise ParameterError("empty SSBM community-size window; increase k")
    k1 = int(gen.integers(lo, hi + 1))
    k2 = k - k1
    if not (lo <= k2 <= hi):
        raise ParameterError("community sizes fall outside the SSBM window")
    both = uniform_subset(n, k, gen).as_array()
    order = gen.permutation(k)
    s1 = Support.from_iterable(both[order[:k1]])
    s2 = Support.from_iterable(both[order[k1:]])
    adj = _er_graph(n, q, gen)
    i1, i2 = s1.as_array(), s2.as_array()
    within = _er_graph(k1, q + rho, gen)
    adj[np.ix_(i1, i1)] = within
    within2 = _er_graph(k2, q + rho, gen)
    adj[np.ix_(i2, i2)] = within2
    across = gen.random((k1, k2)) < (q - rho)
    adj[np.ix_(i1, i2)] = across
    adj[np.ix_(i2, i1)] = across.T
    return PlantedGraphInstance(Graph(adj), "H1", params, communities=(s1, s2))


# ---------------------------------------------------------------------------
# Matrix generators
# ---------------------------------------------------------------------------

def _goe(n: int, gen: np.random.Generator) -> np.ndarray:
    a = gen.standard_normal((n, n))
    m = np.triu(a, k=1)
    m = m + m.T
    np.fill_diagonal(m, math.sqrt(2.0) * np.diag(a))
    return m


def gen_matrix(params: ProblemParams, hypothesis: str, rng: RandomStream) -> PlantedMatrixInstance:
    """Sample a BC/ROS/SROS/SSW observation.

    Spike priors for the composite H1 hypotheses use the canonical uniform
    +-1/sqrt(k) k-sparse ensemble; SROS/SSW use a symmetric spike r = c.
    """
    if params.problem not in MATRIX_PROBLEMS:
        raise ParameterError(f"{params.problem} is not a matrix problem")
    if hypothesis not in ("H0", "H1"):
        raise ParameterError("hypothesis must be 'H0' or 'H1'")
    n, k = params.n, params.k
    gen = rng.generator()

    noise = _goe(n, gen) if params.problem == "SSW" else gen.standard_normal((n, n))
    if hypothesis == "H0":
        return PlantedMatrixInstance(noise, "H0", params)

    if params.problem == "BC":
        rows = uniform_subset(n, k, gen)
        cols = uniform_subset(n, k, gen)
        m = noise.copy()
        m[np.ix_(rows.as_array(), cols.as_array())] += params.mu
        return PlantedMatrixInstance(m, "H1", params, row_support=rows, col_support=cols)

    if params.problem == "ROS":
        r = sparse_sign_spike(n, k, gen)
        c = sparse_sign_spike(n, k, gen)
    else:  # SROS, SSW: symmetric spike
        r = sparse_sign_spike(n, k, gen)
        c = r
    m = noise + params.mu * np.outer(r, c)
    return PlantedMatrixInstance(
        m, "H1", params,
        row_support=Support.from_iterable(np.flatnonzero(r)),
        col_support=Support.from_iterable(np.flatnonzero(c)),
        spike_row=r, spike_col=c)


def gen_spca(params: ProblemParams, hypothesis: str, rng: RandomStream) -> SpcaInstance:
    """Sample n i.i.d. columns from N(0, I_d) or N(0, I_d + theta v v^T).

    H1 columns are built as sqrt(theta) * g_i * v + Z_i.  The spike prior is
    +-1/sqrt(k) for SPCA/USPCA and all-positive 1/sqrt(k) for BSPCA/UBSPCA.
    """
    if params.problem not in SAMPLE_PROBLEMS:
        raise ParameterError(f"{params.problem} is not a spiked-covariance problem")
    if hypothesis not in ("H0", "H1"):
        raise ParameterError("hypothesis must be 'H0' or 'H1'")
    n, d, k = params.n, params.d, params.k
    gen = rng.generator()
    z = gen.standard_normal((d, n))
    if hypothesis == "H0":
        return SpcaInstance(z, "H0", params)
    signs = "plus" if params.problem in ("BSPCA", "UBSPCA") else "pm"
    v = sparse_sign_spike(d, k, gen, signs=signs)
    g = gen.standard_normal(n)
    x = math.sqrt(params.theta) * np.outer(v, g) + z
    return SpcaInstance(x, "H1", params, spike=v)


# ---------------------------------------------------------------------------
# JSON serialization (bit-exact round trips)
# ---------------------------------------------------------------------------

def _pack_bool_rows(a: np.ndarray) -> list[str]:
    return [np.packbits(row).tobytes().hex() for row in a]


def _unpack_bool_rows(rows: list[str], n: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=bool)
    for i, h in enumerate(rows):
        bits = np.unpackbits(np.frombuffer(bytes.fromhex(h), dtype=np.uint8))
        out[i] = bits[:n].astype(bool)
    return out


def _floats(a: np.ndarray) -> list[float]:
    return [float(x) for x in np.asarray(a, dtype=float).ravel()]


def _params_dict(p: ProblemParams) -> dict:
    return {
        "problem": p.problem, "n": p.n, "k": p.k, "d": p.d, "p": p.p, "q": p.q,
        "rho": p.rho, "mu": p.mu, "theta": p.theta,
        "delta_ssbm": p.delta_ssbm, "delta_bspca": p.delta_bspca,
    }


def instance_to_json(inst) -> str:
    """Serialize any instance; floats round-trip bit-exactly via repr."""
    if isinstance(inst, PlantedGraphInstance):
        d = {
            "kind": "graph", "params": _params_dict(inst.params),
            "hypothesis": inst.hypothesis, "n": inst.graph.n,
            "adjacency_bitrows": _pack_bool_rows(inst.graph.adj),
        }
        if inst.support is not None:
            d["support"] = list(inst.support.indices)
        if inst.communities is not None:
            d["communities"] = [list(s.indices) for s in inst.communities]
    elif isinstance(inst, PlantedMatrixInstance):
        d = {
            "kind": "matrix", "params": _params_dict(inst.params),
            "hypothesis": inst.hypothesis,
            "rows": inst.matrix.shape[0], "cols": inst.matrix.shape[1],
            "entries": _floats(inst.matrix),
        }
        if inst.row_support is not None:
            d["row_support"] = list(inst.row_support.indices)
        if inst.col_support is not None:
            d["col_support"] = list(inst.col_support.indices)
        if inst.spike_row is not None:
            d["spike_row"] = _floats(inst.spike_row)
        if inst.spike_col is not None:
            d["spike_col"] = _floats(inst.spike_col)
    elif isinstance(inst, SpcaInstance):
        d = {
            "kind": "spca", "params": _params_dict(inst.params),
            "hypothesis": inst.hypothesis,
            "rows": inst.samples.shape[0], "cols": inst.samples.shape[1],
            "entries": _floats(inst.samples),
        }
        if inst.spike is not None:
            d["spike"] = _floats(inst.spike)
    else:
        raise ParameterError(f"cannot serialize {type(inst).__name__}")
    return json.dumps(d, sort_keys=True)


def instance_from_json(text: str):
    d = json.loads(text)
    params = ProblemParams(**d["params"])
    kind = d["kind"]
    if kind == "graph":
        g = Graph(_unpack_bool_rows(d["adjacency_bitrows"], d["n"]))
        support = Support(tuple(d["support"])) if "support" in d else None
        comms = None
        if "communities" in d:
            comms = tuple(Support(tuple(c)) for c in d["communities"])
        return PlantedGraphInstance(g, d["hypothesis"], params,
                                    support=support, communities=comms)
    if kind == "matrix":
        m = np.array(d["entries"], dtype=float).reshape(d["rows"], d["cols"])
        rs = Support(tuple(d["row_support"])) if "row_support" in d else None
        cs = Support(tuple(d["col_support"])) if "col_support" in d else None
        sr = np.array(d["spike_row"]) if "spike_row" in d else None
        sc = np.array(d["spike_col"]) if "spike_col" in d else None
        return PlantedMatrixInstance(m, d["hypothesis"], params,
                                     row_support=rs, col_support=cs,
                                     spike_row=sr, spike_col=sc)
    if kind == "spca":
        x = np.array(d["entries"], dtype=float).reshape(d["rows"], d["cols"])
        spike = np.array(d["spike"]) if "spike" in d else None
        return SpcaInstance(x, d["hypothesis"], params, spike=spike)
    raise ParameterError(f"unknown instance kind {kind!r}")
