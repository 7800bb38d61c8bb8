"""Command-line interface: generate | reduce | solve | experiment | validate |
schedule | sweep.  PLANTED_SEED overrides any configured seed."""

from __future__ import annotations

import dataclasses
import json
import os
import sys

import click
import numpy as np

from .core import ProblemParams, RandomStream, Support, Verdict
from .harness import (
    REDUCTIONS, SOLVERS, RECOVERERS, ExperimentConfig, param_schedule,
    phase_sweep, run_error_experiment, generate_instance,
)
from .instances import instance_from_json, instance_to_json
from .solvers import RecoveryResult
from .validate import VALIDATORS


def _seed(seed: int) -> int:
    env = os.environ.get("PLANTED_SEED")
    return int(env) if env else seed


def _emit(obj) -> None:
    click.echo(obj if isinstance(obj, str) else json.dumps(obj, sort_keys=True))


def _verdict_dict(v: Verdict) -> dict:
    return {"decision": v.decision, "statistic": v.statistic,
            "threshold": v.threshold, "direction": v.direction}


def _recovery_dict(r) -> dict:
    if isinstance(r, Support):
        return {"support": list(r.indices)}
    if isinstance(r, RecoveryResult):
        out = {"row_support": list(r.row_support.indices), "marked": r.marked}
        if r.col_support is not None:
            out["col_support"] = list(r.col_support.indices)
        return out
    return {"value": str(r)}


@click.group()
def main():
    """Planted-problem generators, reductions, solvers, and experiments."""


@main.command()
@click.option("--problem", required=True)
@click.option("--n", type=int, required=True)
@click.option("--k", type=int, default=0)
@click.option("--hypothesis", type=click.Choice(["H0", "H1"]), default="H1")
@click.option("--seed", type=int, default=0)
@click.option("--params", default="{}", help="JSON of extra ProblemParams fields")
@click.option("--out", type=click.Path(), default=None)
def generate(problem, n, k, hypothesis, seed, params, out):
    """Sample one instance and emit its JSON serialization."""
    extra = json.loads(params)
    pp = ProblemParams(problem=problem, n=n, k=k, **extra)
    inst = generate_instance(pp, hypothesis, RandomStream(_seed(seed)))
    text = instance_to_json(inst)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        click.echo(out)
    else:
        click.echo(text)


# reduction routes: (source problem, target problem) -> pipeline name
ROUTES = {
    ("PC", "PC"): "pc_lift",
    ("PC", "PDS"): "general_pds",
    ("PC", "PDS-SPARSE"): "poisson_lift",
    ("PC", "PDS-DENSE"): "gaussian_lift",
    ("PC", "BC"): "bc_reduce",
    ("PC", "ROS"): "ros_reduce",
    ("PC", "SROS"): "sros_reduce",
    ("PC", "SSBM"): "ssbm_reduce",
    ("PC", "SPCA"): "spca_high_sparsity",
    ("PC", "UBSPCA"): "spca_low_sparsity",
    ("PDS", "BC"): "bc_recovery",
    ("PDS", "UBSPCA"): "spca_recovery",
}


@main.command()
@click.option("--from-problem", "src", required=True)
@click.option("--to", "dst", required=True)
@click.option("--n", type=int, required=True)
@click.option("--k", type=int, required=True)
@click.option("--ell", type=int, default=1)
@click.option("--seed", type=int, default=0)
@click.option("--hypothesis", type=click.Choice(["H0", "H1"]), default="H1")
@click.option("--args", default="{}", help="JSON of extra reduction arguments")
@click.option("--params", default="{}", help="JSON of source ProblemParams fields")
@click.option("--out", type=click.Path(), default=None)
def reduce(src, dst, n, k, ell, seed, hypothesis, args, params, out):
    """Generate a source instance and run the named reduction route."""
    key = (src.upper(), dst.upper())
    if key not in ROUTES:
        raise click.UsageError(f"no reduction route {src} -> {dst}; "
                               f"known: {sorted(ROUTES)}")
    extra = json.loads(params)
    if src.upper() == "PC":
        extra.setdefault("p", 0.5)
    pp = ProblemParams(problem=src.upper(), n=n, k=k, **extra)
    rng = RandomStream(_seed(seed))
    inst = generate_instance(pp, hypothesis, rng.split(0))
    red_args = {"ell": ell, **json.loads(args)}
    red = REDUCTIONS[ROUTES[key]](inst, red_args, rng.split(1))
    obs = red.observation
    payload = {
        "route": ROUTES[key],
        "claimed": dataclasses.asdict(red.claimed),
        "tv_budget": red.tv_budget,
    }
    if hasattr(obs, "adj"):
        payload["observation"] = {"kind": "graph", "n": obs.n,
                                  "adjacency_bitrows":
                                      [np.packbits(r).tobytes().hex() for r in obs.adj]}
    else:
        arr = np.asarray(obs)
        payload["observation"] = {"kind": "matrix", "rows": arr.shape[0],
                                  "cols": arr.shape[1],
                                  "entries": [float(x) for x in arr.ravel()]}
    text = json.dumps(payload, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        click.echo(out)
    else:
        click.echo(text)


@main.command()
@click.option("--algorithm", required=True)
@click.option("--input", "input_path", type=click.Path(exists=True), required=True)
@click.option("--params", default="{}", help="JSON of solver parameters")
@click.option("--seed", type=int, default=0)
def solve(algorithm, input_path, params, seed):
    """Run a detection test or recovery algorithm on a serialized instance."""
    with open(input_path) as fh:
        inst = instance_from_json(fh.read())
    sp = json.loads(params)
    rng = RandomStream(_seed(seed))
    obs = None
    for attr in ("graph", "matrix", "samples"):
        if hasattr(inst, attr):
            obs = getattr(inst, attr)
            break
    if algorithm in SOLVERS:
        verdict = SOLVERS[algorithm](obs, inst.params, sp, rng)
        _emit(_verdict_dict(verdict))
    elif algorithm in RECOVERERS:
        res = RECOVERERS[algorithm](obs, inst.params, sp, rng)
        _emit(_recovery_dict(res))
    else:
        raise click.UsageError(
            f"unknown algorithm {algorithm!r}; solvers: {sorted(SOLVERS)}; "
            f"recoverers: {sorted(RECOVERERS)}")


def _load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        raw = json.load(fh)
    return ExperimentConfig(
        problem=raw["problem"], params=raw.get("params", {}),
        solver=raw["solver"], trials=raw.get("trials", 10),
        seed=_seed(raw.get("seed", 0)),
        solver_params=raw.get("solver_params", {}),
        pipeline=raw.get("pipeline"))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), default=None)
def experiment(config_path, out):
    """Monte Carlo Type I/II error estimation from a JSON config."""
    cfg = _load_config(config_path)
    report = run_error_experiment(cfg)
    text = report.to_json()
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        click.echo(out)
    else:
        click.echo(text)


@main.command()
@click.option("--name", "names", multiple=True,
              help="validator name(s); default runs all")
@click.option("--seed", type=int, default=0)
def validate(names, seed):
    """Run named distributional-identity validators."""
    chosen = list(names) if names else sorted(VALIDATORS)
    rng = RandomStream(_seed(seed))
    failed = 0
    results = {}
    for i, name in enumerate(chosen):
        if name not in VALIDATORS:
            raise click.UsageError(f"unknown validator {name!r}; "
                                   f"known: {sorted(VALIDATORS)}")
        reports = VALIDATORS[name](rng.split(i))
        results[name] = [r.to_dict() for r in reports]
        failed += sum(not r.passed for r in reports)
    _emit(json.dumps(results, sort_keys=True))
    if failed:
        sys.exit(1)


@main.command()
@click.option("--theorem", required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--beta", type=float, required=True)
@click.option("--gamma", type=float, default=None)
@click.option("--n", type=int, default=1024)
@click.option("--q", type=float, default=0.5)
@click.option("--c", type=float, default=2.0)
def schedule(theorem, alpha, beta, gamma, n, q, c):
    """Evaluate a hardness theorem's closed-form parameter schedule."""
    res = param_schedule(theorem, alpha, beta, gamma=gamma, n=n, q=q, c=c)
    _emit(res.to_json())


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--grid", "grid_path", type=click.Path(exists=True), required=True,
              help="JSON list of parameter-override dicts")
@click.option("--out", type=click.Path(), required=True)
def sweep(config_path, grid_path, out):
    """Run the experiment over a parameter grid, one CSV row per point."""
    cfg = _load_config(config_path)
    with open(grid_path) as fh:
        grid = json.load(fh)
    text = phase_sweep(grid, cfg)
    with open(out, "w", newline="") as fh:
        fh.write(text)
    click.echo(out)


if __name__ == "__main__":
    main()
