"""Deterministic batch rendering of sweep tables."""

from __future__ import annotations

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .sweep import SweepFormatError, SweepTable, load_sweep  # noqa: E402

# fixed style so output bytes are reproducible and diagrams are comparable
DPI = 100
CMAP = "viridis"
PNG_METADATA = {"Software": "planted-plots"}


class OutputExistsError(FileExistsError):
    pass


def _check_output(path: str, force: bool):
    if os.path.exists(path) and not force:
        raise OutputExistsError(
            f"output {path!r} exists; pass --force to overwrite")


def render_phase_diagram(csv_path: str, out_path: str, force: bool = False) -> str:
    """Heatmap of type1+type2 over the (beta, alpha) grid, color scale [0, 1]."""
    _check_output(out_path, force)
    table = load_sweep(csv_path)
    for i, row in enumerate(table.rows, start=2):
        if np.isnan(row.alpha) or np.isnan(row.beta):
            raise SweepFormatError(f"row {i}: phase diagrams need alpha and beta")
    alphas = sorted({r.alpha for r in table.rows})
    betas = sorted({r.beta for r in table.rows})
    grid = np.full((len(alphas), len(betas)), np.nan)
    for r in table.rows:
        grid[alphas.index(r.alpha), betas.index(r.beta)] = min(max(r.total_error, 0.0), 1.0)

    fig, ax = plt.subplots(figsize=(6.0, 4.5), dpi=DPI)
    mesh = ax.imshow(grid, origin="lower", aspect="auto", cmap=CMAP,
                     vmin=0.0, vmax=1.0,
                     extent=(min(betas), max(betas), min(alphas), max(alphas)))
    ax.set_xlabel("beta (sparsity exponent)")
    ax.set_ylabel("alpha (signal exponent)")
    solver = table.rows[0].solver
    ax.set_title(f"Type I+II error ({solver})")
    fig.colorbar(mesh, ax=ax, label="type1 + type2")
    fig.tight_layout()
    fig.savefig(out_path, format="png", dpi=DPI, metadata=PNG_METADATA)
    plt.close(fig)
    return out_path


def render_error_curve(csv_path: str, x_column: str, out_path: str,
                       force: bool = False) -> str:
    """type1+type2 against a sweep column or extra_params key."""
    _check_output(out_path, force)
    table = load_sweep(csv_path)
    pts = sorted((row.lookup(x_column), row.total_error) for row in table.rows)
    xs = [p[0] for p in pts]
    ys = [min(max(p[1], 0.0), 1.0) for p in pts]

    fig, ax = plt.subplots(figsize=(6.0, 4.5), dpi=DPI)
    ax.plot(xs, ys, marker="o", color="#1f77b4")
    ax.set_xlabel(x_column)
    ax.set_ylabel("type1 + type2")
    ax.set_ylim(0.0, 1.0)
    solver = table.rows[0].solver
    ax.set_title(f"Error curve ({solver})")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, format="png", dpi=DPI, metadata=PNG_METADATA)
    plt.close(fig)
    return out_path
