"""plots phase|curve: batch figures from experiment sweep CSVs."""

from __future__ import annotations

import sys

import click

from .render import OutputExistsError, render_error_curve, render_phase_diagram
from .sweep import SweepFormatError


@click.group()
def main():
    """Render phase-diagram heatmaps and error curves from sweep CSVs."""


@main.command()
@click.option("--in", "csv_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--force", is_flag=True, default=False,
              help="overwrite an existing output file")
def phase(csv_path, out_path, force):
    """Heatmap of type1+type2 over the (beta, alpha) grid."""
    _run(render_phase_diagram, csv_path, out_path, force=force)


@main.command()
@click.option("--in", "csv_path", type=click.Path(exists=True), required=True)
@click.option("--x", "x_column", required=True,
              help="sweep column or extra_params key for the x axis")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--force", is_flag=True, default=False)
def curve(csv_path, x_column, out_path, force):
    """type1+type2 against a parameter column."""
    _run(render_error_curve, csv_path, x_column, out_path, force=force)


def _run(fn, *args, **kwargs):
    try:
        out = fn(*args, **kwargs)
    except (SweepFormatError, OutputExistsError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(out)


if __name__ == "__main__":
    main()
