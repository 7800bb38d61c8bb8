"""Parsing and validation of experiment sweep CSVs.

The expected header is the sweep contract:
alpha,beta,n,k,extra_params,solver,type1,type2,trials,seed
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

REQUIRED_COLUMNS = ["alpha", "beta", "n", "k", "extra_params", "solver",
                    "type1", "type2", "trials", "seed"]

NUMERIC_COLUMNS = ["alpha", "beta", "n", "k", "type1", "type2", "trials", "seed"]


class SweepFormatError(ValueError):
    """The CSV does not satisfy the sweep header contract."""


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    beta: float
    n: float
    k: float
    extra_params: dict
    solver: str
    type1: float
    type2: float
    trials: float
    seed: float

    @property
    def total_error(self) -> float:
        return self.type1 + self.type2

    def lookup(self, column: str) -> float:
        """Resolve a numeric column or a key inside extra_params."""
        if column in NUMERIC_COLUMNS:
            return getattr(self, column)
        if column in self.extra_params:
            return float(self.extra_params[column])
        raise SweepFormatError(
            f"unknown x column {column!r}: not a sweep column and not a key "
            f"of extra_params {sorted(self.extra_params)}")


@dataclass(frozen=True)
class SweepTable:
    rows: tuple


def load_sweep(path: str) -> SweepTable:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise SweepFormatError(f"missing required column(s): {missing}")
        rows = []
        for i, raw in enumerate(reader, start=2):
            vals = {}
            for col in NUMERIC_COLUMNS:
                text = (raw[col] or "").strip()
                try:
                    vals[col] = float(text) if text else float("nan")
                except ValueError:
                    raise SweepFormatError(
                        f"row {i}: column {col!r} value {raw[col]!r} is not numeric")
            try:
                extra = json.loads(raw["extra_params"]) if raw["extra_params"] else {}
            except json.JSONDecodeError:
                raise SweepFormatError(
                    f"row {i}: extra_params is not valid JSON: {raw['extra_params']!r}")
            rows.append(SweepRow(alpha=vals["alpha"], beta=vals["beta"],
                                 n=vals["n"], k=vals["k"], extra_params=extra,
                                 solver=raw["solver"], type1=vals["type1"],
                                 type2=vals["type2"], trials=vals["trials"],
                                 seed=vals["seed"]))
    if not rows:
        raise SweepFormatError("sweep CSV has no data rows")
    return SweepTable(tuple(rows))
