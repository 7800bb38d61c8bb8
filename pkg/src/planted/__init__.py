"""Planted-problem instance generators, average-case reductions,
detection/recovery algorithms, and a statistical verification harness."""

from .core import (
    Graph, ParameterError, ProblemParams, RandomStream, RefusalError,
    Support, Verdict, split_stream,
)

__all__ = [
    "Graph", "ParameterError", "ProblemParams", "RandomStream",
    "RefusalError", "Support", "Verdict", "split_stream",
]

__version__ = "0.1.0"
