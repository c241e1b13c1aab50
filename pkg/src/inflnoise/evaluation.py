"""Exact-match accuracy, seed aggregation and percent change."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Optional

from .corpus import normalize

__all__ = ["RunResult", "exact_match", "aggregate", "percent_change"]


@dataclass(frozen=True)
class RunResult:
    model: str
    dataset: str
    seed: int
    accuracy: float
    seconds: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy {self.accuracy} outside [0, 1]")


def exact_match(predictions, references) -> float:
    predictions = list(predictions)
    references = list(references)
    if len(predictions) != len(references):
        raise ValueError(f"{len(predictions)} predictions for {len(references)} references")
    if not references:
        raise ValueError("nothing to evaluate")
    hits = sum(normalize(p) == normalize(r) for p, r in zip(predictions, references))
    return hits / len(references)


def aggregate(values):
    """Mean and sample standard deviation (``None`` for a single value)."""
    values = [getattr(v, "accuracy", v) for v in values]
    if not values:
        raise ValueError("no results to aggregate")
    mean = math.fsum(values) / len(values)
    std: Optional[float] = statistics.stdev(values) if len(values) >= 2 else None
    return mean, std


def percent_change(baseline: float, treatment: float) -> float:
    if baseline <= 0:
        raise ValueError("baseline accuracy must be positive")
    return 100.0 * (treatment - baseline) / baseline
