"""Run-level quality measures: SOD cost, satisfaction, fairness, throughput."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def sod_cost(offered, demands) -> float:
    """Sum over positions of (offered bits - demanded bits)^2.

    This is the global scheduling objective; positions that were not
    illuminated simply enter with offered = 0.
    """
    o = np.asarray(offered, dtype=float)
    d = np.asarray(demands, dtype=float)
    if o.shape != d.shape or o.ndim != 1:
        raise ValueError("offered and demands must be equal-length vectors")
    gap = o - d
    return float(gap @ gap)


def satisfaction(served_bits, demanded_bits) -> float:
    """Fraction of demanded bits that were served; 1 when nothing was asked.

    A position that never demanded anything cannot be treated unfairly, so
    it counts as fully satisfied rather than dropping out of the fairness
    statistics.
    """
    if demanded_bits < 0 or served_bits < 0:
        raise ValueError("bit counts cannot be negative")
    if demanded_bits == 0:
        return 1.0
    return served_bits / demanded_bits


def satisfaction_vector(served, demanded) -> np.ndarray:
    """Elementwise satisfaction with the zero-demand convention applied."""
    s = np.asarray(served, dtype=float)
    d = np.asarray(demanded, dtype=float)
    if s.shape != d.shape:
        raise ValueError("served and demanded must align")
    out = np.ones_like(d)
    np.divide(s, d, out=out, where=d > 0)
    return out


def jfi(values) -> float:
    """Jain's fairness index, (sum x)^2 / (n * sum x^2).

    Equals 1 when everyone gets the same share and 1/n when one participant
    takes everything.  The all-zero vector has no defined fairness (0/0) and
    is rejected.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("need a non-empty vector")
    if (x < 0).any():
        raise ValueError("fairness over negative shares is undefined")
    mx = float(x.max())
    if mx == 0.0:
        raise ValueError("all-zero vector: fairness is 0/0")
    # fairness is about proportions; normalizing first makes the index
    # exactly 1 for any constant vector and exactly 1/n for any one-hot
    y = x / mx
    sq = float(y @ y)
    s = float(y.sum())
    return s * s / (y.size * sq)


@dataclass
class RunSummary:
    """What one simulation run produced, aggregated over all slots."""

    algorithm: str
    slots: int
    duration_s: float
    total_arrived_bits: int
    total_served_bits: int
    per_position_demanded: np.ndarray
    per_position_served: np.ndarray
    satisfactions: np.ndarray = field(init=False)
    jfi: float = field(init=False)
    sod_per_slot: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("duration must be positive")
        self.satisfactions = satisfaction_vector(self.per_position_served,
                                                 self.per_position_demanded)
        self.jfi = jfi(self.satisfactions)


def throughput(summary: RunSummary) -> float:
    """Served bits per second over the whole run."""
    return summary.total_served_bits / summary.duration_s


def mean_sod(summary: RunSummary) -> float:
    if summary.sod_per_slot.size == 0:
        return 0.0
    return float(summary.sod_per_slot.mean())
