"""Comparison schedulers: G-BH, G-BHPO, RR-BH, Max-SINR-BH, GA-BH.

All of them produce assignments over the same candidate space the game
scheduler sees, so downstream power allocation and service are shared.
Apart from the round-robin cursor every scheduler here is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import ga_kernel
from .game import GameContext
from .power import PowerProblem, optimize


@dataclass
class GaConfig:
    """Knobs for the genetic scheduler."""

    generations: int = 200
    population: int = 100
    p_mut: float = 0.2
    p_cro: float = 0.8

    def __post_init__(self):
        if self.generations < 1 or self.population < 1:
            raise ValueError("generations and population must be >= 1")
        for name in ("p_mut", "p_cro"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a probability in [0, 1]")


@dataclass
class RoundRobinCursor:
    """Where the round-robin scheduler resumes next slot."""

    next_index: int = 0

    def __post_init__(self):
        if self.next_index < 0:
            raise ValueError("cursor cannot be negative")


def g_bh_schedule(demands, k_beams: int) -> np.ndarray:
    """Greedy demand scheduler: the K positions with the most queued bits.

    Zero-demand positions are never selected; with fewer than K backlogged
    positions all of them are returned.  Ties break to the lowest index.
    """
    if k_beams < 1:
        raise ValueError("need at least one beam")
    d = np.asarray(demands, dtype=float)
    nonzero = np.flatnonzero(d > 0)
    if nonzero.size <= k_beams:
        return nonzero.astype(np.int64)
    # stable sort on the negated demands keeps lower indices first on ties
    order = np.argsort(-d[nonzero], kind="stable")
    chosen = nonzero[order[:k_beams]]
    return np.sort(chosen).astype(np.int64)


def g_bhpo_schedule(demands, k_beams: int, gains, p_max: float,
                    noise_w: float, bits_scale: float):
    """Greedy schedule plus optimized powers for the chosen beams.

    The schedule is exactly ``g_bh_schedule``; powers then minimize the
    offered-vs-demand squared gap over the selected positions.  Returns
    (assignment, powers); both empty when nothing is queued anywhere.
    """
    assignment = g_bh_schedule(demands, k_beams)
    if assignment.size == 0:
        return assignment, np.zeros(0)
    g = np.asarray(gains, dtype=float)
    d = np.asarray(demands, dtype=float)
    sub = g[np.ix_(assignment, assignment)]
    problem = PowerProblem(gains=sub, demands=d[assignment], p_max=p_max,
                           noise_w=noise_w, bits_scale=bits_scale)
    result = optimize(problem, thorough=False)
    return assignment, result.powers


def rr_schedule(cursor: RoundRobinCursor, k_beams: int,
                n_positions: int) -> tuple[np.ndarray, RoundRobinCursor]:
    """Fixed rotation over every position, backlogged or not.

    Illuminates positions cursor..cursor+K-1 modulo N and advances the
    cursor by K, so the sequence is periodic and demand plays no role.
    """
    if not 1 <= k_beams <= n_positions:
        raise ValueError("need 1 <= beams <= positions")
    if cursor.next_index >= n_positions:
        raise ValueError("cursor out of range for this grid")
    start = cursor.next_index
    assignment = (start + np.arange(k_beams, dtype=np.int64)) % n_positions
    return assignment, RoundRobinCursor((start + k_beams) % n_positions)


def max_sinr_schedule(gains, k_beams: int, p_beam: float,
                      noise_w: float) -> np.ndarray:
    """Greedy link-quality scheduler, ignoring demand sizes.

    Beams are added one at a time; each step picks the candidate that
    maximizes the total SINR of everything selected so far (including the
    interference the newcomer causes and receives), ties to the lowest
    index.  ``gains`` is the candidate-restricted channel matrix, so the
    returned indices are rows of that matrix.
    """
    g = np.asarray(gains, dtype=float)
    n = g.shape[0]
    if g.ndim != 2 or g.shape[1] != n:
        raise ValueError("gains must be square")
    if n < 1:
        raise ValueError("need at least one candidate")
    if k_beams < 1:
        raise ValueError("need at least one beam")
    if p_beam <= 0 or noise_w <= 0:
        raise ValueError("power and noise must be positive")

    chosen: list[int] = []
    remaining = list(range(n))
    for _ in range(min(k_beams, n)):
        best_c = -1
        best_score = -np.inf
        for c in remaining:
            idx = np.array(chosen + [c], dtype=np.int64)
            sub = g[np.ix_(idx, idx)]
            diag = sub.diagonal()
            interference = sub.sum(axis=1) - diag
            sinr = p_beam * diag / (p_beam * interference + noise_w)
            score = float(sinr.sum())
            if score > best_score:
                best_score = score
                best_c = c
        chosen.append(best_c)
        remaining.remove(best_c)
    return np.array(chosen, dtype=np.int64)


@dataclass
class GaResult:
    assignment: np.ndarray
    best_cost: float           # global scheduling objective of the winner
    history: np.ndarray        # best cost after each generation


def ga_schedule(ctx: GameContext, k_beams: int, cfg: GaConfig,
                rng: np.random.Generator) -> GaResult:
    """Genetic search over K-subsets of the candidate positions.

    Chromosomes are ordered K-tuples of distinct positions; fitness is the
    same global objective the best-response scheduler descends.  Tournament
    selection of two, one-point crossover with duplicate repair, per-gene
    mutation to an unused position, one elite.  Randomness comes only from
    ``rng``, so a fixed generator seed reproduces the search exactly.
    """
    if not 1 <= k_beams <= ctx.n_positions:
        raise ValueError("need 1 <= beams <= candidate positions")
    seed = np.uint64(rng.integers(0, 2 ** 64, dtype=np.uint64))
    assignment, best, history = ga_kernel(
        ctx.gains, ctx.demands, k_beams, cfg.population, cfg.generations,
        cfg.p_mut, cfg.p_cro, ctx.power_per_beam, ctx.noise_w,
        ctx.bits_scale, seed)
    return GaResult(assignment=assignment, best_cost=float(best),
                    history=history)
