"""Beam scheduling as an identical-interest game solved by best response.

Each of the K beams is a player choosing which demand-bearing position to
illuminate during the next slot.  All players share one utility: the sum over
beams of offered^2 - 2*demand*offered (offered bits under equal power split).
Adding the constant sum of squared demands turns that utility into the global
scheduling objective

    sum over all positions of (offered_n - demand_n)^2,

so the shared utility is an exact potential: any unilateral move changes both
by the same amount, and round-robin best response therefore descends the
global objective and terminates at a pure Nash equilibrium.  ``potential``
below evaluates the global objective directly from its definition rather
than through the utility, so tests of the identity are not circular.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import best_response_kernel, find_ne_kernel, utility_kernel

Assignment = np.ndarray  # int64 vector of distinct position indices


@dataclass(frozen=True)
class GameContext:
    """Everything the scheduling game needs for one slot.

    gains: (n, n) channel matrix over candidate positions; gains[n, m] is the
        gain from the beam aimed at position m to the node at position n.
    demands: queued bits per candidate position.
    power_per_beam: equal power split used during scheduling (watts).
    noise_w: receiver noise power (watts).
    bits_scale: bits per slot per unit log2(1 + SINR).
    """

    gains: np.ndarray
    demands: np.ndarray
    power_per_beam: float
    noise_w: float
    bits_scale: float

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        d = np.asarray(self.demands, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("gains must be a square matrix")
        if d.shape != (g.shape[0],):
            raise ValueError("demands length must match gains")
        if (d < 0).any():
            raise ValueError("demands must be non-negative")
        if self.power_per_beam <= 0 or self.noise_w <= 0 or self.bits_scale <= 0:
            raise ValueError("power, noise and bits scale must be positive")
        object.__setattr__(self, "gains", np.ascontiguousarray(g))
        object.__setattr__(self, "demands", np.ascontiguousarray(d))

    @property
    def n_positions(self) -> int:
        return self.gains.shape[0]


def _validate_assignment(assignment, ctx: GameContext) -> np.ndarray:
    a = np.asarray(assignment, dtype=np.int64)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("assignment must be a non-empty index vector")
    if a.size > ctx.n_positions:
        raise ValueError("more beams than candidate positions")
    if (a < 0).any() or (a >= ctx.n_positions).any():
        raise ValueError("assignment index out of range")
    if len(set(a.tolist())) != a.size:
        raise ValueError("assignment entries must be distinct positions")
    return np.ascontiguousarray(a)


def utility(assignment, ctx: GameContext) -> float:
    """Shared player utility of an assignment (lower is better)."""
    a = _validate_assignment(assignment, ctx)
    return float(utility_kernel(a, ctx.gains, ctx.demands,
                                ctx.power_per_beam, ctx.noise_w,
                                ctx.bits_scale))


def potential(assignment, ctx: GameContext, extra_demands=None) -> float:
    """Global scheduling objective: squared offered-vs-demand gap summed over
    every position (dark positions contribute demand^2).

    ``extra_demands`` optionally adds positions outside the candidate set;
    they are never illuminated, so each contributes its squared demand.
    Computed from the definition, independently of ``utility``.
    """
    a = _validate_assignment(assignment, ctx)
    offered = np.zeros(ctx.n_positions)
    for j, n in enumerate(a):
        others = np.delete(a, j)
        interference = ctx.power_per_beam * ctx.gains[n, others].sum()
        snr = ctx.power_per_beam * ctx.gains[n, n] / (interference + ctx.noise_w)
        offered[n] = ctx.bits_scale * math.log2(1.0 + snr)
    total = float(np.sum((offered - ctx.demands) ** 2))
    if extra_demands is not None:
        total += float(np.sum(np.asarray(extra_demands, dtype=float) ** 2))
    return total


def best_response(assignment, player: int, ctx: GameContext) -> Assignment:
    """Replace one beam's position with its utility-minimizing choice.

    Candidates are all positions not held by the other beams; ties go to
    the lowest position index.  Returns a new assignment vector.
    """
    a = _validate_assignment(assignment, ctx)
    if not 0 <= player < a.size:
        raise ValueError(f"player index {player} out of range")
    c, _ = best_response_kernel(a, player, ctx.gains, ctx.demands,
                                ctx.power_per_beam, ctx.noise_w,
                                ctx.bits_scale)
    out = a.copy()
    out[player] = c
    return out


@dataclass(frozen=True)
class NeResult:
    assignment: Assignment
    converged: bool
    sweeps: int
    potential_trace: np.ndarray  # global objective after each sweep


def find_ne(ctx: GameContext, n_beams: int,
            rng: np.random.Generator | None = None,
            initial=None, max_sweeps: int = 50) -> NeResult:
    """Run best-response sweeps from a random (or given) start.

    Stops when a full sweep leaves the assignment vector unchanged, which
    at an exact potential game means no beam has a unilateral improvement:
    a pure Nash equilibrium.  If ``max_sweeps`` is exhausted first the
    current assignment is returned with ``converged=False``.
    """
    if not 1 <= n_beams <= ctx.n_positions:
        raise ValueError("need 1 <= beams <= candidate positions")
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be >= 1")
    if initial is not None:
        a0 = _validate_assignment(initial, ctx)
        if a0.size != n_beams:
            raise ValueError("initial assignment has wrong beam count")
    else:
        if rng is None:
            rng = np.random.default_rng()
        a0 = rng.permutation(ctx.n_positions)[:n_beams].astype(np.int64)
    a, converged, sweeps, cost_trace = find_ne_kernel(
        ctx.gains, ctx.demands, a0, ctx.power_per_beam, ctx.noise_w,
        ctx.bits_scale, max_sweeps)
    # shift the shared-cost trace by the demand-square constant so the trace
    # reports the global objective (their difference is assignment-free)
    shift = float(np.sum(ctx.demands ** 2))
    return NeResult(assignment=a, converged=bool(converged), sweeps=int(sweeps),
                    potential_trace=cost_trace + shift)
