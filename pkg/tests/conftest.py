"""Shared builders for randomized test instances.

The link-scale builders deliberately use magnitudes from the reference
scenario (gains ~1e-13, noise ~8e-13, bit scales ~1e5) so the numerics are
exercised where the production code actually operates, not at toy scales
where conditioning problems would stay invisible.
"""

import numpy as np
import pytest

from beamhop.game import GameContext
from beamhop.power import PowerProblem


def random_game(rng: np.random.Generator, n: int,
                demand_scale: float = 2e5) -> GameContext:
    """Random scheduling instance with a dominant diagonal, link magnitudes."""
    gains = rng.uniform(1e-16, 5e-15, (n, n))
    gains[np.diag_indices(n)] = rng.uniform(5e-14, 5e-13, n)
    demands = rng.uniform(0.0, demand_scale, n)
    return GameContext(gains=gains, demands=demands, power_per_beam=31.25,
                       noise_w=7.96e-13, bits_scale=1e5)


def random_power_problem(rng: np.random.Generator, k: int,
                         demand_scale: float = 5e5) -> PowerProblem:
    gains = rng.uniform(1e-16, 5e-15, (k, k))
    gains[np.diag_indices(k)] = rng.uniform(5e-14, 5e-13, k)
    demands = rng.uniform(1e3, demand_scale, k)
    return PowerProblem(gains=gains, demands=demands, p_max=250.0,
                        noise_w=7.96e-13, bits_scale=1e5)


@pytest.fixture(scope="session")
def jit_warm():
    """Compile the numba kernels once so timed tests measure steady state."""
    from beamhop import _kernels

    rng = np.random.default_rng(0)
    ctx = random_game(rng, 6)
    a = np.array([0, 1, 2], dtype=np.int64)
    _kernels.utility_kernel(a, ctx.gains, ctx.demands, ctx.power_per_beam,
                            ctx.noise_w, ctx.bits_scale)
    _kernels.find_ne_kernel(ctx.gains, ctx.demands, a, ctx.power_per_beam,
                            ctx.noise_w, ctx.bits_scale, 10)
    _kernels.ga_kernel(ctx.gains, ctx.demands, 3, 8, 3, 0.2, 0.8,
                       ctx.power_per_beam, ctx.noise_w, ctx.bits_scale,
                       np.uint64(1))
    return True
