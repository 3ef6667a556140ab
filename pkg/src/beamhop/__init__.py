"""Beam-hopping resource allocation for a multibeam LEO downlink.

The package splits into three layers:

* physics and traffic: :mod:`beamhop.geometry`, :mod:`beamhop.channel`,
  :mod:`beamhop.traffic`
* allocation algorithms: :mod:`beamhop.game` (best-response beam
  scheduling), :mod:`beamhop.power` (interior-point power allocation),
  :mod:`beamhop.baselines`
* orchestration: :mod:`beamhop.engine`, :mod:`beamhop.config`,
  :mod:`beamhop.metrics`, plus the ``beamhop`` CLI
"""

from .config import ALGORITHMS, SimConfig, canonical_algorithm, load_config
from .engine import RunResult, compare_algorithms, run
from .game import GameContext, NeResult, find_ne, potential, utility
from .metrics import RunSummary, jfi, mean_sod, sod_cost, throughput
from .power import PowerProblem, PowerResult, objective, optimize, rates

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "GameContext",
    "NeResult",
    "PowerProblem",
    "PowerResult",
    "RunResult",
    "RunSummary",
    "SimConfig",
    "canonical_algorithm",
    "compare_algorithms",
    "find_ne",
    "jfi",
    "load_config",
    "mean_sod",
    "objective",
    "optimize",
    "potential",
    "rates",
    "run",
    "sod_cost",
    "throughput",
    "utility",
    "__version__",
]
