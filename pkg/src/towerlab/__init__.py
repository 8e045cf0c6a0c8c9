"""towerlab: a simulation and statistical-verification lab for suspension
towers over heavy-tailed renewal bases.

The pieces, bottom up: an intermittent interval map whose first returns
supply heavy-tailed roof laws (`maps`), tower specifications with an
invariant measure and a base-return ultrametric on trajectories (`tower`),
the stationary chain with innovations and coupling meeting times (`chain`),
Lipschitz trajectory observables and their finite-range conditionings
(`observables`), Birkhoff-sum statistics from covariance decay to the
degenerate coboundary case (`stats`), and a deterministic experiment runner
(`experiments`, `cli`).
"""

from .rng import InnovationStream, derive_id
from .tails import TailHistogram
from .tower import (ChainState, TowerSpec, TrajectoryWindow, bounded_tower,
                    build_tower_from_tail, geometric_tower, g0_visits,
                    kernel_stationarity_error, load_tower_spec, metric,
                    nu_mass, nu_vector, poly_tower, save_tower_spec,
                    separation_time)

__version__ = "0.1.0"

__all__ = [
    "InnovationStream", "derive_id", "TailHistogram",
    "ChainState", "TowerSpec", "TrajectoryWindow",
    "bounded_tower", "build_tower_from_tail", "geometric_tower",
    "g0_visits", "kernel_stationarity_error", "load_tower_spec", "metric",
    "nu_mass", "nu_vector", "poly_tower", "save_tower_spec",
    "separation_time", "__version__",
]
