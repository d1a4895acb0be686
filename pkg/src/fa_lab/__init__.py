"""Learning dynamics of feedback alignment for low-rank matrix factorization.

Subpackages: numerics (linear-algebra services), problem (reproducible
instance generators), dynamics (GD/FA/FA* Euler integrators), diagnostics
(alignment quantities), stationary (closed-form oracles), experiments
(figure/theorem scenarios), cli (command-line entry point).
"""

from . import diagnostics, dynamics, experiments, numerics, problem, stationary
from .state import FactorState

__all__ = ["diagnostics", "dynamics", "experiments", "numerics", "problem",
           "stationary", "FactorState"]
