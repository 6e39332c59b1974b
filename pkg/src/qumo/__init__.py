"""AIM momentum-annealing solver for mixed binary/continuous quadratic problems."""

from .baselines import BaselineConfig, brute_force
from .engine import Momentum, Nonlinearity, RunResult, SolverConfig, run, step
from .errors import (DataInconsistencyError, NumericFailure, ParseError,
                     ResourceLimitError, UndefinedGapError, UnsupportedOperation)
from .hwsim import NoiseConfig
from .metrics import Tolerance
from .model import Domain, Kind, QumoProblem, domain_shift, gradient, objective, project
from .transforms import ConstrainedProblem, LinearConstraint, PenaltyConfig
from .tuner import TunePlan, tune

__all__ = [
    "BaselineConfig", "ConstrainedProblem", "DataInconsistencyError", "Domain", "Kind",
    "LinearConstraint", "Momentum", "NoiseConfig", "Nonlinearity", "NumericFailure",
    "ParseError", "PenaltyConfig", "QumoProblem", "ResourceLimitError", "RunResult",
    "SolverConfig", "Tolerance", "TunePlan", "UndefinedGapError", "UnsupportedOperation",
    "brute_force", "domain_shift", "gradient", "objective", "project", "run", "step", "tune",
]
