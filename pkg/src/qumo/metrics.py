"""Scoring: tolerance checks, success rate, optimality gap, objective improvement."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataInconsistencyError, UndefinedGapError

EQUAL_TOL = 1e-9
NEAR_ZERO = 1.0


@dataclass(frozen=True)
class Tolerance:
    """``|a - a_ref| <= tol_abs + tol_rel * |a_ref|``."""

    tol_abs: float = 0.0
    tol_rel: float = 0.005

    def __post_init__(self):
        for name in ("tol_abs", "tol_rel"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and non-negative")

    @classmethod
    def for_reference(cls, reference, tol_rel=0.005, near_zero_abs=0.005):
        """Relative tolerance, plus an absolute floor when ``|reference| < 1``."""
        return cls(near_zero_abs if abs(reference) < NEAR_ZERO else 0.0, tol_rel)


@dataclass
class SolverOutcome:
    solver: str
    objectives: np.ndarray
    budget: int = 0
    wall_time: float = 0.0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.objectives = np.asarray(self.objectives, dtype=float)
        if self.objectives.size == 0:
            raise ValueError("outcome needs at least one objective value")

    @property
    def best(self):
        return float(self.objectives.min())


def within_tolerance(a, a_ref, tol=Tolerance()):
    return abs(a - a_ref) <= tol.tol_abs + tol.tol_rel * abs(a_ref)


def success_rate(objectives, reference, tol=Tolerance()):
    """Fraction of ``objectives`` within tolerance of ``reference``."""
    v = np.asarray(objectives, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("success_rate needs at least one value")
    hit = np.abs(v - reference) <= tol.tol_abs + tol.tol_rel * abs(reference)
    return float(hit.mean())


def optimality_gap(found, best):
    """Percent shortfall ``100 (found - best) / |best|``; 0 is optimal."""
    if best == 0:
        raise UndefinedGapError("optimality gap undefined for a zero best objective")
    return 100.0 * (found - best) / abs(best)


def improvement_with_flag(f_aim, f_rest, f_known, eq_tol=EQUAL_TOL):
    """Objective improvement and whether it came from a nonzero denominator.

    Positive when AIM beats the best competitor, scaled so reaching the
    best-known value from the competitor's value is +100; symmetric negative
    branch when AIM is worse.  A best-known value inside ``eq_tol`` of the
    winner can push the ratio past one, so it is capped at +/-100.
    """
    if f_known > min(f_aim, f_rest) + eq_tol:
        raise DataInconsistencyError(
            f"best-known {f_known!r} is worse than both {f_aim!r} and {f_rest!r}")
    if abs(f_aim - f_rest) <= eq_tol:
        return 0.0, True
    if f_aim < f_rest:
        den = f_known - f_rest
        if abs(den) <= eq_tol:
            return 100.0, False
        return 100.0 * min(1.0, (f_aim - f_rest) / den), True
    den = f_known - f_aim
    if abs(den) <= eq_tol:
        return -100.0, False
    return -100.0 * min(1.0, (f_rest - f_aim) / den), True


def objective_improvement(f_aim, f_best_rest, f_best_known):
    return improvement_with_flag(f_aim, f_best_rest, f_best_known)[0]


def aggregate(values):
    """Mean, min and max of a metric column, ignoring NaNs."""
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    if v.size == 0:
        return {"mean": float("nan"), "min": float("nan"), "max": float("nan")}
    return {"mean": float(v.mean()), "min": float(v.min()), "max": float(v.max())}
