"""Two-phase search over ``(alpha0, beta0)``.

A wide log-spaced grid is explored with short runs, the grid is widened by a
decade whenever the best pairs sit on its edge, and the top pairs are then
re-run with a long schedule and many samples.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import engine
from .engine import SolverConfig
from .errors import NumericFailure


@dataclass(frozen=True)
class TunePlan:
    alpha_bounds: tuple = (1e-2, 1e1)
    beta_bounds: tuple = (1e-2, 1e1)
    grid: tuple = (8, 8)
    explore_T: int = 200
    explore_samples: int = 16
    top_k: int = 4
    deep_T: int = 2000
    deep_samples: int = 256
    max_expansions: int = 2
    seed: int = 0

    def __post_init__(self):
        for name in ("alpha_bounds", "beta_bounds"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi and math.isfinite(hi)):
                raise ValueError(f"{name} must be positive and ordered")
            object.__setattr__(self, name, (float(lo), float(hi)))
        ga, gb = self.grid
        if ga < 1 or gb < 1:
            raise ValueError("grid counts must be >= 1")
        object.__setattr__(self, "grid", (int(ga), int(gb)))
        if not 1 <= self.top_k <= ga * gb:
            raise ValueError("top_k must be between 1 and the grid area")
        if self.max_expansions < 0:
            raise ValueError("max_expansions must be >= 0")

    def alphas(self):
        return log_grid(*self.alpha_bounds, self.grid[0])

    def betas(self):
        return log_grid(*self.beta_bounds, self.grid[1])


@dataclass
class GridPoint:
    alpha0: float
    beta0: float
    best: float
    mean: float
    assignment: Optional[np.ndarray] = None
    error: Optional[str] = None

    def key(self):
        return (self.best, self.mean, self.alpha0, self.beta0)


@dataclass
class PairStats:
    alpha0: float
    beta0: float
    best: float
    mean: float
    result: Optional[engine.RunResult] = None
    error: Optional[str] = None


@dataclass
class TuneResult:
    ranking: list
    chosen: list
    pairs: list
    final: Optional[engine.RunResult]
    history: list = field(default_factory=list)
    capped: bool = False

    @property
    def best_pair(self):
        """Pair of the final run: best deep objective, then mean, then the pair."""
        ok = [s for s in self.pairs if s.result is not None] or self.pairs
        if self.final is not None:
            for s in ok:
                if s.result is self.final:
                    return s.alpha0, s.beta0
        p = min(ok, key=lambda s: (s.best, s.mean, s.alpha0, s.beta0))
        return p.alpha0, p.beta0

    @property
    def best_objective(self):
        return min(s.best for s in self.pairs)


def log_grid(lo, hi, count):
    if count == 1:
        return np.array([math.sqrt(lo * hi)]) if lo != hi else np.array([lo])
    g = np.exp(np.linspace(math.log(lo), math.log(hi), count))
    g[0], g[-1] = lo, hi
    return g


def _default_runner(p, cfg, lam):
    return engine.run(p, cfg, lam=lam)


def _evaluate(p, base, a, b, T, samples, seed, lam, runner):
    cfg = replace(base, alpha0=float(a), beta0=float(b), T=T, samples=samples, seed=seed)
    try:
        r = runner(p, cfg, lam)
    except (NumericFailure, FloatingPointError, ValueError) as exc:
        return None, f"{type(exc).__name__}: {exc}"
    return r, None


def rank(points):
    """Best objective, then mean objective, then ``(alpha0, beta0)``."""
    return sorted(points, key=GridPoint.key)


def _explore_points(p, plan, base, alphas, betas, lam, runner):
    out = []
    for a in alphas:
        for b in betas:
            r, err = _evaluate(p, base, a, b, plan.explore_T, plan.explore_samples,
                               plan.seed, lam, runner)
            if r is None:
                out.append(GridPoint(float(a), float(b), math.inf, math.inf, None, err))
            else:
                out.append(GridPoint(float(a), float(b), float(r.best_objective),
                                     float(np.mean(r.per_sample_objectives)),
                                     np.array(r.best_assignment)))
    return out


def explore(p, plan, base=SolverConfig(), lam=None, runner=None):
    """Short runs at every grid point, ranked best first.

    Every point uses the same seed, so differences come from the parameters.
    A point that raises ranks last with ``best = inf``.
    """
    runner = runner or _default_runner
    lam = engine.coupling_lambda(p) if lam is None and runner is _default_runner else lam
    return rank(_explore_points(p, plan, base, plan.alphas(), plan.betas(), lam, runner))


def _decade_points(edge, count, direction):
    # ``count`` log-uniform points covering one decade beyond ``edge``
    return edge * 10.0 ** (direction * np.arange(1, count + 1) / count)


def _per_decade(lo, hi, g):
    if g < 2 or hi <= lo:
        return 1
    return max(1, round((g - 1) / math.log10(hi / lo)))


def expand_bounds(p, plan, ranking, base=SolverConfig(), lam=None, runner=None):
    """Widen the grid by one decade on any edge touched by the top pairs.

    Repeats up to ``plan.max_expansions`` times.  Returns
    ``(plan, ranking, history, capped)``; ``capped`` is True when the top pairs
    still touch an edge after the last allowed expansion.
    """
    runner = runner or _default_runner
    if lam is None and runner is _default_runner:
        lam = engine.coupling_lambda(p)
    alphas = sorted({pt.alpha0 for pt in ranking})
    betas = sorted({pt.beta0 for pt in ranking})
    da = _per_decade(*plan.alpha_bounds, plan.grid[0])
    db = _per_decade(*plan.beta_bounds, plan.grid[1])
    points = list(ranking)
    history = []
    for _ in range(plan.max_expansions + 1):
        top = rank(points)[:plan.top_k]
        moves = _edge_moves(top, alphas, betas)
        if not moves:
            return plan, rank(points), history, False
        if len(history) == plan.max_expansions:
            return plan, rank(points), history, True
        step = {}
        for axis, direction in moves:
            if axis == "alpha":
                lo, hi = plan.alpha_bounds
                edge = hi if direction > 0 else lo
                new = _decade_points(edge, da, direction)
                points += _explore_points(p, plan, base, new, betas, lam, runner)
                alphas = sorted(set(alphas) | set(new.tolist()))
                plan = replace(plan, alpha_bounds=(min(alphas), max(alphas)))
            else:
                lo, hi = plan.beta_bounds
                edge = hi if direction > 0 else lo
                new = _decade_points(edge, db, direction)
                points += _explore_points(p, plan, base, alphas, new, lam, runner)
                betas = sorted(set(betas) | set(new.tolist()))
                plan = replace(plan, beta_bounds=(min(betas), max(betas)))
            step[f"{axis}{'+' if direction > 0 else '-'}"] = new.tolist()
        history.append(step)
    return plan, rank(points), history, True


def _edge_moves(top, alphas, betas):
    moves = []
    if len(alphas) > 1:
        if any(pt.alpha0 == alphas[-1] for pt in top):
            moves.append(("alpha", 1))
        if any(pt.alpha0 == alphas[0] for pt in top):
            moves.append(("alpha", -1))
    if len(betas) > 1:
        if any(pt.beta0 == betas[-1] for pt in top):
            moves.append(("beta", 1))
        if any(pt.beta0 == betas[0] for pt in top):
            moves.append(("beta", -1))
    return moves


def deep_search(p, plan, chosen, base=SolverConfig(), lam=None, runner=None):
    """Long runs for each chosen pair.

    ``chosen`` holds ``GridPoint`` records or ``(alpha0, beta0)`` tuples.  A
    pair's reported ``best`` also counts the assignment its exploration run
    found, so the deep phase never reports a worse value than exploration.
    """
    if not chosen:
        raise ValueError("deep_search needs at least one pair")
    runner = runner or _default_runner
    if lam is None and runner is _default_runner:
        lam = engine.coupling_lambda(p)
    stats = []
    final = None
    for c in chosen:
        a, b = (c.alpha0, c.beta0) if isinstance(c, GridPoint) else c
        r, err = _evaluate(p, base, a, b, plan.deep_T, plan.deep_samples, plan.seed, lam, runner)
        seen = c.best if isinstance(c, GridPoint) else math.inf
        if r is None:
            stats.append(PairStats(float(a), float(b), seen, math.inf, None, err))
            continue
        best = min(float(r.best_objective), seen)
        stats.append(PairStats(float(a), float(b), best,
                               float(np.mean(r.per_sample_objectives)), r))
    ok = [s for s in stats if s.result is not None]
    if ok:
        top = min(ok, key=lambda s: (s.result.best_objective, s.mean, s.alpha0, s.beta0))
        final = top.result
    return TuneResult(ranking=[], chosen=list(chosen), pairs=stats, final=final)


def tune(p, plan=TunePlan(), base=SolverConfig(), lam=None, runner=None):
    """Explore, expand the bounds as needed, then deep-search the top pairs."""
    runner = runner or _default_runner
    if lam is None and runner is _default_runner:
        lam = engine.coupling_lambda(p)
    ranking = explore(p, plan, base, lam, runner)
    plan2, ranking, history, capped = expand_bounds(p, plan, ranking, base, lam, runner)
    chosen = [pt for pt in ranking[:plan.top_k] if math.isfinite(pt.best)] or ranking[:1]
    res = deep_search(p, plan2, chosen, base, lam, runner)
    res.ranking = ranking
    res.history = history
    res.capped = capped
    return res


def best_config(res, base=SolverConfig(), plan=TunePlan()):
    """Solver config at the best tuned pair with the deep-phase budget."""
    a, b = res.best_pair
    return replace(base, alpha0=a, beta0=b, T=plan.deep_T, samples=plan.deep_samples,
                   seed=plan.seed)
