"""Reference and competing solvers.

``brute_force`` is the ground-truth oracle. Simulated annealing, parallel
tempering, Hopfield dynamics and simulated bifurcation are the comparison
heuristics.  All heuristics are batched over independent samples, and each
sample draws from its own ``(seed, index)`` stream, like the AIM engine.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _rng, engine
from .engine import RunResult
from .errors import NumericFailure, ResourceLimitError
from .model import (Domain, convert_point, matmul_rows, objective,
                    objective_batch, to_domain)

MAX_BINARY = 24
MAX_CONTINUOUS = 4
MAX_GRID_EVALUATIONS = 1 << 29
_CHUNK_ELEMENTS = 1 << 22
SWEEP_CHUNK = 64
# stream index reserved for temperature calibration draws
_CALIBRATION_STREAM = (1 << 64) - 1


@dataclass(frozen=True)
class BaselineConfig:
    """Settings for every baseline; fields irrelevant to ``kind`` are ignored.

    ``budget`` counts sweeps (SA, PT) or iterations (Hopfield, SB) per sample.
    """

    kind: str = "sa"
    budget: int = 1000
    samples: int = 1
    seed: int = 0
    # SA / PT
    t_hot: Optional[float] = None
    t_cold: Optional[float] = None
    replicas: int = 8
    ladder: Optional[tuple] = None
    debug: bool = False
    # Hopfield
    alpha0: float = 1.0
    beta: float = 1.0
    gain: float = 1.0
    # SB
    a0: float = 1.0
    c0: Optional[float] = None
    # Hopfield / SB time step
    dt: Optional[float] = None
    init_scale: float = 0.1
    # BruteForce
    grid_resolution: float = 1.0 / 128

    def __post_init__(self):
        if self.kind not in ("bruteforce", "sa", "pt", "hopfield", "sb"):
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        if self.budget < 0 or int(self.budget) != self.budget:
            raise ValueError("budget must be a non-negative integer")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")


# ---------------------------------------------------------------- oracle

def binary_patterns(nb, lo=0.0, hi=1.0, start=0, stop=None):
    """Rows ``start..stop`` of the lexicographic enumeration of ``{lo, hi}^nb``."""
    stop = (1 << nb) if stop is None else stop
    k = np.arange(start, stop, dtype=np.int64)
    bits = (k[:, None] >> np.arange(nb - 1, -1, -1, dtype=np.int64)) & 1
    return lo + bits * (hi - lo)


def enumerate_binary(p):
    """All assignments of an all-binary problem with their objective values."""
    if p.n_continuous:
        raise ValueError("enumerate_binary needs an all-binary problem")
    if p.n > MAX_BINARY:
        raise ResourceLimitError(f"2^{p.n} assignments exceed the enumeration limit")
    lo, hi = p.box
    X = binary_patterns(p.n, lo, hi)
    return X, objective_batch(p, X)


def _grid(lo, hi, resolution):
    steps = round(1.0 / resolution)
    if steps < 1 or not math.isclose(steps * resolution, 1.0, rel_tol=1e-9):
        raise ValueError("grid_resolution must be 1/k for a positive integer k")
    return lo + (hi - lo) * np.arange(steps + 1) / steps


class _Split:
    """Objective split into binary part ``z`` and continuous part ``u``.

    ``F = K(z) - L(z) . u + quad(u)`` with ``quad(u) = -1/2 u^T Qcc u``.
    """

    def __init__(self, p):
        Q = p.dense_Q()
        mask = p.binary_mask
        self.bi = np.flatnonzero(mask)
        self.ci = np.flatnonzero(~mask)
        self.Qbb = Q[np.ix_(self.bi, self.bi)]
        self.Qcb = Q[np.ix_(self.ci, self.bi)]
        self.Qcc = Q[np.ix_(self.ci, self.ci)]
        self.bb = p.b[self.bi]
        self.bc = p.b[self.ci]
        self.c0 = p.c0

    def K(self, Z):
        return self.c0 - 0.5 * np.einsum("ij,jk,ik->i", Z, self.Qbb, Z) - Z @ self.bb

    def L(self, Z):
        return Z @ self.Qcb.T + self.bc

    def quad(self, U):
        return -0.5 * np.einsum("ij,jk,ik->i", U, self.Qcc, U)


def _convex_inverse(Qcc):
    H = -Qcc
    try:
        np.linalg.cholesky(H - 1e-12 * max(1.0, np.abs(H).max()) * np.eye(len(H)))
    except np.linalg.LinAlgError:
        return None
    return np.linalg.inv(H)


def brute_force(p, grid_resolution=1.0 / 128, continuous="grid"):
    """Exact minimum over binary patterns x a uniform grid of continuous values.

    The grid has ``1 / grid_resolution`` steps across the box of each
    continuous variable.  Ties resolve to the first assignment in
    (binary pattern, continuous grid point) lexicographic order.  When the
    continuous block is strictly convex the grid search per pattern is
    confined to the sublevel ellipsoid around the unconstrained minimiser,
    which gives the same answer as the full grid.

    ``continuous="exact"`` instead minimises the continuous block exactly
    over the box (strictly convex blocks only) by enumerating active sets.
    """
    nb, nc = p.n_binary, p.n_continuous
    if nb > MAX_BINARY:
        raise ResourceLimitError(f"{nb} binary variables exceed the limit of {MAX_BINARY}")
    if nc > MAX_CONTINUOUS:
        raise ResourceLimitError(f"{nc} continuous variables exceed the limit of {MAX_CONTINUOUS}")
    lo, hi = p.box
    sp_ = _Split(p)
    if nc == 0:
        x, v = _search_binary(p, sp_, lo, hi)
    else:
        g = _grid(lo, hi, grid_resolution)
        Hinv = _convex_inverse(sp_.Qcc)
        if continuous == "exact":
            if Hinv is None:
                raise ValueError("exact continuous search needs a strictly convex block")
            z, u = _search_exact(sp_, nb, lo, hi)
        elif continuous != "grid":
            raise ValueError(f"unknown continuous search {continuous!r}")
        elif Hinv is not None:
            z, u = _search_convex(sp_, nb, lo, hi, g, Hinv)
        else:
            if (1 << nb) * len(g) ** nc > MAX_GRID_EVALUATIONS:
                raise ResourceLimitError("continuous grid too large for enumeration")
            z, u = _search_grid(sp_, nb, lo, hi, g)
        x = np.empty(p.n)
        x[sp_.bi] = z
        x[sp_.ci] = u
    x.setflags(write=False)
    return x, objective(p, x)


def _search_binary(p, sp_, lo, hi):
    nb = p.n
    total = 1 << nb
    chunk = max(1, _CHUNK_ELEMENTS // max(nb, 1))
    best_v, best_x = np.inf, None
    for s in range(0, total, chunk):
        Z = binary_patterns(nb, lo, hi, s, min(total, s + chunk))
        v = objective_batch(p, Z)
        k = int(np.argmin(v))
        if v[k] < best_v:
            best_v, best_x = v[k], Z[k].copy()
    return best_x, best_v


def _grid_points(g, nc):
    mesh = np.meshgrid(*([g] * nc), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _search_grid(sp_, nb, lo, hi, g):
    nc = len(sp_.ci)
    G = _grid_points(g, nc)
    quad = sp_.quad(G)
    total = 1 << nb
    chunk = max(1, _CHUNK_ELEMENTS // len(G))
    best = (np.inf, None, None)
    for s in range(0, total, chunk):
        Z = binary_patterns(nb, lo, hi, s, min(total, s + chunk))
        F = sp_.K(Z)[:, None] - sp_.L(Z) @ G.T + quad[None, :]
        k = int(np.argmin(F))
        i, j = divmod(k, F.shape[1])
        if F[i, j] < best[0]:
            best = (F[i, j], Z[i].copy(), G[j].copy())
    return best[1], best[2]


def _search_convex(sp_, nb, lo, hi, g, Hinv):
    total = 1 << nb
    h = g[1] - g[0]
    steps = len(g) - 1
    best = (np.inf, None, None)
    for s in range(0, total, 1 << 14):
        Z = binary_patterns(nb, lo, hi, s, min(total, s + (1 << 14)))
        K, L = sp_.K(Z), sp_.L(Z)
        U0 = L @ Hinv.T
        F0 = K - 0.5 * np.einsum("ij,ij->i", L, U0)
        idx = np.clip(np.rint((U0 - lo) / h), 0, steps).astype(int)
        Ur = g[idx]
        Fr = K - np.einsum("ij,ij->i", L, Ur) + sp_.quad(Ur)
        ub = min(best[0], float(Fr.min()))
        for i in np.flatnonzero(F0 <= ub):
            c = max(ub - F0[i], 0.0)
            r = np.sqrt(2.0 * c * np.diag(Hinv)) * (1 + 1e-9) + 1e-12
            a = np.clip(np.ceil((U0[i] - r - lo) / h - 1e-9), 0, steps).astype(int)
            e = np.clip(np.floor((U0[i] + r - lo) / h + 1e-9), 0, steps).astype(int)
            if np.any(e < a):
                continue
            W = np.stack([m.ravel() for m in np.meshgrid(
                *[g[a[j]:e[j] + 1] for j in range(len(a))], indexing="ij")], axis=1)
            F = K[i] - W @ L[i] + sp_.quad(W)
            k = int(np.argmin(F))
            if F[k] < best[0]:
                best = (F[k], Z[i].copy(), W[k].copy())
                ub = min(ub, F[k])
    return best[1], best[2]


def pattern_minima(p, cap=np.inf, grid_resolution=1.0 / 128):
    """Grid minimum of the objective for every binary pattern.

    Returns ``(values, U)`` in lexicographic pattern order, where ``U`` holds
    the continuous grid argmin.  Patterns whose minimum exceeds ``cap`` report
    ``inf``.  Needs a strictly convex continuous block (or none).
    """
    nb, nc = p.n_binary, p.n_continuous
    if nb > MAX_BINARY:
        raise ResourceLimitError(f"{nb} binary variables exceed the limit of {MAX_BINARY}")
    lo, hi = p.box
    sp_ = _Split(p)
    Z = binary_patterns(nb, lo, hi)
    K = sp_.K(Z)
    if nc == 0:
        return np.where(K <= cap, K, np.inf), np.zeros((len(Z), 0))
    Hinv = _convex_inverse(sp_.Qcc)
    if Hinv is None:
        raise ValueError("pattern_minima needs a strictly convex continuous block")
    g = _grid(lo, hi, grid_resolution)
    h, steps = g[1] - g[0], len(g) - 1
    L = sp_.L(Z)
    U0 = L @ Hinv.T
    F0 = K - 0.5 * np.einsum("ij,ij->i", L, U0)
    vals = np.full(len(Z), np.inf)
    U = np.zeros((len(Z), nc))
    for i in range(len(Z)):
        idx = np.clip(np.rint((U0[i] - lo) / h), 0, steps).astype(int)
        ur = g[idx]
        c_i = min(cap, K[i] - ur @ L[i] + sp_.quad(ur[None])[0]) - F0[i]
        if c_i < 0:
            continue
        r = np.sqrt(2.0 * c_i * np.diag(Hinv)) * (1 + 1e-9) + 1e-12
        a = np.clip(np.ceil((U0[i] - r - lo) / h - 1e-9), 0, steps).astype(int)
        e = np.clip(np.floor((U0[i] + r - lo) / h + 1e-9), 0, steps).astype(int)
        if np.any(e < a):
            continue
        W = np.stack([m.ravel() for m in np.meshgrid(
            *[g[a[j]:e[j] + 1] for j in range(nc)], indexing="ij")], axis=1)
        F = K[i] - W @ L[i] + sp_.quad(W)
        k = int(np.argmin(F))
        if F[k] <= cap:
            vals[i], U[i] = F[k], W[k]
    return vals, U


def _search_exact(sp_, nb, lo, hi):
    # convex box QP per pattern: the minimiser is the best feasible KKT point
    # over all (free, at lo, at hi) active sets
    nc = len(sp_.ci)
    H = -sp_.Qcc
    total = 1 << nb
    best = (np.inf, None, None)
    for s in range(0, total, 1 << 14):
        Z = binary_patterns(nb, lo, hi, s, min(total, s + (1 << 14)))
        K, L = sp_.K(Z), sp_.L(Z)
        Fbest = np.full(len(Z), np.inf)
        Ubest = np.zeros((len(Z), nc))
        for state in itertools.product((0, 1, 2), repeat=nc):
            state = np.array(state)
            free = np.flatnonzero(state == 0)
            U = np.tile(np.where(state == 1, lo, hi).astype(float), (len(Z), 1))
            if len(free):
                fx = np.flatnonzero(state != 0)
                rhs = L[:, free] - U[:, fx] @ H[np.ix_(free, fx)].T
                U[:, free] = np.linalg.solve(H[np.ix_(free, free)], rhs.T).T
            ok = np.all((U >= lo - 1e-12) & (U <= hi + 1e-12), axis=1)
            U = np.clip(U, lo, hi)
            F = K - np.einsum("ij,ij->i", L, U) + sp_.quad(U)
            take = ok & (F < Fbest)
            Fbest = np.where(take, F, Fbest)
            Ubest[take] = U[take]
        k = int(np.argmin(Fbest))
        if Fbest[k] < best[0]:
            best = (Fbest[k], Z[k].copy(), Ubest[k].copy())
    return best[1], best[2]


# ------------------------------------------------------ Metropolis family

def _require_binary(p, name):
    if p.n_continuous:
        raise ValueError(f"{name} needs an all-binary problem; encode continuous "
                         "variables with transforms.slack_to_qubo first")
    if p.n < 1:
        raise ValueError("empty problem")


def calibrate_temperatures(p, seed=0, acceptance=0.8, flips=100, ratio=1000.0):
    """``(t_hot, t_cold)`` with initial uphill acceptance near ``acceptance``."""
    lo, hi = p.box
    g = _rng.stream(seed, _CALIBRATION_STREAM)
    X = np.where(g.random((flips, p.n)) < 0.5, lo, hi)
    idx = g.integers(0, p.n, flips)
    Q = p.dense_Q()
    QX = X @ Q
    x = X[np.arange(flips), idx]
    d = (lo + hi) - 2 * x
    dE = -d * QX[np.arange(flips), idx] - 0.5 * Q[idx, idx] * d * d - p.b[idx] * d
    up = dE[dE > 1e-12]
    t_hot = float(up.mean() / -math.log(acceptance)) if len(up) else 1.0
    return t_hot, t_hot / ratio


class _Chains:
    """Single-flip Metropolis bookkeeping for a batch of chains."""

    def __init__(self, p, X):
        self.p = p
        self.Q = p.dense_Q()
        self.diag = np.diag(self.Q).copy()
        self.b = np.asarray(p.b)
        lo, hi = p.box
        self.flip_sum = lo + hi
        self.X = X
        self.QX = X @ self.Q
        self.E = objective_batch(p, X)
        self.flips = 0

    def sweep(self, temps, U, debug=False):
        """One pass over all variables; ``U[:, i]`` are the acceptance uniforms."""
        X, QX, E = self.X, self.QX, self.E
        with np.errstate(over="ignore", divide="ignore"):
            for i in range(X.shape[1]):
                d = self.flip_sum - 2.0 * X[:, i]
                dE = -d * QX[:, i] - 0.5 * self.diag[i] * d * d - self.b[i] * d
                acc = dE <= 0.0
                up = ~acc & (temps > 0)
                if up.any():
                    acc[up] = U[up, i] < np.exp(-dE[up] / temps[up])
                if acc.any():
                    da = np.where(acc, d, 0.0)
                    X[:, i] += da
                    QX += da[:, None] * self.Q[i][None, :]
                    E += np.where(acc, dE, 0.0)
                self.flips += 1
                if debug and self.flips % 1000 == 0:
                    self.check()

    def check(self, tol=1e-9):
        exact = objective_batch(self.p, self.X)
        if not np.allclose(self.E, exact, rtol=tol, atol=tol):
            raise AssertionError("incremental energy drifted from the exact objective")


def _init_binary(gens, p):
    lo, hi = p.box
    return np.where(_rng.stacked_uniform(gens, 0.0, 1.0, p.n) < 0.5, lo, hi)


def _result(p, best_X, best_it, final_X, iterations, lam=float("nan")):
    per_best = np.array([objective(p, x) for x in best_X])
    per_final = np.array([objective(p, x) for x in final_X])
    k = int(np.argmin(per_best))
    x = best_X[k].copy()
    x.setflags(write=False)
    return RunResult(x, float(per_best[k]), int(best_it[k]), per_best, per_final,
                     lam, None, iterations)


def _temperatures(p, cfg):
    t_hot, t_cold = cfg.t_hot, cfg.t_cold
    if t_hot is None or t_cold is None:
        auto_hot, auto_cold = calibrate_temperatures(p, cfg.seed)
        t_hot = auto_hot if t_hot is None else t_hot
        t_cold = auto_cold if t_cold is None else t_cold
    return float(t_hot), float(t_cold)


def _geometric(t_hot, t_cold, count):
    if count <= 1:
        return np.array([t_hot] * count, dtype=float)
    if t_hot <= 0 or t_cold <= 0:
        return np.linspace(t_hot, t_cold, count)
    return t_hot * (t_cold / t_hot) ** (np.arange(count) / (count - 1))


def simulated_annealing(p, cfg):
    """Single-flip Metropolis sweeps on a geometric cooling schedule.

    ``cfg.samples`` independent restarts; the best assignment seen at the end
    of any sweep is returned.
    """
    _require_binary(p, "simulated annealing")
    t_hot, t_cold = _temperatures(p, cfg)
    schedule = _geometric(t_hot, t_cold, cfg.budget)
    gens = _rng.streams(cfg.seed, 0, cfg.samples)
    ch = _Chains(p, _init_binary(gens, p))
    best_X, best_E = ch.X.copy(), ch.E.copy()
    best_it = np.zeros(cfg.samples, dtype=np.int64)
    for s in range(cfg.budget):
        k = s % SWEEP_CHUNK
        if k == 0:
            U = _rng.stacked_block(gens, (min(SWEEP_CHUNK, cfg.budget - s), p.n))
        temps = np.full(cfg.samples, schedule[s])
        ch.sweep(temps, U[k], cfg.debug)
        better = ch.E < best_E
        if better.any():
            best_E = np.where(better, ch.E, best_E)
            best_X[better] = ch.X[better]
            best_it[better] = s + 1
    return _result(p, best_X, best_it, ch.X, cfg.samples * cfg.budget)


def parallel_tempering(p, cfg):
    """Replica-exchange Monte Carlo on a fixed geometric temperature ladder.

    Each sweep is one Metropolis pass per replica followed by exchange attempts
    between neighbouring temperatures, accepted with probability
    ``min(1, exp((1/T_i - 1/T_j) (E_i - E_j)))``.
    """
    _require_binary(p, "parallel tempering")
    R = cfg.replicas
    if cfg.ladder is not None:
        ladder = np.asarray(cfg.ladder, dtype=float)
        R = len(ladder)
    else:
        t_hot, t_cold = _temperatures(p, cfg)
        ladder = _geometric(t_cold, t_hot, R)
    S, n = cfg.samples, p.n
    gens = _rng.streams(cfg.seed, 0, S)
    X0 = _rng.stacked_uniform(gens, 0.0, 1.0, R * n).reshape(S * R, n)
    lo, hi = p.box
    ch = _Chains(p, np.where(X0 < 0.5, lo, hi))
    temps = np.tile(ladder, S)
    inv = np.where(ladder > 0, 1.0 / np.where(ladder > 0, ladder, 1.0), np.inf)
    best_X, best_E = ch.X.copy(), ch.E.copy()
    best_it = np.zeros(S * R, dtype=np.int64)
    width = R * n + (R - 1)
    for s in range(cfg.budget):
        k = s % SWEEP_CHUNK
        if k == 0:
            U = _rng.stacked_block(gens, (min(SWEEP_CHUNK, cfg.budget - s), width))
        u = U[k]
        ch.sweep(temps, u[:, :R * n].reshape(S * R, n), cfg.debug)
        if R > 1:
            _exchange(ch, S, R, inv, u[:, R * n:])
        better = ch.E < best_E
        if better.any():
            best_E = np.where(better, ch.E, best_E)
            best_X[better] = ch.X[better]
            best_it[better] = s + 1
    # per restart: best over its replicas
    per = best_E.reshape(S, R)
    pick = np.argmin(per, axis=1) + np.arange(S) * R
    final = ch.X.reshape(S, R, n)[:, 0]
    return _result(p, best_X[pick], best_it[pick], final, S * R * cfg.budget)


def exchange_probability(beta_i, beta_j, e_i, e_j):
    """Replica-exchange acceptance ``min(1, exp((beta_i - beta_j)(e_i - e_j)))``."""
    with np.errstate(over="ignore", invalid="ignore"):
        a = (beta_i - beta_j) * (e_i - e_j)
    a = np.where(np.isnan(a), 0.0, a)
    return np.minimum(1.0, np.exp(np.minimum(a, 0.0)))


def _exchange(ch, S, R, inv, U):
    X = ch.X.reshape(S, R, -1)
    QX = ch.QX.reshape(S, R, -1)
    E = ch.E.reshape(S, R)
    for r in range(R - 1):
        prob = exchange_probability(inv[r], inv[r + 1], E[:, r], E[:, r + 1])
        acc = U[:, r] < prob
        if acc.any():
            for A in (X, QX):
                tmp = A[acc, r].copy()
                A[acc, r] = A[acc, r + 1]
                A[acc, r + 1] = tmp
            tmp = E[acc, r].copy()
            E[acc, r] = E[acc, r + 1]
            E[acc, r + 1] = tmp


# ------------------------------------------------------ continuous-time

def hopfield_run(p, cfg):
    """First-order Hopfield dynamics with constant loss ``beta``.

    ``x += dt * (alpha * (Q tanh(gain x) + b) - beta * x)`` on binary variables
    (continuous ones enter linearly), with ``alpha = alpha0 / lambda``; state
    clipped to the box and read out like the AIM engine.
    """
    if p.n < 1:
        raise ValueError("empty problem")
    q = to_domain(p, Domain.PLUS_MINUS_ONE)
    dyn = engine._Dynamics(q)
    alpha = cfg.alpha0 / dyn.lam
    dt = 1.0 if cfg.dt is None else cfg.dt
    mask = dyn.mask
    best_parts, it_parts, final_parts = [], [], []
    for start in range(0, cfg.samples, engine.BLOCK):
        size = min(engine.BLOCK, cfg.samples - start)
        gens = _rng.streams(cfg.seed, start, size)
        X = _rng.stacked_uniform(gens, -cfg.init_scale, cfg.init_scale, q.n)
        P = engine._project_pm(mask, X)
        best_X, best_f = P, objective_batch(q, P)
        best_it = np.zeros(size, dtype=np.int64)
        for t in range(cfg.budget):
            F = np.where(mask, np.tanh(cfg.gain * X), X)
            U = X + dt * (alpha * (matmul_rows(dyn.Q, F) + dyn.b) - cfg.beta * X)
            if not np.all(np.isfinite(U)):
                raise NumericFailure(t)
            X = np.clip(U, -1.0, 1.0)
            P = engine._project_pm(mask, X)
            f = objective_batch(q, P)
            better = f < best_f
            best_f = np.where(better, f, best_f)
            best_X = np.where(better[:, None], P, best_X)
            best_it[better] = t + 1
        best_parts.append(best_X)
        it_parts.append(best_it)
        final_parts.append(engine._project_pm(mask, X))
    best_X = convert_point(np.concatenate(best_parts), q.domain, p.domain)
    final_X = convert_point(np.concatenate(final_parts), q.domain, p.domain)
    return _result(p, best_X, np.concatenate(it_parts), final_X,
                   cfg.samples * cfg.budget, dyn.lam)


def default_sb_c0(J):
    n = J.shape[0]
    if n < 2 or not np.any(J):
        return 0.5
    sigma = math.sqrt(float((J ** 2).sum()) / (n * (n - 1)))
    return 0.5 / (math.sqrt(n) * sigma)


def sb_step(x, y, J, h, a0, c0, a_t, dt):
    """Symplectic-Euler step of discrete simulated bifurcation with walls.

    Momentum first, then position; any coordinate reaching ``|x| >= 1`` is
    clamped to ``sign(x)`` and its momentum zeroed.
    """
    s = np.sign(x)
    y = y + dt * (c0 * (matmul_rows(J, s) + h) - (a0 - a_t) * x)
    x = x + dt * a0 * y
    wall = np.abs(x) >= 1.0
    if wall.any():
        x = np.where(wall, np.sign(x), x)
        y = np.where(wall, 0.0, y)
    return x, y


def simulated_bifurcation_run(p, cfg, return_state=False):
    """Discrete simulated bifurcation; ``a(t)`` ramps linearly from 0 to ``a0``."""
    _require_binary(p, "simulated bifurcation")
    q = to_domain(p, Domain.PLUS_MINUS_ONE)
    dyn = engine._Dynamics(q)
    J, h = dyn.Q, dyn.b
    c0 = default_sb_c0(q.dense_Q() - np.diag(np.diag(q.dense_Q()))) if cfg.c0 is None else cfg.c0
    dt = 0.5 if cfg.dt is None else cfg.dt
    mask = dyn.mask
    steps = max(cfg.budget, 1)
    best_parts, it_parts, final_parts, states = [], [], [], []
    for start in range(0, cfg.samples, engine.BLOCK):
        size = min(engine.BLOCK, cfg.samples - start)
        gens = _rng.streams(cfg.seed, start, size)
        init = _rng.stacked_uniform(gens, -cfg.init_scale, cfg.init_scale, 2 * q.n)
        x, y = init[:, :q.n].copy(), init[:, q.n:].copy()
        P = engine._project_pm(mask, x)
        best_X, best_f = P, objective_batch(q, P)
        best_it = np.zeros(size, dtype=np.int64)
        for t in range(cfg.budget):
            x, y = sb_step(x, y, J, h, cfg.a0, c0, cfg.a0 * t / steps, dt)
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
                raise NumericFailure(t)
            P = engine._project_pm(mask, x)
            f = objective_batch(q, P)
            better = f < best_f
            best_f = np.where(better, f, best_f)
            best_X = np.where(better[:, None], P, best_X)
            best_it[better] = t + 1
        best_parts.append(best_X)
        it_parts.append(best_it)
        final_parts.append(engine._project_pm(mask, x))
        states.append((x, y))
    best_X = convert_point(np.concatenate(best_parts), q.domain, p.domain)
    final_X = convert_point(np.concatenate(final_parts), q.domain, p.domain)
    res = _result(p, best_X, np.concatenate(it_parts), final_X,
                  cfg.samples * cfg.budget, dyn.lam)
    if return_state:
        res.info["x"] = np.concatenate([s[0] for s in states])
        res.info["y"] = np.concatenate([s[1] for s in states])
    return res


def solve(p, cfg):
    """Dispatch on ``cfg.kind``."""
    if cfg.kind == "bruteforce":
        x, v = brute_force(p, cfg.grid_resolution)
        res = RunResult(x, v, 0, np.array([v]), np.array([v]), float("nan"), None, 1)
        return res
    return {
        "sa": simulated_annealing,
        "pt": parallel_tempering,
        "hopfield": hopfield_run,
        "sb": simulated_bifurcation_run,
    }[cfg.kind](p, cfg)
