"""AIM dynamics: annealed, momentum-accelerated gradient descent.

One iteration in the ``[-1, 1]`` box is::

    x[t+1] = clip(x[t] + dt * (alpha * (Q f(x[t]) + b)
                                - beta(t) * x[t]
                                + gamma * (x[t] - x[t-1])), -1, 1)

with ``alpha = alpha0 / lambda`` (``lambda`` the spectral radius of the
coupling matrix) and the linear ramp ``beta(t) = beta0 * (1 - t / T)``.
``f`` acts on binary variables only (sign, tanh or clamp); continuous
variables enter linearly.  Binary self-couplings ``Q[i, i]`` only add a
constant on ``{-1, 1}`` and are dropped from the drive term.

Samples run in fixed blocks of :data:`BLOCK` rows; each sample owns a
counter-based random stream keyed by ``(seed, sample_index)``, so results
do not depend on the number of workers.
"""

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import _rng, hwsim
from .errors import NumericFailure, UnsupportedOperation
from .model import (Domain, QumoProblem, convert_point, matmul_rows,
                    objective, objective_batch, to_domain)

BLOCK = 256
NOISE_CHUNK = 128
MIN_POWER_ITERATIONS = 1000


class Momentum(str, Enum):
    HEAVY_BALL = "heavy_ball"
    NESTEROV = "nesterov"


class Nonlinearity(str, Enum):
    SIGN = "sign"
    TANH = "tanh"
    CLAMP = "clamp"


class ConvergenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SolverConfig:
    alpha0: float = 1.0
    beta0: float = 1.0
    gamma: float = 0.9
    dt: float = 1.0
    T: int = 1000
    momentum: Momentum = Momentum.HEAVY_BALL
    nonlinearity: Nonlinearity = Nonlinearity.SIGN
    gain: float = 1.0
    samples: int = 1
    seed: int = 0
    noise: Optional["hwsim.NoiseConfig"] = None
    record_trajectory: bool = False
    track_best: bool = True
    init_scale: float = 0.1
    schedule: str = "linear"

    def __post_init__(self):
        object.__setattr__(self, "momentum", Momentum(self.momentum))
        object.__setattr__(self, "nonlinearity", Nonlinearity(self.nonlinearity))
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        if not self.beta0 >= 0:
            raise ValueError("beta0 must be non-negative")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1); momentum >= 1 is unstable")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if int(self.T) < 1 or int(self.T) != self.T:
            raise ValueError("T must be a positive integer")
        if int(self.samples) < 1:
            raise ValueError("samples must be >= 1")
        if not self.gain > 0:
            raise ValueError("gain must be positive")
        if self.schedule not in ("linear", "constant"):
            raise ValueError("schedule must be 'linear' or 'constant'")

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass
class RunResult:
    best_assignment: np.ndarray
    best_objective: float
    best_iteration: int
    per_sample_objectives: np.ndarray
    per_sample_final: np.ndarray
    lambda_used: float
    trajectory: Optional[np.ndarray] = None
    iterations: int = 0
    info: dict = field(default_factory=dict)

    @property
    def samples(self):
        return len(self.per_sample_objectives)


def _spectral_radius(Q, seed=0, max_iter=None, rtol=1e-7):
    n = Q.shape[0]
    if n == 0:
        return 1.0
    if sp.issparse(Q):
        if Q.count_nonzero() == 0:
            return 1.0
    elif not np.any(Q):
        return 1.0
    max_iter = max_iter or max(10 * n, MIN_POWER_ITERATIONS)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    best = 0.0
    w = Q @ v
    for _ in range(max_iter):
        mu = float(np.linalg.norm(w))
        if mu == 0.0:
            v = rng.standard_normal(n)
            v /= np.linalg.norm(v)
            w = Q @ v
            continue
        u = Q @ w
        # Rayleigh-Ritz on span{v, Qv}: resolves +/- lambda pairs that stall
        # the plain iteration
        h11 = float(v @ w)
        q2 = w - h11 * v
        r2 = float(np.linalg.norm(q2))
        if r2 <= rtol * mu:
            return abs(h11)
        q2 /= r2
        Qq2 = (u - h11 * w) / r2
        H = np.array([[h11, float(v @ Qq2)], [float(q2 @ w), float(q2 @ Qq2)]])
        H = 0.5 * (H + H.T)
        theta, S = np.linalg.eigh(H)
        k = int(np.argmax(np.abs(theta)))
        s1, s2 = S[:, k]
        y = s1 * v + s2 * q2
        res = float(np.linalg.norm(s1 * w + s2 * Qq2 - theta[k] * y))
        best = max(best, abs(float(theta[k])))
        if res <= rtol * abs(theta[k]):
            return abs(float(theta[k]))
        v = w / mu
        w = u / mu
    warnings.warn(f"power iteration did not converge in {max_iter} iterations",
                  ConvergenceWarning, stacklevel=3)
    return best


def estimate_lambda(p, seed=0):
    """Spectral radius of ``Q`` by power iteration (1.0 when ``Q == 0``)."""
    if p.n < 1:
        raise ValueError("empty problem")
    return _spectral_radius(p.Q, seed)


def coupling_lambda(p):
    """The ``lambda`` that :func:`run` would compute for ``p``; cache it across runs."""
    return _Dynamics(to_domain(p, Domain.PLUS_MINUS_ONE)).lam


def beta_schedule(beta0, t, T):
    """Linear annealing ramp ``beta0 * (1 - t / T)``."""
    if t < 0 or t > T:
        raise ValueError(f"t={t} outside [0, {T}]")
    return beta0 * (1.0 - t / T)


def _beta(cfg, t):
    if cfg.schedule == "constant":
        return cfg.beta0
    return beta_schedule(cfg.beta0, t, cfg.T)


class _Dynamics:
    """Coupling data for the drive term ``Q f(x) + b`` in the [-1, 1] box."""

    def __init__(self, p, lam=None, noise=None):
        if p.domain is not Domain.PLUS_MINUS_ONE:
            raise ValueError("dynamics require a problem in the plus_minus_one domain")
        self.problem = p
        self.mask = p.binary_mask
        self.all_binary = bool(self.mask.all())
        self.any_binary = bool(self.mask.any())
        Q = p.Q
        if self.any_binary:
            d = Q.diagonal() * self.mask
            if np.any(d):
                Q = Q - (sp.diags_array(d) if sp.issparse(Q) else np.diag(d))
        self.Q = Q
        self.b = np.asarray(p.b)
        self.lam = _spectral_radius(Q) if lam is None else float(lam)
        self.offset = None
        if noise is not None and noise.nonneg_weights:
            self.Qplus, self.offset = hwsim.nonneg_decompose(Q)

    def drive(self, F):
        if self.offset is not None:
            return F @ self.Qplus + self.offset * F.sum(axis=1, keepdims=True) + self.b
        return matmul_rows(self.Q, F) + self.b

    def nonlinear(self, X, kind, gain):
        if not self.any_binary:
            return X
        if kind is Nonlinearity.SIGN:
            G = np.sign(X)
        elif kind is Nonlinearity.TANH:
            G = np.sign(X) if np.isinf(gain) else np.tanh(gain * X)
        else:
            G = np.clip(X, -1.0, 1.0)
        if self.all_binary:
            return G
        return np.where(self.mask, G, X)


def _effective(cfg):
    gamma, gain = cfg.gamma, cfg.gain
    nc = cfg.noise
    if nc is not None:
        if nc.force_zero_momentum:
            gamma = 0.0
        if cfg.nonlinearity is Nonlinearity.TANH:
            gain = nc.transfer_gain
    return gamma, gain


def _raw_update(dyn, X, Xprev, cfg, t, gamma, gain):
    alpha = cfg.alpha0 / dyn.lam
    beta = _beta(cfg, t)
    mom = X - Xprev
    if cfg.momentum is Momentum.NESTEROV and gamma != 0.0:
        point = X + gamma * mom
    else:
        point = X
    drive = dyn.drive(dyn.nonlinear(point, cfg.nonlinearity, gain))
    return X + cfg.dt * (alpha * drive - beta * X + gamma * mom)


def _check_state(p, name, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (p.n,):
        raise ValueError(f"{name} must have length {p.n}")
    return x


def step(p, x_t, x_prev, cfg, t, lam=None):
    """One noiseless AIM update for a single state (``p`` in the [-1, 1] domain).

    ``lam`` defaults to the spectral radius of the coupling matrix; pass it
    explicitly when stepping repeatedly.
    """
    dyn = _Dynamics(p, lam)
    x_t = _check_state(p, "x_t", x_t)
    x_prev = _check_state(p, "x_prev", x_prev)
    U = _raw_update(dyn, x_t[None], x_prev[None], cfg, t, cfg.gamma, cfg.gain)
    if not np.all(np.isfinite(U)):
        raise NumericFailure(t)
    return np.clip(U[0], -1.0, 1.0)


def _project_pm(mask, X):
    if not mask.any():
        return X.copy()
    P = X.copy()
    P[:, mask] = np.where(X[:, mask] >= 0.0, 1.0, -1.0)
    return P


def _run_block(dyn, cfg, start, size):
    p = dyn.problem
    n = p.n
    gamma, gain = _effective(cfg)
    gens = _rng.streams(cfg.seed, start, size)
    X = _rng.stacked_uniform(gens, -cfg.init_scale, cfg.init_scale, n)
    Xprev = X.copy()
    sigma = cfg.noise.sigma if cfg.noise is not None else 0.0
    noise = None
    traj = [X.copy()] if cfg.record_trajectory else None
    P = _project_pm(dyn.mask, X)
    best_f = objective_batch(p, P)
    best_X = P
    best_it = np.zeros(size, dtype=np.int64)
    for t in range(cfg.T):
        U = _raw_update(dyn, X, Xprev, cfg, t, gamma, gain)
        if sigma > 0.0:
            k = t % NOISE_CHUNK
            if k == 0:
                noise = _rng.stacked_normal(gens, (min(NOISE_CHUNK, cfg.T - t), n))
            U = hwsim.inject(U, sigma, noise[k])
        if not np.all(np.isfinite(U)):
            raise NumericFailure(t)
        Xprev, X = X, np.clip(U, -1.0, 1.0)
        if traj is not None:
            traj.append(X.copy())
        if cfg.track_best:
            P = _project_pm(dyn.mask, X)
            f = objective_batch(p, P)
            better = f < best_f
            if better.any():
                best_f = np.where(better, f, best_f)
                best_X = np.where(better[:, None], P, best_X)
                best_it[better] = t + 1
    final_P = _project_pm(dyn.mask, X)
    if not cfg.track_best:
        best_X = final_P
        best_it[:] = cfg.T
    return best_X, best_it, final_P, (np.stack(traj, axis=0) if traj is not None else None)


def run(p, cfg, lam=None, workers=1):
    """Run ``cfg.samples`` independent AIM trajectories and read out the best.

    ``p`` may be in either domain; the dynamics always run in [-1, 1] and the
    returned assignment is mapped back to ``p.domain``.  Objectives are recomputed
    exactly on the read-out assignments.
    """
    if p.n < 1:
        raise ValueError("empty problem")
    q = to_domain(p, Domain.PLUS_MINUS_ONE)
    dyn = _Dynamics(q, lam, cfg.noise)
    blocks = [(s, min(BLOCK, cfg.samples - s)) for s in range(0, cfg.samples, BLOCK)]
    if workers == 1 or len(blocks) == 1:
        parts = [_run_block(dyn, cfg, s, k) for s, k in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers or None) as ex:
            parts = list(ex.map(lambda sk: _run_block(dyn, cfg, *sk), blocks))
    best_X = np.concatenate([r[0] for r in parts])
    best_it = np.concatenate([r[1] for r in parts])
    final_X = np.concatenate([r[2] for r in parts])
    traj = None
    if cfg.record_trajectory:
        traj = np.concatenate([r[3] for r in parts], axis=1)

    best_X = convert_point(best_X, q.domain, p.domain)
    final_X = convert_point(final_X, q.domain, p.domain)
    per_best = np.array([objective(p, x) for x in best_X])
    per_final = np.array([objective(p, x) for x in final_X])
    if not cfg.track_best:
        per_best = per_final
    k = int(np.argmin(per_best))
    x_best = best_X[k]
    x_best.setflags(write=False)
    return RunResult(
        best_assignment=x_best,
        best_objective=float(per_best[k]),
        best_iteration=int(best_it[k]),
        per_sample_objectives=per_best,
        per_sample_final=per_final,
        lambda_used=dyn.lam,
        trajectory=traj,
        iterations=cfg.samples * cfg.T,
    )


def _inverse_integral(y, gain):
    # integral_0^y artanh(s) / gain ds, finite at |y| = 1
    from scipy.special import xlogy
    return 0.5 * (xlogy(1 + y, 1 + y) + xlogy(1 - y, 1 - y)) / gain


def lyapunov_energy(p, x, x_prev, cfg, t, lam=None):
    """Energy of the mechanical analogue of the dynamics.

    Kinetic term ``gamma / (2 alpha) |x - x_prev|^2``, the objective at
    ``y = f(x)``, and the annealing potential ``(beta(t) / alpha) * sum_i
    int_0^{y_i} f^{-1}``.  Needs an invertible nonlinearity on binary variables
    (tanh) unless the problem is all-continuous.
    """
    if p.domain is not Domain.PLUS_MINUS_ONE:
        raise ValueError("energy is defined in the plus_minus_one domain")
    mask = p.binary_mask
    if mask.any() and cfg.nonlinearity is not Nonlinearity.TANH:
        raise UnsupportedOperation(
            f"{cfg.nonlinearity.value} nonlinearity is not invertible")
    x = _check_state(p, "x", x)
    x_prev = _check_state(p, "x_prev", x_prev)
    dyn = _Dynamics(p, lam)
    alpha = cfg.alpha0 / dyn.lam
    y = np.where(mask, np.tanh(cfg.gain * x), x)
    kinetic = cfg.gamma / (2.0 * alpha) * float(np.sum((x - x_prev) ** 2))
    phi = _beta(cfg, t) / alpha
    potential = np.where(mask, _inverse_integral(y, cfg.gain), 0.5 * y * y)
    return kinetic + objective(p, y) + phi * float(potential.sum())
