"""Emulation of analog-hardware imperfections on top of the ideal dynamics.

Covers additive Gaussian state noise, a saturating transfer function for
binary variables, zeroed momentum, and the offset/scale trick that lets a
non-negative weight matrix realise an arbitrary-sign one.
"""

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from . import engine

QUMO_SIGMA = 0.03
QUBO_SIGMA = 0.002
DEFAULT_GAIN = 5.0


@dataclass(frozen=True)
class NoiseConfig:
    """Hardware deviations; ``sigma`` is in units of the full-scale amplitude 1."""

    sigma: float = 0.0
    transfer_gain: float = DEFAULT_GAIN
    force_zero_momentum: bool = False
    nonneg_weights: bool = False

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be non-negative")
        if not self.transfer_gain > 0:
            raise ValueError("transfer_gain must be positive")


def default_sigma(p):
    """Noise level used for hardware cross-validation of this kind of problem."""
    return QUBO_SIGMA if p.n_continuous == 0 else QUMO_SIGMA


def hardware_noise(p, **overrides):
    opts = dict(sigma=default_sigma(p), force_zero_momentum=True)
    opts.update(overrides)
    return NoiseConfig(**opts)


def hardware_config(cfg, p, **overrides):
    """Solver config emulating the hardware: noise, tanh transfer, no momentum."""
    return replace(cfg, noise=hardware_noise(p, **overrides),
                   nonlinearity=engine.Nonlinearity.TANH)


def inject(U, sigma, z):
    return U + sigma * z


def noisy_step_wrapper(p, x_t, x_prev, cfg, t, nc, rng, lam=None):
    """One update with hardware deviations; ``rng`` supplies the noise draw.

    Noise is added to the raw update before clipping.  With ``sigma == 0`` no
    random numbers are consumed and, for sign nonlinearity without forced zero
    momentum, the result equals :func:`engine.step` bit for bit.
    """
    cfg = replace(cfg, noise=nc)
    dyn = engine._Dynamics(p, lam, nc)
    x_t = engine._check_state(p, "x_t", x_t)
    x_prev = engine._check_state(p, "x_prev", x_prev)
    gamma, gain = engine._effective(cfg)
    U = engine._raw_update(dyn, x_t[None], x_prev[None], cfg, t, gamma, gain)[0]
    if nc.sigma > 0:
        U = inject(U, nc.sigma, rng.standard_normal(p.n))
    if not np.all(np.isfinite(U)):
        raise engine.NumericFailure(t)
    return np.clip(U, -1.0, 1.0)


def nonneg_decompose(Q):
    """Split ``Q`` into a non-negative matrix and a scalar offset.

    ``Q @ x == Q_plus @ x + offset * x.sum()`` for every ``x``.
    """
    Q = Q.toarray() if sp.issparse(Q) else np.asarray(Q, dtype=float)
    offset = min(0.0, float(Q.min())) if Q.size else 0.0
    return Q - offset, offset


def steady_state_detect(trajectory, window, tol):
    """First iteration whose trailing ``window`` states vary by less than ``tol``.

    ``trajectory`` has iterations on the first axis.  Returns ``None`` if the
    trajectory never settles.
    """
    traj = np.asarray(trajectory, dtype=float)
    if window < 2:
        raise ValueError("window must be >= 2")
    if window > len(traj):
        raise ValueError(f"window {window} longer than trajectory ({len(traj)})")
    flat = traj.reshape(len(traj), -1)
    for t in range(window - 1, len(flat)):
        w = flat[t - window + 1:t + 1]
        if np.max(w.max(axis=0) - w.min(axis=0)) < tol:
            return t
    return None
