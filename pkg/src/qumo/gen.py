"""Instance generators.

Weights are small integers so every instance is exactly representable at the
requested bit precision: one least significant bit is one unit.
"""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _rng, baselines
from .errors import ResourceLimitError
from .model import Domain, Kind, QumoProblem, objective
from .transforms import ConstrainedProblem, LinearConstraint

FAMILIES = ("sk", "three_regular", "planted", "settlement")
_ALIASES = {
    "skdense": "sk", "sk_dense": "sk", "sk": "sk",
    "threeregular": "three_regular", "three_regular": "three_regular", "3reg": "three_regular",
    "plantedqumo": "planted", "planted_qumo": "planted", "planted": "planted",
    "settlementlike": "settlement", "settlement_like": "settlement", "settlement": "settlement",
}
GRID = 1.0 / 128


@dataclass(frozen=True)
class GenSpec:
    family: str = "sk"
    n: int = 8
    n_continuous: int = 0
    bits: int = 7
    candidates: int = 10_000
    sensitivity_trials: int = 50
    seed: int = 0
    count: int = 1
    select: bool = True
    n_parties: Optional[int] = None
    perturbations: int = 200
    max_attempts: int = 50

    def __post_init__(self):
        fam = _ALIASES.get(str(self.family).replace("-", "_").lower())
        if fam is None:
            raise ValueError(f"unknown family {self.family!r}")
        object.__setattr__(self, "family", fam)
        if not 1 <= self.bits <= 16:
            raise ValueError("bits must be in [1, 16]")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= self.n_continuous < max(self.n, 1):
            raise ValueError("n_continuous must be in [0, n)")
        if fam == "three_regular" and (self.n % 2 or self.n < 4):
            raise ValueError("three-regular graphs need an even n >= 4")
        if self.candidates < 1 or self.count < 1:
            raise ValueError("candidates and count must be >= 1")

    @property
    def max_level(self):
        return max(1, (1 << (self.bits - 1)) - 1)


def quantize_weights(Q, b, bits, rescale=True):
    """Round ``(Q, b)`` to ``bits``-bit signed levels of their joint max magnitude.

    The largest magnitude maps to ``2^(bits-1) - 1``.  With ``rescale`` the
    levels are scaled back to the original magnitude, otherwise the integer
    levels are returned.
    """
    if bits < 1:
        raise ValueError("bits must be >= 1")
    Q = np.asarray(Q, dtype=float)
    b = np.asarray(b, dtype=float)
    Q = (Q + Q.T) * 0.5
    m = max(np.abs(Q).max(initial=0.0), np.abs(b).max(initial=0.0))
    if m == 0:
        return Q, b.copy()
    top = max(1, (1 << (bits - 1)) - 1)
    scale = m / top
    Qi = np.rint(Q / scale)
    bi = np.rint(b / scale)
    if rescale:
        return Qi * scale, bi * scale
    return Qi, bi


# ------------------------------------------------------------ QUBO families

def three_regular_edges(n, rng, max_tries=1000):
    """Uniform random simple 3-regular graph by the pairing model with rejection."""
    for _ in range(max_tries):
        stubs = rng.permutation(np.repeat(np.arange(n), 3)).reshape(-1, 2)
        if np.any(stubs[:, 0] == stubs[:, 1]):
            continue
        e = np.sort(stubs, axis=1)
        if len(np.unique(e, axis=0)) == len(e):
            return e
    raise RuntimeError("could not sample a simple 3-regular graph")


def _raw_qubo(spec, rng):
    n = spec.n
    if spec.family == "sk":
        J = np.triu(rng.standard_normal((n, n)), 1)
    else:
        J = np.zeros((n, n))
        e = three_regular_edges(n, rng)
        J[e[:, 0], e[:, 1]] = rng.standard_normal(len(e))
    J = J + J.T
    Qi, _ = quantize_weights(J, np.zeros(n), spec.bits, rescale=False)
    # a weight rounding to zero would delete its edge from the graph
    return np.where((Qi == 0) & (J != 0), np.sign(J), Qi)


def _all_spins(n):
    return baselines.binary_patterns(n, -1.0, 1.0)


def _argmin_mask(E, tol=1e-9):
    return E <= E.min() + tol


def eigen_sign_pattern(Q):
    """Sign pattern of the eigenvector of the largest eigenvalue (ties to +1)."""
    w, V = np.linalg.eigh(np.asarray(Q, dtype=float))
    v = V[:, -1]
    return np.where(v >= 0, 1.0, -1.0)


def _energies(Q, S):
    return -0.5 * np.einsum("ij,jk,ik->i", S, Q, S)


def matches_eigen_pattern(Q, S=None, E=None):
    """True if a global minimiser equals the projected top eigenvector (up to sign)."""
    n = Q.shape[0]
    S = _all_spins(n) if S is None else S
    E = _energies(Q, S) if E is None else E
    s = eigen_sign_pattern(Q)
    opt = S[_argmin_mask(E)]
    return bool(np.any(np.all(opt == s, axis=1) | np.all(opt == -s, axis=1)))


def sensitivity(Q, trials, rng, max_level=63, S=None):
    """Fraction of 1-LSB perturbations after which an original minimiser stops being optimal.

    Each trial adds an independent draw from {-1, 0, +1} to every existing
    coupling (levels clipped to ``max_level``).
    """
    n = Q.shape[0]
    S = _all_spins(n) if S is None else S
    E = _energies(Q, S)
    k = int(np.argmin(E))
    iu = np.triu_indices(n, 1)
    edges = np.flatnonzero(Q[iu] != 0)
    hits = 0
    for _ in range(trials):
        D = np.zeros((n, n))
        vals = Q[iu][edges] + rng.integers(-1, 2, len(edges))
        vals = np.clip(vals, -max_level, max_level)
        D[iu[0][edges], iu[1][edges]] = vals
        D = D + D.T
        E2 = _energies(D, S)
        if E2[k] > E2.min() + 1e-9:
            hits += 1
    return hits / trials if trials else 0.0


def gen_qubo(spec):
    """Noise-sensitive SK or 3-regular Ising instances (``b = 0``, +/-1 domain).

    Candidates whose optimum is the projected top eigenvector are rejected,
    the rest are ranked by sensitivity and the ``spec.count`` most sensitive
    are returned (ties keep candidate order).  ``meta`` records the
    sensitivity and candidate index.
    """
    if spec.family not in ("sk", "three_regular"):
        raise ValueError("gen_qubo handles the sk and three_regular families")
    n = spec.n
    if spec.select and n > baselines.MAX_BINARY:
        raise ResourceLimitError(f"sensitivity selection needs brute force; n={n} too large")
    if not spec.select:
        out = []
        for c in range(spec.count):
            Q = _raw_qubo(spec, _rng.stream(spec.seed, c))
            out.append(QumoProblem(Q, np.zeros(n), 0.0, None, Domain.PLUS_MINUS_ONE,
                                   {"family": spec.family, "candidate": c}))
        return out
    S = _all_spins(n)
    scored = []
    for c in range(spec.candidates):
        rng = _rng.stream(spec.seed, c)
        Q = _raw_qubo(spec, rng)
        E = _energies(Q, S)
        if matches_eigen_pattern(Q, S, E):
            continue
        scored.append((sensitivity(Q, spec.sensitivity_trials, rng, spec.max_level, S), c, Q))
    if not scored:
        raise RuntimeError("every candidate was solved by its top eigenvector")
    scores = np.array([s for s, _, _ in scored])
    order = sorted(range(len(scored)), key=lambda i: (-scored[i][0], scored[i][1]))
    out = []
    for i in order[:spec.count]:
        s, c, Q = scored[i]
        meta = {"family": spec.family, "candidate": c, "sensitivity": s,
                "median_sensitivity": float(np.median(scores))}
        out.append(QumoProblem(Q, np.zeros(n), 0.0, None, Domain.PLUS_MINUS_ONE, meta))
    return out


# --------------------------------------------------------- planted QUMO

def random_qumo(n, n_continuous=0, bits=7, seed=0, convex=True):
    """Random mixed problem in the [0, 1] box with integer weights.

    With ``convex`` the continuous block is diagonally dominant, so the
    continuous optimum is interior-seeking rather than a box corner.
    """
    rng = _rng.stream(seed, 0)
    top = max(1, (1 << (bits - 1)) - 1)
    A = rng.integers(-top, top + 1, (n, n))
    Q = np.triu(A, 1)
    Q = (Q + Q.T).astype(float)
    b = rng.integers(-top, top + 1, n).astype(float)
    nc = n_continuous
    if nc and convex:
        c = slice(n - nc, n)
        H = np.triu(rng.integers(-top // 4, top // 4 + 1, (nc, nc)), 1)
        H = H + H.T
        np.fill_diagonal(H, np.abs(H).sum(axis=1) + rng.integers(top // 2, top + 1, nc))
        Q[c, c] = -H
    kinds = (Kind.BINARY,) * (n - nc) + (Kind.CONTINUOUS,) * nc
    return QumoProblem(Q, b, 0.0, kinds, Domain.ZERO_ONE,
                       {"family": "random", "seed": seed})


def _certified(p, planted, margin):
    """Planted point is the grid optimum with every other pattern ``margin`` worse."""
    f_star = objective(p, planted)
    nb = p.n_binary
    z = planted[:nb]
    kz = int(np.dot(z.astype(np.int64), 1 << np.arange(nb - 1, -1, -1))) if nb else 0
    scale = 1e-9 * max(1.0, abs(f_star))
    vals, U = baselines.pattern_minima(p, cap=f_star + margin + scale, grid_resolution=GRID)
    if vals[kz] < f_star - scale or np.any(U[kz] != planted[nb:]):
        return False
    others = np.delete(vals, kz)
    return bool(np.all(others > f_star + margin))


def _interior(u):
    return bool(np.all((u >= GRID - 1e-12) & (u <= 1 - GRID + 1e-12)))


def _build_planted(spec, rng):
    n, nc = spec.n, spec.n_continuous
    nb = n - nc
    top = spec.max_level
    z = rng.integers(0, 2, nb).astype(float)
    Q = np.zeros((n, n))
    A = np.triu(rng.integers(-top // 3, top // 3 + 1, (nb, nb)), 1)
    Q[:nb, :nb] = A + A.T
    b = np.zeros(n)
    b[:nb] = rng.integers(-top // 6, top // 6 + 1, nb)
    u_target = np.zeros(0)
    if nc:
        H = np.triu(rng.integers(-top // 8, top // 8 + 1, (nc, nc)), 1)
        H = H + H.T
        np.fill_diagonal(H, np.abs(H).sum(axis=1) + rng.integers(top // 4, top // 2 + 1, nc))
        Qcb = rng.integers(-top // 4, top // 4 + 1, (nc, nb)).astype(float)
        u_target = rng.integers(24, 105, nc) / 128.0
        bc = np.rint(H @ u_target - Qcb @ z)
        if np.abs(bc).max() > top:
            return None
        Q[nb:, nb:] = -H
        Q[nb:, :nb] = Qcb
        Q[:nb, nb:] = Qcb.T
        b[nb:] = bc
    kinds = (Kind.BINARY,) * nb + (Kind.CONTINUOUS,) * nc
    sign = 2.0 * z - 1.0
    base_b = b.copy()
    for delta in range(0, top + 1):
        b[:nb] = base_b[:nb] + delta * sign
        if np.abs(b).max() > top:
            return None
        p = QumoProblem(Q, b, 0.0, kinds, Domain.ZERO_ONE)
        vals, U = baselines.pattern_minima(p, grid_resolution=GRID)
        k = int(np.argmin(vals))
        zb = baselines.binary_patterns(nb, 0.0, 1.0, k, k + 1)[0] if nb else z
        if np.array_equal(zb, z):
            x = np.concatenate([z, U[k]])
            margin = 0.02 * max(1.0, abs(objective(p, x)))
            if _interior(U[k]) and _certified(p, x, margin):
                return p, x
    return None


def _perturb(p, planted, spec, rng):
    n, nc = p.n, p.n_continuous
    nb = n - nc
    top = spec.max_level
    Q, b = p.dense_Q(), np.array(p.b)
    accepted = 0
    for _ in range(spec.perturbations):
        Q2, b2 = Q.copy(), b.copy()
        step = float(rng.choice((-1.0, 1.0)))
        if rng.random() < 0.5:
            i, j = rng.integers(0, n, 2)
            if i == j and i < nb:
                continue
            Q2[i, j] += step
            if i != j:
                Q2[j, i] += step
            if np.abs(Q2[i, j]) > top:
                continue
            if nc and (i >= nb and j >= nb) and baselines._convex_inverse(Q2[nb:, nb:]) is None:
                continue
        else:
            i = rng.integers(0, n)
            b2[i] += step
            if abs(b2[i]) > top:
                continue
        q = QumoProblem(Q2, b2, 0.0, p.kinds, Domain.ZERO_ONE)
        margin = 0.02 * max(1.0, abs(objective(q, planted)))
        if _certified(q, planted, margin):
            Q, b = Q2, b2
            accepted += 1
    return QumoProblem(Q, b, 0.0, p.kinds, Domain.ZERO_ONE), accepted


def gen_planted_qumo(spec, return_status=False):
    """Instances with a certified global minimiser at a chosen pattern.

    The continuous block is strictly convex with its stationary point placed
    at interior grid values, and a binary bias is raised until the chosen
    pattern wins by a margin of 2% of the optimum.  Random one-unit weight
    changes are then applied, each kept only if the grid oracle still
    certifies the same planted point.  Continuous variables are the last
    ``n_continuous`` indices.  Returns a list of ``(problem, planted)``; with
    ``return_status`` also a flag that is True when the attempt budget ran out
    before ``spec.count`` instances were made.
    """
    if spec.family != "planted":
        raise ValueError("gen_planted_qumo handles the planted family")
    if spec.n > 16:
        raise ValueError("planted instances are limited to n <= 16")
    if spec.n_continuous > 3:
        raise ValueError("planted instances support at most 3 continuous variables")
    if spec.bits < 5:
        raise ValueError("planted instances need bits >= 5 for a convex continuous block")
    out = []
    attempts = 0
    budget = spec.max_attempts * spec.count
    while len(out) < spec.count and attempts < budget:
        rng = _rng.stream(spec.seed, attempts)
        attempts += 1
        built = _build_planted(spec, rng)
        if built is None:
            continue
        p, x = built
        p, accepted = _perturb(p, x, spec, rng)
        meta = {"family": "planted", "attempt": attempts - 1, "perturbations": accepted,
                "planted_objective": objective(p, x)}
        p = QumoProblem(p.Q, p.b, p.c0, p.kinds, p.domain, meta)
        x = x.copy()
        x.setflags(write=False)
        out.append((p, x))
    exhausted = len(out) < spec.count
    if exhausted:
        warnings.warn(f"planted generation produced {len(out)} of {spec.count} instances")
    return (out, exhausted) if return_status else out


# ----------------------------------------------------------- settlement

@dataclass(frozen=True)
class Transaction:
    payer: int
    payee: int
    amount: float


def settlement_problem(transactions, balances, credits, caps=None, weights=None):
    """Choose transactions to settle, maximising settled value.

    Party ``k`` ends with ``balances[k] - out_k`` where ``out_k`` is its net
    outflow; the end balance must stay in ``[-credits[k], caps[k]]``.
    """
    m = len(transactions)
    parties = len(balances)
    balances = np.asarray(balances, dtype=float)
    credits = np.asarray(credits, dtype=float)
    caps = balances + np.array([t.amount for t in transactions]).sum() if caps is None else caps
    caps = np.broadcast_to(np.asarray(caps, dtype=float), (parties,))
    w = np.array([t.amount for t in transactions] if weights is None else weights, dtype=float)
    coeffs = [dict() for _ in range(parties)]
    for j, t in enumerate(transactions):
        if t.payer == t.payee:
            raise ValueError(f"transaction {j} pays its own payer")
        coeffs[t.payer][j] = coeffs[t.payer].get(j, 0.0) + t.amount
        coeffs[t.payee][j] = coeffs[t.payee].get(j, 0.0) - t.amount
    cons = [LinearConstraint(coeffs[k], balances[k] - caps[k], balances[k] + credits[k])
            for k in range(parties)]
    base = QumoProblem(np.zeros((m, m)), w, 0.0, None, Domain.ZERO_ONE,
                       {"family": "settlement", "parties": parties})
    return ConstrainedProblem(base, cons)


def _settles_something(cp):
    X = baselines.binary_patterns(cp.base.n, 0.0, 1.0)
    return any(cp.feasible(x) for x in X[1:])


def gen_settlement_like(spec, max_retries=100):
    """Random settlement instance with ``spec.n`` transactions.

    Settling nothing is always feasible.  Draws are rejected as trivial when
    settling everything is also feasible, or when no nonempty selection is
    (only checked for ``n <= 20``).
    """
    if spec.family != "settlement":
        raise ValueError("gen_settlement_like handles the settlement family")
    m = spec.n
    parties = spec.n_parties or m
    if parties < 2:
        raise ValueError("settlement instances need at least two parties")
    for attempt in range(max_retries):
        rng = _rng.stream(spec.seed, attempt)
        txs = []
        for _ in range(m):
            payer, payee = rng.choice(parties, 2, replace=False)
            txs.append(Transaction(int(payer), int(payee), float(rng.integers(1, 21))))
        balances = rng.integers(0, 16, parties).astype(float)
        credits = rng.integers(0, 6, parties).astype(float)
        caps = balances + rng.integers(5, 31, parties)
        cp = settlement_problem(txs, balances, credits, caps)
        if cp.feasible(np.ones(m)):
            continue
        if m <= 20 and not _settles_something(cp):
            continue
        return cp
    raise RuntimeError(f"no non-trivial settlement instance after {max_retries} draws")
