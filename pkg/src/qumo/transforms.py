"""Maps from constrained and alternate problem forms into canonical QUMO."""

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ResourceLimitError
from .model import Domain, Kind, QumoProblem, domain_shift, objective

MAX_ENCODING_BITS = 16
MAX_FIXED = 20
_DELTA_ENUM_LIMIT = 16


@dataclass(frozen=True)
class LinearConstraint:
    """``lo <= sum_i coeffs[i] * x[i] <= hi``; either bound may be infinite."""

    coeffs: dict
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        coeffs = {int(i): float(a) for i, a in dict(self.coeffs).items()}
        if any(not math.isfinite(a) for a in coeffs.values()):
            raise ValueError("constraint coefficients must be finite")
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("constraint bounds must not be NaN")
        if math.isinf(lo) and math.isinf(hi):
            raise ValueError("constraint needs at least one finite bound")
        if lo > hi:
            raise ValueError(f"constraint lower bound {lo} exceeds upper bound {hi}")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def sense(self):
        if self.lo == self.hi:
            return "=="
        if math.isinf(self.lo):
            return "<="
        if math.isinf(self.hi):
            return ">="
        return "range"

    def vector(self, n):
        a = np.zeros(n)
        for i, v in self.coeffs.items():
            a[i] = v
        return a

    def value(self, x):
        return float(sum(a * x[i] for i, a in self.coeffs.items()))

    def satisfied(self, x, tol=1e-9):
        v = self.value(x)
        return self.lo - tol <= v <= self.hi + tol


@dataclass(frozen=True)
class ConstrainedProblem:
    base: QumoProblem
    constraints: tuple = ()

    def __post_init__(self):
        cons = tuple(self.constraints)
        for k, c in enumerate(cons):
            for i in c.coeffs:
                if not 0 <= i < self.base.n:
                    raise ValueError(f"constraint {k} references variable {i} "
                                     f"outside 0..{self.base.n - 1}")
        object.__setattr__(self, "constraints", cons)

    def feasible(self, x, tol=1e-9):
        return all(c.satisfied(x, tol) for c in self.constraints)


@dataclass(frozen=True)
class PenaltyConfig:
    """``mode='auto'`` picks a weight per constraint; ``'fixed'`` uses ``P0``."""

    P0: float = 1.0
    mode: str = "auto"

    def __post_init__(self):
        if not self.P0 > 0:
            raise ValueError("P0 must be positive")
        if self.mode not in ("auto", "fixed"):
            raise ValueError(f"unknown penalty mode {self.mode!r}")


@dataclass(frozen=True)
class SlackMap:
    """``slack[k]`` is the output index of constraint ``k``'s slack (None for ==)."""

    slack: tuple
    penalty: tuple
    bounds: tuple
    n_original: int

    def strip(self, x):
        return np.asarray(x)[:self.n_original]


def objective_range(p):
    """Upper bound on ``max F - min F`` over the [0, 1] box."""
    Q = p.dense_Q()
    return float(np.abs(Q).sum() + 2.0 * np.abs(p.b).sum())


def completed_bounds(c, n):
    """Fill an infinite bound with the attainable extremum over the [0, 1] box."""
    a = c.vector(n)
    lo = c.lo if math.isfinite(c.lo) else float(np.minimum(a, 0).sum())
    hi = c.hi if math.isfinite(c.hi) else float(np.maximum(a, 0).sum())
    return lo, hi


def min_violation(c, lo, hi, kinds):
    """Smallest positive distance of ``a^T x`` from ``[lo, hi]`` over binary ``x``.

    Exact by enumeration when the support is binary and small, otherwise the
    smallest nonzero coefficient magnitude (or 1 for an empty constraint).
    """
    idx = sorted(i for i, a in c.coeffs.items() if a != 0)
    if not idx:
        return 1.0
    coef = np.array([c.coeffs[i] for i in idx])
    if len(idx) <= _DELTA_ENUM_LIMIT and all(kinds[i] is Kind.BINARY for i in idx):
        bits = np.array(list(itertools.product((0.0, 1.0), repeat=len(idx))))
        v = bits @ coef
        d = np.maximum(lo - v, v - hi)
        d = d[d > 1e-12]
        return float(d.min()) if d.size else 1.0
    return float(np.abs(coef).min())


def constraints_to_qumo(cp, pc=PenaltyConfig()):
    """Fold linear constraints into the objective as quadratic penalties.

    Each inequality ``l <= a^T x <= u`` gets one continuous slack ``s`` in
    ``[0, 1]`` and the term ``P (a^T x + (u - l) s - u)^2``; an equality gets
    ``P (a^T x - u)^2`` with no slack.  In auto mode each constraint first
    gets ``P = (2R + 1) / delta^2`` where ``R`` bounds the objective range and
    ``delta`` is the smallest possible violation, so any infeasible assignment
    costs more than every feasible one whenever the constraint support is
    binary.  Inequality penalties are then raised to a common slack stiffness
    ``P (u - l)^2``.
    Returns ``(problem, SlackMap)``; slacks are appended after the originals.
    """
    base = cp.base
    if base.domain is not Domain.ZERO_ONE:
        raise ValueError("constrained problems must be expressed in the zero_one domain")
    n0 = base.n
    # a one-sided bound completed onto the other bound acts as an equality
    bnds = [completed_bounds(c, n0) for c in cp.constraints]
    ineq = [k for k, (lo, hi) in enumerate(bnds) if hi > lo]
    n = n0 + len(ineq)
    Q = np.zeros((n, n))
    Q[:n0, :n0] = base.dense_Q()
    b = np.zeros(n)
    b[:n0] = base.b
    c0 = base.c0
    R = objective_range(base)
    rows = []
    for c, (lo, hi) in zip(cp.constraints, bnds):
        if pc.mode == "fixed":
            P = pc.P0
        else:
            d = min_violation(c, lo, hi, base.kinds)
            P = (R + 1.0) / (d * d)
        rows.append((c, lo, hi, P))
    if pc.mode != "fixed":
        # equal slack stiffness P (u - l)^2 keeps the slack modes equally
        # conditioned; raising P never breaks exactness
        stiff = [P * (hi - lo) ** 2 for c, lo, hi, P in rows if hi > lo]
        if stiff:
            K = max(stiff)
            rows = [(c, lo, hi, K / (hi - lo) ** 2 if hi > lo else P)
                    for c, lo, hi, P in rows]
    slack, penalty, bounds = [], [], []
    nxt = n0
    for c, lo, hi, P in rows:
        v = np.zeros(n)
        v[:n0] = c.vector(n0)
        if hi == lo:
            slack.append(None)
        else:
            v[nxt] = hi - lo
            slack.append(nxt)
            nxt += 1
        u = hi
        Q -= 2.0 * P * np.outer(v, v)
        b += 2.0 * P * u * v
        c0 += P * u * u
        penalty.append(P)
        bounds.append((lo, hi))
    kinds = tuple(base.kinds) + (Kind.CONTINUOUS,) * len(ineq)
    meta = dict(base.meta)
    meta["constraints"] = len(cp.constraints)
    out = QumoProblem(Q, b, c0, kinds, Domain.ZERO_ONE, meta)
    return out, SlackMap(tuple(slack), tuple(penalty), tuple(bounds), n0)


def optimal_slacks(cp, smap, x):
    """Best slack values for original assignment ``x`` (clipped to [0, 1])."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(len([s for s in smap.slack if s is not None]))
    k = 0
    for c, s, (lo, hi) in zip(cp.constraints, smap.slack, smap.bounds):
        if s is None:
            continue
        w = hi - lo
        out[k] = 1.0 if w == 0 else min(1.0, max(0.0, (hi - c.value(x)) / w))
        k += 1
    return np.concatenate([x, out])


# ------------------------------------------------------------ encodings

def encoding_weights(encoding, n_bits):
    if n_bits < 1:
        raise ValueError("n_bits must be >= 1")
    if n_bits > MAX_ENCODING_BITS:
        raise ResourceLimitError(f"n_bits={n_bits} exceeds {MAX_ENCODING_BITS}")
    enc = encoding.lower()
    if enc == "unary":
        m = 1 << n_bits
        return np.full(m, 1.0 / m)
    if enc == "binary":
        return 2.0 ** np.arange(n_bits) / ((1 << n_bits) - 1)
    raise ValueError(f"unknown encoding {encoding!r}")


def slack_to_qubo(p, encoding="binary", n_bits=7):
    """Replace every continuous variable by a weighted sum of binary ones.

    Unary: ``s = (1/M) sum_j y_j`` with ``M = 2^n_bits`` bits.  Binary:
    ``s = sum_k 2^k y_k / (2^n_bits - 1)``.  The bits replace the continuous
    variable in place.  The expansion matrix is stored in ``meta['encoding']``
    so :func:`decode` can map an encoded assignment back.
    """
    if p.n_continuous == 0:
        raise ValueError("problem has no continuous variables to encode")
    w = encoding_weights(encoding, n_bits)
    q = p if p.domain is Domain.ZERO_ONE else domain_shift(p, Domain.ZERO_ONE)
    cols = []
    for i, k in enumerate(q.kinds):
        cols.append([(i, 1.0)] if k is Kind.BINARY else [(i, wj) for wj in w])
    m = sum(len(c) for c in cols)
    M = np.zeros((q.n, m))
    j = 0
    for group in cols:
        for i, wj in group:
            M[i, j] = wj
            j += 1
    Q = M.T @ q.dense_Q() @ M
    b = M.T @ q.b
    meta = dict(q.meta)
    meta["encoding"] = M
    return QumoProblem(Q, b, q.c0, (Kind.BINARY,) * m, Domain.ZERO_ONE, meta)


def decode(encoded, z):
    """Original-variable assignment (zero_one domain) from an encoded one."""
    return encoded.meta["encoding"] @ np.asarray(z, dtype=float)


# -------------------------------------------------------- QUBO <-> Ising

def qubo_ising_roundtrip(p):
    """Switch an all-binary problem between {0,1} and {-1,+1} variables.

    With ``x = (y + 1) / 2`` the {0,1} data ``(A, a, c)`` and the {-1,+1}
    data ``(B, h, d)`` are related by ``A = 4B``, ``a = 2h - 2Be`` and
    ``c = d + h^T e - 1/2 e^T B e``.
    """
    if p.n_continuous:
        raise ValueError("qubo_ising_roundtrip needs an all-binary problem; use domain_shift")
    e = np.ones(p.n)
    Q = p.dense_Q()
    if p.domain is Domain.PLUS_MINUS_ONE:
        B, h, d = Q, p.b, p.c0
        A = 4.0 * B
        a = 2.0 * h - 2.0 * (B @ e)
        c = d + float(h @ e) - 0.5 * float(e @ B @ e)
        return QumoProblem(A, a, c, p.kinds, Domain.ZERO_ONE, dict(p.meta))
    A, a, c = Q, p.b, p.c0
    B = A / 4.0
    h = 0.5 * a + B @ e
    d = c - float(h @ e) + 0.5 * float(e @ B @ e)
    return QumoProblem(B, h, d, p.kinds, Domain.PLUS_MINUS_ONE, dict(p.meta))


def edge_matrix(edges, n):
    """Symmetric weight matrix with duplicate edges summed."""
    C = np.zeros((n, n))
    for e in edges:
        i, j, w = int(e[0]), int(e[1]), float(e[2]) if len(e) > 2 else 1.0
        if i == j:
            raise ValueError(f"self-loop on vertex {i}")
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i}, {j}) outside 0..{n - 1}")
        C[i, j] += w
        C[j, i] += w
    return C


def maxcut_to_ising(edges, n):
    """Ising problem whose negated objective is the cut weight.

    Edges are ``(i, j, w)`` with 0-based vertices.  ``F(y) = -cut(y)`` exactly
    for every spin vector ``y``.
    """
    C = edge_matrix(edges, n)
    W = 0.5 * float(C.sum())
    meta = {"source": "maxcut", "edges": int(np.count_nonzero(np.triu(C, 1))),
            "total_weight": W}
    return QumoProblem(-0.5 * C, np.zeros(n), -0.5 * W, None,
                       Domain.PLUS_MINUS_ONE, meta)


def cut_value(C, y):
    y = np.asarray(y, dtype=float)
    C = np.asarray(C, dtype=float)
    return float(0.25 * np.sum(C * (1.0 - np.outer(y, y))))


# ------------------------------------------------------- greedy fixing

@dataclass(frozen=True)
class FixedSubproblem:
    problem: QumoProblem
    fixed: tuple
    values: tuple
    free: tuple = field(default=())

    def expand(self, x_free):
        """Full assignment from one of the reduced problem."""
        n = len(self.fixed) + len(self.free)
        x = np.empty(n)
        x[list(self.fixed)] = self.values
        x[list(self.free)] = np.asarray(x_free, dtype=float)
        return x


def impact_scores(p):
    """``|b_i| + 1/2 sum_j |Q_ij|`` per variable."""
    return np.abs(p.b) + 0.5 * np.abs(p.dense_Q()).sum(axis=1)


def substitute(p, fixed, values):
    """Problem over the remaining variables after fixing ``fixed`` to ``values``."""
    fixed = np.asarray(fixed, dtype=int)
    vals = np.asarray(values, dtype=float)
    free = np.setdiff1d(np.arange(p.n), fixed)
    Q = p.dense_Q()
    Qff, Qrf, Qrr = Q[np.ix_(fixed, fixed)], Q[np.ix_(free, fixed)], Q[np.ix_(free, free)]
    b = p.b[free] + Qrf @ vals
    c0 = p.c0 - 0.5 * float(vals @ Qff @ vals) - float(p.b[fixed] @ vals)
    kinds = tuple(p.kinds[i] for i in free)
    return QumoProblem(Qrr, b, c0, kinds, p.domain, dict(p.meta)), free


def greedy_fix_preprocess(p, k):
    """Fix the ``k`` highest-impact binaries every possible way.

    Returns the ``2^k`` reduced problems in lexicographic order of the fixed
    values; together they partition the original search space.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > MAX_FIXED:
        raise ResourceLimitError(f"k={k} exceeds {MAX_FIXED}")
    if k > p.n_binary:
        raise ValueError(f"k={k} exceeds the number of binary variables ({p.n_binary})")
    if k == 0:
        return [FixedSubproblem(p, (), (), tuple(range(p.n)))]
    score = impact_scores(p)
    cand = np.flatnonzero(p.binary_mask)
    order = cand[np.argsort(-score[cand], kind="stable")][:k]
    fixed = tuple(int(i) for i in order)
    lo, hi = p.box
    out = []
    for vals in itertools.product((lo, hi), repeat=k):
        q, free = substitute(p, fixed, vals)
        out.append(FixedSubproblem(q, fixed, tuple(vals), tuple(int(i) for i in free)))
    return out

