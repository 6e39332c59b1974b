"""Canonical QUMO problem: minimise ``F(x) = -1/2 x^T Q x - b^T x + c0``.

Variables are either binary (box endpoints only) or continuous (anywhere in
the box).  The box is ``[0, 1]`` in the ``ZERO_ONE`` domain and ``[-1, 1]`` in
the ``PLUS_MINUS_ONE`` domain; :func:`domain_shift` converts between the two
without changing objective values.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp

DENSE_LIMIT = 4096
SPARSE_DENSITY = 0.05


class Kind(str, Enum):
    BINARY = "binary"
    CONTINUOUS = "continuous"


class Domain(str, Enum):
    ZERO_ONE = "zero_one"
    PLUS_MINUS_ONE = "plus_minus_one"

    @property
    def box(self):
        return (0.0, 1.0) if self is Domain.ZERO_ONE else (-1.0, 1.0)


def _as_kind(k):
    if isinstance(k, Kind):
        return k
    if isinstance(k, str):
        key = k.strip().lower()
        if key in ("b", "bin", "binary"):
            return Kind.BINARY
        if key in ("c", "cont", "continuous"):
            return Kind.CONTINUOUS
    raise ValueError(f"unknown variable kind {k!r}")


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class QumoProblem:
    """Immutable QUMO instance.

    ``Q`` is symmetrised on construction, so it is exactly symmetric even when
    the caller passes an upper-triangular or slightly asymmetric matrix.  Large
    sparse matrices (``n > 4096`` and density below 5%) are stored as CSR.
    """

    Q: object
    b: np.ndarray
    c0: float = 0.0
    kinds: tuple = None
    domain: Domain = Domain.ZERO_ONE
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        Q = self.Q
        if sp.issparse(Q):
            Q = sp.csr_array(Q, dtype=float)
        else:
            Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError(f"Q must be square, got shape {Q.shape}")
        n = Q.shape[0]
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if b.shape != (n,):
            raise ValueError(f"b must have length {n}, got {b.shape[0]}")
        if sp.issparse(Q):
            Q = sp.csr_array((Q + Q.T) * 0.5)
            Q.sort_indices()
        else:
            Q = (Q + Q.T) * 0.5
            if n > DENSE_LIMIT and np.count_nonzero(Q) < SPARSE_DENSITY * n * n:
                Q = sp.csr_array(Q)
        if sp.issparse(Q):
            Q.data.setflags(write=False)
        else:
            Q.setflags(write=False)
        kinds = self.kinds
        if kinds is None:
            kinds = (Kind.BINARY,) * n
        kinds = tuple(_as_kind(k) for k in kinds)
        if len(kinds) != n:
            raise ValueError(f"kinds must have length {n}, got {len(kinds)}")
        c0 = float(self.c0)
        if not np.isfinite(c0) or not np.all(np.isfinite(b)):
            raise ValueError("b and c0 must be finite")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "b", _frozen(b))
        object.__setattr__(self, "c0", c0)
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "domain", Domain(self.domain))

    @property
    def n(self):
        return self.Q.shape[0]

    @property
    def is_sparse(self):
        return sp.issparse(self.Q)

    @property
    def binary_mask(self):
        return np.array([k is Kind.BINARY for k in self.kinds], dtype=bool)

    @property
    def n_binary(self):
        return int(self.binary_mask.sum())

    @property
    def n_continuous(self):
        return self.n - self.n_binary

    @property
    def box(self):
        return self.domain.box

    def dense_Q(self):
        return self.Q.toarray() if self.is_sparse else np.array(self.Q)

    def __repr__(self):
        return (f"QumoProblem(n={self.n}, binary={self.n_binary}, "
                f"continuous={self.n_continuous}, domain={self.domain.value})")


def _check_vector(p, x, name="x"):
    x = np.asarray(x, dtype=float)
    if x.shape != (p.n,):
        raise ValueError(f"{name} must have length {p.n}, got shape {x.shape}")
    return x


def matmul_rows(Q, X):
    """``X @ Q`` for a batch of row vectors, dense or sparse ``Q``."""
    if sp.issparse(Q):
        return np.asarray((Q @ X.T).T)
    return X @ Q


def objective(p, x):
    """``-1/2 x^T Q x - b^T x + c0``."""
    x = _check_vector(p, x)
    return float(-0.5 * (x @ (p.Q @ x)) - p.b @ x + p.c0)


def objective_batch(p, X):
    """Objective of every row of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != p.n:
        raise ValueError(f"rows must have length {p.n}")
    QX = matmul_rows(p.Q, X)
    return -0.5 * np.einsum("ij,ij->i", X, QX) - X @ p.b + p.c0


def gradient(p, y):
    """Gradient of the objective, ``-Q y - b``."""
    y = _check_vector(p, y, "y")
    return -(p.Q @ y) - p.b


def _affine(p, scale, shift, target):
    # x = scale * y + shift, elementwise for every variable
    Q = p.Q
    e = np.ones(p.n)
    Qe = np.asarray(Q @ e)
    Q2 = Q * (scale * scale)
    b2 = scale * (shift * Qe + p.b)
    c2 = p.c0 - 0.5 * shift * shift * float(e @ Qe) - shift * float(p.b @ e)
    return QumoProblem(Q2, b2, c2, p.kinds, target, dict(p.meta))


def domain_shift(p, target):
    """Re-express ``p`` in the ``target`` box.

    Corresponding points satisfy ``x = (y + 1) / 2`` with ``x`` in ``[0, 1]``
    and ``y`` in ``[-1, 1]``; objective values agree at corresponding points.
    """
    target = Domain(target)
    if target is p.domain:
        raise ValueError(f"problem is already in domain {target.value}")
    if target is Domain.PLUS_MINUS_ONE:
        return _affine(p, 0.5, 0.5, target)
    return _affine(p, 2.0, -1.0, target)


def to_domain(p, target):
    """Like :func:`domain_shift` but a no-op when already in ``target``."""
    target = Domain(target)
    return p if p.domain is target else domain_shift(p, target)


def convert_point(x, source, target):
    """Map a point between boxes with the same affine map as :func:`domain_shift`."""
    source, target = Domain(source), Domain(target)
    x = np.asarray(x, dtype=float)
    if source is target:
        return x.copy()
    if target is Domain.PLUS_MINUS_ONE:
        return 2.0 * x - 1.0
    return (x + 1.0) * 0.5


def project(p, raw):
    """Read out a valid assignment from a raw state vector.

    Binary entries snap to the nearest box endpoint (the midpoint goes to the
    upper endpoint); continuous entries are clipped to the box.
    """
    raw = _check_vector(p, raw, "raw")
    return project_batch(p, raw[None, :])[0]


def project_batch(p, X):
    lo, hi = p.box
    mid = 0.5 * (lo + hi)
    X = np.asarray(X, dtype=float)
    out = np.clip(X, lo, hi)
    mask = p.binary_mask
    if mask.any():
        out[:, mask] = np.where(X[:, mask] >= mid, hi, lo)
    return out


def is_assignment(p, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (p.n,):
        return False
    lo, hi = p.box
    if np.any(x < lo) or np.any(x > hi):
        return False
    xb = x[p.binary_mask]
    return bool(np.all((xb == lo) | (xb == hi)))
