import numpy as np
import pytest

from qumo.model import Domain, Kind, QumoProblem


def random_problem(n, n_continuous=0, seed=0, domain=Domain.ZERO_ONE, scale=1.0, c0=None):
    """Dense random problem with continuous variables last."""
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) * scale
    kinds = (Kind.BINARY,) * (n - n_continuous) + (Kind.CONTINUOUS,) * n_continuous
    c = rng.normal() if c0 is None else c0
    return QumoProblem(A + A.T, rng.normal(size=n) * scale, c, kinds, domain)


def box_points(p, count, rng):
    lo, hi = p.box
    X = rng.uniform(lo, hi, size=(count, p.n))
    m = p.binary_mask
    X[:, m] = np.where(rng.random((count, int(m.sum()))) < 0.5, lo, hi)
    return X


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


from hypothesis import settings  # noqa: E402

settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
