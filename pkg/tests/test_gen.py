import itertools

import numpy as np
import pytest

from qumo import baselines, gen
from qumo.errors import ResourceLimitError
from qumo.gen import GenSpec, Transaction
from qumo.model import Domain, Kind, objective, objective_batch
from qumo.transforms import constraints_to_qumo


def spins(n):
    return np.array(list(itertools.product((-1.0, 1.0), repeat=n)))


def ising_energy(Q, S):
    return np.array([-0.5 * s @ Q @ s for s in S])


# ------------------------------------------------------------------ spec

def test_spec_validation():
    with pytest.raises(ValueError):
        GenSpec(bits=0)
    with pytest.raises(ValueError):
        GenSpec(bits=17)
    with pytest.raises(ValueError):
        GenSpec(n=4, n_continuous=4)
    with pytest.raises(ValueError):
        GenSpec("three_regular", n=7)
    with pytest.raises(ValueError):
        GenSpec("three_regular", n=2)
    with pytest.raises(ValueError):
        GenSpec("wishart")
    assert GenSpec("SKDense").family == "sk"
    assert GenSpec("PlantedQumo").family == "planted"


# -------------------------------------------------------------- quantize

def test_quantize_fixed_point():
    rng = np.random.default_rng(0)
    A = np.triu(rng.integers(-63, 64, (6, 6)), 1).astype(float)
    Q = A + A.T
    Q[0, 1] = Q[1, 0] = 63.0
    b = rng.integers(-63, 64, 6).astype(float)
    Q2, b2 = gen.quantize_weights(Q, b, 7)
    assert np.array_equal(Q2, Q) and np.array_equal(b2, b)


def test_quantize_one_bit():
    Q = np.array([[0.0, 0.5], [0.5, 0.0]])
    b = np.array([1.0, -0.2])
    Q2, b2 = gen.quantize_weights(Q, b, 1)
    assert set(np.abs(np.concatenate([Q2.ravel(), b2]))) <= {0.0, 1.0}
    assert b2[0] == 1.0


def test_quantize_zero_input_unchanged():
    Q2, b2 = gen.quantize_weights(np.zeros((3, 3)), np.zeros(3), 7)
    assert not Q2.any() and not b2.any()
    with pytest.raises(ValueError):
        gen.quantize_weights(np.zeros((2, 2)), np.zeros(2), 0)


@pytest.mark.parametrize("seed", range(10))
def test_quantize_error_bound(seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((10, 10))
    Q = (G + G.T) / 2
    b = np.zeros(10)
    Q2, _ = gen.quantize_weights(Q, b, 7)
    m = np.abs(Q).max()
    assert np.abs(Q2 - Q).max() <= m / (2 * 63) * (1 + 1e-12)
    assert np.array_equal(Q2, Q2.T)
    # levels are integers at the scale max / 63
    lev = Q2 / (m / 63)
    assert np.allclose(lev, np.rint(lev), atol=1e-9)


# ----------------------------------------------------------------- QUBO

@pytest.mark.parametrize("seed", range(5))
def test_three_regular_degrees(seed):
    e = gen.three_regular_edges(8, np.random.default_rng(seed))
    assert np.all(np.bincount(e.ravel(), minlength=8) == 3)
    assert len(np.unique(e, axis=0)) == 12 and np.all(e[:, 0] < e[:, 1])
    for p in gen.gen_qubo(GenSpec("three_regular", n=8, count=20, select=False, seed=seed)):
        assert np.all((p.dense_Q() != 0).sum(axis=1) == 3)


def test_three_regular_selection():
    (p,) = gen.gen_qubo(GenSpec("three_regular", n=8, candidates=200, sensitivity_trials=10,
                                seed=1))
    assert np.all((p.dense_Q() != 0).sum(axis=1) == 3)
    assert not gen.matches_eigen_pattern(p.dense_Q())


def test_qubo_weights_are_integer_levels():
    for p in gen.gen_qubo(GenSpec("sk", n=10, count=3, select=False, seed=2)):
        Q = p.dense_Q()
        assert np.array_equal(Q, np.rint(Q)) and np.abs(Q).max() == 63
        assert np.array_equal(Q, Q.T) and not np.diag(Q).any()
        assert np.count_nonzero(Q) == 90
        assert p.domain is Domain.PLUS_MINUS_ONE and not p.b.any()


def independent_sensitivity(Q, deltas):
    # deltas: list of symmetric integer perturbation matrices
    S = spins(Q.shape[0])
    E = ising_energy(Q, S)
    k = int(np.argmin(E))
    hits = 0
    for D in deltas:
        E2 = ising_energy(np.clip(Q + D, -63, 63), S)
        hits += E2[k] > E2.min() + 1e-9
    return hits / len(deltas)


def test_sensitivity_matches_enumeration():
    Q = gen.gen_qubo(GenSpec("sk", n=6, select=False, seed=11))[0].dense_Q()
    trials = 30
    rng = np.random.default_rng(4)
    s = gen.sensitivity(Q, trials, rng, 63)
    # replay the same draws
    rng = np.random.default_rng(4)
    iu = np.triu_indices(6, 1)
    deltas = []
    for _ in range(trials):
        D = np.zeros((6, 6))
        D[iu] = rng.integers(-1, 2, len(iu[0]))
        deltas.append(D + D.T)
    assert s == independent_sensitivity(Q, deltas)


def test_sk_selection_sensitivity_and_eigen_rejection():
    spec = GenSpec("sk", n=8, candidates=1000, sensitivity_trials=20, seed=3, count=3)
    out = gen.gen_qubo(spec)
    assert len(out) == 3
    for p in out:
        assert p.meta["sensitivity"] >= p.meta["median_sensitivity"]
        Q = p.dense_Q()
        S = spins(8)
        E = ising_energy(Q, S)
        opt = S[E <= E.min() + 1e-9]
        w, V = np.linalg.eigh(Q)
        s = np.where(V[:, -1] >= 0, 1.0, -1.0)
        assert not any(np.array_equal(o, s) or np.array_equal(o, -s) for o in opt)
    sens = [p.meta["sensitivity"] for p in out]
    assert sens == sorted(sens, reverse=True)


def test_selection_size_limit():
    with pytest.raises(ResourceLimitError):
        gen.gen_qubo(GenSpec("sk", n=30))
    assert gen.gen_qubo(GenSpec("sk", n=30, select=False))[0].n == 30
    with pytest.raises(ValueError):
        gen.gen_qubo(GenSpec("planted", n=4))


def test_qubo_deterministic():
    spec = GenSpec("three_regular", n=10, candidates=20, sensitivity_trials=5, seed=9)
    a, b = gen.gen_qubo(spec)[0], gen.gen_qubo(spec)[0]
    assert np.array_equal(a.dense_Q(), b.dense_Q()) and a.meta == b.meta


# -------------------------------------------------------------- planted

def grid_minimum(p, step=1.0 / 128):
    """Exhaustive minimum over binary patterns x the full continuous grid."""
    nb, nc = p.n_binary, p.n_continuous
    g = np.arange(0, 129) * step
    best = np.inf
    U = np.array(list(itertools.product(g, repeat=nc))) if nc else np.zeros((1, 0))
    for z in itertools.product((0.0, 1.0), repeat=nb):
        X = np.hstack([np.tile(z, (len(U), 1)), U])
        best = min(best, objective_batch(p, X).min())
    return best


@pytest.mark.parametrize("nc", [1, 2])
def test_planted_is_grid_optimum(nc):
    out = gen.gen_planted_qumo(GenSpec("planted", n=6, n_continuous=nc, seed=nc, count=2,
                                       perturbations=40))
    assert len(out) == 2
    for p, x in out:
        assert p.kinds[-nc:] == (Kind.CONTINUOUS,) * nc
        f = objective(p, x)
        assert f <= grid_minimum(p) + 1e-9
        u = x[-nc:]
        assert np.all(u >= 1 / 128) and np.all(u <= 1 - 1 / 128)
        assert np.array_equal(u * 128, np.rint(u * 128))
        assert f == p.meta["planted_objective"]


def test_planted_three_continuous_certified():
    (p, x), = gen.gen_planted_qumo(GenSpec("planted", n=7, n_continuous=3, seed=5,
                                           perturbations=30))
    xb, vb = baselines.brute_force(p)
    assert objective(p, x) == pytest.approx(vb, abs=1e-9)
    assert np.array_equal(xb[:4], x[:4])


def test_planted_pure_binary():
    (p, x), = gen.gen_planted_qumo(GenSpec("planted", n=6, seed=1, perturbations=20))
    X = np.array(list(itertools.product((0.0, 1.0), repeat=6)))
    v = objective_batch(p, X)
    assert objective(p, x) == v.min()
    assert np.sum(v <= v.min() + 1e-9) == 1


def test_planted_weights_integer_and_bounded():
    for p, _ in gen.gen_planted_qumo(GenSpec("planted", n=7, n_continuous=2, seed=8,
                                             count=2, perturbations=50)):
        Q = p.dense_Q()
        for a in (Q, p.b):
            assert np.array_equal(a, np.rint(a)) and np.abs(a).max() <= 63


def test_planted_limits_and_exhaustion():
    with pytest.raises(ValueError):
        gen.gen_planted_qumo(GenSpec("planted", n=17))
    with pytest.raises(ValueError):
        gen.gen_planted_qumo(GenSpec("planted", n=8, n_continuous=4))
    with pytest.raises(ValueError):
        gen.gen_planted_qumo(GenSpec("planted", n=6, n_continuous=1, bits=4))


def test_planted_budget_exhaustion(monkeypatch):
    real = gen._build_planted
    calls = []

    def flaky(spec, rng):
        calls.append(1)
        return real(spec, rng) if len(calls) == 1 else None

    monkeypatch.setattr(gen, "_build_planted", flaky)
    with pytest.warns(UserWarning):
        out, flag = gen.gen_planted_qumo(
            GenSpec("planted", n=5, n_continuous=1, count=2, max_attempts=3, perturbations=5),
            return_status=True)
    assert flag and len(out) == 1 and len(calls) == 6


def test_planted_deterministic():
    spec = GenSpec("planted", n=6, n_continuous=2, seed=4, perturbations=20)
    (p1, x1), = gen.gen_planted_qumo(spec)
    (p2, x2), = gen.gen_planted_qumo(spec)
    assert np.array_equal(p1.dense_Q(), p2.dense_Q()) and np.array_equal(x1, x2)


# ----------------------------------------------------------- settlement

def constrained_optimum(cp):
    X = np.array(list(itertools.product((0.0, 1.0), repeat=cp.base.n)))
    feas = [x for x in X if cp.feasible(x)]
    v = objective_batch(cp.base, np.array(feas))
    return v.min(), feas[int(np.argmin(v))]


def test_settlement_demo_size():
    cp = gen.gen_settlement_like(GenSpec("settlement", n=3, seed=0))
    assert cp.base.n == 3 and len(cp.constraints) == 3
    q, sm = constraints_to_qumo(cp)
    assert q.n_binary == 3 and q.n_continuous == 3


@pytest.mark.parametrize("seed", range(6))
def test_settlement_qumo_optimum_matches(seed):
    cp = gen.gen_settlement_like(GenSpec("settlement", n=3 + seed % 2, seed=seed))
    q, sm = constraints_to_qumo(cp)
    x, v = baselines.brute_force(q, continuous="exact")
    ref, _ = constrained_optimum(cp)
    assert cp.feasible(sm.strip(x))
    assert v == pytest.approx(ref, abs=1e-7)
    # nontrivial: something settles, but not everything
    assert ref < 0 and not cp.feasible(np.ones(cp.base.n))


def test_settlement_nothing_can_settle():
    # every payer has zero balance and zero credit
    txs = [Transaction(0, 1, 5.0), Transaction(1, 2, 3.0), Transaction(2, 0, 4.0)]
    cp = gen.settlement_problem(txs, np.zeros(3), np.zeros(3), caps=np.full(3, 100.0))
    v, x = constrained_optimum(cp)
    # only the full cycle nets to zero outflow; break it with unequal amounts
    assert np.array_equal(x, np.zeros(3)) and v == 0.0


def test_settlement_objective_is_settled_value():
    txs = [Transaction(0, 1, 5.0), Transaction(1, 0, 2.0)]
    cp = gen.settlement_problem(txs, [3.0, 0.0], [0.0, 0.0], caps=[10.0, 10.0])
    # paying 5 needs 2 back in the same round: end balance 3 - 5 + 2 = 0
    assert cp.feasible(np.array([1.0, 1.0]))
    assert not cp.feasible(np.array([1.0, 0.0]))
    assert objective(cp.base, np.array([1.0, 1.0])) == -7.0
    with pytest.raises(ValueError):
        gen.settlement_problem([Transaction(1, 1, 2.0)], [0, 0], [0, 0])


def test_settlement_deterministic_and_family_guard():
    spec = GenSpec("settlement", n=4, seed=3)
    a, b = gen.gen_settlement_like(spec), gen.gen_settlement_like(spec)
    assert a.constraints == b.constraints
    assert np.array_equal(a.base.b, b.base.b)
    with pytest.raises(ValueError):
        gen.gen_settlement_like(GenSpec("sk"))
    with pytest.raises(ValueError):
        gen.gen_settlement_like(GenSpec("settlement", n=3, n_parties=1))
