import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qumo import baselines
from qumo.errors import ResourceLimitError
from qumo.model import Domain, Kind, QumoProblem, domain_shift, objective, objective_batch
from qumo.transforms import (ConstrainedProblem, LinearConstraint, PenaltyConfig, completed_bounds,
                             constraints_to_qumo, cut_value, decode, edge_matrix,
                             encoding_weights, greedy_fix_preprocess, impact_scores,
                             maxcut_to_ising, min_violation, optimal_slacks,
                             qubo_ising_roundtrip, slack_to_qubo)

from conftest import random_problem

PM = Domain.PLUS_MINUS_ONE
ZO = Domain.ZERO_ONE


def all_binary(n, lo=0.0, hi=1.0):
    return lo + (hi - lo) * np.array(list(itertools.product((0.0, 1.0), repeat=n)))


# ------------------------------------------------------------ constraints

def test_linear_constraint_validation_and_sense():
    with pytest.raises(ValueError):
        LinearConstraint({0: 1.0}, -math.inf, math.inf)
    with pytest.raises(ValueError):
        LinearConstraint({0: 1.0}, 2.0, 1.0)
    with pytest.raises(ValueError):
        LinearConstraint({0: math.inf}, 0.0, 1.0)
    assert LinearConstraint({0: 1}, 1, 1).sense == "=="
    assert LinearConstraint({0: 1}, hi=1).sense == "<="
    assert LinearConstraint({0: 1}, lo=1).sense == ">="
    assert LinearConstraint({0: 1}, 0, 1).sense == "range"


def test_constrained_problem_checks_indices():
    base = QumoProblem(np.zeros((2, 2)), np.zeros(2))
    with pytest.raises(ValueError):
        ConstrainedProblem(base, [LinearConstraint({2: 1.0}, 0, 1)])


def test_penalty_config_validation():
    with pytest.raises(ValueError):
        PenaltyConfig(P0=0)
    with pytest.raises(ValueError):
        PenaltyConfig(mode="adaptive")


def test_bound_completion():
    c = LinearConstraint({0: 2.0, 1: -3.0}, hi=1.0)
    assert completed_bounds(c, 2) == (-3.0, 1.0)
    c = LinearConstraint({0: 2.0, 1: -3.0}, lo=0.0)
    assert completed_bounds(c, 2) == (0.0, 2.0)


def test_min_violation_enumerated():
    c = LinearConstraint({0: 3.0, 1: 5.0}, 0.0, 4.0)
    # values 0, 3, 5, 8 -> violations 1 and 4
    assert min_violation(c, 0.0, 4.0, (Kind.BINARY,) * 2) == 1.0


def test_toy_problem_mapping():
    # min a x1 x2 + b x3 s.t. 0 <= c x1 + d x3 <= 1
    a, bb, c, d = 2.0, -1.0, 1.0, 1.0
    Q = np.zeros((3, 3))
    Q[0, 1] = Q[1, 0] = -a
    base = QumoProblem(Q, [0.0, 0.0, -bb])
    cp = ConstrainedProblem(base, [LinearConstraint({0: c, 2: d}, 0.0, 1.0)])
    P0 = 3.0
    q, sm = constraints_to_qumo(cp, PenaltyConfig(P0, "fixed"))
    assert q.n == 4 and q.kinds[3] is Kind.CONTINUOUS and sm.slack == (3,)
    rng = np.random.default_rng(0)
    for x in all_binary(3):
        s = rng.random()
        z = np.append(x, s)
        want = a * x[0] * x[1] + bb * x[2] + P0 * (c * x[0] + d * x[2] + s - 1.0) ** 2
        assert objective(q, z) == pytest.approx(want, abs=1e-12)


def test_empty_constraint_penalty():
    base = QumoProblem(np.zeros((1, 1)), np.zeros(1))
    cp = ConstrainedProblem(base, [LinearConstraint({}, 0.0, 1.0)])
    q, _ = constraints_to_qumo(cp, PenaltyConfig(1.0, "fixed"))
    f = [objective(q, [0.0, s]) for s in np.linspace(0, 1, 11)]
    assert np.argmin(f) == 10 and f[10] == 0.0


def test_equality_constraint_has_no_slack():
    base = QumoProblem(np.zeros((2, 2)), np.ones(2))
    cp = ConstrainedProblem(base, [LinearConstraint({0: 1, 1: 1}, 1, 1)])
    q, sm = constraints_to_qumo(cp)
    assert q.n == 2 and sm.slack == (None,)
    x, v = baselines.brute_force(q)
    assert x.sum() == 1 and v == -1.0


def test_mapping_requires_zero_one():
    base = QumoProblem(np.zeros((1, 1)), np.zeros(1), domain=PM)
    with pytest.raises(ValueError):
        constraints_to_qumo(ConstrainedProblem(base, [LinearConstraint({0: 1.0}, 0, 1)]))


def random_constrained(seed, n=6, m=2):
    """Random constraints built around a random point, so the problem is feasible."""
    rng = np.random.default_rng(seed)
    base = random_problem(n, 0, seed, scale=2.0)
    x0 = (rng.random(n) < 0.5).astype(float)
    cons = []
    for _ in range(m):
        idx = rng.choice(n, size=rng.integers(2, n + 1), replace=False)
        coeffs = {int(i): float(rng.choice([-5, -4, -3, -2, -1, 1, 2, 3, 4, 5])) for i in idx}
        v = sum(a * x0[i] for i, a in coeffs.items())
        lo = v - float(rng.integers(0, 3))
        hi = v + float(rng.integers(0, 3))
        r = rng.random()
        if r < 0.2:
            lo = -math.inf
        elif r < 0.4:
            hi = math.inf
        cons.append(LinearConstraint(coeffs, lo, hi))
    return ConstrainedProblem(base, cons)


def constrained_optimum(cp):
    X = all_binary(cp.base.n)
    feas = np.array([cp.feasible(x) for x in X])
    v = objective_batch(cp.base, X)
    return v[feas].min()


@pytest.mark.parametrize("seed", range(20))
def test_auto_penalty_exact(seed):
    cp = random_constrained(seed)
    q, sm = constraints_to_qumo(cp)
    x, v = baselines.brute_force(q, continuous="exact")
    assert cp.feasible(sm.strip(x))
    assert v == pytest.approx(constrained_optimum(cp), rel=1e-9, abs=1e-7)


def test_optimal_slacks_zero_penalty():
    cp = random_constrained(3)
    q, sm = constraints_to_qumo(cp)
    for x in all_binary(6):
        if cp.feasible(x):
            z = optimal_slacks(cp, sm, x)
            assert objective(q, z) == pytest.approx(objective(cp.base, x), abs=1e-7)


# -------------------------------------------------------------- encodings

def test_encoding_weights():
    assert np.array_equal(encoding_weights("binary", 1), [1.0])
    assert np.allclose(encoding_weights("unary", 3), np.full(8, 1 / 8))
    assert np.allclose(encoding_weights("binary", 3), [1 / 7, 2 / 7, 4 / 7])
    with pytest.raises(ValueError):
        encoding_weights("binary", 0)
    with pytest.raises(ResourceLimitError):
        encoding_weights("binary", 17)
    with pytest.raises(ValueError):
        encoding_weights("gray", 2)


def test_slack_to_qubo_sizes():
    p = random_problem(3, 1, seed=2)
    assert slack_to_qubo(p, "binary", 1).n == 3
    u = slack_to_qubo(p, "unary", 3)
    assert u.n == 2 + 8 and u.n_continuous == 0
    assert slack_to_qubo(p, "binary", 5).n == 2 + 5
    with pytest.raises(ValueError):
        slack_to_qubo(random_problem(3, 0), "binary", 2)


@pytest.mark.parametrize("encoding", ["binary", "unary"])
def test_encoded_objective_agrees(encoding):
    p = random_problem(4, 2, seed=5)
    e = slack_to_qubo(p, encoding, 2)
    rng = np.random.default_rng(1)
    for _ in range(50):
        z = (rng.random(e.n) < 0.5).astype(float)
        assert objective(e, z) == pytest.approx(objective(p, decode(e, z)), abs=1e-10)


def test_encoded_minimum_bounds_qumo_minimum():
    # toy problem with the optimal slack representable at 7 bits
    base = QumoProblem(np.zeros((2, 2)), [1.0, 1.0])
    cp = ConstrainedProblem(base, [LinearConstraint({0: 1.0, 1: 1.0}, 0.0, 1.0)])
    q, _ = constraints_to_qumo(cp)
    _, v_qumo = baselines.brute_force(q, continuous="exact")
    e = slack_to_qubo(q, "binary", 3)
    _, v_qubo = baselines.brute_force(e)
    assert v_qubo >= v_qumo - 1e-9
    assert v_qubo == pytest.approx(v_qumo, abs=1e-9)


# ----------------------------------------------------------- QUBO / Ising

def test_ising_zero_map():
    p = QumoProblem(np.zeros((3, 3)), np.zeros(3), 0.0, domain=PM)
    q = qubo_ising_roundtrip(p)
    assert not np.any(q.Q) and not np.any(q.b) and q.c0 == 0.0


def test_ising_three_var_enumeration():
    p = random_problem(3, domain=PM, seed=7)
    q = qubo_ising_roundtrip(p)
    assert q.domain is ZO
    for x in all_binary(3):
        assert objective(q, x) == pytest.approx(objective(p, 2 * x - 1), abs=1e-12)


def test_ising_roundtrip_and_domain_shift_agree():
    p = random_problem(5, seed=9)
    q = qubo_ising_roundtrip(p)
    back = qubo_ising_roundtrip(q)
    assert np.allclose(back.Q, p.Q, atol=1e-12) and np.allclose(back.b, p.b, atol=1e-12)
    assert back.c0 == pytest.approx(p.c0, abs=1e-12)
    d = domain_shift(p, PM)
    assert np.allclose(q.Q, d.Q, atol=1e-12) and np.allclose(q.b, d.b, atol=1e-12)
    assert q.c0 == pytest.approx(d.c0, abs=1e-12)
    with pytest.raises(ValueError):
        qubo_ising_roundtrip(random_problem(3, 1))


# ---------------------------------------------------------------- max-cut

def test_single_edge_cut():
    p = maxcut_to_ising([(0, 1, 1.0)], 2)
    assert objective(p, [1, -1]) == -1.0
    assert objective(p, [1, 1]) == 0.0


def test_triangle_max_cut():
    p = maxcut_to_ising([(0, 1, 1), (1, 2, 1), (0, 2, 1)], 3)
    _, v = baselines.brute_force(p)
    assert v == -2.0


def test_random_graph_cut_matches_objective():
    rng = np.random.default_rng(3)
    n = 10
    edges = [(i, j, float(rng.integers(1, 5))) for i in range(n) for j in range(i + 1, n)
             if rng.random() < 0.4]
    p = maxcut_to_ising(edges, n)
    C = edge_matrix(edges, n)
    Y = all_binary(n, -1.0, 1.0)
    cuts = np.array([cut_value(C, y) for y in Y])
    assert np.allclose(-objective_batch(p, Y), cuts)
    _, v = baselines.brute_force(p)
    assert -v == cuts.max()


def test_edge_matrix_rules():
    C = edge_matrix([(0, 1, 1.0), (1, 0, 2.0)], 2)
    assert C[0, 1] == 3.0
    with pytest.raises(ValueError):
        edge_matrix([(1, 1, 1.0)], 2)
    with pytest.raises(ValueError):
        edge_matrix([(0, 2, 1.0)], 2)


# ----------------------------------------------------------- greedy fixing

def test_greedy_k_zero():
    p = random_problem(5, 1, seed=1)
    (sub,) = greedy_fix_preprocess(p, 0)
    assert sub.problem is p


def test_greedy_limits():
    p = random_problem(4, seed=1)
    with pytest.raises(ResourceLimitError):
        greedy_fix_preprocess(random_problem(22, seed=1), 21)
    with pytest.raises(ValueError):
        greedy_fix_preprocess(p, 5)
    with pytest.raises(ValueError):
        greedy_fix_preprocess(p, -1)


def test_greedy_picks_highest_impact():
    p = random_problem(6, seed=4)
    subs = greedy_fix_preprocess(p, 2)
    top = set(np.argsort(-impact_scores(p))[:2].tolist())
    assert set(subs[0].fixed) == top


@pytest.mark.parametrize("k", [2, 8])
def test_greedy_matches_global_optimum(k):
    p = random_problem(8, seed=11)
    _, opt = baselines.brute_force(p)
    subs = greedy_fix_preprocess(p, k)
    assert len(subs) == 2 ** k
    best = []
    for s in subs:
        if s.problem.n == 0:
            best.append(s.problem.c0)
            continue
        x, v = baselines.brute_force(s.problem)
        assert objective(p, s.expand(x)) == pytest.approx(v, abs=1e-10)
        best.append(v)
    assert min(best) == pytest.approx(opt, abs=1e-10)


@settings(max_examples=25)
@given(st.integers(2, 7), st.integers(0, 3), st.integers(0, 2**32 - 1))
def test_greedy_partitions_search_space(n, k, seed):
    p = random_problem(n, 0, seed)
    k = min(k, n)
    subs = greedy_fix_preprocess(p, k)
    seen = set()
    for s in subs:
        m = len(s.free)
        Z = all_binary(m) if m else np.zeros((1, 0))
        for z in Z:
            x = s.expand(z)
            f = objective(s.problem, z) if m else s.problem.c0
            assert f == pytest.approx(objective(p, x), abs=1e-10)
            seen.add(tuple(x))
    assert len(seen) == 2 ** n


@settings(max_examples=50)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_transforms_preserve_objective(n, seed):
    p = random_problem(n, 0, seed)
    q = qubo_ising_roundtrip(p)
    X = all_binary(n) if n <= 8 else np.random.default_rng(seed).integers(0, 2, (256, n)).astype(float)
    assert np.allclose(objective_batch(p, X), objective_batch(q, 2 * X - 1), rtol=1e-10, atol=1e-10)


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.integers(3, 8), st.integers(1, 3))
def test_auto_penalty_minimizer_is_feasible(seed, n, m):
    cp = random_constrained(seed, n, m)
    q, sm = constraints_to_qumo(cp)
    x, v = baselines.brute_force(q, continuous="exact")
    assert cp.feasible(sm.strip(x), tol=1e-6)
    assert v == pytest.approx(constrained_optimum(cp), rel=1e-9, abs=1e-6)
