import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qumo import baselines, engine, gen
from qumo.baselines import (BaselineConfig, brute_force, exchange_probability, hopfield_run,
                            parallel_tempering, sb_step, simulated_annealing,
                            simulated_bifurcation_run)
from qumo.engine import SolverConfig
from qumo.errors import ResourceLimitError
from qumo.model import Domain, QumoProblem, objective, to_domain

from conftest import random_problem

PM = Domain.PLUS_MINUS_ONE


def sk(n, seed):
    (p,) = gen.gen_qubo(gen.GenSpec("sk", n=n, candidates=10, sensitivity_trials=5, seed=seed))
    return p


# ------------------------------------------------------------------ oracle

def test_config_validation():
    with pytest.raises(ValueError):
        BaselineConfig(kind="ga")
    with pytest.raises(ValueError):
        BaselineConfig(budget=-1)
    with pytest.raises(ValueError):
        BaselineConfig(replicas=0)


def test_brute_force_separable():
    n = 5
    p = QumoProblem(np.zeros((n, n)), np.ones(n), 2.5)
    x, v = brute_force(p)
    assert np.array_equal(x, np.ones(n)) and v == -n + 2.5
    assert not x.flags.writeable


def test_brute_force_hand_example():
    p = QumoProblem([[0, 2], [2, 0]], [1, 0], 0.0)
    x, v = brute_force(p)
    assert np.array_equal(x, [1, 1]) and v == -3.0


def test_brute_force_lexicographic_ties():
    p = QumoProblem(np.zeros((3, 3)), np.zeros(3))
    x, _ = brute_force(p)
    assert np.array_equal(x, np.zeros(3))
    q = QumoProblem(np.zeros((2, 2)), np.zeros(2), kinds=("b", "c"), domain=PM)
    x, _ = brute_force(q)
    assert np.array_equal(x, [-1.0, -1.0])


def test_brute_force_limits():
    with pytest.raises(ResourceLimitError):
        brute_force(QumoProblem(np.zeros((25, 25)), np.zeros(25)))
    with pytest.raises(ResourceLimitError):
        brute_force(QumoProblem(np.zeros((5, 5)), np.zeros(5), kinds=("c",) * 5))


def test_brute_force_matches_naive_grid():
    rng = np.random.default_rng(2)
    for seed in range(4):
        p = random_problem(4, 2, seed=seed)
        g = np.linspace(0, 1, 9)
        best = (np.inf, None)
        for z in itertools.product((0.0, 1.0), repeat=2):
            for u in itertools.product(g, repeat=2):
                x = np.array(z + u)
                f = objective(p, x)
                if f < best[0]:
                    best = (f, x)
        x, v = brute_force(p, grid_resolution=1 / 8)
        assert v == pytest.approx(best[0], abs=1e-12)


def test_brute_force_exact_continuous():
    # strictly convex in the continuous variable, minimiser at 0.3
    Q = np.array([[0.0, 0.0], [0.0, -2.0]])
    p = QumoProblem(Q, [1.0, 0.6], 0.0, kinds=("b", "c"))
    x, v = brute_force(p, continuous="exact")
    assert x == pytest.approx([1.0, 0.3])
    assert v == pytest.approx(-1.0 - 0.09)
    with pytest.raises(ValueError):
        brute_force(random_problem(3, 1, seed=0, scale=0.0), continuous="bogus")


def test_brute_force_returns_planted_point():
    for seed in range(3):
        (p, x), = gen.gen_planted_qumo(gen.GenSpec("planted", n=6, n_continuous=2, seed=seed))
        y, v = brute_force(p)
        assert v == pytest.approx(objective(p, x), abs=1e-9)


# -------------------------------------------------------------- SA and PT

def test_sa_requires_binary():
    with pytest.raises(ValueError):
        simulated_annealing(random_problem(3, 1), BaselineConfig())


def test_sa_zero_budget_returns_initial():
    p = random_problem(6, seed=2)
    r = simulated_annealing(p, BaselineConfig(budget=0, samples=5, seed=3))
    assert np.array_equal(r.per_sample_objectives, r.per_sample_final)
    assert r.iterations == 0


def test_sa_finds_sk_optimum():
    p = sk(12, 1)
    _, opt = brute_force(p)
    hits = 0
    for s in range(100):
        r = simulated_annealing(p, BaselineConfig(budget=300, seed=s))
        hits += abs(r.best_objective - opt) < 1e-9
    assert hits >= 95


def test_zero_temperature_is_descent():
    p = random_problem(10, seed=4)
    prev = None
    for budget in range(1, 8):
        r = simulated_annealing(p, BaselineConfig(budget=budget, seed=1, t_hot=0.0, t_cold=0.0))
        f = r.per_sample_final[0]
        if prev is not None:
            assert f <= prev + 1e-12
        prev = f


def test_debug_energy_bookkeeping():
    p = random_problem(30, seed=5)
    simulated_annealing(p, BaselineConfig(budget=200, samples=4, debug=True))
    parallel_tempering(p, BaselineConfig(kind="pt", budget=50, samples=2, debug=True))


def test_exchange_probability():
    assert exchange_probability(2.0, 1.0, 5.0, 5.0) == 1.0
    assert exchange_probability(2.0, 1.0, 3.0, 5.0) == pytest.approx(np.exp(-2.0))
    assert exchange_probability(2.0, 1.0, 5.0, 3.0) == 1.0


def test_pt_single_replica_is_metropolis():
    p = random_problem(8, seed=6)
    pt = parallel_tempering(p, BaselineConfig(kind="pt", replicas=1, ladder=(0.7,), budget=40,
                                              samples=3, seed=2))
    sa = simulated_annealing(p, BaselineConfig(t_hot=0.7, t_cold=0.7, budget=40, samples=3,
                                               seed=2))
    assert np.array_equal(pt.per_sample_objectives, sa.per_sample_objectives)


def test_pt_vs_sa_paired():
    # equal total sweeps: PT runs R replicas for B sweeps, SA runs R * B sweeps
    problems = gen.gen_qubo(gen.GenSpec("sk", n=16, count=10, select=False, seed=5))
    wins = 0
    for s in range(100):
        p = problems[s % 10]
        a = parallel_tempering(p, BaselineConfig(kind="pt", replicas=4, budget=10, seed=s))
        b = simulated_annealing(p, BaselineConfig(budget=40, seed=s))
        wins += a.best_objective <= b.best_objective + 1e-9
    assert wins >= 50


def test_baselines_deterministic():
    p = random_problem(9, seed=7)
    for kind in ("sa", "pt", "sb"):
        cfg = BaselineConfig(kind=kind, budget=30, samples=4, seed=5)
        a, b = baselines.solve(p, cfg), baselines.solve(p, cfg)
        assert np.array_equal(a.per_sample_objectives, b.per_sample_objectives)
    q = random_problem(6, 2, seed=7)
    cfg = BaselineConfig(kind="hopfield", budget=30, samples=4, seed=5)
    assert np.array_equal(hopfield_run(q, cfg).per_sample_objectives,
                          hopfield_run(q, cfg).per_sample_objectives)


# ----------------------------------------------------------------- Hopfield

def test_hopfield_equals_aim_without_momentum():
    p = random_problem(7, 2, seed=8)
    cfg = BaselineConfig(kind="hopfield", budget=60, samples=10, seed=1, alpha0=0.7, beta=0.4,
                         gain=3.0)
    h = hopfield_run(p, cfg)
    a = engine.run(p, SolverConfig(alpha0=0.7, beta0=0.4, gamma=0.0, T=60, samples=10, seed=1,
                                   nonlinearity="tanh", gain=3.0, schedule="constant"))
    assert np.array_equal(h.per_sample_objectives, a.per_sample_objectives)


def test_hopfield_separable():
    n = 4
    p = QumoProblem(np.zeros((n, n)), np.ones(n))
    r = hopfield_run(p, BaselineConfig(kind="hopfield", budget=50, beta=0.0))
    assert r.best_objective == -n


def test_hopfield_not_better_than_tuned_aim():
    from qumo import tuner
    from qumo.metrics import success_rate
    p = sk(12, 3)
    _, opt = brute_force(p)
    res = tuner.tune(p, tuner.TunePlan(deep_T=300, deep_samples=200, seed=1))
    aim = success_rate(res.final.per_sample_objectives, opt)
    best_h = 0.0
    for a0 in (0.3, 1.0, 3.0):
        for beta in (0.0, 0.1, 1.0):
            r = hopfield_run(p, BaselineConfig(kind="hopfield", budget=300, samples=200, seed=1,
                                               alpha0=a0, beta=beta, gain=3.0))
            best_h = max(best_h, success_rate(r.per_sample_objectives, opt))
    assert best_h <= aim


# ----------------------------------------------------------------- SB

def test_sb_walls_zero_velocity():
    p = sk(10, 2)
    r = simulated_bifurcation_run(p, BaselineConfig(kind="sb", budget=200, samples=8),
                                  return_state=True)
    x, y = r.info["x"], r.info["y"]
    assert np.all(y[np.abs(x) >= 1.0] == 0.0)
    J = np.array([[0.0, 1.0], [1.0, 0.0]])
    x1, y1 = sb_step(np.array([[0.99, 0.2]]), np.array([[5.0, 0.0]]), J, np.zeros(2),
                     1.0, 1.0, 0.5, 0.5)
    assert x1[0, 0] == 1.0 and y1[0, 0] == 0.0


def _sb_trace(x, y, J, steps=20):
    for t in range(steps):
        x, y = sb_step(x, y, J, np.zeros(2), 1.0, 0.0, 0.01 * t, 0.5)
    return x, y


def test_sb_without_coupling_is_decoupled_oscillator():
    # c0 = 0: each coordinate evolves on its own, and the map is odd in the state
    J = np.array([[0.0, 2.0], [2.0, 0.0]])
    x0, y0 = np.array([[0.05, -0.02]]), np.array([[0.01, 0.03]])
    xa, ya = _sb_trace(x0, y0, J)
    xb, yb = _sb_trace(-x0, -y0, J)
    assert np.array_equal(xa, -xb) and np.array_equal(ya, -yb)
    xc, yc = _sb_trace(np.array([[0.05, 0.5]]), np.array([[0.01, -0.2]]), J)
    assert xc[0, 0] == xa[0, 0] and yc[0, 0] == ya[0, 0]


def test_sb_reaches_sk_optimum():
    p = sk(12, 4)
    _, opt = brute_force(p)
    best = np.inf
    c_def = baselines.default_sb_c0(engine._Dynamics(to_domain(p, PM)).Q)
    for scale in (0.5, 1.0, 2.0):
        r = simulated_bifurcation_run(p, BaselineConfig(kind="sb", budget=500, samples=1000,
                                                        seed=1, c0=c_def * scale))
        best = min(best, r.best_objective)
    assert best == pytest.approx(opt, abs=1e-9)


def test_sb_requires_binary():
    with pytest.raises(ValueError):
        simulated_bifurcation_run(random_problem(3, 1), BaselineConfig(kind="sb"))


@settings(max_examples=30)
@given(st.integers(1, 10), st.integers(0, 2**32 - 1), st.sampled_from(["sa", "pt", "sb"]))
def test_baseline_results_consistent(n, seed, kind):
    p = random_problem(n, 0, seed)
    r = baselines.solve(p, BaselineConfig(kind=kind, budget=20, samples=3, seed=seed, replicas=3))
    assert r.best_objective == pytest.approx(objective(p, r.best_assignment), abs=1e-9)
    assert r.best_objective == r.per_sample_objectives.min()
    _, opt = brute_force(p)
    assert r.best_objective >= opt - 1e-9
