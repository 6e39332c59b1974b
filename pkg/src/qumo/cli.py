"""Command-line interface: ``qumo solve|tune|generate|convert|bench|oracle``.

Exit codes: 0 success, 1 solver or numeric failure, 2 usage or parse error.
"""

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import baselines, bench, engine, formats, gen, hwsim, metrics, transforms, tuner
from .errors import NumericFailure, ParseError, ResourceLimitError
from .model import Domain, objective, to_domain
from .registry import BestKnownRegistry

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _seed_list(text):
    """``1..10``, ``1,2,5`` or a single seed."""
    out = []
    for part in text.split(","):
        if ".." in part:
            a, b = part.split("..", 1)
            lo, hi = _seed(a), _seed(b)
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty seed range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(_seed(part))
    return out


def _load(path, fmt_name=None):
    obj = formats.read_problem(path, fmt_name)
    if isinstance(obj, transforms.ConstrainedProblem):
        return transforms.constraints_to_qumo(obj)[0], obj
    return obj, None


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _vector(x):
    return " ".join(formats.fmt(v) for v in np.asarray(x))


def _aim_args(sp):
    sp.add_argument("--alpha0", type=float, default=1.0)
    sp.add_argument("--beta0", type=float, default=1.0)
    sp.add_argument("--gamma", type=float, default=0.9)
    sp.add_argument("--dt", type=float, default=1.0)
    sp.add_argument("--T", type=int, default=1000)
    sp.add_argument("--samples", type=int, default=100)
    sp.add_argument("--seed", type=_seed, default=0)
    sp.add_argument("--momentum", choices=[m.value for m in engine.Momentum],
                    default=engine.Momentum.HEAVY_BALL.value)
    sp.add_argument("--nonlinearity", choices=[m.value for m in engine.Nonlinearity],
                    default=engine.Nonlinearity.SIGN.value)
    sp.add_argument("--gain", type=float, default=1.0)
    sp.add_argument("--hardware", action="store_true",
                    help="emulate hardware noise, tanh transfer and zero momentum")
    sp.add_argument("--noise-sigma", type=float, default=None)


def _aim_config(a, p):
    cfg = engine.SolverConfig(alpha0=a.alpha0, beta0=a.beta0, gamma=a.gamma, dt=a.dt, T=a.T,
                              momentum=a.momentum, nonlinearity=a.nonlinearity, gain=a.gain,
                              samples=a.samples, seed=a.seed)
    if a.hardware:
        extra = {} if a.noise_sigma is None else {"sigma": a.noise_sigma}
        cfg = hwsim.hardware_config(cfg, p, **extra)
    elif a.noise_sigma is not None:
        cfg = replace(cfg, noise=hwsim.NoiseConfig(sigma=a.noise_sigma))
    return cfg


def _plan_args(sp):
    sp.add_argument("--alpha-bounds", type=float, nargs=2, default=(1e-2, 1e1))
    sp.add_argument("--beta-bounds", type=float, nargs=2, default=(1e-2, 1e1))
    sp.add_argument("--grid", type=int, nargs=2, default=(8, 8))
    sp.add_argument("--explore-T", type=int, default=200)
    sp.add_argument("--explore-samples", type=int, default=16)
    sp.add_argument("--top-k", type=int, default=4)
    sp.add_argument("--deep-T", type=int, default=2000)
    sp.add_argument("--deep-samples", type=int, default=256)
    sp.add_argument("--max-expansions", type=int, default=2)


def _plan(a, seed):
    return tuner.TunePlan(tuple(a.alpha_bounds), tuple(a.beta_bounds), tuple(a.grid),
                          a.explore_T, a.explore_samples, a.top_k, a.deep_T, a.deep_samples,
                          a.max_expansions, seed)


def build_parser():
    ap = argparse.ArgumentParser(prog="qumo", description="AIM solver for mixed binary/continuous QUMO problems")
    ap.add_argument("--threads", type=int, default=1, help="worker threads (0 = all cores); never changes results")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="run a solver on one problem file")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--format", choices=("native", "gset"), default=None)
    sp.add_argument("--solver", choices=("aim", "sa", "pt", "hopfield", "sb"), default="aim")
    sp.add_argument("--budget", type=int, default=1000, help="sweeps/iterations for baselines")
    sp.add_argument("--out", default=None)
    sp.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    _aim_args(sp)

    sp = sub.add_parser("tune", help="two-phase (alpha0, beta0) search")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--format", choices=("native", "gset"), default=None)
    sp.add_argument("--out", default=None)
    _aim_args(sp)
    _plan_args(sp)

    sp = sub.add_parser("generate", help="write generated instances in native format")
    sp.add_argument("--family", required=True,
                    choices=("sk", "three_regular", "planted", "settlement", "random"))
    sp.add_argument("--n", type=int, default=8)
    sp.add_argument("--n-continuous", type=int, default=0)
    sp.add_argument("--bits", type=int, default=7)
    sp.add_argument("--candidates", type=int, default=1000)
    sp.add_argument("--trials", type=int, default=50)
    sp.add_argument("--count", type=int, default=1)
    sp.add_argument("--parties", type=int, default=None)
    sp.add_argument("--seed", type=_seed, default=0)
    sp.add_argument("--out", required=True, help="output file, or prefix when --count > 1")

    sp = sub.add_parser("convert", help="convert between formats and problem forms")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--format", choices=("native", "gset"), default=None)
    sp.add_argument("--to", choices=("native", "qumo", "qubo", "zero_one", "plus_minus_one"),
                    default="native")
    sp.add_argument("--encoding", choices=("binary", "unary"), default="binary")
    sp.add_argument("--bits", type=int, default=7)
    sp.add_argument("--out", default=None)

    sp = sub.add_parser("bench", help="benchmark solvers and write a CSV report")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--suite", choices=("planted", "sk", "random", "settlement"))
    src.add_argument("--in", dest="inputs", nargs="+")
    sp.add_argument("--count", type=int, default=10)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--suite-seed", type=_seed, default=0)
    sp.add_argument("--solvers", default="aim,sa")
    sp.add_argument("--seeds", type=_seed_list, default=[0])
    sp.add_argument("--alpha0", type=float, default=1.0)
    sp.add_argument("--beta0", type=float, default=0.1)
    sp.add_argument("--gamma", type=float, default=0.9)
    sp.add_argument("--T", type=int, default=1000)
    sp.add_argument("--samples", type=int, default=100)
    sp.add_argument("--budget", type=int, default=None, help="baseline sweeps/iterations")
    sp.add_argument("--tune", action="store_true", help="tune AIM per instance")
    sp.add_argument("--equalize", action="store_true")
    sp.add_argument("--tol-rel", type=float, default=None)
    sp.add_argument("--tol-abs", type=float, default=None)
    sp.add_argument("--registry", default=None, help="JSON best-known registry to read and update")
    sp.add_argument("--wall-time", action="store_true", help="add a wall_time column")
    sp.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--out", default=None)

    sp = sub.add_parser("oracle", help="exact optimum by enumeration")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--format", choices=("native", "gset"), default=None)
    sp.add_argument("--resolution", type=int, default=128, help="grid steps per continuous variable")
    sp.add_argument("--exact", action="store_true", help="exact continuous minimum (convex blocks)")
    return ap


def cmd_solve(a):
    p, _ = _load(a.input, a.format)
    if a.solver == "aim":
        r = engine.run(p, _aim_config(a, p), workers=a.threads)
    else:
        q = p if a.solver == "hopfield" or p.n_continuous == 0 else transforms.slack_to_qubo(p)
        cfg = baselines.BaselineConfig(kind=a.solver, budget=a.budget, samples=a.samples, seed=a.seed)
        r = baselines.solve(q, cfg)
        if q is not p:
            x = transforms.decode(q, r.best_assignment)
            r = replace(r, best_assignment=x, best_objective=objective(p, x))
    text = (f"best_objective {formats.fmt(r.best_objective)}\n"
            f"best_iteration {r.best_iteration}\n"
            f"assignment {_vector(r.best_assignment)}\n")
    _emit(text, a.out)
    return EXIT_OK


def cmd_tune(a):
    p, _ = _load(a.input, a.format)
    base = _aim_config(a, p)
    res = tuner.tune(p, _plan(a, a.seed), base)
    if res.final is None:
        print("every tuned pair failed", file=sys.stderr)
        return EXIT_FAIL
    al, be = res.best_pair
    text = (f"alpha0 {formats.fmt(al)}\nbeta0 {formats.fmt(be)}\n"
            f"best_objective {formats.fmt(res.best_objective)}\n"
            f"expansions {len(res.history)}{' (capped)' if res.capped else ''}\n"
            f"assignment {_vector(res.final.best_assignment)}\n")
    _emit(text, a.out)
    return EXIT_OK


def cmd_generate(a):
    fam = a.family
    items = []
    if fam in ("sk", "three_regular"):
        spec = gen.GenSpec(fam, n=a.n, bits=a.bits, candidates=a.candidates,
                           sensitivity_trials=a.trials, count=a.count, seed=a.seed,
                           select=a.n <= baselines.MAX_BINARY)
        items = gen.gen_qubo(spec)
    elif fam == "planted":
        spec = gen.GenSpec(fam, n=a.n, n_continuous=a.n_continuous, bits=a.bits,
                           count=a.count, seed=a.seed)
        for p, x in gen.gen_planted_qumo(spec):
            meta = dict(p.meta, planted=x.tolist())
            items.append(type(p)(p.Q, p.b, p.c0, p.kinds, p.domain, meta))
    elif fam == "settlement":
        for k in range(a.count):
            spec = gen.GenSpec(fam, n=a.n, seed=a.seed + k, n_parties=a.parties)
            items.append(gen.gen_settlement_like(spec))
    else:
        items = [gen.random_qumo(a.n, a.n_continuous, a.bits, a.seed + k) for k in range(a.count)]
    paths = [a.out] if len(items) == 1 else [f"{a.out}_{k}.qumo" for k in range(len(items))]
    for path, item in zip(paths, items):
        formats.write_native(path, item)
        print(path)
    return EXIT_OK


def cmd_convert(a):
    obj = formats.read_problem(a.input, a.format)
    if isinstance(obj, transforms.ConstrainedProblem) and a.to != "native":
        obj = transforms.constraints_to_qumo(obj)[0]
    if a.to == "qubo":
        if obj.n_continuous:
            obj = transforms.slack_to_qubo(obj, a.encoding, a.bits)
        obj = to_domain(obj, Domain.ZERO_ONE)
    elif a.to in ("zero_one", "plus_minus_one"):
        obj = to_domain(obj, Domain(a.to))
    _emit(formats.dumps_native(obj), a.out)
    return EXIT_OK


def cmd_bench(a):
    if a.suite:
        instances = bench.build_suite(a.suite, a.count, a.n, a.suite_seed)
    else:
        instances = [bench.BenchInstance(os.path.basename(path), formats.read_problem(path))
                     for path in a.inputs]
    aim_cfg = engine.SolverConfig(alpha0=a.alpha0, beta0=a.beta0, gamma=a.gamma, T=a.T,
                                  samples=a.samples)
    plan = tuner.TunePlan(deep_T=a.T, deep_samples=a.samples) if a.tune else None
    specs = []
    for name in [s.strip() for s in a.solvers.split(",") if s.strip()]:
        if name == "aim":
            specs.append(bench.SolverSpec("aim", "aim", aim_cfg, tune=plan))
        elif name in ("sa", "pt", "hopfield", "sb", "bruteforce"):
            cfg = baselines.BaselineConfig(kind=name, budget=a.budget if a.budget is not None else a.T,
                                           samples=a.samples if name != "pt" else max(1, a.samples // 8))
            specs.append(bench.SolverSpec(name, name, baseline=cfg))
        else:
            raise argparse.ArgumentTypeError(f"unknown solver {name!r}")
    tol = None
    if a.tol_rel is not None or a.tol_abs is not None:
        tol = metrics.Tolerance(a.tol_abs or 0.0, 0.005 if a.tol_rel is None else a.tol_rel)
    reg = BestKnownRegistry()
    if a.registry and os.path.exists(a.registry):
        reg = BestKnownRegistry.load(a.registry)
    report = bench.run_bench(instances, specs, a.seeds, registry=reg, tol=tol,
                             equalize=a.equalize, threads=a.threads)
    if a.registry:
        reg.save(a.registry)
    _emit(report.to_csv(a.wall_time), a.out)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_oracle(a):
    p, _ = _load(a.input, a.format)
    x, v = baselines.brute_force(p, 1.0 / a.resolution, "exact" if a.exact else "grid")
    _emit(f"optimum {formats.fmt(v)}\nassignment {_vector(x)}\n", None)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "tune": cmd_tune, "generate": cmd_generate,
            "convert": cmd_convert, "bench": cmd_bench, "oracle": cmd_oracle}


def main(argv=None):
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return COMMANDS[a.command](a)
    except (ParseError, FileNotFoundError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericFailure, ResourceLimitError, RuntimeError, ArithmeticError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
