"""Benchmark harness: run solvers on instance sets and score them.

Budgets are iteration (AIM, Hopfield, SB) or sweep (SA, PT) counts, so a
report depends only on the seeds and never on wall time or thread count.
"""

import csv
import dataclasses
import enum
import hashlib
import io
import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import baselines, engine, gen, metrics, transforms, tuner
from .baselines import BaselineConfig
from .engine import SolverConfig
from .errors import ResourceLimitError, UndefinedGapError
from .formats import fmt
from .model import objective
from .registry import BestKnownRegistry

SUMMARY_ID = "*summary*"
ORACLE_MAX_BINARY = 20
ENCODING_BITS = 7
COLUMNS = ["instance", "solver", "kind", "seeds", "samples", "budget", "total_iterations",
           "best_objective", "reference", "success_rate", "optimality_gap",
           "objective_improvement", "improvement_exact", "config_digest"]


@dataclass(frozen=True)
class BenchInstance:
    id: str
    problem: object
    reference: Optional[float] = None


@dataclass(frozen=True)
class SolverSpec:
    """One solver column.  ``kind`` is ``aim`` or a baseline kind."""

    name: str
    kind: str = "aim"
    aim: Optional[SolverConfig] = None
    baseline: Optional[BaselineConfig] = None
    tune: Optional[tuner.TunePlan] = None

    def config_dict(self):
        d = {"kind": self.kind}
        if self.kind == "aim":
            d["aim"] = _plain(self.aim or SolverConfig())
            d["tune"] = _plain(self.tune) if self.tune else None
        else:
            d["baseline"] = _plain(self.baseline or BaselineConfig(kind=self.kind))
        return d

    def digest(self):
        return config_digest(self.config_dict())


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (list, tuple)):
        return [_plain(x) for x in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj


def config_digest(d):
    """SHA-256 of the canonical JSON form of a config mapping."""
    s = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(s.encode()).hexdigest()


@dataclass
class BenchReport:
    rows: list
    summary: list
    warnings: list = field(default_factory=list)
    outcomes: dict = field(default_factory=dict)

    def to_csv(self, include_wall_time=False):
        cols = COLUMNS + (["wall_time"] if include_wall_time else [])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.rows + self.summary:
            w.writerow([_cell(r.get(c)) for c in cols])
        return buf.getvalue()

    def write_csv(self, path, include_wall_time=False):
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(self.to_csv(include_wall_time))

    def row(self, instance, solver):
        for r in self.rows:
            if r["instance"] == instance and r["solver"] == solver:
                return r
        raise KeyError((instance, solver))


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else fmt(v)
    return str(v)


# --------------------------------------------------------------- running

def _mapped(problem):
    if isinstance(problem, transforms.ConstrainedProblem):
        return transforms.constraints_to_qumo(problem)[0]
    return problem


def _encoded(p):
    if p.n_continuous == 0:
        return p
    return transforms.slack_to_qubo(p, "binary", ENCODING_BITS)


def aim_budget(spec):
    cfg = spec.aim or SolverConfig()
    if spec.tune is not None:
        return spec.tune.deep_samples, spec.tune.deep_T
    return cfg.samples, cfg.T


def _run_one(p, spec, seed, workers=1):
    """Per-sample objectives, best assignment and iterations used."""
    if spec.kind == "aim":
        cfg = replace(spec.aim or SolverConfig(), seed=seed)
        if spec.tune is not None:
            plan = replace(spec.tune, seed=seed)
            res = tuner.tune(p, plan, cfg)
            r = res.final
            if r is None:
                raise RuntimeError("every tuned pair failed")
        else:
            r = engine.run(p, cfg, workers=workers)
        return r.per_sample_objectives, np.array(r.best_assignment), r.iterations
    cfg = replace(spec.baseline or BaselineConfig(kind=spec.kind), seed=seed)
    if spec.kind in ("sa", "pt", "sb"):
        q = _encoded(p)
        r = baselines.solve(q, cfg)
        x = np.array(r.best_assignment)
        if q is not p:
            x = transforms.decode(q, x)
        return r.per_sample_objectives, x, r.iterations
    r = baselines.solve(p, cfg)
    return r.per_sample_objectives, np.array(r.best_assignment), r.iterations


def _equalized(spec, samples, T):
    if spec.kind in ("aim", "bruteforce"):
        return spec
    cfg = spec.baseline or BaselineConfig(kind=spec.kind)
    per = cfg.samples * (cfg.replicas if spec.kind == "pt" else 1)
    sweeps = math.ceil(samples * T / per)
    return replace(spec, baseline=replace(cfg, budget=sweeps))


def _oracle_reference(p):
    if p.n_binary > ORACLE_MAX_BINARY or p.n_continuous > baselines.MAX_CONTINUOUS:
        return None
    mode = "grid"
    if p.n_continuous and baselines._convex_inverse(baselines._Split(p).Qcc) is not None:
        mode = "exact"
    try:
        return baselines.brute_force(p, continuous=mode)[1]
    except ResourceLimitError:
        return None


def run_bench(instances, solvers, seeds, registry=None, tol=None, equalize=False,
              threads=1, oracle=True):
    """Run every solver on every instance for every seed and score the results.

    References come from the registry, then the instance, then brute force
    (when small enough).  Better values found by any solver are pushed into
    the registry with provenance.  With ``equalize`` every baseline gets the
    AIM iteration budget.
    """
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("at least one seed is required")
    names = [s.name for s in solvers]
    if len(set(names)) != len(names):
        raise ValueError("solver names must be unique")
    registry = BestKnownRegistry() if registry is None else registry
    aim = next((s for s in solvers if s.kind == "aim"), None)
    if equalize and aim is not None:
        samples, T = aim_budget(aim)
        solvers = [_equalized(s, samples, T) for s in solvers]
    problems = {inst.id: _mapped(inst.problem) for inst in instances}
    jobs = [(inst.id, spec, seed) for inst in instances for spec in solvers for seed in seeds]

    def work(job):
        iid, spec, seed = job
        t0 = time.perf_counter()
        out = _run_one(problems[iid], spec, seed)
        return out + (time.perf_counter() - t0,)

    if threads == 1:
        results = [work(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads or None) as ex:
            results = list(ex.map(work, jobs))

    notes = []
    outcomes = {}
    for (iid, spec, seed), (objs, x, iters, wall) in zip(jobs, results):
        o = outcomes.setdefault((iid, spec.name), {"objs": [], "iters": 0, "wall": 0.0,
                                                    "best": math.inf, "x": None})
        o["objs"].append(np.asarray(objs, dtype=float))
        o["iters"] += int(iters)
        o["wall"] += wall
        f = objective(problems[iid], x)
        if f < o["best"]:
            o["best"], o["x"] = f, x

    rows = []
    for inst in instances:
        iid = inst.id
        p = problems[iid]
        if iid not in registry and inst.reference is not None:
            registry.update(iid, inst.reference, "instance")
        if iid not in registry and oracle:
            ref = _oracle_reference(p)
            if ref is not None:
                registry.update(iid, ref, "oracle:brute_force")
        have_ref = iid in registry
        bests = {s.name: outcomes[(iid, s.name)]["best"] for s in solvers}
        for s in solvers:
            registry.update(iid, bests[s.name], f"bench:{s.name}:seeds={_seeds(seeds)}")
        known = registry.get(iid)
        if not have_ref:
            notes.append(f"{iid}: no reference value; success rate omitted")
            warnings.warn(notes[-1])
        tol_i = tol or metrics.Tolerance.for_reference(known)
        for s in solvers:
            o = outcomes[(iid, s.name)]
            allv = np.concatenate(o["objs"])
            f = o["best"]
            try:
                gap = metrics.optimality_gap(f, known)
            except UndefinedGapError:
                gap = f - known
            rest = [bests[t.name] for t in solvers if t.name != s.name and t.kind != "bruteforce"]
            if rest and s.kind != "bruteforce":
                imp, exact = metrics.improvement_with_flag(f, min(rest), known)
            else:
                imp, exact = float("nan"), None
            budget = _budget_of(s)
            rows.append({
                "instance": iid, "solver": s.name, "kind": s.kind,
                "seeds": _seeds(seeds), "samples": len(allv), "budget": budget,
                "total_iterations": o["iters"], "best_objective": f,
                "reference": known,
                "success_rate": metrics.success_rate(allv, known, tol_i) if have_ref else None,
                "optimality_gap": gap, "objective_improvement": imp,
                "improvement_exact": exact, "config_digest": s.digest(),
                "wall_time": o["wall"],
            })
    summary = [_summary(s, [r for r in rows if r["solver"] == s.name], seeds) for s in solvers]
    return BenchReport(rows, summary, notes, outcomes)


def _budget_of(spec):
    if spec.kind == "aim":
        return aim_budget(spec)[1]
    if spec.kind == "bruteforce":
        return 1
    return (spec.baseline or BaselineConfig(kind=spec.kind)).budget


def _seeds(seeds):
    return ";".join(str(s) for s in seeds)


def _summary(spec, rows, seeds):
    def mean(key):
        v = [r[key] for r in rows if r[key] is not None and not _isnan(r[key])]
        return float(np.mean(v)) if v else None

    return {
        "instance": SUMMARY_ID, "solver": spec.name, "kind": spec.kind,
        "seeds": _seeds(seeds), "samples": sum(r["samples"] for r in rows),
        "budget": _budget_of(spec), "total_iterations": sum(r["total_iterations"] for r in rows),
        "best_objective": None, "reference": None,
        "success_rate": mean("success_rate"), "optimality_gap": mean("optimality_gap"),
        "objective_improvement": mean("objective_improvement"),
        "improvement_exact": None, "config_digest": spec.digest(),
        "wall_time": sum(r["wall_time"] for r in rows),
    }


def _isnan(v):
    return isinstance(v, float) and math.isnan(v)


# ---------------------------------------------------------------- suites

def build_suite(name, count=10, n=None, seed=0, n_continuous=None):
    """Named instance sets for the CLI and the acceptance tests."""
    if name == "planted":
        n = 7 if n is None else n
        out = []
        for k in range(count):
            nc = n_continuous if n_continuous is not None else 1 + k % 3
            spec = gen.GenSpec("planted", n=n, n_continuous=nc, seed=seed * 1000 + k)
            (p, x), = gen.gen_planted_qumo(spec)
            out.append(BenchInstance(f"planted-{seed}-{k}", p, objective(p, x)))
        return out
    if name == "sk":
        n = 12 if n is None else n
        spec = gen.GenSpec("sk", n=n, candidates=max(4 * count, 40), sensitivity_trials=20,
                           count=count, seed=seed)
        return [BenchInstance(f"sk-{seed}-{k}", p) for k, p in enumerate(gen.gen_qubo(spec))]
    if name == "random":
        n = 10 if n is None else n
        return [BenchInstance(f"random-{seed}-{k}",
                              gen.random_qumo(n, (k % 3) if n_continuous is None else n_continuous,
                                              seed=seed * 1000 + k))
                for k in range(count)]
    if name == "settlement":
        n = 3 if n is None else n
        return [BenchInstance(f"settlement-{seed}-{k}",
                              gen.gen_settlement_like(gen.GenSpec("settlement", n=n,
                                                                  seed=seed * 1000 + k)))
                for k in range(count)]
    raise ValueError(f"unknown suite {name!r}")
