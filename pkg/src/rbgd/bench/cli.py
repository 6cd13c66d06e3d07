"""Command-line experiment harness.

    rbgd run CONFIG.toml|CONFIG.json [--out DIR] [--jobs N] [--no-timing] [--seed-override S]
    rbgd reproduce {table1,table2,fig-sensing} [--scale desk|paper] [--out DIR] ...

Exit codes: 0 when every cell converged, 1 when some cell did not, 2 on a
configuration error.
"""
import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import List

from ..manifolds import FixedRank, Stiefel
from ..numerics import make_rng
from ..problems import NepvProblem, generate_sensing
from ..solvers import METHODS, STOCHASTIC, SolverConfig, check_compatible, normalize_method, run
from . import reference

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

# Default hyperparameters of the reference experiments.
NEPV_DEFAULTS = {"alpha0": 0.5, "rho": 0.5, "gamma": 1.0}
SENSING_DEFAULTS = {"alpha0": 0.1, "rho": 0.5, "gamma": 30.0}
GRAD_TOL = 1e-4
BETA = 10.0
SENSING_N = 100
# Starting points for sensing come from a stream disjoint from the data stream.
SENSING_X0_OFFSET = 1000
FVAL_RTOL = 1e-3
ITER_BAND = 3.0

ALL_METHODS = ["RSD", "RSD_ADA", "R_RBGD", "P_RBGD", "P_RBGD_C"]
DISPLAY = {"RSD": "RSD", "RSD_ADA": "RSD-Ada", "R_RBGD": "R-RBGD", "P_RBGD": "P-RBGD",
           "P_RBGD_C": "P-RBGD-C", "S_R_RBGD": "S-R-RBGD", "S_P_RBGD": "S-P-RBGD"}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    problem: dict
    methods: List[dict]
    seeds: List[int]
    output_dir: str = "rbgd-out"
    name: str = "run"
    jobs: int = 1
    timing: bool = True
    reference_table: str = None

    def validate(self):
        kind = self.problem.get("kind")
        if kind not in ("nepv", "sensing"):
            raise ConfigError(f"problem.kind must be 'nepv' or 'sensing', got {kind!r}")
        need = ("m", "p") if kind == "nepv" else ("m", "r")
        for k in need:
            if not isinstance(self.problem.get(k), int) or self.problem[k] < 1:
                raise ConfigError(f"problem.{k} must be a positive integer")
        if kind == "nepv" and self.problem["p"] > self.problem["m"]:
            raise ConfigError("nepv needs p <= m")
        if kind == "sensing" and self.problem["r"] > self.problem["m"]:
            raise ConfigError("sensing needs r <= m")
        if not self.methods:
            raise ConfigError("at least one method is required")
        if not self.seeds or not all(isinstance(s, int) and s >= 0 for s in self.seeds):
            raise ConfigError("seeds must be a non-empty list of non-negative integers")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        manifold = build_manifold(self.problem)
        for spec in self.methods:
            try:
                if normalize_method(str(spec.get("method", ""))) in STOCHASTIC \
                        and not manifold.compact:
                    raise ValueError(f"stochastic methods need a compact manifold, "
                                     f"not {manifold.tag}")
                cfg = solver_config(self.problem, spec, self.seeds[0], self.timing)
                check_compatible(cfg, manifold)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"method {spec.get('method')!r}: {exc}") from exc
        return self


def _problem_defaults(problem):
    return NEPV_DEFAULTS if problem["kind"] == "nepv" else SENSING_DEFAULTS


def solver_config(problem, spec, seed, timing=True):
    known = {f.name for f in fields(SolverConfig)}
    unknown = set(spec) - known
    if unknown:
        raise ValueError(f"unknown solver fields {sorted(unknown)}")
    if "method" not in spec:
        raise ValueError("each method entry needs a 'method' name")
    kw = dict(_problem_defaults(problem))
    kw["grad_tol"] = GRAD_TOL
    kw.update(spec)
    kw["method"] = normalize_method(kw["method"])
    if kw["method"] in ("RSD", "RSD_ADA"):
        kw["gamma"] = 0.0
    kw["seed"] = seed
    kw["record_timing"] = timing
    return SolverConfig(**kw)


def build_manifold(problem):
    if problem["kind"] == "nepv":
        return Stiefel(problem["m"], problem["p"])
    m, r = problem["m"], problem["r"]
    if problem.get("manifold", "fixed_rank") == "stiefel":
        return Stiefel(m, r)
    return FixedRank(m, r, r)


def build_problem(problem, seed):
    if problem["kind"] == "nepv":
        return NepvProblem(problem["m"], problem["p"], problem.get("beta", BETA))
    return generate_sensing(problem["m"], problem["r"], problem.get("N", SENSING_N), seed)


def start_point(problem, manifold, seed):
    off = SENSING_X0_OFFSET if problem["kind"] == "sensing" else 0
    return manifold.random_point(make_rng(seed + off))


def run_cell(problem, spec, seed, timing=True):
    """Run one (method, seed) cell; returns the report (picklable)."""
    cfg = solver_config(problem, spec, seed, timing)
    manifold = build_manifold(problem)
    prob = build_problem(problem, seed)
    x0 = start_point(problem, manifold, seed)
    report = run(prob, manifold, cfg, x0=x0)
    summary = report.summary()
    summary["initial_F"] = report.records[0].F if report.records else None
    if problem["kind"] == "sensing":
        summary["recovery_error"] = prob.recovery_error(report.final_point)
    return cfg.method, seed, summary, report.csv_text(timing)


def _atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell_key(problem):
    if problem["kind"] == "nepv":
        return (problem["m"], problem["p"])
    return (problem["m"], problem["r"])


def compare_cell(table, key, rows):
    """Pass/fail lines against the reference values of one table cell."""
    if table not in reference.TABLES or key not in reference.TABLES[table]:
        return []
    ref_f = float(reference.reference_fval(table, *key))
    out = []
    for r in rows:
        meth = r["method"]
        fv = r["final_F"]
        ok_f = fv is not None and abs(fv - ref_f) <= FVAL_RTOL * abs(ref_f)
        ref_it = reference.reference_iters(table, *key, meth) if meth in ALL_METHODS else None
        ok_it = ref_it is not None and ref_it / ITER_BAND <= r["iterations"] <= ref_it * ITER_BAND
        out.append({"method": meth, "seed": r["seed"], "ref_fval": reference.TABLES[table][key][meth][0]
                    if meth in ALL_METHODS else None, "fval_ok": ok_f, "ref_iter": ref_it,
                    "iter_in_band": ok_it})
    return out


def format_table(title, rows, comparison=()):
    cmp = {(c["method"], c["seed"]): c for c in comparison}
    head = f"{'Solver':<10}{'seed':>5}  {'Fval':>12}  {'||grad||':>10}  {'Iter':>6}  {'Time':>8}  status"
    lines = [title, head, "-" * len(head)]
    for r in rows:
        gn = r["final_grad_norm"]
        t = r["wall_s"]
        line = (f"{DISPLAY.get(r['method'], r['method']):<10}{r['seed']:>5}  "
                f"{r['final_F']:>12.4e}  {'-' if gn is None else format(gn, '.4e'):>10}  "
                f"{r['iterations']:>6}  {'-' if not t else format(t, '.2f'):>8}  {r['status']}")
        c = cmp.get((r["method"], r["seed"]))
        if c:
            line += (f"  ref {c['ref_fval']} {'PASS' if c['fval_ok'] else 'FAIL'}"
                     f"  iter-ref {c['ref_iter']} {'in' if c['iter_in_band'] else 'OUT OF'} band")
        lines.append(line)
    return "\n".join(lines) + "\n"


def execute(exp, out_dir, jobs=1, echo=print):
    """Run every cell of ``exp``; write CSVs, report JSON and table. Returns the exit code."""
    cells = [(spec, seed) for spec in exp.methods for seed in exp.seeds]
    results = {}
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = {pool.submit(run_cell, exp.problem, s, seed, exp.timing): i
                    for i, (s, seed) in enumerate(cells)}
            for fut, i in futs.items():
                results[i] = _safe(fut.result, cells[i])
    else:
        for i, (s, seed) in enumerate(cells):
            results[i] = _safe(lambda: run_cell(exp.problem, s, seed, exp.timing), cells[i])
    out_dir = Path(out_dir) / exp.name
    rows = []
    order = {m: k for k, m in enumerate(METHODS)}
    for i in sorted(results, key=lambda i: (order.get(results[i][0], 99), results[i][1], i)):
        meth, seed, summary, csv_text = results[i]
        rows.append(summary)
        if csv_text is not None:
            _atomic_write(out_dir / f"{meth}_seed{seed}.csv", csv_text)
    comparison = compare_cell(exp.reference_table, _cell_key(exp.problem), rows) \
        if exp.reference_table else []
    doc = {"name": exp.name, "problem": exp.problem, "seeds": exp.seeds,
           "cells": rows, "comparison": comparison}
    if not exp.timing:
        for r in rows:
            r["wall_s"] = None
    _atomic_write(out_dir / "report.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    title = f"{exp.name}: {exp.problem}"
    text = format_table(title, rows, comparison)
    _atomic_write(out_dir / "table.txt", text)
    echo(text)
    return 0 if all(r["status"] == "Converged" for r in rows) else 1


def _safe(fn, cell):
    spec, seed = cell
    try:
        return fn()
    except Exception as exc:  # a crashed cell is reported, not fatal
        meth = spec.get("method", "?")
        return (meth, seed, {"method": meth, "seed": seed, "status": "NumericalError",
                             "final_F": float("nan"), "final_grad_norm": None,
                             "final_direction_norm": None, "iterations": 0, "wall_s": None,
                             "feasibility": None, "checksum": "", "initial_F": None,
                             "error": f"{type(exc).__name__}: {exc}"}, None)


def load_config(path):
    path = Path(path)
    raw = path.read_bytes()
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(raw)
        else:
            data = tomllib.loads(raw.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table/object")
    allowed = {"problem", "methods", "seeds", "output_dir", "name", "jobs"}
    extra = set(data) - allowed
    if extra:
        raise ConfigError(f"unknown top-level keys {sorted(extra)}")
    if not isinstance(data.get("problem"), dict):
        raise ConfigError("missing [problem] table")
    methods = data.get("methods")
    if not isinstance(methods, list) or not all(isinstance(m, dict) for m in methods):
        raise ConfigError("'methods' must be a list of tables")
    seeds = data.get("seeds", [0])
    if not isinstance(seeds, list):
        raise ConfigError("'seeds' must be a list")
    return ExperimentConfig(problem=dict(data["problem"]), methods=methods, seeds=seeds,
                            output_dir=data.get("output_dir", "rbgd-out"),
                            name=data.get("name", path.stem), jobs=data.get("jobs", 1))


# ----------------------------------------------------------- reproduction

def reproduction_grid(target, scale):
    """Experiments making up a reproduction target."""
    methods = [{"method": m} for m in ALL_METHODS]
    if target in ("table1", "table2"):
        table = reference.TABLES[target]
        if scale == "desk":
            keys = [(500, 50)] if target == "table1" else [(5000, 10)]
            seeds = [0] if target == "table1" else [0, 1, 2]
        else:
            keys, seeds = list(table), [0]
        return [ExperimentConfig(problem={"kind": "nepv", "m": m, "p": p, "beta": BETA},
                                 methods=methods, seeds=seeds, name=f"{target}_m{m}_p{p}",
                                 reference_table=target) for m, p in keys]
    if target == "fig-sensing":
        if scale == "desk":
            grid, seeds = [(500, 10)], list(range(10))
        else:
            grid = [(m, r) for m in (500, 1000, 2000, 4000) for r in (10, 20, 40)]
            seeds = [0]
        return [ExperimentConfig(problem={"kind": "sensing", "m": m, "r": r, "N": SENSING_N},
                                 methods=methods, seeds=seeds, name=f"sensing_m{m}_r{r}")
                for m, r in grid]
    raise ConfigError(f"unknown reproduction target {target!r}")


def _build_parser():
    ap = argparse.ArgumentParser(prog="rbgd", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--jobs", type=int, default=None, help="worker processes")
        p.add_argument("--no-timing", action="store_true", help="write wall_ns as 0")
        p.add_argument("--seed-override", type=int, nargs="+", default=None,
                       help="replace the seed list")

    p = sub.add_parser("run", help="run an experiment described by a TOML/JSON file")
    p.add_argument("config")
    common(p)
    p = sub.add_parser("reproduce", help="rerun a reference experiment grid")
    p.add_argument("target", choices=["table1", "table2", "fig-sensing", "fig_sensing"])
    p.add_argument("--scale", choices=["desk", "paper"], default="desk")
    common(p)
    return ap


def main(argv=None):
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        if args.cmd == "run":
            exps = [load_config(args.config)]
        else:
            exps = reproduction_grid(args.target.replace("_", "-"), args.scale)
        for exp in exps:
            if args.seed_override is not None:
                exp.seeds = list(args.seed_override)
            if args.no_timing:
                exp.timing = False
            if args.jobs is not None:
                exp.jobs = args.jobs
            if args.out is not None:
                exp.output_dir = args.out
            exp.validate()
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    code = 0
    for exp in exps:
        code = max(code, execute(exp, exp.output_dir, jobs=exp.jobs))
    return code


if __name__ == "__main__":
    sys.exit(main())
