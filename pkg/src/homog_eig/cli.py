"""Command-line entry point driven by a YAML run document.

Subcommands: solve, sweep, rates, check, plot. See ``configs/`` for
a complete document; :func:`parse_config` lists every accepted key.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np
import yaml

from . import harness
from .discretize import (CoefficientField, DiscreteFunction, assemble_stiffness, build_grid,
                         phi_energy)
from .errors import ConfigError, FileMissing, HomogEigError
from .oscillation import oscillation_check
from .shoot1d import eigenvalue_1d
from .weights import PeriodicWeight

EXPERIMENTS = ("solve", "sweep", "rates", "check", "plot")
SOLVER_CHOICES = ("auto",) + harness.SOLVERS

TOP_KEYS = {"experiment", "problem", "sweep", "solver", "output", "seed", "jobs"}
PROBLEM_KEYS = {"p", "dimension", "domain", "nodes", "weight", "coefficient"}
SWEEP_KEYS = {"eps", "k", "sign"}
OUTPUT_KEYS = {"dir", "records", "verdicts", "plot"}
DEFAULT_OUTPUT = {"dir": "out", "records": "records.csv", "verdicts": "verdicts.json",
                  "plot": "plot.svg"}

EXIT_OK, EXIT_VERDICT, EXIT_CONFIG, EXIT_SOLVER, EXIT_MISSING = 0, 1, 2, 3, 4


@dataclass
class RunConfig:
    experiment: str
    p: float = 2.0
    dimension: int = 1
    domain: list = field(default_factory=lambda: [[0.0, 1.0]])
    nodes: list | None = None
    weight: dict = field(default_factory=lambda: {"kind": "trig", "dimension": 1,
                                                  "const": 1.0, "terms": []})
    coefficient: dict = field(default_factory=lambda: {"scale": 1.0})
    eps: list = field(default_factory=lambda: [1.0])
    k: list = field(default_factory=lambda: [1])
    sign: str = "+"
    solver: str = "auto"
    output: dict = field(default_factory=lambda: dict(DEFAULT_OUTPUT))
    seed: int = 0
    jobs: int | None = None

    # -- objects --------------------------------------------------------------
    def weight_obj(self) -> PeriodicWeight:
        return PeriodicWeight.from_dict(self.weight)

    def coef_obj(self) -> CoefficientField:
        return CoefficientField.from_dict(self.coefficient, p=self.p, dim=self.dimension)

    def problem(self) -> harness.Problem:
        return harness.Problem(self.p, self.weight_obj(), self.dimension,
                               tuple(tuple(d) for d in self.domain), self.coef_obj(),
                               tuple(self.nodes) if self.nodes else None,
                               harness.PminOptions(seed=self.seed))

    def resolved_solver(self) -> str:
        return harness.resolve_solver(self.solver, self.p, self.dimension, self.k)

    def path(self, key: str, out_dir: str | None = None) -> str:
        d = out_dir or self.output.get("dir", "out")
        return os.path.join(d, self.output[key])


def _num_list(v, name, errors, cast=float):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = [v]
    if not isinstance(v, list) or not v:
        errors.append(f"{name}: expected a nonempty list")
        return None
    try:
        return [cast(x) for x in v]
    except (TypeError, ValueError):
        errors.append(f"{name}: entries must be numbers")
        return None


def _unknown(d, allowed, where, errors):
    for k in d:
        if k not in allowed:
            errors.append(f"{where}: unknown key {k!r}")


def parse_config(text: str, experiment: str | None = None) -> RunConfig:
    """Validate a YAML run document; raises ConfigError listing every problem found."""
    try:
        doc = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed document: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("document root must be a mapping")
    errors: list = []
    _unknown(doc, TOP_KEYS, "root", errors)
    exp = experiment or doc.get("experiment")
    if exp not in EXPERIMENTS:
        errors.append(f"experiment: expected one of {EXPERIMENTS}, got {exp!r}")
    cfg = RunConfig(experiment=exp if exp in EXPERIMENTS else "solve")

    prob = doc.get("problem", {}) or {}
    if not isinstance(prob, dict):
        errors.append("problem: expected a mapping")
        prob = {}
    _unknown(prob, PROBLEM_KEYS, "problem", errors)
    try:
        cfg.p = float(prob.get("p", 2.0))
        if not cfg.p > 1:
            errors.append(f"problem.p: must exceed 1, got {cfg.p}")
    except (TypeError, ValueError):
        errors.append("problem.p: expected a number")
    dim = prob.get("dimension", 1)
    if dim not in (1, 2) or isinstance(dim, bool):
        errors.append(f"problem.dimension: must be 1 or 2, got {dim!r}")
        dim = 1
    cfg.dimension = int(dim)
    dom = prob.get("domain", [[0.0, 1.0]] * cfg.dimension)
    try:
        dom = np.asarray(dom, dtype=float)
        if dom.ndim == 1:
            dom = np.tile(dom, (cfg.dimension, 1))
        if dom.shape != (cfg.dimension, 2) or np.any(dom[:, 1] <= dom[:, 0]):
            raise ValueError
        cfg.domain = dom.tolist()
    except (TypeError, ValueError):
        errors.append("problem.domain: expected [a, b] or one [a, b] per axis with a < b")
    if "nodes" in prob:
        nodes = _num_list(prob["nodes"], "problem.nodes", errors, int)
        if nodes is not None:
            if len(nodes) == 1:
                nodes = nodes * cfg.dimension
            if len(nodes) != cfg.dimension or min(nodes) < 3:
                errors.append("problem.nodes: one count >= 3 per axis")
            cfg.nodes = nodes
    if "weight" in prob:
        try:
            w = PeriodicWeight.from_dict(prob["weight"])
            if w.dim != cfg.dimension:
                errors.append("problem.weight: dimension differs from problem.dimension")
            cfg.weight = w.to_dict()
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            errors.append(f"problem.weight: {exc}")
    else:
        cfg.weight = PeriodicWeight.constant(1.0, cfg.dimension).to_dict()
    coef = prob.get("coefficient", {"scale": 1.0})
    try:
        if not isinstance(coef, dict) or set(coef) - {"scale", "matrix"}:
            raise ValueError("expected a mapping with 'scale' or 'matrix'")
        c = CoefficientField.from_dict(coef, p=cfg.p, dim=cfg.dimension)
        if c.dim != cfg.dimension:
            raise ValueError("matrix size differs from problem.dimension")
        c.ellipticity()
        cfg.coefficient = {k: v for k, v in c.to_dict().items() if k != "p"}
    except (KeyError, TypeError, ValueError) as exc:
        errors.append(f"problem.coefficient: {exc}")

    sw = doc.get("sweep", {}) or {}
    if not isinstance(sw, dict):
        errors.append("sweep: expected a mapping")
        sw = {}
    _unknown(sw, SWEEP_KEYS, "sweep", errors)
    eps = _num_list(sw.get("eps", [1.0]), "sweep.eps", errors)
    if eps is not None:
        if any(e <= 0 for e in eps):
            errors.append("sweep.eps: entries must be positive")
        if cfg.experiment in ("sweep", "rates"):
            if len(eps) < harness.MIN_POINTS:
                errors.append(f"sweep.eps: a {cfg.experiment} run needs at least "
                              f"{harness.MIN_POINTS} values, got {len(eps)}")
            if any(b >= a for a, b in zip(eps, eps[1:])):
                errors.append("sweep.eps: must be strictly decreasing")
        cfg.eps = eps
    ks = _num_list(sw.get("k", [1]), "sweep.k", errors, int)
    if ks is not None:
        if min(ks) < 1:
            errors.append("sweep.k: entries must be >= 1")
        cfg.k = ks
    sign = str(sw.get("sign", "+"))
    if sign not in ("+", "-"):
        errors.append(f"sweep.sign: must be '+' or '-', got {sign!r}")
    cfg.sign = sign

    solver = doc.get("solver", "auto")
    if solver not in SOLVER_CHOICES:
        errors.append(f"solver: expected one of {SOLVER_CHOICES}, got {solver!r}")
    else:
        cfg.solver = solver
        if cfg.experiment not in ("check", "plot"):
            try:
                harness.resolve_solver(solver, cfg.p, cfg.dimension, cfg.k)
            except ConfigError as exc:
                errors.extend(exc.errors)

    out = doc.get("output", {}) or {}
    if not isinstance(out, dict):
        errors.append("output: expected a mapping")
        out = {}
    _unknown(out, OUTPUT_KEYS, "output", errors)
    cfg.output = {**DEFAULT_OUTPUT, **{k: str(v) for k, v in out.items() if k in OUTPUT_KEYS}}
    for key in ("seed", "jobs"):
        if key in doc and doc[key] is not None:
            try:
                setattr(cfg, key, int(doc[key]))
            except (TypeError, ValueError):
                errors.append(f"{key}: expected an integer")
    if cfg.jobs is not None and cfg.jobs < 1:
        errors.append("jobs: must be >= 1")
    if errors:
        raise ConfigError(errors)
    return cfg


def serialize(cfg: RunConfig) -> str:
    doc = {"experiment": cfg.experiment,
           "problem": {"p": cfg.p, "dimension": cfg.dimension, "domain": cfg.domain,
                       "weight": cfg.weight, "coefficient": cfg.coefficient},
           "sweep": {"eps": cfg.eps, "k": cfg.k, "sign": cfg.sign},
           "solver": cfg.solver, "output": cfg.output, "seed": cfg.seed}
    if cfg.nodes:
        doc["problem"]["nodes"] = cfg.nodes
    if cfg.jobs is not None:
        doc["jobs"] = cfg.jobs
    return yaml.safe_dump(doc, sort_keys=False)


# -- experiments ---------------------------------------------------------------

def _verdicts_for(cfg: RunConfig, prob: harness.Problem, records) -> tuple:
    """Pick the verdicts that apply to the weight class and sign; returns (verdicts, fits)."""
    stats = prob.weight.stats()
    fits = {}
    for (k, sign), grp in harness._groups(records).items():
        good = [r for r in grp if r.ok]
        if len(good) >= 2:
            fits[f"k={k},sign={sign}"] = harness.fit_rate(good, "value")
    part = stats.pos_mass if cfg.sign == "+" else stats.neg_mass
    if part <= 1e-12:
        return [harness.verdict_no_spectrum(records, cfg.sign)], fits
    converging = (stats.sign_class == "mean-positive" and cfg.sign == "+") or \
        (stats.sign_class == "mean-negative" and cfg.sign == "-")
    if converging:
        name = cfg.resolved_solver()
        if cfg.sign == "-":
            prob = prob.with_weight(-prob.weight)
            records = [harness.SweepRecord(r.eps, r.k, "+", -r.lam, r.solver, r.residual,
                                           r.wall_time, r.error) for r in records]
            stats = prob.weight.stats()
        limit = {}
        for k in sorted({r.k for r in records}):
            limit[k] = harness.solve(prob.limit(), 1.0, [k], "+", name)[0][0]
        verdicts = harness.verdict_convergence(records, limit, stats)
        for k, lam in limit.items():
            good = [r for r in records if r.k == k and r.ok]
            if len(good) >= 2:
                fits[f"gap k={k}"] = harness.fit_rate(good, "gap", lam)
        return verdicts, fits
    return [harness.verdict_divergence(records, stats, cfg.p)], fits


def _run_solve_or_sweep(cfg: RunConfig, out_dir: str, jobs) -> int:
    prob = cfg.problem()
    sweep = cfg.experiment in ("sweep", "rates")
    recs = harness.epsilon_sweep(prob, cfg.eps, cfg.k, cfg.solver, cfg.sign, jobs,
                                 require_decreasing=sweep)
    os.makedirs(out_dir, exist_ok=True)
    harness.write_records_csv(cfg.path("records", out_dir), recs)
    if not sweep:
        bad = [r for r in recs if not r.ok]
        doc = {"records": [asdict(r) for r in recs], "all_pass": not bad}
        with open(cfg.path("verdicts", out_dir), "w", encoding="utf-8") as fh:
            json.dump(harness._jsonable(doc), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return EXIT_OK if not bad else EXIT_SOLVER
    verdicts, fits = _verdicts_for(cfg, prob, recs)
    harness.write_verdicts_json(cfg.path("verdicts", out_dir), verdicts,
                                {"fits": {k: asdict(v) for k, v in fits.items()},
                                 "config": yaml.safe_load(serialize(cfg))})
    if cfg.experiment == "rates":
        write_svg(cfg.path("plot", out_dir), recs)
    return EXIT_OK if all(v.passed for v in verdicts) else EXIT_VERDICT


def run_checks(seed: int = 0, n_random: int = 25) -> dict:
    """Seeded property suite covering every module; returns {name: passed}."""
    rng = np.random.default_rng(seed)
    res = {}
    w = PeriodicWeight.sine(0.3, 1.0)
    x = rng.random(100)
    res["weight-periodic"] = bool(np.max(np.abs(w(x) - w(x + 1))) <= 1e-12)
    g = build_grid(2, [0, 1], 9)
    K = assemble_stiffness(CoefficientField.constant(2, [[2.0, 0.3], [0.3, 1.0]]), g)
    vs = rng.standard_normal((g.n_interior, n_random))
    res["stiffness-spd"] = bool(np.all(np.einsum("ij,ij->j", vs, K @ vs) > 0))
    c = CoefficientField.constant(2, [[2.0, 0.3], [0.3, 1.0]])
    res["energy-quadratic-form"] = all(
        abs(phi_energy(c, DiscreteFunction(g, v)) - v @ K @ v) <= 1e-10 * (v @ K @ v)
        for v in vs.T)
    ok = True
    for _ in range(n_random):
        eps = 1.0 / rng.integers(2, 16)
        p = float(rng.uniform(1.2, 4.0))
        gg = build_grid(1, [0, 1], 33)
        v = DiscreteFunction(gg, rng.standard_normal(gg.n_interior))
        wt = PeriodicWeight.trig(0.0, [(float(rng.uniform(-1, 1)), (int(rng.integers(1, 4)),),
                                        str(rng.choice(["sin", "cos"])))])
        ok &= oscillation_check(wt, eps, v, p).ok
    res["oscillation-inequality"] = bool(ok)
    one = PeriodicWeight.constant(1.0)
    a = eigenvalue_1d(2, 1.0, w, 0.25, 1, "+", with_function=False).lam
    b = eigenvalue_1d(2, 1.0, w.scaled(2.0), 0.25, 1, "+", with_function=False).lam
    res["shoot-homogeneity"] = abs(a - 2 * b) <= 1e-8 * a
    m = eigenvalue_1d(2, 1.0, -w, 0.25, 1, "-", with_function=False).lam
    res["shoot-sign-symmetry"] = abs(a + m) <= 1e-8 * a
    lam1 = eigenvalue_1d(2, 1.0, one, 1.0, 1, with_function=False).lam
    res["shoot-exact"] = abs(lam1 - math.pi ** 2) <= 1e-6 * math.pi ** 2
    return res


def _run_check(cfg: RunConfig, out_dir: str) -> int:
    res = run_checks(cfg.seed)
    os.makedirs(out_dir, exist_ok=True)
    with open(cfg.path("verdicts", out_dir), "w", encoding="utf-8") as fh:
        json.dump({"checks": res, "all_pass": all(res.values()), "seed": cfg.seed}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK if all(res.values()) else EXIT_VERDICT


def _run_plot(cfg: RunConfig, out_dir: str) -> int:
    src = cfg.path("records", out_dir)
    if not os.path.exists(src):
        raise FileMissing(f"records file {src} does not exist")
    recs = harness.read_records_csv(src)
    os.makedirs(out_dir, exist_ok=True)
    write_svg(cfg.path("plot", out_dir), recs)
    return EXIT_OK


def run(cfg: RunConfig, out_dir: str | None = None, jobs: int | None = None) -> int:
    out_dir = out_dir or cfg.output.get("dir", "out")
    jobs = jobs if jobs is not None else cfg.jobs
    if cfg.experiment == "check":
        return _run_check(cfg, out_dir)
    if cfg.experiment == "plot":
        return _run_plot(cfg, out_dir)
    return _run_solve_or_sweep(cfg, out_dir, jobs)


# -- SVG ------------------------------------------------------------------------

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def write_svg(path, records, width: int = 640, height: int = 440) -> None:
    """Line chart of log10|lambda| against log10 eps, one series per (k, sign)."""
    groups = {key: [r for r in grp if r.ok] for key, grp in harness._groups(records).items()}
    groups = {k: v for k, v in groups.items() if v}
    ml, mr, mt, mb = 70, 170, 30, 55
    pts = [(math.log10(r.eps), math.log10(r.magnitude())) for g in groups.values() for r in g]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    if pts:
        xs, ys = zip(*pts)
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        x1 = x1 if x1 > x0 else x0 + 1
        y1 = y1 if y1 > y0 else y0 + 1
        pw, ph = width - ml - mr, height - mt - mb

        def sx(x):
            return ml + (x - x0) / (x1 - x0) * pw

        def sy(y):
            return mt + ph - (y - y0) / (y1 - y0) * ph

        parts.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
        for i in range(5):
            xv = x0 + i * (x1 - x0) / 4
            yv = y0 + i * (y1 - y0) / 4
            parts.append(f'<text x="{sx(xv):.1f}" y="{mt + ph + 18}" text-anchor="middle">{xv:.2f}</text>')
            parts.append(f'<text x="{ml - 6}" y="{sy(yv) + 4:.1f}" text-anchor="end">{yv:.2f}</text>')
        parts.append(f'<text x="{ml + pw / 2}" y="{height - 12}" text-anchor="middle">log10 eps</text>')
        parts.append(f'<text x="16" y="{mt + ph / 2}" text-anchor="middle" '
                     f'transform="rotate(-90 16 {mt + ph / 2})">log10 |lambda|</text>')
        for i, ((k, sign), grp) in enumerate(sorted(groups.items())):
            col = _COLORS[i % len(_COLORS)]
            poly = " ".join(f"{sx(math.log10(r.eps)):.1f},{sy(math.log10(r.magnitude())):.1f}"
                            for r in sorted(grp, key=lambda r: r.eps))
            parts.append(f'<polyline points="{poly}" fill="none" stroke="{col}" stroke-width="2"/>')
            for r in grp:
                parts.append(f'<circle cx="{sx(math.log10(r.eps)):.1f}" '
                             f'cy="{sy(math.log10(r.magnitude())):.1f}" r="3" fill="{col}"/>')
            label = f"k={k} {sign}"
            if len(grp) >= 2:
                label += f"  slope {harness.fit_rate(grp, 'value').slope:.3f}"
            ly = mt + 16 + 18 * i
            parts.append(f'<line x1="{width - mr + 10}" y1="{ly - 4}" x2="{width - mr + 30}" '
                         f'y2="{ly - 4}" stroke="{col}" stroke-width="2"/>')
            parts.append(f'<text x="{width - mr + 35}" y="{ly}">{label}</text>')
    else:
        parts.append(f'<text x="{width / 2}" y="{height / 2}" text-anchor="middle">no data</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


# -- argument parsing ---------------------------------------------------------------

def _error_block(exc: Exception, code: int) -> int:
    block = {"error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}
    if isinstance(exc, ConfigError):
        block["error"]["errors"] = exc.errors
    print(json.dumps(block, indent=2, sort_keys=True))
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="homog-eig", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=EXPERIMENTS)
    ap.add_argument("--config", metavar="PATH", help="YAML run document")
    ap.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
    ap.add_argument("--seed", type=int, help="seed for randomised suites and restarts")
    ap.add_argument("--jobs", type=int, help="parallel width (default $HOMOG_EIG_JOBS or 1)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            if not os.path.exists(args.config):
                raise FileMissing(f"config file {args.config} does not exist")
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        elif args.command in ("check", "plot"):
            text = ""
        else:
            raise ConfigError(f"{args.command} needs --config")
        cfg = parse_config(text, experiment=args.command)
        if args.seed is not None:
            cfg.seed = args.seed
        code = run(cfg, args.out, args.jobs)
        summary = {"command": args.command, "exit_code": code,
                   "out": args.out or cfg.output["dir"]}
        print(json.dumps(summary, sort_keys=True))
        return code
    except FileMissing as exc:
        return _error_block(exc, EXIT_MISSING)
    except ConfigError as exc:
        return _error_block(exc, EXIT_CONFIG)
    except HomogEigError as exc:
        return _error_block(exc, EXIT_SOLVER)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
