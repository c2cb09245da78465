"""Epsilon sweeps, rate fits and pass/fail verdicts on the homogenization claims."""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .discretize import (CoefficientField, DiscreteFunction, assemble_stiffness,
                         assemble_weighted_mass, build_grid, energy_and_gradient, lumped_node_weights, project_weight)
from .errors import BracketNotFound, ConfigError, HomogEigError, NoNegativeSpectrum, \
    NoPositiveSpectrum, PackingInfeasible
from .linspec import PencilProblem, pencil_spectrum
from .pmin import PminOptions, first_eigenvalue_pmin
from .shoot1d import eigenvalue_1d
from .weights import WeightStats, PeriodicWeight

SOLVERS = ("shoot1d", "linspec", "pmin")
CLAIMS = ("T1.1-div", "T1.1-conv", "T1.2-case1", "T1.2-case2", "T1.2-case3", "T1.3-rate",
          "sturm-domain", "sturm-weight", "cube-bound", "testfn-bound")
SLOPE_TOL = 0.15
BAND_FACTOR = 4.0  # two-sided windows: values stay within this factor of each other or a reference
MIN_POINTS = 4


# -- problem description ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Problem:
    """One eigenproblem family: everything but eps, k and the sign."""

    p: float
    weight: PeriodicWeight
    dim: int = 1
    extents: tuple = ((0.0, 1.0),)
    coef: CoefficientField | None = None
    nodes: tuple | None = None  # grid nodes per axis for linspec / pmin
    pmin: PminOptions = field(default_factory=PminOptions)

    def __post_init__(self):
        ext = tuple(tuple(map(float, e)) for e in self.extents)
        if len(ext) == 1 and self.dim > 1:
            ext = ext * self.dim
        if len(ext) != self.dim:
            raise ConfigError(f"{len(ext)} extents for a {self.dim}-D problem")
        object.__setattr__(self, "extents", ext)
        if self.weight.dim != self.dim:
            raise ConfigError("weight dimension differs from the problem dimension")
        if self.coef is None:
            object.__setattr__(self, "coef", CoefficientField.isotropic(self.p, self.dim))
        elif self.coef.p != self.p:
            object.__setattr__(self, "coef", self.coef.with_p(self.p))
        if self.nodes is None:
            n = 2001 if self.dim == 1 else 65
            object.__setattr__(self, "nodes", (n,) * self.dim)

    def grid(self):
        return build_grid(self.dim, self.extents, self.nodes)

    def with_weight(self, w: PeriodicWeight) -> "Problem":
        return replace(self, weight=w)

    def limit(self) -> "Problem":
        """Same operator and grid with the averaged constant weight."""
        return self.with_weight(PeriodicWeight.constant(self.weight.mean(), self.dim))


@dataclass(frozen=True)
class SweepRecord:
    eps: float
    k: int
    sign: str
    lam: float
    solver: str
    residual: float
    wall_time: float
    error: str = ""  # exception class name for gap rows, empty on success

    @property
    def ok(self) -> bool:
        return not self.error and math.isfinite(self.lam)

    def magnitude(self) -> float:
        return abs(self.lam)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int
    quantity: str
    excluded: tuple = ()  # (eps, k) pairs dropped for nonpositive or failed values


@dataclass
class Verdict:
    claim: str
    passed: bool
    details: dict
    records: list

    def to_dict(self) -> dict:
        return {"claim": self.claim, "pass": bool(self.passed), "details": _jsonable(self.details),
                "records": [asdict(r) for r in self.records]}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, RateFit):
        return _jsonable(asdict(x))
    return x


# -- solving -------------------------------------------------------------------

def applicable(solver: str, p: float, dim: int, ks) -> bool:
    if solver == "shoot1d":
        return dim == 1
    if solver == "linspec":
        return p == 2
    if solver == "pmin":
        return all(k == 1 for k in ks)
    return False


def resolve_solver(solver: str, p: float, dim: int, ks) -> str:
    """Map 'auto' to shoot1d (N = 1), else linspec (p = 2), else pmin (k = 1 only)."""
    if solver == "auto":
        for s in SOLVERS:
            if applicable(s, p, dim, ks):
                return s
        raise ConfigError(f"no solver handles p={p}, N={dim}, k={sorted(set(ks))}")
    if solver not in SOLVERS:
        raise ConfigError(f"unknown solver {solver!r}")
    if not applicable(solver, p, dim, ks):
        raise ConfigError(f"solver {solver} does not handle p={p}, N={dim}, k={sorted(set(ks))}")
    return solver


def solve(problem: Problem, eps: float, ks, sign: str = "+", solver: str = "auto") -> list:
    """Eigenvalues for each k in ks as (lambda, residual) pairs, in the order of ks."""
    ks = list(ks)
    solver = resolve_solver(solver, problem.p, problem.dim, ks)
    if solver == "shoot1d":
        span = problem.extents[0]
        out = []
        for k in ks:
            e = eigenvalue_1d(problem.p, problem.coef, problem.weight, eps, k, sign, span,
                              with_function=False)
            out.append((e.lam, e.bisection_width / abs(e.lam)))
        return out
    g = problem.grid()
    rho = project_weight(problem.weight, eps, g)
    if solver == "linspec":
        prob = PencilProblem(assemble_stiffness(problem.coef, g), assemble_weighted_mass(rho, g))
        sl = pencil_spectrum(prob, max(ks), sign)
        if not sl.complete and len(sl.eigenvalues) < max(ks):
            raise BracketNotFound(f"pencil has only {len(sl.eigenvalues)} eigenvalues of sign {sign}")
        return [(float(sl.eigenvalues[k - 1]), float(sl.ritz_residuals[k - 1])) for k in ks]
    e = first_eigenvalue_pmin(problem.coef, rho, g, sign, problem.pmin)
    return [(e.lam, e.residual) for _ in ks]


def _jobs(jobs):
    if jobs is None:
        jobs = int(os.environ.get("HOMOG_EIG_JOBS", "1") or 1)
    return max(1, int(jobs))


def epsilon_sweep(problem: Problem, eps_list, k_list, solver: str = "auto", sign: str = "+",
                  jobs: int | None = None, require_decreasing: bool = True) -> list:
    """One record per (eps, k); solver failures become gap rows with the error name."""
    eps_list = [float(e) for e in eps_list]
    k_list = [int(k) for k in k_list]
    if require_decreasing:
        if len(eps_list) < MIN_POINTS:
            raise ConfigError(f"eps list needs at least {MIN_POINTS} entries, got {len(eps_list)}")
        if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
            raise ConfigError("eps list must be strictly decreasing")
    if not eps_list or not k_list:
        raise ConfigError("eps and k lists must be nonempty")
    if any(e <= 0 for e in eps_list) or any(k < 1 for k in k_list):
        raise ConfigError("eps must be positive and k >= 1")
    if sign not in ("+", "-"):
        raise ConfigError(f"sign must be '+' or '-', got {sign!r}")
    name = resolve_solver(solver, problem.p, problem.dim, k_list)
    # linspec solves all k at once per eps; the 1-D solver parallelises over (eps, k)
    tasks = [(e, [k]) for e in eps_list for k in k_list] if name != "linspec" else \
        [(e, k_list) for e in eps_list]

    def run(task):
        eps, ks = task
        t0 = time.perf_counter()
        try:
            vals = solve(problem, eps, ks, sign, name)
            dt = (time.perf_counter() - t0) / len(ks)
            return [SweepRecord(eps, k, sign, lam, name, res, dt) for k, (lam, res) in zip(ks, vals)]
        except HomogEigError as exc:
            dt = (time.perf_counter() - t0) / len(ks)
            return [SweepRecord(eps, k, sign, math.nan, name, math.nan, dt, type(exc).__name__)
                    for k in ks]

    n = _jobs(jobs)
    if n == 1:
        chunks = [run(t) for t in tasks]
    else:
        with ThreadPoolExecutor(n) as ex:
            chunks = list(ex.map(run, tasks))
    recs = [r for c in chunks for r in c]
    return sorted(recs, key=lambda r: (-r.eps, r.k))


# -- fitting -------------------------------------------------------------------

def _quantity(r: SweepRecord, quantity: str, reference):
    if quantity == "value":
        return r.magnitude()
    if quantity == "gap":
        return abs(r.magnitude() - abs(reference))
    if quantity == "reciprocal":
        return 1.0 / r.magnitude()
    raise ValueError(f"unknown quantity {quantity!r}")


def _lstsq(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    A = np.column_stack([x, np.ones_like(x)])
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - A @ [slope, icpt]) ** 2)) / ss if ss > 0 else 1.0
    return float(slope), float(icpt), min(1.0, max(0.0, r2))


def fit_rate(records, quantity: str = "value", reference: float | None = None) -> RateFit:
    """Least squares of log(quantity) against log(eps).

    ``value`` uses |lambda|, ``gap`` |lambda| - |reference|, ``reciprocal`` 1/|lambda|.
    """
    records = list(records)
    if len({(r.k, r.sign) for r in records}) > 1:
        raise ValueError("records must share k and sign")
    if quantity == "gap" and reference is None:
        raise ValueError("gap-to-limit fits need a reference value")
    xs, ys, dropped = [], [], []
    for r in records:
        q = _quantity(r, quantity, reference) if r.ok else math.nan
        if not (q > 0 and math.isfinite(q)):
            dropped.append((r.eps, r.k))
            continue
        xs.append(math.log(r.eps))
        ys.append(math.log(q))
    if len(xs) < 2:
        raise ValueError(f"only {len(xs)} usable points for a rate fit")
    slope, icpt, r2 = _lstsq(xs, ys)
    return RateFit(slope, icpt, r2, len(xs), quantity, tuple(dropped))


def _groups(records):
    out = {}
    for r in sorted(records, key=lambda r: (r.k, r.sign, -r.eps)):
        out.setdefault((r.k, r.sign), []).append(r)
    return out


# -- verdicts ------------------------------------------------------------------

def verdict_convergence(records, limit, stats: WeightStats) -> list:
    """Gap-to-limit rate and convergence verdicts for a positive-mean weight.

    ``limit`` maps k to the limit eigenvalue (or is one float used for every k).
    Rate passes when the fitted slope is >= 0.9 and gap/eps on the last two
    levels agrees within a factor 4; convergence passes when the finest gap is
    at most 5 % of the limit and below the coarsest gap.
    """
    records = list(records)
    if stats.sign_class != "mean-positive":
        raise ValueError(f"convergence verdicts need a positive mean, weight is {stats.sign_class}")
    if limit is None:
        raise ValueError("missing limit eigenvalues")
    rate_ok, conv_ok = True, True
    rate_det, conv_det = {}, {}
    for (k, sign), grp in _groups(records).items():
        if sign != "+":
            raise ValueError("convergence applies to the positive spectrum")
        ref = limit[k] if isinstance(limit, dict) else float(limit)
        if ref is None:
            raise ValueError(f"missing limit eigenvalue for k={k}")
        failed = [r for r in grp if not r.ok]
        good = [r for r in grp if r.ok]
        gaps = [abs(r.lam - ref) for r in good]
        ratios = [gp / r.eps for gp, r in zip(gaps, good)]
        fit = fit_rate(good, "gap", ref) if len(good) >= 2 else None
        stable = len(ratios) >= 2 and ratios[-2] > 0 and \
            1 / BAND_FACTOR <= ratios[-1] / ratios[-2] <= BAND_FACTOR
        r_pass = (not failed and fit is not None and fit.n_points >= MIN_POINTS
                  and fit.slope >= 0.9 and stable and all(map(math.isfinite, ratios)))
        c_pass = (not failed and len(gaps) >= 2 and gaps[-1] <= 0.05 * ref and gaps[-1] < gaps[0])
        rate_ok &= r_pass
        conv_ok &= c_pass
        rate_det[k] = {"limit": ref, "slope": fit.slope if fit else None,
                       "r_squared": fit.r_squared if fit else None,
                       "max_gap_over_eps": max(ratios) if ratios else None,
                       "last_two_ratio": ratios[-1] / ratios[-2] if len(ratios) >= 2 and ratios[-2] > 0 else None,
                       "failed": len(failed), "pass": r_pass}
        conv_det[k] = {"limit": ref, "finest_gap": gaps[-1] if gaps else None,
                       "relative_finest_gap": gaps[-1] / ref if gaps else None,
                       "failed": len(failed), "pass": c_pass}
    tol = {"min_slope": 0.9, "stability_factor": BAND_FACTOR, "max_relative_gap": 0.05}
    return [Verdict("T1.3-rate", rate_ok, {"per_k": rate_det, "tolerances": tol}, records),
            Verdict("T1.1-conv", conv_ok, {"per_k": conv_det, "tolerances": tol}, records)]


def _case_for(stats: WeightStats, sign: str) -> str:
    if stats.sign_class == "mean-zero":
        return "T1.2-case1"
    if stats.sign_class == "mean-positive" and sign == "-":
        return "T1.2-case2"
    if stats.sign_class == "mean-negative" and sign == "+":
        return "T1.2-case3"
    raise ValueError(f"no divergence case for a {stats.sign_class} weight with sign {sign}: "
                     "that spectrum converges")


def verdict_divergence(records, stats: WeightStats, p: float, case: str | None = None) -> Verdict:
    """Divergence-rate verdict for the case implied by the mean and the sign.

    Mean zero (k = 1): slope of |lambda| against eps in [-1.15, -0.85] and
    max(eps|lambda|)/min(eps|lambda|) <= 4. Opposite-sign mean: every
    eps|lambda| >= (eps|lambda|)_0 / 4 and every eps^p|lambda| <= 4 (eps^p|lambda|)_0,
    with 0 the coarsest level, and slope in [-p-0.15, -0.85].
    """
    records = list(records)
    signs = {r.sign for r in records}
    if len(signs) != 1:
        raise ValueError("records must share one sign")
    sign = signs.pop()
    implied = _case_for(stats, sign)
    if case is not None and case != implied:
        raise ValueError(f"records describe {implied}, not {case}")
    ok = True
    det = {}
    for (k, _), grp in _groups(records).items():
        failed = [r for r in grp if not r.ok]
        good = [r for r in grp if r.ok]
        d = {"failed": len(failed), "errors": sorted({r.error for r in failed})}
        if len(good) < MIN_POINTS:
            det[k] = {**d, "pass": False, "reason": f"only {len(good)} usable records"}
            ok = False
            continue
        fit = fit_rate(good, "value")
        e1 = [r.eps * r.magnitude() for r in good]
        ep = [r.eps ** p * r.magnitude() for r in good]
        if implied == "T1.2-case1":
            band = max(e1) / min(e1)
            passed = (not failed and k == 1 and -1 - SLOPE_TOL <= fit.slope <= -1 + SLOPE_TOL
                      and band <= BAND_FACTOR)
            d.update(slope=fit.slope, r_squared=fit.r_squared, eps_lambda_band=band,
                     eps_lambda_min=min(e1), eps_lambda_max=max(e1))
        else:
            c_low = e1[0] / BAND_FACTOR
            c_high = ep[0] * BAND_FACTOR
            passed = (not failed and min(e1) >= c_low and max(ep) <= c_high
                      and -p - SLOPE_TOL <= fit.slope <= -1 + SLOPE_TOL)
            d.update(slope=fit.slope, r_squared=fit.r_squared, lower_constant=c_low,
                     min_eps_lambda=min(e1), upper_constant=c_high, max_eps_p_lambda=max(ep))
        d["pass"] = passed
        det[k] = d
        ok &= passed
    return Verdict(implied, ok, {"per_k": det, "p": p, "slope_tol": SLOPE_TOL,
                                 "band_factor": BAND_FACTOR}, records)


def verdict_no_spectrum(records, sign: str = "+") -> Verdict:
    """Divergence signal when the weight has no part of the requested sign."""
    records = list(records)
    expected = {"NoPositiveSpectrum", "BracketNotFound"} if sign == "+" else \
        {"NoNegativeSpectrum", "BracketNotFound"}
    passed = bool(records) and all(r.error in expected for r in records)
    return Verdict("T1.1-div", passed,
                   {"errors": [r.error or "solved" for r in records]}, records)


# -- proof devices ---------------------------------------------------------------

def testfunction_upper_bound(w: PeriodicWeight, eps: float, p: float, u=None,
                             coef: CoefficientField | None = None, span=(0.0, 1.0),
                             nodes: int | None = None) -> float:
    """Rayleigh quotient of v = u (1 + eps |rho_eps|^(p-2) rho_eps)^(1/p).

    ``u`` defaults to sin^2 on the interval. Needs a smooth mean-zero weight
    and eps ||rho||_inf^(p-1) < 1 so that the bracket stays positive.
    """
    if w.dim != 1:
        raise ValueError("the test-function bound is one-dimensional")
    if abs(w.mean()) > 1e-12:
        raise ValueError("the test-function bound needs a mean-zero weight")
    if not w.is_smooth:
        raise ValueError("the test-function bound needs a smooth weight")
    if not eps * w.linf_bound ** (p - 1) < 1:
        raise ValueError(f"eps={eps:g} too large: eps*||rho||^(p-1) must be < 1")
    a, b = span
    if u is None:
        def u(x):
            return np.sin(np.pi * (x - a) / (b - a)) ** 2
    coef = CoefficientField.isotropic(p, 1) if coef is None else coef.with_p(p)
    n = nodes or max(4001, int(math.ceil(128 * (b - a) / eps)) + 1)
    g = build_grid(1, [a, b], n)
    x = g.interior_nodes()[:, 0]
    r = np.asarray(w(x / eps))
    br = 1.0 + eps * np.abs(r) ** (p - 2) * r
    vals = np.abs(u(x)) * br ** (1.0 / p)
    v = DiscreteFunction(g, vals)
    e, _ = energy_and_gradient(coef, v)
    m = float(lumped_node_weights(project_weight(w, eps, g), g) @ np.abs(vals) ** p)
    if not m > 0:
        raise ValueError("test function has nonpositive weighted mass")
    return e / m


def cube_packing_bound(extents, eps0: float, k: int, eps: float, p: float, w: PeriodicWeight,
                       coef: CoefficientField | None = None, nodes: int = 65) -> float:
    """Upper bound for lambda_k^+ from k disjoint cubes of side eps0.

    Each cube contributes beta' eps0^-p mu_1 of the p-Laplacian on the unit
    cube with weight rho(x0/eps + y eps0/eps); the bound is the k-th smallest
    contribution. Cubes without positive weight contribute +inf.
    """
    ext = np.asarray(extents, dtype=float).reshape(-1, 2)
    dim = ext.shape[0]
    if w.dim != dim:
        raise ValueError("weight and domain dimensions differ")
    counts = [int(math.floor((hi - lo) / eps0 + 1e-12)) for lo, hi in ext]
    if int(np.prod(counts)) < k:
        raise PackingInfeasible(f"only {int(np.prod(counts))} cubes of side {eps0:g} fit, need {k}")
    coef = coef or CoefficientField.isotropic(p, dim)
    beta_p = coef.with_p(p).potential.bounds()[1]
    scaled_eps = eps / eps0
    cache = {}

    def mu_unit(shift):
        key = tuple(np.round(shift, 12))
        if key in cache:
            return cache[key]
        span = [(s * scaled_eps, s * scaled_eps + 1.0) for s in shift]
        try:
            if dim == 1:
                val = eigenvalue_1d(p, 1.0, w, scaled_eps, 1, "+", span[0],
                                    with_function=False).lam
            else:
                prob = Problem(p, w, dim, tuple(span), nodes=(nodes,) * dim)
                val = solve(prob, scaled_eps, [1], "+")[0][0]
        except (NoPositiveSpectrum, BracketNotFound):
            val = math.inf
        cache[key] = val
        return val

    mus = []
    for idx in np.ndindex(*counts):
        corner = ext[:, 0] + eps0 * np.asarray(idx)
        shift = np.mod(corner / eps, 1.0)  # period offset of the cube in units of eps
        shift = np.where(np.isclose(shift, 1.0), 0.0, shift)
        mus.append(mu_unit(shift))
    mus.sort()
    return beta_p * eps0 ** (-p) * mus[k - 1]


def sturm_checks(p: float = 2.0, dim: int = 1, outer=((0.0, 1.0),), inner=((0.0, 0.8),),
                 weight_low: PeriodicWeight | None = None,
                 weight_high: PeriodicWeight | None = None,
                 coef_low: CoefficientField | None = None,
                 coef_high: CoefficientField | None = None,
                 eps: float = 1.0, k_max: int = 5, solver: str = "auto", h: float | None = None,
                 rtol: float = 1e-8) -> tuple:
    """Domain, weight and potential orderings of lambda_1..k_max.

    Returns (domain verdict, weight verdict); the weight verdict also covers
    the potential ordering Phi_high >= Phi_low => lambda(Phi_low) <= lambda(Phi_high).
    ``h`` sets the mesh size of grid solvers so nested boxes share grid lines.
    """
    one = PeriodicWeight.constant(1.0, dim)
    weight_low = weight_low or one
    weight_high = weight_high or weight_low.shifted(1.0)
    coef_low = coef_low or CoefficientField.isotropic(p, dim)
    # A = 2^(2/p) I gives Phi_high = 2 |xi|^p, which doubles every eigenvalue
    coef_high = coef_high or CoefficientField.isotropic(p, dim, 2.0 ** (2.0 / p))
    ks = list(range(1, k_max + 1))
    name = resolve_solver(solver, p, dim, ks)
    h = h or (1.0 / 2000 if dim == 1 else 1.0 / 40)

    def make(extents, w, c):
        ext = np.asarray(extents, float).reshape(-1, 2)
        nodes = tuple(int(round((b - a) / h)) + 1 for a, b in ext)
        return Problem(p, w, dim, tuple(map(tuple, ext)), c, nodes)

    def spectrum(prob):
        return [abs(lam) for lam, _ in solve(prob, eps, ks, "+", name)]

    def compare(small, big, label):
        # small <= big expected for every k
        rows = [{"k": k, "lower": a, "upper": b, "ok": a <= b * (1 + rtol)}
                for k, a, b in zip(ks, small, big)]
        return all(r["ok"] for r in rows), {label: rows}

    base = spectrum(make(outer, weight_low, coef_low))
    inner_vals = spectrum(make(inner, weight_low, coef_low))
    d_ok, d_det = compare(base, inner_vals, "outer<=inner")
    heavy = spectrum(make(outer, weight_high, coef_low))
    w_ok, w_det = compare(heavy, base, "rho_high<=rho_low")
    stiff = spectrum(make(outer, weight_low, coef_high))
    c_ok, c_det = compare(base, stiff, "phi_low<=phi_high")
    recs = []
    common = {"solver": name, "p": p, "dim": dim, "rtol": rtol}
    return (Verdict("sturm-domain", d_ok, {**common, **d_det}, recs),
            Verdict("sturm-weight", w_ok and c_ok, {**common, **w_det, **c_det}, recs))


def weyl_tail_estimate(records, p: float | None = None, dim: int | None = None) -> RateFit:
    """Log-log fit of |lambda_k| against k at fixed eps (needs >= 8 distinct k)."""
    records = [r for r in records if r.ok]
    ks = sorted({r.k for r in records})
    if len(ks) < 8:
        raise ValueError(f"Weyl fit needs at least 8 values of k, got {len(ks)}")
    if len({r.eps for r in records}) != 1:
        raise ValueError("Weyl fit needs a single eps")
    by_k = {r.k: r.magnitude() for r in records}
    slope, icpt, r2 = _lstsq(np.log(ks), np.log([by_k[k] for k in ks]))
    return RateFit(slope, icpt, r2, len(ks), "weyl")


# -- persistence ---------------------------------------------------------------

CSV_COLUMNS = ["epsilon", "k", "sign", "lambda", "solver", "residual", "wall_time"]


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_records_csv(path, records, include_time: bool = True) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(CSV_COLUMNS)
        for r in records:
            wr.writerow([_fmt(r.eps), r.k, r.sign, _fmt(r.lam), r.solver,
                         _fmt(r.residual), _fmt(r.wall_time) if include_time else "0"])


def read_records_csv(path) -> list:
    with open(path, newline="", encoding="ascii") as fh:
        rd = csv.DictReader(fh)
        if rd.fieldnames != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {rd.fieldnames}")
        out = []
        for row in rd:
            lam = float(row["lambda"])
            out.append(SweepRecord(float(row["epsilon"]), int(row["k"]), row["sign"], lam,
                                   row["solver"], float(row["residual"]), float(row["wall_time"]),
                                   "" if math.isfinite(lam) else "failed"))
        return out


def write_verdicts_json(path, verdicts, extra: dict | None = None) -> None:
    doc = {"verdicts": [v.to_dict() for v in verdicts],
           "all_pass": all(v.passed for v in verdicts)}
    if extra:
        doc.update(_jsonable(extra))
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
