"""First eigenvalue for general p by constrained Rayleigh-quotient descent.

Minimises E(u) = integral of Phi(x, grad u) over the discrete set
{M(u) = integral of rho |u|^p = 1}. Each step moves along the Sobolev
gradient of E - lam M (the Euclidean gradient preconditioned by a factored
p = 2 stiffness) and rescales back onto the constraint, which is exact by
p-homogeneity of both E and M.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .discretize import (CoefficientField, DiscreteFunction, Grid, assemble_stiffness,
                         assemble_weighted_mass, energy_and_gradient, lumped_node_weights,
                         weighted_p_mass)
from .errors import (ConstraintUnreachable, DimensionMismatch, MaxIterations, OnNullCone,
                     sign_error)
from .linspec import PencilProblem, factor_spd, pencil_spectrum
from .shoot1d import EigenPair

DELTA_CONE = 1e-8
TOL_PMIN = 1e-8
MAX_ITER = 100_000
PATIENCE = 5


@dataclass(frozen=True)
class PminOptions:
    tol: float = TOL_PMIN
    max_iter: int = MAX_ITER
    delta_cone: float = DELTA_CONE
    patience: int = PATIENCE
    restarts: int = 0  # extra random starts; the minimum over all runs is reported
    seed: int = 0
    init: np.ndarray | None = None  # interior nodal values of a starting iterate
    trace: bool = False


@dataclass
class MinimizerState:
    iterate: DiscreteFunction
    energy: float
    constraint: float
    step: float
    iteration: int


@dataclass
class PminResult:
    state: MinimizerState
    lam: float
    converged: bool
    trace: list = field(default_factory=list)  # (iteration, energy, step)
    upper_bounds_ok: bool = True


def rayleigh_general(c: CoefficientField, rho_field, v: DiscreteFunction,
                     rule: str = "lumped") -> float:
    """phi_energy(v) / weighted_p_mass(v); raises OnNullCone on a zero denominator."""
    e, _ = energy_and_gradient(c, v)
    m = weighted_p_mass(rho_field, v, c.p, rule)
    if m == 0.0:
        raise OnNullCone("weighted p-mass vanishes")
    return e / m


class _Constrained:
    """E, M and their gradients on the interior unknowns."""

    def __init__(self, c: CoefficientField, nodal_w: np.ndarray, g: Grid):
        self.c, self.g, self.p = c, g, c.p
        self.w = nodal_w
        self.cell_A = c.cell_matrices(g)

    def energy(self, u):
        return energy_and_gradient(self.c, DiscreteFunction(self.g, u), self.cell_A)

    def mass(self, u):
        a = np.abs(u)
        return float(self.w @ a ** self.p), self.p * self.w * a ** (self.p - 1) * np.sign(u)


def _descend(P: _Constrained, solve, u0: np.ndarray, opts: PminOptions) -> PminResult:
    p = P.p
    m0, _ = P.mass(u0)
    u = u0 / m0 ** (1.0 / p)
    e, ge = P.energy(u)
    m, gm = P.mass(u)
    d = solve(ge - e * gm)
    t = 1.0 / max(np.linalg.norm(d), 1e-300)
    trace = [(0, e, t)] if opts.trace else []
    quiet = 0
    bounds_ok = True
    for it in range(1, opts.max_iter + 1):
        accepted = False
        for _ in range(80):
            v = u - t * d
            mv, _ = P.mass(v)
            if mv < opts.delta_cone:
                t *= 0.5
                continue
            v = v / mv ** (1.0 / p)
            ev, gev = P.energy(v)
            if ev <= e * (1 + 1e-15):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # no descent along the current direction at any resolvable step
            st = MinimizerState(DiscreteFunction(P.g, u), e, 1.0, t, it)
            return PminResult(st, e, True, trace, bounds_ok)
        rel = abs(e - ev) / abs(ev)
        bounds_ok &= ev <= e * (1 + 1e-15)
        u, e, ge = v, ev, gev
        m, gm = P.mass(u)
        d = solve(ge - e * gm)
        if opts.trace:
            trace.append((it, e, t))
        t *= 2.0
        quiet = quiet + 1 if rel <= opts.tol else 0
        if quiet >= opts.patience:
            st = MinimizerState(DiscreteFunction(P.g, u), e, m, t, it)
            return PminResult(st, e, True, trace, bounds_ok)
    st = MinimizerState(DiscreteFunction(P.g, u), e, m, t, opts.max_iter)
    raise MaxIterations(f"no convergence in {opts.max_iter} iterations (lambda={e:.10g})",
                        PminResult(st, e, False, trace, bounds_ok))


def _sine_start(g: Grid) -> np.ndarray:
    x = g.interior_nodes()
    lo, ext = np.asarray(g.lo), np.asarray(g.extents)
    return np.prod(np.sin(np.pi * (x - lo) / ext), axis=1)


def _linear_start(c: CoefficientField, field_: np.ndarray, g: Grid, K) -> np.ndarray | None:
    try:
        prob = PencilProblem(K, assemble_weighted_mass(field_, g))
        return pencil_spectrum(prob, 1, "+").eigenvectors[:, 0]
    except Exception:  # the start is a heuristic; any failure falls back to sine modes
        return None


def first_eigenvalue_pmin(c: CoefficientField, rho_field, g: Grid, sign: str = "+",
                          opts: PminOptions | None = None) -> EigenPair:
    """lambda_1 of the requested sign for the cellwise weight ``rho_field`` on grid g."""
    opts = opts or PminOptions()
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    field_ = np.asarray(rho_field, dtype=float)
    if field_.shape != g.cell_shape:
        raise DimensionMismatch("weight field does not match the grid cells")
    if c.dim != g.dim:
        raise DimensionMismatch("coefficient and grid dimensions differ")
    if sign == "-":
        field_ = -field_
    nodal = lumped_node_weights(field_, g)
    if not np.any(nodal > 0):
        raise sign_error(sign)("projected weight never has the requested sign")
    K = assemble_stiffness(c.with_p(2.0), g)
    fac = factor_spd(K)
    P = _Constrained(c, nodal, g)
    rng = np.random.default_rng(opts.seed)

    def feasible(u):
        return u is not None and P.mass(u)[0] > opts.delta_cone

    starts = []
    if opts.init is not None:
        starts.append(np.asarray(opts.init, dtype=float).ravel())
    else:
        lin = _linear_start(c, field_, g, K)
        starts.append(lin if feasible(lin) else _sine_start(g))
    pos = nodal > 0
    for _ in range(opts.restarts):
        starts.append(np.where(pos, rng.random(g.n_interior), 0.0))
    results = []
    for u0 in starts:
        tries = 0
        while not feasible(u0):
            if tries >= 10:
                raise ConstraintUnreachable("no start with positive weighted mass in 10 attempts")
            u0 = np.where(pos, rng.random(g.n_interior), 0.0)
            tries += 1
        results.append(_descend(P, fac.solve, u0, opts))
    best = min(results, key=lambda r: r.lam)
    u = best.state.iterate
    lam = best.lam if sign == "+" else -best.lam
    return EigenPair(lam, 1, sign, u, residual=_residual(P, fac.solve, u.values, best.lam),
                     bisection_width=0.0, solver="pmin",
                     info={"iterations": best.state.iteration, "converged": best.converged,
                           "n_runs": len(results), "multi_restart": len(results) > 1,
                           "descent_ok": best.upper_bounds_ok, "trace": best.trace})


def _residual(P: _Constrained, solve, u, lam) -> float:
    """Relative size of the preconditioned Euler-Lagrange residual."""
    _, ge = P.energy(u)
    _, gm = P.mass(u)
    r = ge - lam * gm
    return float(np.sqrt(abs(r @ solve(r))) / max(np.sqrt(abs(ge @ solve(ge))), 1e-300))


def write_trace(path, pair: EigenPair) -> None:
    """CSV of (iteration, energy, step) for a run made with ``trace=True``."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["iteration", "energy", "step"])
        for i, e, s in pair.info.get("trace", []):
            wr.writerow([i, f"{e:.17g}", f"{s:.17g}"])
