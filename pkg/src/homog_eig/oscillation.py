"""Oscillatory-integral inequalities for mean-zero periodic weights.

For g Y-periodic with zero mean and v in W_0^{1,p},

    |integral g(x/eps)|v|^p| <= ||g||_inf * p * c1 * eps * ||v||_p^(p-1) * ||grad v||_p

where c1 bounds the L^1 Poincare constant of the unit cube. The check
integrates the left side for the (multi)linear interpolant of v on sub-cells
that resolve the period eps.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .discretize import DiscreteFunction, Grid
from .weights import TAU_MEAN, PeriodicWeight

POINTS_PER_PERIOD = 16
GAUSS_ORDER = 4


@dataclass(frozen=True)
class OscillationReport:
    eps: float
    lhs: float
    rhs: float
    ratio: float
    ok: bool

    def row(self) -> list:
        return [f"{self.eps:.17g}", f"{self.lhs:.17g}", f"{self.rhs:.17g}",
                f"{self.ratio:.17g}", str(self.ok).lower()]


def poincare_constant_bound(dim: int) -> float:
    """Upper bound for the L^1 Poincare constant of the unit cube: half its diameter."""
    if dim not in (1, 2):
        raise ValueError(f"Poincare bound is provided for N = 1, 2, got N = {dim}")
    return math.sqrt(dim) / 2.0


def _axis_rule(g: Grid, d: int, resolution: float, order: int):
    """Gauss points and weights along axis d, as (cell index, local s in [0,1], weight)."""
    h = g.h[d]
    ns = max(1, int(math.ceil(h / resolution - 1e-12)))
    gx, gw = np.polynomial.legendre.leggauss(order)
    gx = 0.5 * (gx + 1.0)
    s = ((np.arange(ns)[:, None] + gx[None, :]) / ns).ravel()
    w = np.tile(0.5 * gw / ns, ns) * h
    ncell = g.n[d] - 1
    cell = np.repeat(np.arange(ncell), s.size)
    return cell, np.tile(s, ncell), np.tile(w, ncell)


def quadrature(v: DiscreteFunction, resolution: float, order: int = GAUSS_ORDER):
    """Points x (M, N), weights (M,), v(x) (M,) and grad v(x) (M, N) of the interpolant."""
    g = v.grid
    uf = v.full()
    if g.dim == 1:
        c, s, w = _axis_rule(g, 0, resolution, order)
        x = g.lo[0] + (c + s) * g.h[0]
        val = (1 - s) * uf[c] + s * uf[c + 1]
        grad = ((uf[c + 1] - uf[c]) / g.h[0])[:, None]
        return x[:, None], w, val, grad
    cx, sx, wx = _axis_rule(g, 0, resolution, order)
    cy, sy, wy = _axis_rule(g, 1, resolution, order)
    i, j = np.meshgrid(np.arange(cx.size), np.arange(cy.size), indexing="ij")
    i, j = i.ravel(), j.ravel()
    ci, cj, s, t = cx[i], cy[j], sx[i], sy[j]
    u00, u10 = uf[ci, cj], uf[ci + 1, cj]
    u01, u11 = uf[ci, cj + 1], uf[ci + 1, cj + 1]
    val = (1 - s) * (1 - t) * u00 + s * (1 - t) * u10 + (1 - s) * t * u01 + s * t * u11
    gx_ = ((1 - t) * (u10 - u00) + t * (u11 - u01)) / g.h[0]
    gy_ = ((1 - s) * (u01 - u00) + s * (u11 - u10)) / g.h[1]
    x = np.column_stack([g.lo[0] + (ci + s) * g.h[0], g.lo[1] + (cj + t) * g.h[1]])
    return x, wx[i] * wy[j], val, np.column_stack([gx_, gy_])


def _check_mean_zero(g: PeriodicWeight) -> None:
    if abs(g.mean()) > TAU_MEAN:
        raise ValueError(f"oscillation inequality needs a mean-zero weight, mean is {g.mean():g}")


def oscillation_check(g: PeriodicWeight, eps: float, v: DiscreteFunction, p: float,
                      c1: float | None = None,
                      points_per_period: int = POINTS_PER_PERIOD) -> OscillationReport:
    """Compare |integral g(x/eps)|v|^p| with its certified bound; never raises on failure."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if g.dim != v.grid.dim:
        raise ValueError("weight and function dimensions differ")
    _check_mean_zero(g)
    c1 = poincare_constant_bound(g.dim) if c1 is None else c1
    x, w, val, grad = quadrature(v, eps / points_per_period)
    gv = np.asarray(g(x / eps), dtype=float).reshape(-1)
    av = np.abs(val)
    lhs = abs(float(np.sum(w * gv * av ** p)))
    norm_v = float(np.sum(w * av ** p)) ** (1.0 / p)
    norm_grad = float(np.sum(w * np.linalg.norm(grad, axis=1) ** p)) ** (1.0 / p)
    rhs = g.linf_bound * p * c1 * eps * norm_v ** (p - 1) * norm_grad
    ok = lhs <= rhs * (1 + 1e-10)
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return OscillationReport(float(eps), lhs, rhs, ratio, bool(ok))


def weak_star_gap(w: PeriodicWeight, eps: float, test_set, symmetric: bool = True,
                  points_per_period: int = POINTS_PER_PERIOD) -> float:
    """sup over the test set of integral (rho(x/eps) - mean) v.

    With ``symmetric`` the set is closed under v -> -v, so the sup is the
    largest absolute integral.
    """
    test_set = list(test_set)
    if not test_set:
        raise ValueError("test set must be nonempty")
    mean = w.mean()
    vals = []
    for v in test_set:
        x, q, val, _ = quadrature(v, eps / points_per_period)
        vals.append(float(np.sum(q * (np.asarray(w(x / eps)).reshape(-1) - mean) * val)))
    vals = np.abs(vals) if symmetric else np.asarray(vals)
    return float(np.max(vals))


def write_reports(path, reports) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["eps", "lhs", "rhs", "ratio", "ok"])
        for r in reports:
            wr.writerow(r.row())
