"""Independent reference computations used by the tests.

Nothing here calls the package solvers: each oracle is built from closed
forms or from a separate elementary algorithm.
"""
import math

import numpy as np
from scipy.optimize import brentq


def pi_p(p):
    """Half-period of the p-sine: 2 pi / (p sin(pi / p))."""
    return 2 * math.pi / (p * math.sin(math.pi / p))


def plap_eigenvalue(p, k=1, length=1.0, c=1.0, rho=1.0):
    """k-th Dirichlet eigenvalue of -(c|u'|^(p-2)u')' = lam rho |u|^(p-2)u on an interval."""
    return c / rho * (p - 1) * (k * pi_p(p) / length) ** p


def cell_averages(f, a, b, n_cells, per_cell=64):
    """Midpoint-rule cell averages of f on a uniform partition of [a, b]."""
    h = (b - a) / n_cells
    off = (np.arange(per_cell) + 0.5) / per_cell
    x = a + (np.arange(n_cells)[:, None] + off[None, :]) * h
    return f(x).mean(axis=1)


def fd_pencil(f, a=0.0, b=1.0, n_cells=4000, per_cell=64):
    """Tridiagonal stiffness (diag, off) and lumped mass diagonal for -u'' = lam f u."""
    h = (b - a) / n_cells
    avg = cell_averages(f, a, b, n_cells, per_cell)
    mass = 0.5 * h * (avg[:-1] + avg[1:])
    m = n_cells - 1
    return np.full(m, 2.0 / h), np.full(m - 1, -1.0 / h), mass


def sturm_count(diag, off, mass, lam):
    """Negative pivots of K - lam B (LDL^T recursion) = # positive pencil eigenvalues < lam."""
    count = 0
    d_prev = 1.0
    for i in range(diag.size):
        d = diag[i] - lam * mass[i]
        if i > 0:
            d -= off[i - 1] ** 2 / d_prev
        if d == 0.0:
            d = -1e-300
        if d < 0:
            count += 1
        d_prev = d
    return count


def fd_eigenvalue(diag, off, mass, k, sign="+", tol=1e-12):
    """k-th positive (or negative) pencil eigenvalue by bisection on the Sturm count."""
    s = 1.0 if sign == "+" else -1.0
    ms = s * mass
    lo, hi = 0.0, 1.0
    while sturm_count(diag, off, ms, hi) < k:
        lo, hi = hi, 2 * hi
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if sturm_count(diag, off, ms, mid) >= k:
            hi = mid
        else:
            lo = mid
    return s * 0.5 * (lo + hi)


def inverse_iteration_plap(p, n=4000, iters=400, tol=1e-13):
    """First eigenvalue of the 1-D p-Laplacian on (0,1) by nonlinear inverse iteration.

    Each step solves -(phi_p(v'))' = phi_p(u) exactly on the mesh: phi_p(v') = C - F
    with F the cumulative integral of the right side and C fixed by v(1) = 0.
    """
    q = p / (p - 1)
    h = 1.0 / n
    x = np.linspace(0, 1, n + 1)
    u = np.sin(np.pi * x)
    lam = None

    def phi(t, r):
        return np.sign(t) * np.abs(t) ** (r - 1)

    for _ in range(iters):
        f = phi(u, p)
        # F at cell midpoints (trapezoid cumulative integral)
        F_nodes = np.concatenate([[0.0], np.cumsum(0.5 * h * (f[1:] + f[:-1]))])
        F_mid = 0.5 * (F_nodes[1:] + F_nodes[:-1])

        def end(C):
            return np.sum(phi(C - F_mid, q)) * h

        C = brentq(end, F_mid.min() - 1, F_mid.max() + 1, xtol=1e-15)
        dv = phi(C - F_mid, q)
        v = np.concatenate([[0.0], np.cumsum(dv * h)])
        v[-1] = 0.0
        num = np.sum(np.abs(dv) ** p) * h
        den = np.sum(np.abs(v) ** p) * h
        new = num / den
        u = v / np.max(np.abs(v))
        if lam is not None and abs(new - lam) <= tol * new:
            lam = new
            break
        lam = new
    return lam


def sign_changes(values, rel=1e-8):
    """Sign changes of a sampled function, ignoring entries below rel * max."""
    v = np.asarray(values)
    v = v[np.abs(v) > rel * np.max(np.abs(v))]
    return int(np.sum(np.sign(v[1:]) != np.sign(v[:-1])))
