"""Structured grids on boxes, discrete Dirichlet functions and assembly.

Gradients are reconstructed per cell from the cell-edge differences that meet
at each cell corner (one corner in 1-D, four in 2-D) and Phi is averaged over
the corners. At p = 2 and diagonal A this is exactly the 3-/5-point stencil,
and the same path serves the general-p energy, so the p = 2 stiffness form and
``phi_energy`` agree to roundoff.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import DimensionMismatch, UnresolvedWeight
from .weights import PeriodicWeight, scaled_box_average


# -- coefficients -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Model operator a(x, xi) = (A xi.xi)^((p-2)/2) A xi with Phi = (A xi.xi)^(p/2).

    ``entries`` is an N x N nested tuple whose items are floats or
    PeriodicWeight fields evaluated at x (the operator does not depend on eps).
    """

    p: float
    dim: int
    entries: tuple

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if len(self.entries) != self.dim or any(len(r) != self.dim for r in self.entries):
            raise DimensionMismatch("coefficient matrix has wrong shape")
        for i in range(self.dim):
            for j in range(i):
                a, b = self.entries[i][j], self.entries[j][i]
                if a is not b and not (np.isscalar(a) and np.isscalar(b) and a == b):
                    raise ValueError("coefficient matrix must be symmetric")

    @classmethod
    def isotropic(cls, p: float, dim: int = 1, scale=1.0) -> "CoefficientField":
        """A(x) = scale * I; ``scale`` may be a float or a PeriodicWeight."""
        ent = tuple(tuple(scale if i == j else 0.0 for j in range(dim)) for i in range(dim))
        return cls(float(p), dim, ent)

    @classmethod
    def constant(cls, p: float, matrix) -> "CoefficientField":
        m = np.asarray(matrix, dtype=float)
        if m.ndim == 0:
            m = m.reshape(1, 1)
        return cls(float(p), m.shape[0], tuple(tuple(float(v) for v in row) for row in m))

    @property
    def is_constant(self) -> bool:
        return all(np.isscalar(e) for row in self.entries for e in row)

    def with_p(self, p: float) -> "CoefficientField":
        return CoefficientField(float(p), self.dim, self.entries)

    def matrix_at(self, x) -> np.ndarray:
        """A at points x of shape (..., N); returns (..., N, N)."""
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.dim:
            raise DimensionMismatch("point dimension does not match coefficient field")
        out = np.empty(x.shape[:-1] + (self.dim, self.dim))
        for i, row in enumerate(self.entries):
            for j, e in enumerate(row):
                out[..., i, j] = e(x) if isinstance(e, PeriodicWeight) else e
        return out

    def ellipticity(self, samples: int = 64) -> tuple:
        """(alpha, beta) with alpha|xi|^2 <= A xi.xi <= beta|xi|^2, sampled over Y."""
        if self.is_constant:
            ev = np.linalg.eigvalsh(self.matrix_at(np.zeros(self.dim)))
        else:
            pts = (np.arange(samples) + 0.5) / samples
            grid = np.stack(np.meshgrid(*([pts] * self.dim), indexing="ij"), axis=-1)
            ev = np.linalg.eigvalsh(self.matrix_at(grid).reshape(-1, self.dim, self.dim))
        alpha, beta = float(np.min(ev)), float(np.max(ev))
        if not alpha > 0:
            raise ValueError("coefficient matrix is not uniformly positive definite")
        return alpha, beta

    @property
    def alpha(self) -> float:
        return self.ellipticity()[0]

    @property
    def beta(self) -> float:
        return self.ellipticity()[1]

    def a(self, x, xi) -> np.ndarray:
        A = self.matrix_at(x)
        xi = np.asarray(xi, dtype=float)
        Axi = np.einsum("...ij,...j->...i", A, xi)
        q = np.einsum("...i,...i->...", Axi, xi)
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = np.where(q > 0, q ** (0.5 * self.p - 1.0), 0.0)
        return fac[..., None] * Axi

    def phi(self, x, xi) -> np.ndarray:
        A = self.matrix_at(x)
        xi = np.asarray(xi, dtype=float)
        q = np.einsum("...i,...ij,...j->...", xi, A, xi)
        return np.maximum(q, 0.0) ** (0.5 * self.p)

    @property
    def potential(self) -> "PotentialField":
        return PotentialField(self)

    def cell_matrices(self, grid: "Grid"):
        """(a11, a12, a22) at cell centres (a12, a22 are None in 1-D)."""
        A = self.matrix_at(grid.cell_centers())
        if self.dim == 1:
            return np.ascontiguousarray(A[..., 0, 0]), None, None
        return (np.ascontiguousarray(A[..., 0, 0]), np.ascontiguousarray(A[..., 0, 1]),
                np.ascontiguousarray(A[..., 1, 1]))

    def to_dict(self) -> dict:
        def enc(e):
            return e.to_dict() if isinstance(e, PeriodicWeight) else float(e)
        return {"p": self.p, "matrix": [[enc(e) for e in row] for row in self.entries]}

    @classmethod
    def from_dict(cls, d: dict, p: float | None = None, dim: int | None = None):
        p = float(d.get("p", p))
        if "matrix" in d:
            ent = tuple(tuple(PeriodicWeight.from_dict(e) if isinstance(e, dict) else float(e)
                              for e in row) for row in d["matrix"])
            return cls(p, len(ent), ent)
        scale = d.get("scale", 1.0)
        scale = PeriodicWeight.from_dict(scale) if isinstance(scale, dict) else float(scale)
        return cls.isotropic(p, int(d.get("dimension", dim or 1)), scale)


@dataclass(frozen=True)
class PotentialField:
    """View of a CoefficientField exposing Phi and its bounds."""

    field: CoefficientField

    def __call__(self, x, xi):
        return self.field.phi(x, xi)

    def grad(self, x, xi):
        return self.field.p * self.field.a(x, xi)

    def bounds(self) -> tuple:
        """(alpha', beta') with alpha'|xi|^p <= Phi <= beta'|xi|^p."""
        alpha, beta = self.field.ellipticity()
        return alpha ** (0.5 * self.field.p), beta ** (0.5 * self.field.p)


# -- grids --------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    dim: int
    lo: tuple
    hi: tuple
    n: tuple  # nodes per axis, boundary included

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("grids are 1-D or 2-D")
        if len(self.lo) != self.dim or len(self.hi) != self.dim or len(self.n) != self.dim:
            raise DimensionMismatch("grid extents do not match the dimension")
        if any(b <= a for a, b in zip(self.lo, self.hi)):
            raise ValueError("degenerate grid extents")
        if any(k < 3 for k in self.n):
            raise ValueError("need at least 3 nodes per axis")

    @property
    def h(self) -> tuple:
        return tuple((b - a) / (k - 1) for a, b, k in zip(self.lo, self.hi, self.n))

    @property
    def cell_shape(self) -> tuple:
        return tuple(k - 1 for k in self.n)

    @property
    def interior_shape(self) -> tuple:
        return tuple(k - 2 for k in self.n)

    @property
    def n_interior(self) -> int:
        return int(np.prod(self.interior_shape))

    @property
    def cell_measure(self) -> float:
        return float(np.prod(self.h))

    @property
    def extents(self) -> tuple:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    def axis(self, d: int) -> np.ndarray:
        return np.linspace(self.lo[d], self.hi[d], self.n[d])

    def nodes(self) -> np.ndarray:
        """All node coordinates, shape n + (N,)."""
        return np.stack(np.meshgrid(*[self.axis(d) for d in range(self.dim)], indexing="ij"),
                        axis=-1)

    def interior_nodes(self) -> np.ndarray:
        sl = tuple(slice(1, -1) for _ in range(self.dim))
        return self.nodes()[sl].reshape(-1, self.dim)

    def cell_bounds(self):
        """(lo, hi) corner arrays of every cell, shape cell_shape + (N,)."""
        lo = np.stack(np.meshgrid(*[self.axis(d)[:-1] for d in range(self.dim)], indexing="ij"),
                      axis=-1)
        hi = np.stack(np.meshgrid(*[self.axis(d)[1:] for d in range(self.dim)], indexing="ij"),
                      axis=-1)
        return lo, hi

    def cell_centers(self) -> np.ndarray:
        lo, hi = self.cell_bounds()
        return 0.5 * (lo + hi)

    def interior_index(self) -> np.ndarray:
        """Map full node multi-index -> unknown number (-1 on the boundary)."""
        idx = -np.ones(self.n, dtype=np.intp)
        sl = tuple(slice(1, -1) for _ in range(self.dim))
        idx[sl] = np.arange(self.n_interior).reshape(self.interior_shape)
        return idx

    def full(self, values: np.ndarray) -> np.ndarray:
        """Embed interior values into the full nodal array with zero trace."""
        out = np.zeros(self.n)
        sl = tuple(slice(1, -1) for _ in range(self.dim))
        out[sl] = np.asarray(values, dtype=float).reshape(self.interior_shape)
        return out

    def interpolate(self, f) -> "DiscreteFunction":
        """Nodal interpolant of f on the interior nodes (boundary forced to 0)."""
        x = self.interior_nodes()
        vals = f(x[:, 0]) if self.dim == 1 else f(x[:, 0], x[:, 1])
        return DiscreteFunction(self, np.broadcast_to(np.asarray(vals, float), (self.n_interior,)))

    def to_dict(self) -> dict:
        return {"dimension": self.dim, "lo": list(self.lo), "hi": list(self.hi), "nodes": list(self.n)}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(int(d["dimension"]), tuple(map(float, d["lo"])), tuple(map(float, d["hi"])),
                   tuple(map(int, d["nodes"])))


def build_grid(dimension: int, extents, nodes_per_axis) -> Grid:
    """Uniform grid on a box. ``extents`` is (a, b) for every axis or one pair per axis."""
    ext = np.asarray(extents, dtype=float)
    if ext.ndim == 1:
        ext = np.tile(ext, (dimension, 1))
    if ext.shape != (dimension, 2):
        raise DimensionMismatch(f"extents {extents!r} do not describe a {dimension}-D box")
    if np.isscalar(nodes_per_axis):
        nodes_per_axis = [nodes_per_axis] * dimension
    return Grid(dimension, tuple(ext[:, 0]), tuple(ext[:, 1]), tuple(int(k) for k in nodes_per_axis))


@dataclass(frozen=True, eq=False)
class DiscreteFunction:
    grid: Grid
    values: np.ndarray  # interior nodal values, length grid.n_interior

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size != self.grid.n_interior:
            raise DimensionMismatch(
                f"{v.size} values for a grid with {self.grid.n_interior} interior nodes")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def full(self) -> np.ndarray:
        return self.grid.full(self.values)

    def __mul__(self, t):
        return DiscreteFunction(self.grid, t * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return DiscreteFunction(self.grid, -self.values)

    def __call__(self, x):
        """Piecewise (multi)linear evaluation at points x."""
        from scipy.interpolate import RegularGridInterpolator
        axes = [self.grid.axis(d) for d in range(self.grid.dim)]
        x = np.asarray(x, dtype=float)
        if self.grid.dim == 1:
            return np.interp(x, axes[0], self.full())
        return RegularGridInterpolator(axes, self.full())(x)

    def to_text(self) -> str:
        """Two-column (x, u) text for 1-D functions, three columns in 2-D."""
        pts = self.grid.nodes().reshape(-1, self.grid.dim)
        cols = np.column_stack([pts, self.full().ravel()])
        return "\n".join(" ".join(f"{v:.17g}" for v in row) for row in cols) + "\n"


# -- weights on grids ---------------------------------------------------------

def project_weight(w: PeriodicWeight, eps: float, g: Grid, method: str = "exact",
                   points_per_period: int = 4, budget: int = 4096) -> np.ndarray:
    """Per-cell averages of rho(x/eps), shape ``g.cell_shape``.

    ``method="exact"`` integrates both weight families in closed form.
    ``method="quadrature"`` uses a composite midpoint rule with at least
    ``points_per_period`` points per period per axis and raises
    UnresolvedWeight when that needs more than ``budget`` points per axis.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if w.dim != g.dim:
        raise DimensionMismatch("weight and grid dimensions differ")
    lo, hi = g.cell_bounds()
    if method == "exact":
        return scaled_box_average(w, eps, lo, hi)
    if method != "quadrature":
        raise ValueError(f"unknown projection method {method!r}")
    need = [max(1, int(np.ceil(points_per_period * hd / eps))) for hd in g.h]
    if max(need) > budget:
        raise UnresolvedWeight(
            f"eps={eps:g} needs {max(need)} points per cell axis, budget is {budget}")
    acc = np.zeros(g.cell_shape)
    offs = [(np.arange(k) + 0.5) / k for k in need]
    for o in np.stack(np.meshgrid(*offs, indexing="ij"), axis=-1).reshape(-1, g.dim):
        acc += w((lo + o * (hi - lo)) / eps)
    return acc / np.prod(need)


def lumped_node_weights(field: np.ndarray, g: Grid) -> np.ndarray:
    """Interior diagonal of the lumped weighted mass: sum of adjacent cell shares."""
    share = np.asarray(field, dtype=float) * g.cell_measure / 2 ** g.dim
    node = np.zeros(g.n)
    if g.dim == 1:
        node[:-1] += share
        node[1:] += share
    else:
        node[:-1, :-1] += share
        node[1:, :-1] += share
        node[:-1, 1:] += share
        node[1:, 1:] += share
    sl = tuple(slice(1, -1) for _ in range(g.dim))
    return node[sl].ravel()


def _cell_center_values(v: DiscreteFunction) -> np.ndarray:
    uf = v.full()
    if v.grid.dim == 1:
        return 0.5 * (uf[:-1] + uf[1:])
    return 0.25 * (uf[:-1, :-1] + uf[1:, :-1] + uf[:-1, 1:] + uf[1:, 1:])


def weighted_p_mass(field: np.ndarray, v: DiscreteFunction, p: float, rule: str = "midpoint"):
    """Integral of rho |v|^p.

    ``rule="midpoint"``: cell-centre value of |v|^p times the cell weight.
    ``rule="lumped"``: nodal |v_i|^p against the lumped node weights, which at
    p = 2 is exactly the lumped-mass quadratic form.
    """
    field = np.asarray(field, dtype=float)
    if field.shape != v.grid.cell_shape:
        raise DimensionMismatch("cell field and function live on different grids")
    if rule == "midpoint":
        return float(np.sum(field * np.abs(_cell_center_values(v)) ** p) * v.grid.cell_measure)
    if rule == "lumped":
        return float(lumped_node_weights(field, v.grid) @ (np.abs(v.values) ** p))
    raise ValueError(f"unknown mass rule {rule!r}")


# -- energies -----------------------------------------------------------------

def energy_and_gradient(c: CoefficientField, v: DiscreteFunction, cell_A=None):
    """E(v) = integral of Phi(x, grad v) and dE/dv on the interior unknowns."""
    g = v.grid
    if c.dim != g.dim:
        raise DimensionMismatch("coefficient and grid dimensions differ")
    a11, a12, a22 = cell_A if cell_A is not None else c.cell_matrices(g)
    uf = v.full()
    sl = tuple(slice(1, -1) for _ in range(g.dim))
    if g.dim == 1:
        e, gf = kernels.energy_grad_1d(uf, g.h[0], a11, c.p)
    else:
        e, gf = kernels.energy_grad_2d(uf, g.h[0], g.h[1], a11, a12, a22, c.p)
    return float(e), gf[sl].ravel()


def phi_energy(c: CoefficientField, v: DiscreteFunction) -> float:
    return energy_and_gradient(c, v)[0]


def _corner_operators(g: Grid):
    """Sparse maps from interior unknowns to per-cell corner gradients.

    Yields (weight, [G_x, G_y, ...]) with one entry per corner rule point.
    """
    keep = g.interior_index().ravel()
    cols = keep >= 0

    def restrict(M):
        return M.tocsc()[:, np.flatnonzero(cols)].tocsr()

    if g.dim == 1:
        n = g.n[0]
        D = sp.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n)) / g.h[0]
        yield g.cell_measure, [restrict(D)]
        return
    nx, ny = g.n
    hx, hy = g.h
    ix = np.arange(nx * ny).reshape(nx, ny)
    cx, cy = nx - 1, ny - 1
    cell = np.arange(cx * cy).reshape(cx, cy)

    def diff_op(a_nodes, b_nodes, h):
        r = np.concatenate([cell.ravel(), cell.ravel()])
        cidx = np.concatenate([b_nodes.ravel(), a_nodes.ravel()])
        vals = np.concatenate([np.full(cell.size, 1.0 / h), np.full(cell.size, -1.0 / h)])
        return sp.csr_matrix((vals, (r, cidx)), shape=(cell.size, nx * ny))

    bottom = diff_op(ix[:-1, :-1], ix[1:, :-1], hx)
    top = diff_op(ix[:-1, 1:], ix[1:, 1:], hx)
    left = diff_op(ix[:-1, :-1], ix[:-1, 1:], hy)
    right = diff_op(ix[1:, :-1], ix[1:, 1:], hy)
    for gx, gy in ((bottom, left), (bottom, right), (top, left), (top, right)):
        yield 0.25 * g.cell_measure, [restrict(gx), restrict(gy)]


def assemble_stiffness(c: CoefficientField, g: Grid) -> sp.csr_matrix:
    """Matrix K with v.K v = phi_energy(c, v) at p = 2."""
    if c.p != 2:
        raise ValueError(f"stiffness assembly needs p = 2, got p = {c.p}")
    a11, a12, a22 = c.cell_matrices(g)
    K = sp.csr_matrix((g.n_interior, g.n_interior))
    for wq, G in _corner_operators(g):
        if g.dim == 1:
            K = K + G[0].T @ sp.diags(wq * a11.ravel()) @ G[0]
        else:
            gx, gy = G
            d11, d12, d22 = (sp.diags(wq * a.ravel()) for a in (a11, a12, a22))
            K = K + gx.T @ d11 @ gx + gx.T @ d12 @ gy + gy.T @ d12 @ gx + gy.T @ d22 @ gy
    K = K.tocsr()
    K.eliminate_zeros()
    return K


def assemble_weighted_mass(field: np.ndarray, g: Grid) -> sp.csr_matrix:
    """Lumped (diagonal) weighted mass; indefinite when the weight changes sign."""
    return sp.diags(lumped_node_weights(field, g)).tocsr()


def is_symmetric(M, tol: float = 0.0) -> bool:
    d = abs(M - M.T)
    return (d.max() if d.nnz else 0.0) <= tol


# -- coordinate text format ------------------------------------------------------

def write_triplets(path, M) -> None:
    """Write a sparse matrix as ``i j value`` lines (0-based) after a header."""
    C = sp.coo_matrix(M)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# {C.shape[0]} {C.shape[1]} {C.nnz}\n")
        for i, j, v in zip(C.row, C.col, C.data):
            fh.write(f"{i} {j} {v:.17g}\n")


def read_triplets(path) -> sp.csr_matrix:
    with open(path, encoding="ascii") as fh:
        header = fh.readline().lstrip("#").split()
        nr, nc = int(header[0]), int(header[1])
        data = np.loadtxt(fh, ndmin=2)
    if data.size == 0:
        return sp.csr_matrix((nr, nc))
    return sp.csr_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))),
                         shape=(nr, nc))


def grid_for_box(dim: int, extents: Sequence, h: float) -> Grid:
    """Grid with mesh size close to h on each axis."""
    ext = np.asarray(extents, dtype=float)
    if ext.ndim == 1:
        ext = np.tile(ext, (dim, 1))
    nodes = [max(3, int(round((b - a) / h)) + 1) for a, b in ext]
    return build_grid(dim, ext, nodes)
