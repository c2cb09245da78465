"""Positive and negative spectra of the pencil A u = lam B u at p = 2.

A is symmetric positive definite (stiffness), B symmetric and indefinite
(lumped weighted mass). With A = L L^T, the pencil is congruent to the
symmetric operator C = L^-1 B L^-T whose eigenvalues mu give lam = 1/mu.
Extremal mu of either sign are found by Lanczos with full
reorthogonalisation, locking converged vectors between restarts.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.linalg.lapack import dtbtrs

from .errors import LanczosNotConverged, NotSPD, OnNullCone, sign_error

TOL_RITZ = 1e-8


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    """Banded lower Cholesky factor of a symmetric positive definite matrix."""

    lower: np.ndarray  # LAPACK lower band storage, shape (bw + 1, n)
    n: int
    perm: np.ndarray | None = None  # optional reordering, unused for grid matrices

    @property
    def bandwidth(self) -> int:
        return self.lower.shape[0] - 1

    def _tb(self, b, trans):
        b = np.asarray(b, dtype=float)
        x, info = dtbtrs(self.lower, b.reshape(self.n, -1), uplo="L", trans=trans)
        if info != 0:
            raise NotSPD(f"triangular solve failed with info={info}")
        return x.reshape(b.shape)

    def solve_lower(self, b: np.ndarray) -> np.ndarray:
        """L^-1 b."""
        return self._tb(b, "N")

    def solve_upper(self, b: np.ndarray) -> np.ndarray:
        """L^-T b."""
        return self._tb(b, "T")

    def solve(self, b: np.ndarray) -> np.ndarray:
        """A^-1 b."""
        return self.solve_upper(self.solve_lower(b))

    def dense_lower(self) -> np.ndarray:
        L = np.zeros((self.n, self.n))
        for d in range(self.bandwidth + 1):
            idx = np.arange(self.n - d)
            L[idx + d, idx] = self.lower[d, : self.n - d]
        return L


def factor_spd(A) -> CholeskyFactor:
    """Banded Cholesky factorisation A = L L^T; raises NotSPD on a non-positive pivot."""
    A = sp.csr_matrix(A) if sp.issparse(A) else sp.csr_matrix(np.asarray(A, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    coo = A.tocoo()
    bw = int(np.max(np.abs(coo.row - coo.col))) if coo.nnz else 0
    band = np.zeros((bw + 1, n))
    low = coo.row >= coo.col
    band[(coo.row - coo.col)[low], coo.col[low]] += coo.data[low]
    try:
        lower = sla.cholesky_banded(band, lower=True, check_finite=True)
    except sla.LinAlgError as exc:
        raise NotSPD(str(exc)) from exc
    return CholeskyFactor(lower, n)


@dataclass(frozen=True, eq=False)
class PencilProblem:
    A: sp.csr_matrix
    B: sp.csr_matrix
    factor: CholeskyFactor = field(default=None, repr=False)

    def __post_init__(self):
        A = sp.csr_matrix(self.A)
        B = sp.csr_matrix(self.B)
        if A.shape != B.shape or A.shape[0] != A.shape[1]:
            raise ValueError("pencil matrices must be square with equal shapes")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        if self.factor is None:
            object.__setattr__(self, "factor", factor_spd(A))

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def b_diagonal_only(self) -> bool:
        return self.B.nnz == np.count_nonzero(self.B.diagonal())

    def inertia(self) -> tuple:
        """(#positive, #negative) eigenvalues of the pencil, from the diagonal of B.

        For diagonal B this is Sylvester's law of inertia; for general B the
        inertia is computed densely.
        """
        if self.b_diagonal_only:
            d = self.B.diagonal()
        else:
            d = np.linalg.eigvalsh(self.B.toarray())
        return int(np.sum(d > 0)), int(np.sum(d < 0))

    def spd_probe(self, n_probe: int = 8, seed: int = 0) -> bool:
        r = np.random.default_rng(seed).standard_normal((self.dim, n_probe))
        return bool(np.all(np.einsum("ij,ij->j", r, self.A @ r) > 0))

    def scaled(self, t: float) -> "PencilProblem":
        return PencilProblem(self.A, t * self.B, self.factor)


@dataclass(frozen=True, eq=False)
class SpectrumSlice:
    sign: str
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, A-orthonormal
    ritz_residuals: np.ndarray
    requested: int
    complete: bool  # False when fewer than ``requested`` eigenvalues of this sign exist
    iterations: int = 0


def _operator(prob: PencilProblem):
    fac, B = prob.factor, prob.B

    def apply(x):
        return fac.solve_lower(B @ fac.solve_upper(x))

    return apply


def _lanczos(apply, n, start, locked, n_steps, want_top):
    """One Lanczos run on the complement of ``locked``; returns Ritz pairs sorted by want."""
    def project(v):
        for _ in range(2):
            if locked.shape[1]:
                v = v - locked @ (locked.T @ v)
            if Q_cols:
                Q = np.column_stack(Q_cols)
                v = v - Q @ (Q.T @ v)
        return v

    Q_cols = []
    alpha, beta = [], []
    q = project(start)
    nrm = np.linalg.norm(q)
    if nrm == 0:
        return np.zeros(0), np.zeros((n, 0)), np.zeros(0)
    q /= nrm
    b_prev = 0.0
    for j in range(n_steps):
        Q_cols.append(q)
        r = apply(q)
        a = float(q @ r)
        alpha.append(a)
        r = project(r)
        b = float(np.linalg.norm(r))
        if j == n_steps - 1 or b <= 1e-14 * max(1.0, abs(a), b_prev):
            beta.append(b)
            break
        beta.append(b)
        b_prev = b
        q = r / b
    k = len(alpha)
    T = np.diag(alpha) + np.diag(beta[: k - 1], 1) + np.diag(beta[: k - 1], -1)
    theta, S = np.linalg.eigh(T)
    res = np.abs(beta[k - 1] * S[-1, :])
    order = np.argsort(-theta) if want_top else np.argsort(theta)
    V = np.column_stack(Q_cols) @ S[:, order]
    return theta[order], V, res[order]


def pencil_spectrum(prob: PencilProblem, m: int, sign: str = "+", tol_ritz: float = TOL_RITZ,
                    max_iter: int | None = None, seed: int = 0, block: int = 60) -> SpectrumSlice:
    """The m eigenvalues of the requested sign closest to zero (smallest |lam|)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    n = prob.dim
    n_pos, n_neg = prob.inertia()
    avail = n_pos if sign == "+" else n_neg
    if avail == 0:
        raise sign_error(sign)(f"pencil has no eigenvalues of sign {sign}")
    target = min(m, avail)
    max_iter = 5 * n if max_iter is None else max_iter
    s = 1.0 if sign == "+" else -1.0
    base = _operator(prob)

    def apply(x):
        return s * base(x)

    rng = np.random.default_rng(seed)
    locked = np.zeros((n, 0))
    mus: list = []
    res_locked: list = []
    it = 0
    steps = min(n, max(block, 2 * target + 20))
    complete = True
    while True:
        if it >= max_iter:
            raise LanczosNotConverged(
                f"{len(mus)} of {target} Ritz values locked after {it} iterations",
                np.array(res_locked))
        free = n - locked.shape[1]
        if free == 0:
            break
        theta, V, res = _lanczos(apply, n, rng.standard_normal(n), locked, min(steps, free), True)
        it += max(1, theta.size)
        if theta.size == 0:
            break
        scale = max([abs(theta[0])] + [abs(x) for x in mus])
        tol = tol_ritz * scale
        kth = sorted(mus, reverse=True)[target - 1] if len(mus) >= target else 0.0
        new = 0
        for t, v, r in zip(theta, V.T, res):
            if t <= 0 or r > tol or t <= kth * (1 + 1e-10):
                break
            v = v - locked @ (locked.T @ v)
            locked = np.column_stack([locked, v / np.linalg.norm(v)])
            mus.append(float(t))
            res_locked.append(float(r))
            new += 1
            if len(mus) >= target:
                kth = sorted(mus, reverse=True)[target - 1]
        if new:
            continue
        if res[0] > tol:
            steps = min(n, 2 * steps)
            continue
        # the top of the deflated operator is converged and cannot enter the top set
        if len(mus) < target:
            complete = False  # remaining eigenvalues of this sign are numerically zero
        break
    if not mus:
        raise sign_error(sign)(f"no eigenvalue of sign {sign} resolved")
    target = min(target, len(mus))
    order = np.argsort(mus)[::-1][:target]
    mu = np.array(mus)[order]
    Y = locked[:, order]
    X = prob.factor.solve_upper(Y)  # A-orthonormal because Y is orthonormal
    lam = s / mu
    AX = prob.A @ X
    BX = prob.B @ X
    resid = np.linalg.norm(BX - AX / lam, axis=0) / np.linalg.norm(AX, axis=0)
    return SpectrumSlice(sign, lam, X, resid, m, complete and target == m, it)


def rayleigh_quotient(prob: PencilProblem, v) -> float:
    v = np.asarray(v, dtype=float)
    den = float(v @ (prob.B @ v))
    if den == 0.0:
        raise OnNullCone("v^T B v = 0")
    return float(v @ (prob.A @ v)) / den


def dense_pencil(prob: PencilProblem):
    """All finite pencil eigenvalues by a dense solve (test oracle for small n)."""
    mu = sla.eigh(prob.B.toarray(), prob.A.toarray(), eigvals_only=True)
    mu = mu[np.abs(mu) > 1e-14 * np.max(np.abs(mu))]
    lam = 1.0 / mu
    return np.sort(lam[lam > 0]), np.sort(lam[lam < 0])[::-1]
