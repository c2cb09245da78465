"""One-dimensional eigenvalues for general p by shooting and zero counting.

The equation -(c(x)|u'|^(p-2)u')' = lam rho(x/eps)|u|^(p-2)u on (a, b) with
u(a) = u(b) = 0 is integrated as a first-order system in (u, w) with the flux
w = c|u'|^(p-2)u'. The k-th eigenvalue of either sign is the value of lam at
which the zero count of the shot from (u, w) = (0, 1) jumps from k-1 to k.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .discretize import CoefficientField, DiscreteFunction, build_grid
from .errors import BracketNotFound, IntegrationError, sign_error
from .weights import PeriodicWeight, scaled_box_average

TOL_ODE = 1e-10
TOL_EIG = 1e-9
LAMBDA0 = 1.0
LAMBDA_MAX = 1e12
ENDPOINT_DELTA = 1e-9  # zeros within this fraction of the length of b count as u(b) = 0
SAMPLES = 1001
MAX_STEPS = 5_000_000

_STATUS = {kernels.STEP_UNDERFLOW: "step-size underflow", kernels.BLOW_UP: "blow-up",
           kernels.MAX_STEPS: "step budget exhausted"}


@dataclass(frozen=True)
class ShootState:
    """State of a shot at its right endpoint."""

    x: float
    u: float
    w: float
    zero_count: int
    wraps: bool = False  # the last sign change sits at the endpoint itself
    log_scale: float = 0.0  # log of the accumulated renormalisation factor
    n_steps: int = 0
    zeros: tuple = ()

    @property
    def count(self) -> int:
        """Monotone index N(lam): interior zeros plus one if u(b) has reached 0."""
        return self.zero_count + int(self.wraps)


@dataclass(frozen=True, eq=False)
class EigenPair:
    lam: float
    k: int
    sign: str
    eigenfunction: DiscreteFunction | None
    residual: float
    bisection_width: float
    solver: str = "shoot1d"
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sign not in ("+", "-"):
            raise ValueError(f"sign must be '+' or '-', got {self.sign!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "k": self.k, "sign": self.sign, "solver": self.solver,
                "residual": self.residual, "bisection_width": self.bisection_width,
                **{k: v for k, v in self.info.items() if np.isscalar(v)}}


# -- problem encoding -----------------------------------------------------------

def _coef_encoding(c):
    """Encode the scalar diffusion A(x) for the kernel (raised to p/2 there)."""
    if isinstance(c, CoefficientField):
        if c.dim != 1:
            raise ValueError("shooting needs a 1-D coefficient field")
        c = c.entries[0][0]
    if isinstance(c, PeriodicWeight):
        flat = c._flat()
        if flat.is_constant:
            return (2, float(flat.mean()), np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(1)), None
        kind, const, fr, ac, as_, vals = flat.encode_1d()
        return (kind, const, fr, ac, as_, vals), flat
    c = float(c)
    if not c > 0:
        raise ValueError("diffusion coefficient must be positive")
    return (2, c, np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(1)), None


def _segments(rho: PeriodicWeight, eps: float, c_field, span) -> np.ndarray:
    a, b = map(float, span)
    pts = [np.array([a, b]), rho.breakpoints_1d(eps, a, b)]
    if c_field is not None:
        pts.append(c_field.breakpoints_1d(1.0, a, b))
    return np.unique(np.concatenate(pts))


class _Problem:
    """Pre-encoded data for repeated shots at different lam."""

    def __init__(self, p, c, rho: PeriodicWeight, eps: float, span):
        if not p > 1:
            raise ValueError(f"p must exceed 1, got {p}")
        if not eps > 0:
            raise ValueError(f"eps must be positive, got {eps}")
        if rho.dim != 1:
            raise ValueError("shooting needs a 1-D weight")
        self.p = float(p)
        self.eps = float(eps)
        self.span = (float(span[0]), float(span[1]))
        if not self.span[1] > self.span[0]:
            raise ValueError("degenerate interval")
        self.rho = rho
        self.r_enc = rho.encode_1d()
        self.c_enc, c_field = _coef_encoding(c)
        self.segs = _segments(rho, eps, c_field, self.span)
        self.length = self.span[1] - self.span[0]

    def shot(self, lam, rtol=TOL_ODE, record=0, n_zeros=64, hmax=None):
        rec_x = np.empty(record)
        rec_u = np.empty(record)
        rec_ls = np.empty(record)
        zeros = np.empty(n_zeros)
        hmax = self.length if hmax is None else hmax
        out = kernels.shoot(self.p, float(lam), self.segs, 1.0 / self.eps, *self.r_enc,
                            *self.c_enc, rtol, hmax, MAX_STEPS, True, rec_x, rec_u, rec_ls, zeros)
        status, x, u, w, count, n_steps, n_rec, log_scale, nz, last_zero = out
        if status != kernels.OK:
            raise IntegrationError(f"shot at lambda={lam:g} failed: {_STATUS[status]} at x={x:g}", x)
        wraps = count > 0 and last_zero >= self.span[1] - ENDPOINT_DELTA * self.length
        state = ShootState(x, u, w, count - int(wraps), wraps, log_scale, n_steps,
                           tuple(zeros[:min(nz, n_zeros)]))
        return state, (rec_x[:n_rec], rec_u[:n_rec], rec_ls[:n_rec])


def integrate_shot(p, c, rho, lam, x_span=(0.0, 1.0), eps: float = 1.0,
                   rtol: float = TOL_ODE) -> ShootState:
    """Shoot from (u, w) = (0, 1) at x_span[0] and return the state at x_span[1].

    ``c`` is the diffusion A (float, PeriodicWeight evaluated at x, or a 1-D
    CoefficientField); ``rho`` a PeriodicWeight evaluated at x/eps, or a float.
    """
    if not isinstance(rho, PeriodicWeight):
        rho = PeriodicWeight.constant(float(rho))
    return _Problem(p, c, rho, eps, x_span).shot(lam, rtol)[0]


# -- eigenvalues --------------------------------------------------------------

def _check_sign_part(rho: PeriodicWeight, eps: float, span, sign: str) -> None:
    a, b = span
    if b - a >= eps:
        st = rho.stats()
        mass = st.pos_mass if sign == "+" else st.neg_mass
    else:
        # the domain covers less than a period: use exact averages on fine sub-cells
        x = np.linspace(a, b, 4097)
        avg = scaled_box_average(rho, eps, x[:-1], x[1:])
        mass = float(np.mean(np.clip(avg if sign == "+" else -avg, 0, None)))
    if not mass > 1e-12:
        raise sign_error(sign)(
            f"weight has no {'positive' if sign == '+' else 'negative'} part on the domain")


def _bracket(prob: _Problem, k: int, lam0: float, lam_max: float):
    """(lo, hi) with count(lo) < k <= count(hi)."""
    lam = lam0
    n = prob.shot(lam)[0].count
    if n >= k:
        hi = lam
        while True:
            lam *= 0.5
            if lam < 1e-300:
                raise BracketNotFound(f"count stays >= {k} as lambda -> 0")
            if prob.shot(lam)[0].count < k:
                return lam, hi
            hi = lam
    lo = lam
    while True:
        lam *= 2.0
        if lam > lam_max:
            raise BracketNotFound(
                f"zero count never reached {k} below lambda_max={lam_max:g} (last count {n})")
        n = prob.shot(lam)[0].count
        if n >= k:
            return lo, lam
        lo = lam


def _sample(prob: _Problem, lam: float, n: int) -> tuple:
    """Eigenfunction of the shot at lam, normalised to max |u| = 1, on n nodes."""
    cap = 200_000
    while True:
        state, (rx, ru, rl) = prob.shot(lam, record=cap, hmax=prob.length / 2000)
        if rx.size < cap:
            break
        cap *= 4
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(ru)) - rl
    top = np.max(logs[np.isfinite(logs)])
    vals = np.sign(ru) * np.exp(logs - top)
    grid = build_grid(1, prob.span, n)
    full = np.interp(grid.axis(0), rx, vals)
    return DiscreteFunction(grid, full[1:-1]), float(abs(vals[-1])), state


def eigenvalue_1d(p, c, rho, eps: float, k: int, sign: str = "+", span=(0.0, 1.0),
                  tol_eig: float = TOL_EIG, lam0: float = LAMBDA0, lam_max: float = LAMBDA_MAX,
                  samples: int = SAMPLES, with_function: bool = True) -> EigenPair:
    """k-th positive (sign '+') or negative (sign '-') eigenvalue by bisection on the count."""
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    if k < 1:
        raise ValueError("k must be >= 1")
    if not isinstance(rho, PeriodicWeight):
        rho = PeriodicWeight.constant(float(rho))
    _check_sign_part(rho, eps, span, sign)
    prob = _Problem(p, c, rho if sign == "+" else -rho, eps, span)
    lo, hi = _bracket(prob, k, lam0, lam_max)
    while hi - lo > tol_eig * hi:
        mid = 0.5 * (lo + hi)
        if prob.shot(mid)[0].count >= k:
            hi = mid
        else:
            lo = mid
    lam = 0.5 * (lo + hi)
    fn, residual, n_steps = None, float("nan"), 0
    if with_function:
        fn, residual, state = _sample(prob, lo, samples)
        n_steps = state.n_steps
    value = lam if sign == "+" else -lam
    return EigenPair(value, k, sign, fn, residual, hi - lo,
                     info={"p": prob.p, "eps": eps, "n_steps": n_steps})


def spectrum_1d(p, c, rho, eps: float, k_max: int, sign: str = "+", span=(0.0, 1.0),
                **kw) -> list:
    """Eigenvalues k = 1..k_max of one sign, checked to be strictly monotone in |lambda|."""
    pairs = [eigenvalue_1d(p, c, rho, eps, k, sign, span, **kw) for k in range(1, k_max + 1)]
    mags = [abs(e.lam) for e in pairs]
    if any(b <= a for a, b in zip(mags, mags[1:])):
        raise BracketNotFound(f"non-monotone spectrum {mags}")
    return pairs


def eigenfunction_text(pair: EigenPair) -> str:
    """Two-column ``x u`` text of a 1-D eigenfunction."""
    if pair.eigenfunction is None:
        raise ValueError("eigenpair carries no eigenfunction")
    return pair.eigenfunction.to_text()


def count_function(p, c, rho, eps: float, span=(0.0, 1.0)):
    """lam -> N(lam) for fixed data (used by monotonicity checks)."""
    if not isinstance(rho, PeriodicWeight):
        rho = PeriodicWeight.constant(float(rho))
    prob = _Problem(p, c, rho, eps, span)
    return lambda lam: prob.shot(lam)[0].count
