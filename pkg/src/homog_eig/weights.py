"""Y-periodic bounded weights rho on Y = [0, 1]^N and their eps-scalings.

Two families are supported, both with exact means and exact box integrals:

* piecewise-constant on an ``m^N`` partition of Y,
* trigonometric polynomials ``c + sum_j a_j cos|sin(2 pi k_j . y)``,

plus a constant-shifted view of either (``rho + c``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch

TAU_MEAN = 1e-12
DEFAULT_QUAD_N = 1024


@dataclass(frozen=True)
class TrigTerm:
    amplitude: float
    freq: tuple
    kind: str = "sin"  # "sin" or "cos"

    def __post_init__(self):
        if self.kind not in ("sin", "cos"):
            raise ValueError(f"trig term kind must be 'sin' or 'cos', got {self.kind!r}")
        object.__setattr__(self, "freq", tuple(int(k) for k in self.freq))


@dataclass(frozen=True)
class WeightStats:
    mean: float
    pos_mass: float
    neg_mass: float
    sign_class: str  # "mean-zero" | "mean-positive" | "mean-negative"


def _classify(mean, tau=TAU_MEAN):
    if abs(mean) <= tau:
        return "mean-zero"
    return "mean-positive" if mean > 0 else "mean-negative"


@dataclass(frozen=True, eq=False)
class PeriodicWeight:
    """A Y-periodic weight. Build with the classmethods, not directly."""

    kind: str
    dim: int
    values: np.ndarray | None = None
    const: float = 0.0
    terms: tuple = ()
    base: "PeriodicWeight | None" = None
    shift: float = 0.0
    linf_bound: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        if self.kind == "piecewise":
            vals = np.array(self.values, dtype=float)
            if vals.ndim != self.dim or len(set(vals.shape)) != 1:
                raise ValueError(f"piecewise values must have shape (m,)*{self.dim}")
            vals.setflags(write=False)
            object.__setattr__(self, "values", vals)
            bound = float(np.max(np.abs(vals)))
        elif self.kind == "trig":
            for t in self.terms:
                if len(t.freq) != self.dim:
                    raise DimensionMismatch("trig term frequency has wrong dimension")
            bound = abs(self.const) + sum(abs(t.amplitude) for t in self.terms)
        elif self.kind == "shifted":
            if self.base is None or self.base.dim != self.dim:
                raise ValueError("shifted weight needs a base of the same dimension")
            flat = self._flat()
            bound = flat.linf_bound
        else:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        object.__setattr__(self, "linf_bound", float(bound))

    # -- constructors -------------------------------------------------------
    @classmethod
    def piecewise(cls, values) -> "PeriodicWeight":
        vals = np.asarray(values, dtype=float)
        return cls(kind="piecewise", dim=vals.ndim, values=vals)

    @classmethod
    def trig(cls, const: float = 0.0, terms: Sequence = (), dim: int = 1) -> "PeriodicWeight":
        ts = tuple(t if isinstance(t, TrigTerm) else TrigTerm(*t) for t in terms)
        return cls(kind="trig", dim=dim, const=float(const), terms=ts)

    @classmethod
    def constant(cls, c: float, dim: int = 1) -> "PeriodicWeight":
        return cls.trig(const=c, terms=(), dim=dim)

    @classmethod
    def sine(cls, const: float = 0.0, amplitude: float = 1.0, dim: int = 1, kind: str = "sin"):
        """``const + amplitude * sin(2 pi y_1)`` (or cos)."""
        freq = (1,) + (0,) * (dim - 1)
        return cls.trig(const, [TrigTerm(amplitude, freq, kind)], dim)

    def shifted(self, c: float) -> "PeriodicWeight":
        return PeriodicWeight(kind="shifted", dim=self.dim, base=self, shift=float(c))

    # -- algebra ------------------------------------------------------------
    def _flat(self) -> "PeriodicWeight":
        """Resolve shifts into an equivalent piecewise or trig weight."""
        if self.kind != "shifted":
            return self
        inner = self.base._flat()
        if inner.kind == "piecewise":
            return PeriodicWeight.piecewise(inner.values + self.shift)
        return PeriodicWeight.trig(inner.const + self.shift, inner.terms, inner.dim)

    def scaled(self, t: float) -> "PeriodicWeight":
        """The weight ``t * rho``; keeps the kind."""
        if self.kind == "piecewise":
            return PeriodicWeight.piecewise(t * self.values)
        if self.kind == "trig":
            terms = [TrigTerm(t * s.amplitude, s.freq, s.kind) for s in self.terms]
            return PeriodicWeight.trig(t * self.const, terms, self.dim)
        return self.base.scaled(t).shifted(t * self.shift)

    def __neg__(self):
        return self.scaled(-1.0)

    @property
    def is_smooth(self) -> bool:
        return self._flat().kind == "trig"

    @property
    def is_constant(self) -> bool:
        flat = self._flat()
        if flat.kind == "trig":
            return all(t.amplitude == 0.0 or not any(t.freq) for t in flat.terms)
        return bool(np.all(flat.values == flat.values.flat[0]))

    # -- evaluation ---------------------------------------------------------
    def _points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            return x[..., None]
        if x.ndim == 0 or x.shape[-1] != self.dim:
            raise DimensionMismatch(
                f"weight has dimension {self.dim}, point has shape {x.shape}")
        return x

    def __call__(self, x):
        """rho(x mod Y). Accepts a scalar (N=1) or an array of shape (..., N)."""
        y = self._points(x)
        flat = self._flat()
        if flat.kind == "piecewise":
            m = flat.values.shape[0]
            idx = np.floor((y - np.floor(y)) * m).astype(np.intp)
            idx = np.clip(idx, 0, m - 1)
            out = flat.values[tuple(idx[..., d] for d in range(self.dim))]
        else:
            out = np.full(y.shape[:-1], flat.const)
            for t in flat.terms:
                phase = 2.0 * np.pi * (y @ np.asarray(t.freq, dtype=float))
                out = out + t.amplitude * (np.sin(phase) if t.kind == "sin" else np.cos(phase))
        return out[()] if np.ndim(out) == 0 else out

    def box_integral(self, lo, hi) -> np.ndarray:
        """Exact integral of rho over the boxes [lo, hi] (y-coordinates, shape (..., N))."""
        lo = self._points(lo)
        hi = self._points(hi)
        flat = self._flat()
        if flat.kind == "piecewise":
            m = flat.values.shape[0]
            starts = np.arange(m) / m

            def occupancy(y):
                # measure of {t in [0, y] : frac(t) in cell j}, signed for y < 0
                whole = np.floor(y)
                frac = y - whole
                return whole[..., None] / m + np.clip(frac[..., None] - starts, 0.0, 1.0 / m)

            lens = [occupancy(hi[..., d]) - occupancy(lo[..., d]) for d in range(self.dim)]
            if self.dim == 1:
                return lens[0] @ flat.values
            if self.dim == 2:
                return np.einsum("ij,...i,...j->...", flat.values, lens[0], lens[1])
            raise NotImplementedError("piecewise box integrals are implemented for N <= 2")
        vol = np.prod(hi - lo, axis=-1)
        out = flat.const * vol
        for t in flat.terms:
            prod = np.ones(vol.shape, dtype=complex)
            for d, k in enumerate(t.freq):
                if k == 0:
                    prod = prod * (hi[..., d] - lo[..., d])
                else:
                    w = 2j * np.pi * k
                    prod = prod * (np.exp(w * hi[..., d]) - np.exp(w * lo[..., d])) / w
            out = out + t.amplitude * (prod.imag if t.kind == "sin" else prod.real)
        return out

    # -- statistics -----------------------------------------------------------
    def mean(self) -> float:
        flat = self._flat()
        if flat.kind == "piecewise":
            return float(flat.values.mean())
        m = flat.const
        for t in flat.terms:
            if t.kind == "cos" and not any(t.freq):
                m += t.amplitude
        return float(m)

    def stats(self, quad_n: int = DEFAULT_QUAD_N, tau: float = TAU_MEAN) -> WeightStats:
        if quad_n < 2:
            raise ValueError("quad_n must be >= 2")
        flat = self._flat()
        mean = self.mean()
        if flat.kind == "piecewise":
            v = flat.values
            pos = float(np.clip(v, 0, None).mean())
            neg = float(np.clip(-v, 0, None).mean())
        else:
            pts = (np.arange(quad_n) + 0.5) / quad_n
            grid = np.stack(np.meshgrid(*([pts] * self.dim), indexing="ij"), axis=-1)
            vals = np.asarray(flat(grid))
            pos = float(np.clip(vals, 0, None).mean())
            neg = float(np.clip(-vals, 0, None).mean())
        return WeightStats(mean, pos, neg, _classify(mean, tau))

    # -- 1-D kernel encoding --------------------------------------------------
    def encode_1d(self):
        """Flat arrays consumed by the shooting kernel, see ``kernels.weight_at``."""
        if self.dim != 1:
            raise DimensionMismatch("kernel encoding is one-dimensional")
        flat = self._flat()
        if flat.kind == "piecewise":
            return (1, 0.0, np.zeros(0), np.zeros(0), np.zeros(0),
                    np.ascontiguousarray(flat.values, dtype=float))
        freqs, ac, as_ = [], [], []
        for t in flat.terms:
            freqs.append(float(t.freq[0]))
            ac.append(t.amplitude if t.kind == "cos" else 0.0)
            as_.append(t.amplitude if t.kind == "sin" else 0.0)
        return (0, flat.const, np.array(freqs), np.array(ac), np.array(as_), np.zeros(1))

    def breakpoints_1d(self, eps: float, lo: float, hi: float) -> np.ndarray:
        """Discontinuities of rho(x/eps) inside (lo, hi); empty for smooth weights."""
        flat = self._flat()
        if flat.kind != "piecewise":
            return np.zeros(0)
        m = flat.values.shape[0]
        step = eps / m
        j0 = int(np.floor(lo / step)) + 1
        j1 = int(np.ceil(hi / step)) - 1
        pts = np.arange(j0, j1 + 1) * step
        return pts[(pts > lo) & (pts < hi)]

    # -- serialization ----------------------------------------------------------
    def to_dict(self) -> dict:
        if self.kind == "piecewise":
            return {"kind": "piecewise", "values": self.values.tolist()}
        if self.kind == "trig":
            return {"kind": "trig", "dimension": self.dim, "const": self.const,
                    "terms": [{"amplitude": t.amplitude, "freq": list(t.freq), "type": t.kind}
                              for t in self.terms]}
        return {"kind": "shifted", "shift": self.shift, "base": self.base.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "PeriodicWeight":
        kind = d.get("kind")
        if kind == "piecewise":
            return cls.piecewise(d["values"])
        if kind == "trig":
            dim = int(d.get("dimension", 1))
            terms = [TrigTerm(float(t["amplitude"]), tuple(t["freq"]), t.get("type", "sin"))
                     for t in d.get("terms", [])]
            return cls.trig(float(d.get("const", 0.0)), terms, dim)
        if kind == "constant":
            return cls.constant(float(d["value"]), int(d.get("dimension", 1)))
        if kind == "shifted":
            return cls.from_dict(d["base"]).shifted(float(d["shift"]))
        raise ValueError(f"unknown weight kind {kind!r}")

    def __repr__(self):
        return f"PeriodicWeight({self.to_dict()!r})"


# -- functional surface -------------------------------------------------------

def eval_weight(w: PeriodicWeight, x):
    return w(x)


def eval_scaled(w: PeriodicWeight, eps: float, x):
    """rho_eps(x) = rho(x / eps)."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return w(np.asarray(x, dtype=float) / eps)


def weight_stats(w: PeriodicWeight, quad_n: int = DEFAULT_QUAD_N) -> WeightStats:
    return w.stats(quad_n)


def has_nontrivial_positive_part(w: PeriodicWeight, tau: float = TAU_MEAN) -> bool:
    return w.stats().pos_mass > tau


def has_nontrivial_negative_part(w: PeriodicWeight, tau: float = TAU_MEAN) -> bool:
    return w.stats().neg_mass > tau


def scaled_box_average(w: PeriodicWeight, eps: float, lo, hi) -> np.ndarray:
    """Average of rho(x/eps) over the x-boxes [lo, hi]."""
    lo = w._points(lo)
    hi = w._points(hi)
    vol = np.prod(hi - lo, axis=-1)
    return w.box_integral(lo / eps, hi / eps) * eps ** w.dim / vol
