"""Closed-form time coefficient families.

These are the scalar coefficients that drive both the analysis layer and the
evolution systems: a quasi-periodic two-frequency cosine family, two
piecewise families with genuine jump discontinuities, and two families of the
form trig(1/p(t)) whose derivative is unbounded along a sequence of dips of
p, so they are Stepanov almost periodic but not uniformly continuous.

Every family evaluates vectorized, reports its declared jump points inside a
window, and can produce exact one-sided limits at any point (needed by the
quadrature layer so jumps never straddle a trapezoid panel).

Closed-form global bounds are attached where they are known exactly:

==================  ======================  =====================
family              global inf              global sup
==================  ======================  =====================
Constant(c)         c                       c
QuasiPeriodicCos    d_tilde - 2 d_hat       d_tilde + 2 d_hat
PiecewiseA          0                       4 a_tilde (at t = 0)
PiecewiseB          0                       2 b_tilde
SinRecip            -c_tilde                c_tilde
CosRecip            -c_tilde                c_tilde
==================  ======================  =====================

The QuasiPeriodicCos infimum is approached but never attained (the two
frequencies 1 and pi are rationally independent); same for the sup of
SinRecip/CosRecip being approached only along dips of p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigError

__all__ = [
    "Coefficient",
    "Constant",
    "QuasiPeriodicCos",
    "PiecewiseA",
    "PiecewiseB",
    "SinRecip",
    "CosRecip",
    "Sum",
    "Scale",
    "coefficient_from_dict",
    "coefficient_to_dict",
    "grid_extremum",
]

_SQRT2 = math.sqrt(2.0)

ArrayLike = Union[float, np.ndarray]


class Coefficient:
    """Base class: a real-valued coefficient of time.

    Subclasses implement ``_eval`` on ndarrays. The public entry points are
    ``__call__`` (vectorized evaluation), ``discontinuities`` (declared jump
    points inside a closed window), ``limits`` (exact one-sided values), and
    the closed-form ``global_inf``/``global_sup`` where available (``None``
    otherwise; callers fall back to grid scans).
    """

    def __call__(self, t: ArrayLike) -> ArrayLike:
        arr = np.asarray(t, dtype=float)
        out = self._eval(arr)
        if np.isscalar(t) or arr.ndim == 0:
            return float(out)
        return out

    def _eval(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def discontinuities(self, window: tuple[float, float]) -> np.ndarray:
        """Declared jump points in [window[0], window[1]], ascending."""
        return np.empty(0)

    def limits(self, x: float) -> tuple[float, float]:
        """Exact (left, right) limits at x; equal where continuous."""
        v = float(self(x))
        return v, v

    def global_inf(self) -> float | None:
        return None

    def global_sup(self) -> float | None:
        return None

    def smooth_lipschitz(self) -> float | None:
        """Lipschitz constant away from jumps; None when unbounded."""
        return None


@dataclass(frozen=True)
class Constant(Coefficient):
    value: float

    def _eval(self, t):
        return np.full_like(t, self.value, dtype=float)

    def global_inf(self):
        return self.value

    def global_sup(self):
        return self.value

    def smooth_lipschitz(self):
        return 0.0


@dataclass(frozen=True)
class QuasiPeriodicCos(Coefficient):
    """d_tilde + d_hat * (cos t + cos(pi t)); smooth, quasi-periodic."""

    d_tilde: float
    d_hat: float

    def _eval(self, t):
        return self.d_tilde + self.d_hat * (np.cos(t) + np.cos(math.pi * t))

    def global_inf(self):
        return self.d_tilde - 2.0 * abs(self.d_hat)

    def global_sup(self):
        return self.d_tilde + 2.0 * abs(self.d_hat)

    def smooth_lipschitz(self):
        return abs(self.d_hat) * (1.0 + math.pi)


@dataclass(frozen=True)
class PiecewiseA(Coefficient):
    """a_tilde * (2 + cos t + cos(sqrt2 t)) for t >= 0, sin-branch for t < 0.

    Single jump at t = 0 of size 2 a_tilde (right value 4 a_tilde, left
    value 2 a_tilde).
    """

    a_tilde: float

    def _eval(self, t):
        pos = self.a_tilde * (2.0 + np.cos(t) + np.cos(_SQRT2 * t))
        neg = self.a_tilde * (2.0 + np.sin(t) + np.sin(_SQRT2 * t))
        return np.where(t >= 0.0, pos, neg)

    def discontinuities(self, window):
        lo, hi = window
        if lo <= 0.0 <= hi:
            return np.array([0.0])
        return np.empty(0)

    def limits(self, x):
        if x == 0.0:
            return 2.0 * self.a_tilde, 4.0 * self.a_tilde
        v = float(self(x))
        return v, v

    def global_inf(self):
        return 0.0 if self.a_tilde >= 0.0 else 4.0 * self.a_tilde

    def global_sup(self):
        return 4.0 * self.a_tilde if self.a_tilde >= 0.0 else 0.0

    def smooth_lipschitz(self):
        return abs(self.a_tilde) * (1.0 + _SQRT2)


@dataclass(frozen=True)
class PiecewiseB(Coefficient):
    """b_tilde*(1+sin t) on [2k pi, (2k+1) pi), b_tilde*(1+cos t) after.

    The value is right-continuous and jumps at every multiple of pi with
    size b_tilde: at odd multiples it drops from b_tilde to 0, at even
    multiples from 2 b_tilde to b_tilde. All of these are declared so the
    quadrature layer can split panels there.
    """

    b_tilde: float

    def _eval(self, t):
        phase = np.mod(t, 2.0 * math.pi)
        sin_branch = phase < math.pi
        return np.where(
            sin_branch,
            self.b_tilde * (1.0 + np.sin(t)),
            self.b_tilde * (1.0 + np.cos(t)),
        )

    def discontinuities(self, window):
        lo, hi = window
        k_lo = math.ceil(lo / math.pi)
        k_hi = math.floor(hi / math.pi)
        if k_hi < k_lo:
            return np.empty(0)
        return np.arange(k_lo, k_hi + 1) * math.pi

    def limits(self, x):
        # the evaluated value is authoritative for the right limit: the
        # branch selection is closed on the left, so snapping may only
        # override the side the seam has already left behind
        v = float(self(x))
        phase = math.fmod(x, 2.0 * math.pi)
        if phase < 0.0:
            phase += 2.0 * math.pi
        # tolerance for "at a branch seam" in floating point
        tol = 1e-12 * max(1.0, abs(x))
        if abs(phase - math.pi) <= tol:
            return self.b_tilde * (1.0 + math.sin(x)), v
        if phase <= tol or (2.0 * math.pi - phase) <= tol:
            return self.b_tilde * (1.0 + math.cos(x)), v
        return v, v

    def global_inf(self):
        return min(0.0, 2.0 * self.b_tilde)

    def global_sup(self):
        return max(0.0, 2.0 * self.b_tilde)

    def smooth_lipschitz(self):
        return abs(self.b_tilde)


def _p_of_t(t: np.ndarray) -> np.ndarray:
    # strictly positive; inf over R is 0 (approached, not attained)
    return 2.0 + np.sin(t) + np.sin(_SQRT2 * t)


@dataclass(frozen=True)
class SinRecip(Coefficient):
    """c_tilde * sin(1/p(t)) with p(t) = 2 + sin t + sin(sqrt2 t).

    Continuous but not uniformly continuous: p dips arbitrarily close to 0,
    so 1/p sweeps arbitrarily fast. Stepanov almost periodic only.
    """

    c_tilde: float

    def _eval(self, t):
        return self.c_tilde * np.sin(1.0 / _p_of_t(t))

    def global_inf(self):
        return -abs(self.c_tilde)

    def global_sup(self):
        return abs(self.c_tilde)


@dataclass(frozen=True)
class CosRecip(Coefficient):
    """c_tilde * cos(1/p(t)); same regularity profile as SinRecip."""

    c_tilde: float

    def _eval(self, t):
        return self.c_tilde * np.cos(1.0 / _p_of_t(t))

    def global_inf(self):
        return -abs(self.c_tilde)

    def global_sup(self):
        return abs(self.c_tilde)


@dataclass(frozen=True)
class Sum(Coefficient):
    terms: tuple[Coefficient, ...]

    def __init__(self, *terms: Coefficient):
        # allow Sum(a, b, c) and Sum(*list)
        object.__setattr__(self, "terms", tuple(terms))

    def _eval(self, t):
        acc = np.zeros_like(t, dtype=float)
        for term in self.terms:
            acc = acc + term._eval(t)
        return acc

    def discontinuities(self, window):
        pts = [term.discontinuities(window) for term in self.terms]
        merged = np.unique(np.concatenate([p for p in pts if len(p)] or [np.empty(0)]))
        return merged

    def limits(self, x):
        left = right = 0.0
        for term in self.terms:
            l, r = term.limits(x)
            left += l
            right += r
        return left, right

    def smooth_lipschitz(self):
        acc = 0.0
        for term in self.terms:
            lip = term.smooth_lipschitz()
            if lip is None:
                return None
            acc += lip
        return acc


@dataclass(frozen=True)
class Scale(Coefficient):
    factor: float
    inner: Coefficient

    def _eval(self, t):
        return self.factor * self.inner._eval(t)

    def discontinuities(self, window):
        if self.factor == 0.0:
            return np.empty(0)
        return self.inner.discontinuities(window)

    def limits(self, x):
        l, r = self.inner.limits(x)
        return self.factor * l, self.factor * r

    def global_inf(self):
        if self.factor >= 0.0:
            v = self.inner.global_inf()
            return None if v is None else self.factor * v
        v = self.inner.global_sup()
        return None if v is None else self.factor * v

    def global_sup(self):
        if self.factor >= 0.0:
            v = self.inner.global_sup()
            return None if v is None else self.factor * v
        v = self.inner.global_inf()
        return None if v is None else self.factor * v

    def smooth_lipschitz(self):
        lip = self.inner.smooth_lipschitz()
        return None if lip is None else abs(self.factor) * lip


def grid_extremum(
    coeff: Coefficient,
    window: tuple[float, float],
    step: float = 1e-3,
    mode: str = "sup",
    refine_rounds: int = 3,
) -> tuple[float, float]:
    """Grid scan for sup/inf of a coefficient with local refinement.

    Scans the window at the given step, then repeatedly re-scans a shrinking
    neighborhood of the best point at 100x finer resolution. Returns
    ``(value, argpoint)``. This is a measurement, not a certificate; the
    closed-form bounds (where present) are the ground truth in tests.
    """
    lo, hi = window
    if not hi > lo:
        raise ValueError("window must have positive length")
    sign = 1.0 if mode == "sup" else -1.0
    if mode not in ("sup", "inf"):
        raise ValueError(f"mode must be 'sup' or 'inf', got {mode!r}")

    n = int(math.floor((hi - lo) / step)) + 1
    # chunked so windows of a few hundred thousand points stay cheap on RAM
    best_val = -math.inf
    best_t = lo
    chunk = 1_000_000
    for start in range(0, n, chunk):
        idx = np.arange(start, min(start + chunk, n))
        ts = lo + idx * step
        vals = sign * np.asarray(coeff(ts))
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val = float(vals[j])
            best_t = float(ts[j])

    width = step
    for _ in range(refine_rounds):
        fine = width / 100.0
        ts = np.arange(max(lo, best_t - width), min(hi, best_t + width) + fine, fine)
        vals = sign * np.asarray(coeff(ts))
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val = float(vals[j])
            best_t = float(ts[j])
        width = fine

    return sign * best_val, best_t


_FAMILY_KEYS = {
    "constant": ("value",),
    "quasiperiodic_cos": ("d_tilde", "d_hat"),
    "piecewise_a": ("a_tilde",),
    "piecewise_b": ("b_tilde",),
    "sin_recip": ("c_tilde",),
    "cos_recip": ("c_tilde",),
}


def coefficient_from_dict(doc: dict, path: str = "coefficient") -> Coefficient:
    """Build a coefficient from its JSON form; errors are path-qualified."""
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected an object")
    family = doc.get("family")
    if family is None:
        raise ConfigError(path, "missing key 'family'")
    if family == "sum":
        extra = set(doc) - {"family", "terms"}
        if extra:
            raise ConfigError(path, f"unknown key '{sorted(extra)[0]}'")
        terms = doc.get("terms")
        if not isinstance(terms, list) or not terms:
            raise ConfigError(f"{path}.terms", "expected a non-empty list")
        return Sum(*[
            coefficient_from_dict(item, f"{path}.terms[{i}]")
            for i, item in enumerate(terms)
        ])
    if family == "scale":
        extra = set(doc) - {"family", "factor", "inner"}
        if extra:
            raise ConfigError(path, f"unknown key '{sorted(extra)[0]}'")
        factor = doc.get("factor")
        if not isinstance(factor, (int, float)) or isinstance(factor, bool):
            raise ConfigError(f"{path}.factor", "expected a number")
        if "inner" not in doc:
            raise ConfigError(path, "missing key 'inner'")
        return Scale(float(factor), coefficient_from_dict(doc["inner"], f"{path}.inner"))
    if family not in _FAMILY_KEYS:
        raise ConfigError(f"{path}.family", f"unknown family '{family}'")
    keys = _FAMILY_KEYS[family]
    extra = set(doc) - {"family", *keys}
    if extra:
        raise ConfigError(path, f"unknown key '{sorted(extra)[0]}'")
    vals = []
    for key in keys:
        if key not in doc:
            raise ConfigError(path, f"missing key '{key}'")
        v = doc[key]
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ConfigError(f"{path}.{key}", "expected a number")
        vals.append(float(v))
    cls = {
        "constant": Constant,
        "quasiperiodic_cos": QuasiPeriodicCos,
        "piecewise_a": PiecewiseA,
        "piecewise_b": PiecewiseB,
        "sin_recip": SinRecip,
        "cos_recip": CosRecip,
    }[family]
    return cls(*vals)


def coefficient_to_dict(coeff: Coefficient) -> dict:
    if isinstance(coeff, Constant):
        return {"family": "constant", "value": coeff.value}
    if isinstance(coeff, QuasiPeriodicCos):
        return {"family": "quasiperiodic_cos", "d_tilde": coeff.d_tilde, "d_hat": coeff.d_hat}
    if isinstance(coeff, PiecewiseA):
        return {"family": "piecewise_a", "a_tilde": coeff.a_tilde}
    if isinstance(coeff, PiecewiseB):
        return {"family": "piecewise_b", "b_tilde": coeff.b_tilde}
    if isinstance(coeff, SinRecip):
        return {"family": "sin_recip", "c_tilde": coeff.c_tilde}
    if isinstance(coeff, CosRecip):
        return {"family": "cos_recip", "c_tilde": coeff.c_tilde}
    if isinstance(coeff, Sum):
        return {"family": "sum", "terms": [coefficient_to_dict(t) for t in coeff.terms]}
    if isinstance(coeff, Scale):
        return {"family": "scale", "factor": coeff.factor, "inner": coefficient_to_dict(coeff.inner)}
    raise TypeError(f"unknown coefficient type {type(coeff).__name__}")
