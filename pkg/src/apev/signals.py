"""Uniformly sampled signals with declared jump metadata.

A Signal is the sampled view of a function of time on a closed window:
uniform grid, linear interpolation between nodes, hard error outside the
window (never extrapolation). Vector-valued signals hold one column per
component. Declared jump points carry exact one-sided values so the
quadrature layer can split trapezoid panels instead of integrating across a
jump.

CSV round-trip uses the layout ``t,x1,...,xm`` with the time column required
uniform to 1e-9 * dt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .coefficients import Coefficient
from .errors import ApevError, WindowError

__all__ = ["Break", "Signal", "PiecewiseLinearIntegral"]


@dataclass(frozen=True)
class Break:
    """A declared jump: position and exact one-sided values (per component)."""

    x: float
    left: np.ndarray
    right: np.ndarray


@dataclass(frozen=True)
class Signal:
    t0: float
    dt: float
    samples: np.ndarray  # shape (n, m)
    breaks: tuple[Break, ...] = field(default_factory=tuple)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.ndim != 2 or samples.shape[0] < 2:
            raise ApevError("signal needs a 2-D (n, m) sample array with n >= 2")
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ApevError(f"signal dt must be positive, got {self.dt}")
        object.__setattr__(self, "samples", samples)

    # -- geometry -----------------------------------------------------------

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def t_end(self) -> float:
        return self.t0 + (self.n - 1) * self.dt

    @property
    def window(self) -> tuple[float, float]:
        return (self.t0, self.t_end)

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n) * self.dt

    def _bound_slack(self) -> float:
        return 1e-9 * (1.0 + abs(self.t0) + abs(self.t_end) + self.dt)

    # -- evaluation ---------------------------------------------------------

    def __call__(self, t) -> np.ndarray:
        """Linear interpolation at t (scalar or array); error off-window."""
        arr = np.atleast_1d(np.asarray(t, dtype=float))
        slack = self._bound_slack()
        if np.any(arr < self.t0 - slack) or np.any(arr > self.t_end + slack):
            bad = arr[(arr < self.t0 - slack) | (arr > self.t_end + slack)][0]
            raise WindowError(
                f"evaluation at t={bad!r} outside window [{self.t0}, {self.t_end}]"
            )
        arr = np.clip(arr, self.t0, self.t_end)
        pos = (arr - self.t0) / self.dt
        idx = np.clip(np.floor(pos).astype(np.intp), 0, self.n - 2)
        frac = pos - idx
        vals = self.samples[idx] * (1.0 - frac)[:, None] + self.samples[idx + 1] * frac[:, None]
        if np.isscalar(t) or np.asarray(t).ndim == 0:
            return vals[0]
        return vals

    def eval_one_sided(self, t, side: str) -> np.ndarray:
        """Like __call__ but uses stored one-sided values at declared jumps."""
        if side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        arr = np.atleast_1d(np.asarray(t, dtype=float))
        vals = self(arr)
        if self.breaks:
            tol = self._bound_slack()
            for br in self.breaks:
                hit = np.abs(arr - br.x) <= tol
                if np.any(hit):
                    vals[hit] = br.left if side == "left" else br.right
        if np.isscalar(t) or np.asarray(t).ndim == 0:
            return vals[0]
        return vals

    def shifted(self, tau: float) -> "Signal":
        """The signal t -> f(t + tau); the window slides accordingly."""
        new_breaks = tuple(Break(b.x - tau, b.left, b.right) for b in self.breaks)
        return Signal(self.t0 - tau, self.dt, self.samples, new_breaks)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_coefficient(
        cls, coeff: Coefficient, t0: float, t1: float, dt: float
    ) -> "Signal":
        n = int(round((t1 - t0) / dt)) + 1
        if n < 2:
            raise ApevError("sampling window shorter than one step")
        ts = t0 + np.arange(n) * dt
        vals = np.asarray(coeff(ts), dtype=float)[:, None]
        t_end = t0 + (n - 1) * dt
        breaks = []
        for x in np.asarray(coeff.discontinuities((t0, t_end)), dtype=float):
            left, right = coeff.limits(float(x))
            breaks.append(Break(float(x), np.array([left]), np.array([right])))
        return cls(t0, dt, vals, tuple(breaks))

    @classmethod
    def from_function(
        cls,
        fn: Callable[[np.ndarray], np.ndarray],
        t0: float,
        t1: float,
        dt: float,
    ) -> "Signal":
        n = int(round((t1 - t0) / dt)) + 1
        if n < 2:
            raise ApevError("sampling window shorter than one step")
        ts = t0 + np.arange(n) * dt
        vals = np.asarray(fn(ts), dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        return cls(t0, dt, vals)

    # -- CSV ----------------------------------------------------------------

    def to_csv(self, path) -> None:
        header = "t," + ",".join(f"x{i + 1}" for i in range(self.dim))
        ts = self.times()
        with open(path, "w", newline="") as fh:
            fh.write(header + "\n")
            for i in range(self.n):
                row = [f"{ts[i]:.17g}"] + [f"{v:.17g}" for v in self.samples[i]]
                fh.write(",".join(row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "Signal":
        with open(path, "r", newline="") as fh:
            header = fh.readline().strip()
            cols = header.split(",")
            if not cols or cols[0] != "t" or len(cols) < 2:
                raise ApevError(f"bad signal CSV header {header!r}, want t,x1,...")
            expected = ["t"] + [f"x{i + 1}" for i in range(len(cols) - 1)]
            if cols != expected:
                raise ApevError(f"bad signal CSV header {header!r}, want {','.join(expected)}")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if data.shape[0] < 2:
            raise ApevError("signal CSV needs at least two rows")
        ts = data[:, 0]
        dt = (ts[-1] - ts[0]) / (len(ts) - 1)
        if dt <= 0:
            raise ApevError("signal CSV time column must be increasing")
        diffs = np.diff(ts)
        if np.max(np.abs(diffs - dt)) > 1e-9 * dt:
            raise ApevError("signal CSV time column is not uniform (tolerance 1e-9*dt)")
        return cls(float(ts[0]), float(dt), data[:, 1:])


class PiecewiseLinearIntegral:
    """Cumulative integral of a piecewise-linear function with jumps.

    The function is defined by sorted nodes ``xs`` with per-node left/right
    values; between consecutive nodes it is the chord through the facing
    one-sided values. ``cum(q)`` evaluates the running integral from xs[0]
    exactly for that model, vectorized over q.
    """

    def __init__(self, xs: np.ndarray, v_left: np.ndarray, v_right: np.ndarray):
        self.xs = xs
        self.vl = v_left
        self.vr = v_right
        widths = np.diff(xs)
        panels = widths * 0.5 * (v_right[:-1] + v_left[1:])
        self.C = np.concatenate([[0.0], np.cumsum(panels)])

    @classmethod
    def from_grid(
        cls,
        ts: np.ndarray,
        g: np.ndarray,
        breaks: Iterable[tuple[float, float, float]] = (),
    ) -> "PiecewiseLinearIntegral":
        """Build from grid values plus break triples (x, g_left, g_right).

        Breaks landing on (or within float fuzz of) a grid node replace that
        node's one-sided values; interior breaks become new nodes.
        """
        xs = np.asarray(ts, dtype=float)
        vl = np.asarray(g, dtype=float).copy()
        vr = vl.copy()
        extra = []
        if len(xs) >= 2:
            fuzz = 1e-9 * (abs(xs[0]) + abs(xs[-1]) + (xs[1] - xs[0]) + 1.0)
        else:
            fuzz = 1e-12
        for x, gl, gr in breaks:
            if x <= xs[0] + fuzz or x >= xs[-1] - fuzz:
                continue
            j = int(np.searchsorted(xs, x))
            if j < len(xs) and abs(xs[j] - x) <= fuzz:
                vl[j] = gl
                vr[j] = gr
            elif j > 0 and abs(xs[j - 1] - x) <= fuzz:
                vl[j - 1] = gl
                vr[j - 1] = gr
            else:
                extra.append((x, gl, gr))
        if extra:
            ex = np.array([e[0] for e in extra])
            el = np.array([e[1] for e in extra])
            er = np.array([e[2] for e in extra])
            order = np.argsort(ex)
            xs = np.concatenate([xs, ex[order]])
            vl = np.concatenate([vl, el[order]])
            vr = np.concatenate([vr, er[order]])
            order = np.argsort(xs, kind="stable")
            xs = xs[order]
            vl = vl[order]
            vr = vr[order]
        return cls(xs, vl, vr)

    def cum(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        scalar = q.ndim == 0
        qq = np.atleast_1d(np.clip(q, self.xs[0], self.xs[-1]))
        idx = np.searchsorted(self.xs, qq, side="right") - 1
        idx = np.clip(idx, 0, len(self.xs) - 2)
        x0 = self.xs[idx]
        w = self.xs[idx + 1] - x0
        frac = np.where(w > 0, (qq - x0) / np.where(w > 0, w, 1.0), 0.0)
        v0 = self.vr[idx]
        vq = v0 + (self.vl[idx + 1] - v0) * frac
        partial = (qq - x0) * 0.5 * (v0 + vq)
        out = self.C[idx] + partial
        return float(out[0]) if scalar else out

    def integral(self, a, b) -> np.ndarray:
        return self.cum(b) - self.cum(a)
