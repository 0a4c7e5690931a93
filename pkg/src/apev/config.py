"""JSON configuration: loading, schema checks, section builders.

A config file is a single JSON object with up to six sections:

    signal    what to analyze (CSV path or sampled coefficient), or the
              forcing of a linear solve as a mode -> coefficient map
    analysis  norm kind, eps, tau_range, tau_step (also reused as the
              demo's scan settings)
    system    coefficients d1 (, d2, b) for the linear evolution blocks;
              b is the zero-order term of the last block
    spatial   interval length and mode count
    solver    time window, step, tail cut, ball radius, alpha, tolerances
    lv        two-species parameters (see LVParams)

Unknown keys are rejected everywhere; all errors carry the offending
key path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .apfun import NormKind
from .coefficients import Coefficient, coefficient_from_dict
from .errors import ConfigError
from .evolution import EvolutionSystem
from .lotka import LVParams, ScanSpec
from .signals import Signal
from .solver import AnalyticForcing, SolveConfig
from .spectral import SineBasis

__all__ = [
    "load_config",
    "AnalysisSpec",
    "signal_from_config",
    "analysis_from_config",
    "scan_from_config",
    "solver_from_config",
    "systems_from_config",
    "forcing_from_config",
    "lv_from_config",
]

_SECTIONS = ("signal", "analysis", "system", "spatial", "solver", "lv")
_REQUIRED = object()


def load_config(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}") from exc
    try:
        doc = json.loads(text)
    except ValueError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(str(path), "top level must be a JSON object")
    for key in doc:
        if key not in _SECTIONS:
            raise ConfigError(key, "unknown section")
    for key, val in doc.items():
        if not isinstance(val, dict):
            raise ConfigError(key, "section must be a JSON object")
    return doc


def _section(cfg: dict, name: str) -> dict:
    sec = cfg.get(name)
    if sec is None:
        raise ConfigError(name, "section is required for this command")
    return sec


def _check_keys(sec: dict, path: str, allowed: set[str]):
    for key in sec:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}", "unknown key")


def _num(sec: dict, path: str, key: str, default=_REQUIRED) -> float:
    if key not in sec:
        if default is _REQUIRED:
            raise ConfigError(f"{path}.{key}", "is required")
        return default
    v = sec[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{path}.{key}", "expected a number")
    return float(v)


def _int(sec: dict, path: str, key: str, default=_REQUIRED) -> int:
    if key not in sec:
        if default is _REQUIRED:
            raise ConfigError(f"{path}.{key}", "is required")
        return default
    v = sec[key]
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(f"{path}.{key}", "expected an integer")
    return v


def _str(sec: dict, path: str, key: str, default=_REQUIRED) -> str:
    if key not in sec:
        if default is _REQUIRED:
            raise ConfigError(f"{path}.{key}", "is required")
        return default
    v = sec[key]
    if not isinstance(v, str):
        raise ConfigError(f"{path}.{key}", "expected a string")
    return v


def signal_from_config(cfg: dict) -> Signal:
    """The signal to analyze: a CSV file or a sampled coefficient."""
    sec = _section(cfg, "signal")
    if "csv" in sec:
        _check_keys(sec, "signal", {"csv"})
        try:
            return Signal.from_csv(_str(sec, "signal", "csv"))
        except OSError as exc:
            raise ConfigError("signal.csv", f"cannot read: {exc}") from exc
    _check_keys(sec, "signal", {"coefficient", "t0", "t1", "dt"})
    if "coefficient" not in sec:
        raise ConfigError("signal", "needs either 'csv' or 'coefficient'")
    coeff = coefficient_from_dict(sec["coefficient"], "signal.coefficient")
    t0 = _num(sec, "signal", "t0")
    t1 = _num(sec, "signal", "t1")
    dt = _num(sec, "signal", "dt")
    if not dt > 0.0:
        raise ConfigError("signal.dt", f"must be positive, got {dt}")
    if not t1 > t0:
        raise ConfigError("signal.t1", f"must exceed t0={t0}, got {t1}")
    return Signal.from_coefficient(coeff, t0, t1, dt)


@dataclass(frozen=True)
class AnalysisSpec:
    norm: NormKind
    eps: float
    tau_range: tuple[float, float]
    tau_step: float


def _norm_from(sec: dict, path: str) -> NormKind:
    kind = _str(sec, path, "norm", "stepanov")
    p = _num(sec, path, "p", 1.0)
    if kind == "bohr":
        return NormKind.bohr()
    if kind == "stepanov":
        if not p >= 1.0:
            raise ConfigError(f"{path}.p", f"must be >= 1, got {p}")
        return NormKind.stepanov(p)
    raise ConfigError(f"{path}.norm", f"must be 'bohr' or 'stepanov', got '{kind}'")


def _tau_range_from(sec: dict, path: str, default=_REQUIRED) -> tuple[float, float]:
    if "tau_range" not in sec:
        if default is _REQUIRED:
            raise ConfigError(f"{path}.tau_range", "is required")
        return default
    v = sec["tau_range"]
    ok = (
        isinstance(v, list)
        and len(v) == 2
        and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)
    )
    if not ok:
        raise ConfigError(f"{path}.tau_range", "expected [lo, hi]")
    lo, hi = float(v[0]), float(v[1])
    if not 0.0 < lo < hi:
        raise ConfigError(f"{path}.tau_range", f"needs 0 < lo < hi, got {v}")
    return lo, hi


_ANALYSIS_KEYS = {"norm", "p", "eps", "tau_range", "tau_step", "sample_dt"}


def analysis_from_config(cfg: dict) -> AnalysisSpec:
    sec = _section(cfg, "analysis")
    _check_keys(sec, "analysis", _ANALYSIS_KEYS)
    eps = _num(sec, "analysis", "eps")
    if not eps > 0.0:
        raise ConfigError("analysis.eps", f"must be positive, got {eps}")
    tau_step = _num(sec, "analysis", "tau_step")
    if not tau_step > 0.0:
        raise ConfigError("analysis.tau_step", f"must be positive, got {tau_step}")
    return AnalysisSpec(
        norm=_norm_from(sec, "analysis"),
        eps=eps,
        tau_range=_tau_range_from(sec, "analysis"),
        tau_step=tau_step,
    )


def scan_from_config(cfg: dict) -> ScanSpec:
    """Demo scan settings from the analysis section; defaults if absent."""
    sec = cfg.get("analysis")
    if sec is None:
        return ScanSpec()
    _check_keys(sec, "analysis", _ANALYSIS_KEYS)
    base = ScanSpec()
    norm = _norm_from(sec, "analysis")
    if norm.kind != "stepanov":
        raise ConfigError("analysis.norm", "the demo scan is Stepanov-only")
    eps = _num(sec, "analysis", "eps", base.eps)
    tau_step = _num(sec, "analysis", "tau_step", base.tau_step)
    sample_dt = _num(sec, "analysis", "sample_dt", base.sample_dt)
    for name, val in (("eps", eps), ("tau_step", tau_step), ("sample_dt", sample_dt)):
        if not val > 0.0:
            raise ConfigError(f"analysis.{name}", f"must be positive, got {val}")
    return ScanSpec(
        eps=eps,
        tau_range=_tau_range_from(sec, "analysis", base.tau_range),
        tau_step=tau_step,
        sample_dt=sample_dt,
        p=norm.p,
    )


_SOLVER_KEYS = {
    "t0",
    "t1",
    "dt",
    "tail_cut",
    "rho",
    "alpha",
    "quad_tol",
    "max_iter",
    "stop_tol",
    "p",
    "gamma_ratio",
}


def solver_from_config(cfg: dict, threads: int = 1) -> SolveConfig:
    sec = _section(cfg, "solver")
    _check_keys(sec, "solver", _SOLVER_KEYS)
    return SolveConfig(
        t0=_num(sec, "solver", "t0"),
        t1=_num(sec, "solver", "t1"),
        dt=_num(sec, "solver", "dt"),
        tail_cut=_num(sec, "solver", "tail_cut"),
        rho=_num(sec, "solver", "rho"),
        alpha=_num(sec, "solver", "alpha"),
        quad_tol=_num(sec, "solver", "quad_tol", 1e-9),
        max_iter=_int(sec, "solver", "max_iter", 40),
        stop_tol=_num(sec, "solver", "stop_tol", 1e-8),
        p=_num(sec, "solver", "p", 1.0),
        gamma_ratio=_num(sec, "solver", "gamma_ratio", 0.5),
        threads=threads,
    )


def spatial_from_config(cfg: dict) -> SineBasis:
    sec = cfg.get("spatial", {})
    _check_keys(sec, "spatial", {"length", "modes"})
    length = _num(sec, "spatial", "length", 1.0)
    modes = _int(sec, "spatial", "modes", 32)
    if not length > 0.0:
        raise ConfigError("spatial.length", f"must be positive, got {length}")
    if modes < 1:
        raise ConfigError("spatial.modes", f"must be at least 1, got {modes}")
    return SineBasis(modes, length)


def systems_from_config(
    cfg: dict, solve_cfg: SolveConfig
) -> tuple[SineBasis, tuple[EvolutionSystem, ...]]:
    """Evolution blocks for the linear solve over the padded time window.

    d1 is required; with d2 present there are two stacked blocks. The
    zero-order coefficient b attaches to the last block.
    """
    sec = _section(cfg, "system")
    _check_keys(sec, "system", {"d1", "d2", "b"})
    if "d1" not in sec:
        raise ConfigError("system.d1", "is required")
    basis = spatial_from_config(cfg)
    pad = 1.0 + solve_cfg.dt
    t_lo = solve_cfg.t0 - solve_cfg.tail_cut - pad
    t_hi = solve_cfg.t1 + pad
    d1 = coefficient_from_dict(sec["d1"], "system.d1")
    zero_order: Coefficient | None = None
    if "b" in sec:
        zero_order = coefficient_from_dict(sec["b"], "system.b")
    if "d2" in sec:
        d2 = coefficient_from_dict(sec["d2"], "system.d2")
        sys1 = EvolutionSystem(basis, d1, t_lo, t_hi)
        sys2 = EvolutionSystem(basis, d2, t_lo, t_hi, zero_order=zero_order)
        return basis, (sys1, sys2)
    sys1 = EvolutionSystem(basis, d1, t_lo, t_hi, zero_order=zero_order)
    return basis, (sys1,)


def forcing_from_config(
    cfg: dict, width: int, window: tuple[float, float]
) -> AnalyticForcing:
    """Linear-solve forcing from signal.modes; absent section means zero.

    signal.modes maps 1-based mode indices (JSON object keys) to
    coefficient documents; unlisted modes carry zero forcing.
    """
    sec = cfg.get("signal")
    if sec is None:
        return AnalyticForcing.zero(width)
    _check_keys(sec, "signal", {"modes"})
    modes_doc = sec.get("modes")
    if not isinstance(modes_doc, dict):
        raise ConfigError("signal.modes", "expected an object of mode -> coefficient")
    parts: dict[int, Coefficient] = {}
    for key, val in modes_doc.items():
        try:
            k = int(key)
        except ValueError:
            raise ConfigError(f"signal.modes.{key}", "mode key must be an integer")
        if not 1 <= k <= width:
            raise ConfigError(
                f"signal.modes.{key}", f"mode must lie in [1, {width}]"
            )
        parts[k] = coefficient_from_dict(val, f"signal.modes.{key}")
    return AnalyticForcing.from_mode_coefficients(parts, width, window)


_LV_KEYS = {
    "d_tilde_1",
    "d_hat_1",
    "d_tilde_2",
    "d_hat_2",
    "a_tilde",
    "b_tilde",
    "c_tilde",
    "length",
    "modes",
    "alpha",
}


def lv_from_config(cfg: dict) -> LVParams:
    sec = cfg.get("lv", {})
    _check_keys(sec, "lv", _LV_KEYS)
    kwargs: dict = {}
    for key in _LV_KEYS:
        if key not in sec:
            continue
        if key == "modes":
            kwargs[key] = _int(sec, "lv", key)
        else:
            kwargs[key] = _num(sec, "lv", key)
    return LVParams(**kwargs)
