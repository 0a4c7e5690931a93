"""Command-line entry point.

Four commands over one JSON config format:

    apev analyze   <config>            classify a signal's almost periodicity
    apev constants --alpha ... --gamma ...   print the a-priori constants
    apev solve     <config> --linear | --semilinear [--force]
    apev lv-demo   <config> --out DIR  end-to-end two-species demo bundle

Shared flags: --out (file for analyze, directory for the solvers),
--threads (APEV_THREADS is the fallback), --seed for randomized
verification trials. Every failure prints a single-line JSON object on
stderr; exit codes: 0 success, 2 contraction gate, 3 non-convergence,
4 invalid configuration, 1 other runtime errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from functools import partial
from pathlib import Path

from .apfun import find_almost_periods
from .config import (
    analysis_from_config,
    forcing_from_config,
    load_config,
    lv_from_config,
    scan_from_config,
    signal_from_config,
    solver_from_config,
    systems_from_config,
)
from .errors import (
    ApevError,
    BallExitError,
    ConfigError,
    ContractionError,
    ConvergenceError,
)
from .lotka import build_systems, lipschitz_bound, lv_demo, lv_nonlinearity
from .serialize import json_dumps, solution_csv_lines, write_json
from .solver import constants, linear_bound_check, picard_solve, solve_linear

__all__ = ["main"]


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _write_solution(out_dir: Path, u, modes: int):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "solution.csv").write_text(
        "\n".join(solution_csv_lines(u, modes)) + "\n"
    )


def cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    sig = signal_from_config(cfg)
    spec = analysis_from_config(cfg)
    rep = find_almost_periods(sig, spec.eps, spec.norm, spec.tau_range, spec.tau_step)
    _emit(json_dumps(rep.to_dict()), args.out)
    return 0


def cmd_constants(args) -> int:
    cons = constants(args.alpha, args.gamma, args.delta, args.m_alpha, args.c_alpha, args.p)
    _emit(json_dumps(cons.to_dict()), args.out)
    return 0


def cmd_solve(args, threads: int) -> int:
    cfg = load_config(args.config)
    scfg = solver_from_config(cfg, threads)
    if args.linear:
        basis, blocks = systems_from_config(cfg, scfg)
        width = sum(b.basis.K for b in blocks)
        pad = 1.0 + scfg.dt
        window = (scfg.t0 - scfg.tail_cut - pad, scfg.t1 + pad)
        forcing = forcing_from_config(cfg, width, window)
        u = solve_linear(blocks, forcing, scfg)
        report: dict = {"mode": "linear", "config": str(args.config)}
        if len(blocks) == 1:
            report["boundCheck"] = linear_bound_check(
                blocks[0], forcing, scfg, u
            ).to_dict()
        modes = basis.K
    else:
        params = lv_from_config(cfg)
        t_lo = scfg.t0 - scfg.tail_cut - 1.0 - scfg.dt
        t_hi = scfg.t1 + 1.0 + scfg.dt
        blocks = build_systems(params, t_lo, t_hi)
        lip = lipschitz_bound(params, scfg.rho)
        co = params.coefficients()
        a_breaks = co["a"].discontinuities((t_lo, t_hi))
        u, rep = picard_solve(
            blocks,
            partial(lv_nonlinearity, params),
            scfg,
            lip.effective,
            force=args.force,
            forcing_breaks=a_breaks,
        )
        report = {
            "mode": "semilinear",
            "config": str(args.config),
            "lipschitz": lip.to_dict(),
            "convergence": rep.to_dict(),
        }
        modes = params.modes
    if args.out is None:
        _emit(json_dumps(report), None)
    else:
        out_dir = Path(args.out)
        _write_solution(out_dir, u, modes)
        write_json(out_dir / "report.json", report)
    return 0


def cmd_lv_demo(args, threads: int, seed: int) -> int:
    cfg = load_config(args.config)
    params = lv_from_config(cfg)
    scfg = solver_from_config(cfg, threads)
    scan = scan_from_config(cfg)
    bundle = lv_demo(params, scfg, scan, seed=seed)
    bundle.write(args.out)
    _emit(json_dumps(bundle.verdict), None)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output file or directory")
    common.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads (default: APEV_THREADS or 1)",
    )
    common.add_argument(
        "--seed", type=int, default=0, help="seed for randomized verification trials"
    )

    ap = argparse.ArgumentParser(
        prog="apev",
        description="almost-periodicity analysis and parabolic mild solutions",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="classify a signal")
    p.add_argument("config", help="JSON config with signal + analysis sections")

    p = sub.add_parser("constants", parents=[common], help="print the bound constants")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--m-alpha", type=float, required=True, dest="m_alpha")
    p.add_argument("--c-alpha", type=float, required=True, dest="c_alpha")
    p.add_argument("--p", type=float, default=1.0)

    p = sub.add_parser("solve", parents=[common], help="linear or semilinear solve")
    p.add_argument("config")
    kind = p.add_mutually_exclusive_group(required=True)
    kind.add_argument("--linear", action="store_true")
    kind.add_argument("--semilinear", action="store_true")
    p.add_argument(
        "--force", action="store_true", help="iterate even if the contraction gate fails"
    )

    p = sub.add_parser("lv-demo", parents=[common], help="end-to-end demo bundle")
    p.add_argument("config")
    return ap


def _resolve_threads(args) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        env = os.environ.get("APEV_THREADS", "")
        try:
            n = int(env) if env else 1
        except ValueError:
            raise ConfigError("APEV_THREADS", f"expected an integer, got '{env}'")
    if n < 1:
        raise ConfigError("threads", f"must be >= 1, got {n}")
    return n


def _fail(kind: str, exc: Exception, extra: dict | None = None) -> None:
    doc = {"error": kind, "message": str(exc)}
    if extra:
        doc.update(extra)
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        threads = _resolve_threads(args)
        if args.command == "analyze":
            return cmd_analyze(args)
        if args.command == "constants":
            return cmd_constants(args)
        if args.command == "solve":
            return cmd_solve(args, threads)
        if args.command == "lv-demo":
            if args.out is None:
                raise ConfigError("--out", "lv-demo needs an output directory")
            return cmd_lv_demo(args, threads, args.seed)
        raise ApevError(f"unknown command {args.command}")
    except ConfigError as exc:
        _fail("config", exc, {"path": exc.path})
        return 4
    except ContractionError as exc:
        _fail("contraction", exc)
        return 2
    except (ConvergenceError, BallExitError) as exc:
        _fail("convergence", exc)
        return 3
    except ApevError as exc:
        _fail("runtime", exc)
        return 1
    except OSError as exc:
        _fail("io", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
