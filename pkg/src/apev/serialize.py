"""Deterministic report emission: JSON with 17-significant-digit floats.

The stdlib json encoder renders floats with shortest-repr formatting; reports
here pin every float to %.17g instead so files are byte-stable across runs,
platforms, and thread counts, and keys are always emitted sorted.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import ApevError
from .signals import Signal

__all__ = ["format_float", "json_dumps", "write_json", "solution_csv_lines"]


def format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ApevError(f"non-finite float {x} cannot enter a report")
    return f"{x:.17g}"


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if obj is None:
        return "null"
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [_encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(pad_in + s for s in items) + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = []
        for k in sorted(obj):
            if not isinstance(k, str):
                raise ApevError(f"report keys must be strings, got {k!r}")
            parts.append(pad_in + json.dumps(k) + ": " + _encode(obj[k], indent, level + 1))
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    raise ApevError(f"cannot serialize {type(obj).__name__} into a report")


def json_dumps(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(json_dumps(obj))


def solution_csv_lines(sig: Signal, K: int) -> list[str]:
    """Long-format rows t,mode,component,value for a K- or 2K-wide solution."""
    m = sig.samples.shape[1]
    if m == K:
        comps = [("u", 0)]
    elif m == 2 * K:
        comps = [("u", 0), ("v", K)]
    else:
        raise ApevError(f"solution width {m} matches neither K={K} nor 2K")
    ts = sig.times()
    lines = ["t,mode,component,value"]
    for i in range(sig.n):
        t_str = format_float(float(ts[i]))
        for name, off in comps:
            row = sig.samples[i]
            for k in range(K):
                lines.append(f"{t_str},{k + 1},{name},{format_float(float(row[off + k]))}")
    return lines
