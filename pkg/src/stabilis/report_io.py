"""Canonical JSON and CSV output for reports.

Keys are sorted and reals are written with 17 significant digits, so equal
inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Sequence

import numpy as np

from .core import DecompositionReport, FunctionHandle, norm
from .operators import ResidualCheck


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _encode(obj: Any, indent: int, level: int) -> str:
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return '"nan"'
        if math.isinf(obj):
            return '"inf"' if obj > 0 else '"-inf"'
        return format(obj, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, dict)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _encode(v, indent, level + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [inner + json.dumps(k) + ": " + _encode(obj[k], indent, level + 1) for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def canonical_json(obj: Any, indent: int = 2) -> str:
    """Sorted keys, 17-digit reals, trailing newline."""
    return _encode(_plain(obj), indent, 0) + "\n"


def _sampled(h: FunctionHandle, probes: np.ndarray) -> list:
    return h.many(probes).tolist()


def report_to_dict(report: DecompositionReport, source: Any = None) -> dict:
    probes = report.probes
    comps = {}
    for name, part in (("quadratic", report.quadratic_part), ("cubic", report.cubic_part),
                       ("quartic", report.quartic_part)):
        entry: dict = {"values": _sampled(part, probes)}
        if report.coefficients is not None:
            coef = np.asarray(report.coefficients[name])
            entry["coefficients"] = float(coef.reshape(-1)[0]) if coef.size == 1 else coef
        comps[name] = entry
    out = {
        "components": comps,
        "probes": probes.tolist(),
        "certified_bound": report.certified_bound.tolist(),
        "residuals": report.residuals.tolist(),
        "residual_sup": report.residual_sup,
        "direction_used": report.direction_used,
        "iterations_used": report.iterations_used,
        "converged": report.converged,
        "shift": np.asarray(report.shift).tolist(),
        "envelope": report.envelope.describe(),
        "warnings": list(report.warnings),
    }
    if source is not None:
        out["input"] = source
    return out


def identity_report(checks: Sequence[ResidualCheck], tol: float) -> dict:
    return {"tolerance": tol, "passed": all(c.passed for c in checks),
            "checks": [c.to_dict() for c in checks]}


def plot_csv(f: FunctionHandle, report: DecompositionReport) -> str:
    """Columns x, f, reconstruction, bound at the probe points (first coordinate of x and values)."""
    X = report.probes
    fx = np.atleast_1d(norm(f.many(X), "max")) if f.dim_out > 1 else f.many(X)[:, 0]
    rec = report.reconstruction().many(X)
    rx = np.atleast_1d(norm(rec, "max")) if rec.shape[1] > 1 else rec[:, 0]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "f", "reconstruction", "bound"])
    for i in range(X.shape[0]):
        xv = X[i, 0] if X.shape[1] == 1 else float(norm(X[i], "max"))
        w.writerow([format(float(v), ".17g") for v in (xv, fx[i], rx[i], report.certified_bound[i])])
    return buf.getvalue()
