"""Concrete function handles (polynomial, sampled) and their JSON schema.

Polynomial handles are a quadratic, cubic and quartic coefficient tensor
evaluated on the diagonal: ``f(x) = A[x,x] + B[x,x,x] + C[x,x,x,x]`` with one
tensor slice per output coordinate. In one dimension this is simply
``a*x**2 + b*x**3 + c*x**4``.
"""

from __future__ import annotations

import itertools
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .core import Box, FunctionHandle
from .errors import DimensionError, DomainError, SchemaError

_EINSUM = {
    2: "mij,ni,nj->nm",
    3: "mijk,ni,nj,nk->nm",
    4: "mijkl,ni,nj,nk,nl->nm",
}


def symmetrize(tensor: np.ndarray) -> np.ndarray:
    """Average an ``(m, d, ..., d)`` tensor over all permutations of its trailing axes."""
    t = np.asarray(tensor, dtype=np.float64)
    k = t.ndim - 1
    if k <= 1:
        return t.copy()
    perms = list(itertools.permutations(range(1, k + 1)))
    acc = np.zeros_like(t)
    for perm in perms:
        acc += np.transpose(t, (0, *perm))
    return acc / len(perms)


def is_symmetric(tensor: np.ndarray, atol: float = 1e-12) -> bool:
    t = np.asarray(tensor, dtype=np.float64)
    k = t.ndim - 1
    return all(np.allclose(t, np.transpose(t, (0, *perm)), rtol=0.0, atol=atol)
               for perm in itertools.permutations(range(1, k + 1)))


def _infer_shape(coeffs: Sequence[Any]) -> tuple[int, int]:
    dims, outs = set(), set()
    for degree, c in zip((2, 3, 4), coeffs):
        arr = np.asarray(c, dtype=np.float64)
        if arr.ndim == 0:
            continue
        if arr.ndim == degree:
            outs.add(1)
        elif arr.ndim == degree + 1:
            outs.add(arr.shape[0])
        else:
            raise SchemaError(f"degree-{degree} coefficient has {arr.ndim} axes")
        dims.update(arr.shape[-degree:])
    if len(dims) > 1 or len(outs) > 1:
        raise DimensionError(f"inconsistent coefficient tensor shapes (d in {sorted(dims)}, m in {sorted(outs)})")
    return (dims.pop() if dims else 1), (outs.pop() if outs else 1)


def coefficient_tensor(c: Any, degree: int, dim: int, dim_out: int) -> np.ndarray:
    """Normalize a scalar or nested list into an ``(m, d, ..., d)`` tensor."""
    arr = np.asarray(c, dtype=np.float64)
    shape = (dim_out,) + (dim,) * degree
    if arr.ndim == 0:
        if dim == 1:
            return np.full(shape, float(arr))
        if arr != 0.0:
            raise SchemaError("scalar coefficients are only meaningful in one dimension")
        return np.zeros(shape)
    if arr.ndim == degree:
        arr = arr[None, ...]
    if arr.shape != shape:
        raise DimensionError(f"degree-{degree} tensor has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise SchemaError("non-finite polynomial coefficient")
    return arr


def eval_homogeneous(tensor: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Diagonal value T[x, ..., x] for each row of ``pts``; shape ``(N, m)``."""
    degree = tensor.ndim - 1
    if tensor.shape[1] == 1:
        # scalar domain: plain monomial keeps power-of-two scaling exact
        return pts[:, :1] ** degree * tensor.reshape(1, -1)
    return np.einsum(_EINSUM[degree], tensor, *([pts] * degree))


def poly_handle(a: Any = 0.0, b: Any = 0.0, c: Any = 0.0, description: str = "") -> FunctionHandle:
    """Handle for ``a·x² + b·x³ + c·x⁴`` (tensors contracted on the diagonal)."""
    dim, dim_out = _infer_shape((a, b, c))
    A = symmetrize(coefficient_tensor(a, 2, dim, dim_out))
    B = symmetrize(coefficient_tensor(b, 3, dim, dim_out))
    C = symmetrize(coefficient_tensor(c, 4, dim, dim_out))

    def evaluate(pts: np.ndarray) -> np.ndarray:
        return eval_homogeneous(A, pts) + eval_homogeneous(B, pts) + eval_homogeneous(C, pts)

    if not description:
        description = f"poly({_short(a)}, {_short(b)}, {_short(c)})"
    spec = {"kind": "poly", "a": _jsonable(A, dim, dim_out), "b": _jsonable(B, dim, dim_out),
            "c": _jsonable(C, dim, dim_out)}
    return FunctionHandle(evaluate, dim, dim_out, description, kind="poly", spec=spec)


def _short(c: Any) -> str:
    arr = np.asarray(c)
    return f"{float(arr):g}" if arr.ndim == 0 else f"tensor{arr.shape}"


def _jsonable(t: np.ndarray, dim: int, dim_out: int) -> Any:
    if dim == 1 and dim_out == 1:
        return float(t.reshape(-1)[0])
    return (t[0] if dim_out == 1 else t).tolist()


def poly_tensors(handle: FunctionHandle) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Recover the coefficient tensors stored on a ``poly`` handle."""
    if handle.spec is None or handle.spec.get("kind") not in ("poly", "generated"):
        raise SchemaError("handle carries no polynomial coefficients")
    s = handle.spec
    return (coefficient_tensor(s["a"], 2, handle.dim_in, handle.dim_out),
            coefficient_tensor(s["b"], 3, handle.dim_in, handle.dim_out),
            coefficient_tensor(s["c"], 4, handle.dim_in, handle.dim_out))


# ---------------------------------------------------------------------------
# Sample-based handles
# ---------------------------------------------------------------------------

def samples_handle(points: Iterable[Any], values: Iterable[Any], description: str = "samples") -> FunctionHandle:
    """Piecewise-linear interpolant of scattered samples; refuses extrapolation.

    One-dimensional data uses ``numpy.interp`` on the sorted abscissae; higher
    dimensions use a Delaunay-based linear interpolant on the convex hull.
    """
    pts = np.asarray(list(points), dtype=np.float64)
    vals = np.asarray(list(values), dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if vals.ndim == 1:
        vals = vals[:, None]
    if pts.ndim != 2 or vals.ndim != 2 or pts.shape[0] != vals.shape[0]:
        raise SchemaError(f"points {pts.shape} and values {vals.shape} do not align")
    if pts.shape[0] < 2:
        raise SchemaError("need at least two samples")
    if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(vals))):
        raise SchemaError("non-finite sample")
    dim, dim_out = pts.shape[1], vals.shape[1]
    box = Box(pts.min(axis=0), pts.max(axis=0))

    if dim == 1:
        order = np.argsort(pts[:, 0], kind="stable")
        xs, ys = pts[order, 0], vals[order]
        if np.any(np.diff(xs) <= 0):
            raise SchemaError("duplicate sample abscissae")

        def evaluate(q: np.ndarray) -> np.ndarray:
            return np.stack([np.interp(q[:, 0], xs, ys[:, j]) for j in range(dim_out)], axis=1)
    else:
        from scipy.interpolate import LinearNDInterpolator

        interp = LinearNDInterpolator(pts, vals)

        def evaluate(q: np.ndarray) -> np.ndarray:
            out = np.asarray(interp(q), dtype=np.float64).reshape(q.shape[0], dim_out)
            if np.any(np.isnan(out)):
                raise DomainError(f"{description}: point outside the convex hull of the samples")
            return out

    spec = {"kind": "samples", "points": pts.tolist(), "values": vals.tolist()}
    return FunctionHandle(evaluate, dim, dim_out, description, domain=box, kind="samples", spec=spec)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def handle_from_json(obj: Any) -> FunctionHandle:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SchemaError("function JSON must be an object with a 'kind' field")
    kind = obj["kind"]
    if kind == "poly":
        missing = {"a", "b", "c"} - obj.keys()
        if missing:
            raise SchemaError(f"poly function is missing {sorted(missing)}")
        return poly_handle(obj["a"], obj["b"], obj["c"])
    if kind == "samples":
        if "points" not in obj or "values" not in obj:
            raise SchemaError("samples function needs 'points' and 'values'")
        return samples_handle(obj["points"], obj["values"])
    if kind == "generated":
        from .harness import generator_spec_from_json, generate

        return generate(generator_spec_from_json(obj))
    raise SchemaError(f"unknown function kind {kind!r}")


def handle_to_json(handle: FunctionHandle) -> dict:
    if handle.spec is None:
        raise SchemaError(f"handle {handle.description!r} has no serializable form")
    return handle.spec


def parse_input(text: str) -> FunctionHandle:
    """Read ``poly:a,b,c`` shorthand or a path to a function JSON file."""
    if text.startswith("poly:"):
        parts = text[5:].split(",")
        if len(parts) != 3:
            raise SchemaError(f"expected poly:a,b,c, got {text!r}")
        try:
            a, b, c = (float(v) for v in parts)
        except ValueError as exc:
            raise SchemaError(f"bad coefficient in {text!r}") from exc
        if not all(math.isfinite(v) for v in (a, b, c)):
            raise SchemaError("non-finite coefficient")
        return poly_handle(a, b, c)
    try:
        obj = json.loads(Path(text).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{text}: invalid JSON ({exc})") from exc
    return handle_from_json(obj)
