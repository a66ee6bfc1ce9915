"""Difference operators for the quadratic, cubic, quartic and mixed equations,
the even/odd split, and the identity suite satisfied by exact solutions.

Every operator is a short linear combination ``sum_k coef_k * f(alpha_k x + beta_k y)``.
Residuals are reported together with a scale ``1 + max_k |coef_k f(...)|`` because
the combinations cancel catastrophically for large arguments; acceptance is
always ``|residual| <= tol * scale``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from .core import FunctionHandle, NormSpec, as_point, as_points, map_chunks, norm, probe_grid
from .errors import DimensionError, DomainError

# (coef, alpha, beta): term coef * f(alpha*x + beta*y)
Template = Sequence[tuple[float, float, float]]

MIXED: Template = (
    (3, 1, 2), (3, 1, -2), (-12, 1, 1), (-12, 1, -1),
    (-4, 0, 3), (18, 0, 2), (-36, 0, 1), (18, 1, 0),
)
QUADRATIC: Template = ((1, 1, 1), (1, 1, -1), (-2, 1, 0), (-2, 0, 1))
CUBIC: Template = ((1, 2, 1), (1, 2, -1), (-2, 1, 1), (-2, 1, -1), (-12, 1, 0))
QUARTIC: Template = ((1, 2, 1), (1, 2, -1), (-4, 1, 1), (-4, 1, -1), (-24, 1, 0), (6, 0, 1))

EQUATIONS = {"mixed": MIXED, "quadratic": QUADRATIC, "cubic": CUBIC, "quartic": QUARTIC}

# Absolute coefficient sum of the mixed operator: a pointwise perturbation of
# size eps moves the mixed residual by at most this many eps.
MIXED_COEFFICIENT_SUM = sum(abs(c) for c, _, _ in MIXED)
# Signed sum: the mixed residual of a constant function c is this times c.
MIXED_CONSTANT_GAIN = sum(c for c, _, _ in MIXED)

# Identities for the even part ('e') and the odd part ('o'), written as LHS - RHS.
IDENTITIES: dict[str, tuple[str, Template]] = {
    "2.1": ("e", ((1, 0, 3), (-6, 0, 2), (15, 0, 1))),
    "2.2": ("e", ((1, 1, 2), (1, 1, -2), (-4, 1, 1), (-4, 1, -1), (8, 0, 1), (-2, 0, 2), (6, 1, 0))),
    "2.3": ("e", ((1, 2, 1), (1, 2, -1), (-4, 1, 1), (-4, 1, -1), (8, 1, 0), (-2, 2, 0), (6, 0, 1))),
    "2.13": ("e", ((1, 4, 0), (-20, 2, 0), (64, 1, 0))),
    "2.16": ("o", ((2, 0, 3), (-9, 0, 2), (18, 0, 1))),
    "2.17": ("o", ((1, 1, 2), (1, 1, -2), (-4, 1, 1), (-4, 1, -1), (6, 1, 0))),
    "2.18": ("o", ((1, 0, 3), (-6, 0, 2), (21, 0, 1))),
    "2.19": ("o", ((1, 0, 2), (-8, 0, 1))),
}


def _pairs(f: FunctionHandle, x: Any, y: Any) -> tuple[np.ndarray, np.ndarray, bool]:
    """Batches for (x, y) plus whether the caller passed a single pair."""
    xa, ya = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)

    def one(a: np.ndarray) -> bool:
        return a.ndim == 0 or (a.ndim == 1 and (f.dim_in > 1 or a.size == 1))

    if one(xa) and one(ya):
        xa, ya = as_point(xa), as_point(ya)
        if xa.shape != ya.shape:
            raise DimensionError(f"x has dimension {xa.size}, y has {ya.size}")
        if xa.size != f.dim_in:
            raise DimensionError(f"points of dimension {xa.size} for a handle on R^{f.dim_in}")
        return xa[None, :], ya[None, :], True
    X, Y = as_points(xa, f.dim_in), as_points(ya, f.dim_in)
    if X.shape != Y.shape:
        raise DimensionError(f"x batch {X.shape} and y batch {Y.shape} differ")
    return X, Y, False


def combine(f: FunctionHandle, template: Template, X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Residual ``(N, m)`` and scale ``(N,)`` of a template over aligned batches."""

    def work(Xc: np.ndarray, Yc: np.ndarray) -> np.ndarray:
        total = np.zeros((Xc.shape[0], f.dim_out))
        biggest = np.zeros(Xc.shape[0])
        for coef, alpha, beta in template:
            term = coef * f.many(alpha * Xc + beta * Yc)
            total += term
            biggest = np.maximum(biggest, np.max(np.abs(term), axis=1))
        return np.concatenate([total, (1.0 + biggest)[:, None]], axis=1)

    out = map_chunks(work, X, Y)
    return out[:, :-1], out[:, -1]


def residual(kind: str, f: FunctionHandle, x: Any, y: Any) -> tuple[np.ndarray, Any]:
    """``(residual, scale)`` for one of the named equations."""
    X, Y, single = _pairs(f, x, y)
    res, scale = combine(f, EQUATIONS[kind], X, Y)
    return (res[0], float(scale[0])) if single else (res, scale)


def d_mixed(f: FunctionHandle, x: Any, y: Any) -> np.ndarray:
    """3[f(x+2y)+f(x-2y)] - 12[f(x+y)+f(x-y)] - 4f(3y) + 18f(2y) - 36f(y) + 18f(x)."""
    return residual("mixed", f, x, y)[0]


def d_quadratic(f: FunctionHandle, x: Any, y: Any) -> np.ndarray:
    return residual("quadratic", f, x, y)[0]


def d_cubic(f: FunctionHandle, x: Any, y: Any) -> np.ndarray:
    return residual("cubic", f, x, y)[0]


def d_quartic(f: FunctionHandle, x: Any, y: Any) -> np.ndarray:
    return residual("quartic", f, x, y)[0]


def pair_grid(radius: float = 2.0, points: int = 41, dim: int = 1, max_pairs: int = 200_000) -> tuple[np.ndarray, np.ndarray]:
    """All (x, y) pairs from a probe grid, thinned evenly if there are too many."""
    g = probe_grid(radius, points, dim)
    if g.shape[0] ** 2 > max_pairs:
        stride = int(np.ceil(g.shape[0] / np.sqrt(max_pairs)))
        g = g[::stride]
    X = np.repeat(g, g.shape[0], axis=0)
    Y = np.tile(g, (g.shape[0], 1))
    return X, Y


@dataclass(frozen=True)
class ResidualCheck:
    name: str
    max_residual: float       # largest |residual|
    max_normalized: float     # largest |residual| / scale
    argmax: tuple[list, list]
    passed: bool

    def to_dict(self) -> dict:
        return {"identity": self.name, "max_residual": self.max_residual,
                "max_normalized": self.max_normalized,
                "argmax": [self.argmax[0], self.argmax[1]], "passed": self.passed}


def _summarize(name: str, res: np.ndarray, scale: np.ndarray, X: np.ndarray, Y: np.ndarray,
               tol: float, spec: NormSpec) -> ResidualCheck:
    mags = np.atleast_1d(norm(res, spec))
    rel = mags / scale
    worst = int(np.argmax(rel))
    unpack = (lambda v: float(v[0])) if X.shape[1] == 1 else (lambda v: v.tolist())
    return ResidualCheck(name, float(np.max(mags)), float(rel[worst]),
                         (unpack(X[worst]), unpack(Y[worst])), bool(np.all(mags <= tol * scale)))


def check_equation(f: FunctionHandle, kind: str, X: np.ndarray, Y: np.ndarray, tol: float = 1e-9,
                   spec: NormSpec = NormSpec.MAX) -> ResidualCheck:
    """Scale-normalized pass/fail of one equation over a batch of pairs."""
    X, Y = as_points(X, f.dim_in), as_points(Y, f.dim_in)
    res, scale = combine(f, EQUATIONS[kind], X, Y)
    return _summarize(kind, res, scale, X, Y, tol, spec)


# ---------------------------------------------------------------------------
# Even / odd parts and the identity suite
# ---------------------------------------------------------------------------

def even_odd_split(f: FunctionHandle) -> tuple[FunctionHandle, FunctionHandle]:
    """(f_e, f_o) with f_e(x) = (f(x) + f(-x))/2 and f_o(x) = (f(x) - f(-x))/2."""
    if f.domain is not None and not f.domain.is_symmetric():
        raise DomainError("even/odd split needs a domain symmetric about the origin")
    ev = f.evaluator
    name = f.description or "f"
    f_e = f.derive(lambda p: 0.5 * (ev(p) + ev(-p)), f"even({name})")
    f_o = f.derive(lambda p: 0.5 * (ev(p) - ev(-p)), f"odd({name})")
    return f_e, f_o


def _closure(template: Template, X: np.ndarray, Y: np.ndarray) -> float:
    return max(float(np.max(np.abs(a * X + b * Y))) for _, a, b in template) if X.size else 0.0


def verify_identity_suite(f_e: FunctionHandle, f_o: FunctionHandle, X: Any, Y: Any, tol: float = 1e-9,
                          shrink: bool = True, spec: NormSpec = NormSpec.MAX,
                          names: Optional[Sequence[str]] = None) -> list[ResidualCheck]:
    """Check every even/odd identity over the pairs ``(X[i], Y[i])``.

    Sample-based handles only cover a bounded box; with ``shrink`` the pairs
    are scaled down until every argument (up to ``4x`` and ``3y``) is inside,
    otherwise an out-of-domain argument raises ``DomainError``.
    """
    X, Y = as_points(X, f_e.dim_in), as_points(Y, f_e.dim_in)
    parts = {"e": f_e, "o": f_o}
    out = []
    for name in names or IDENTITIES:
        which, template = IDENTITIES[name]
        g = parts[which]
        Xi, Yi = X, Y
        if g.domain is not None:
            need = _closure(template, X, Y)
            room = g.domain.inner_radius
            if need > room:
                if not shrink:
                    raise DomainError(f"identity {name}: arguments reach {need:g}, domain radius is {room:g}")
                factor = room / need
                Xi, Yi = X * factor, Y * factor
        res, scale = combine(g, template, Xi, Yi)
        out.append(_summarize(name, res, scale, Xi, Yi, tol, spec))
    return out
