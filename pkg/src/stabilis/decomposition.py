"""Constructive decomposition of exact solutions into quadratic, cubic and quartic parts.

The even part of an exact solution splits through the two maps

    g(x) = f_e(2x) - 16 f_e(x)    (quadratic, equals -12 Q1)
    h(x) = f_e(2x) -  4 f_e(x)    (quartic,   equals  12 Q2)

and is recovered as ``(h - g) / 12``. Symmetric forms are stored as
``(m, d, ..., d)`` coefficient tensors, one slice per output coordinate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, ClassVar, Sequence

import numpy as np

from .core import FunctionHandle, as_point
from .errors import ArityError, DimensionError, SchemaError
from .functions import coefficient_tensor, eval_homogeneous, is_symmetric, poly_handle, symmetrize


# ---------------------------------------------------------------------------
# Symmetric forms
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SymmetricForm:
    coefficients: np.ndarray
    degree: ClassVar[int] = 0

    def __post_init__(self) -> None:
        arr = np.asarray(self.coefficients, dtype=np.float64)
        k = self.degree
        if arr.ndim == 0:
            arr = arr.reshape((1,) * (k + 1))
        elif arr.ndim == k:
            arr = arr[None, ...]
        if arr.ndim != k + 1 or len(set(arr.shape[1:])) != 1:
            raise DimensionError(f"degree-{k} form needs shape (m, d{', d' * (k - 1)}), got {arr.shape}")
        object.__setattr__(self, "coefficients", symmetrize(arr))

    @property
    def dim(self) -> int:
        return self.coefficients.shape[1]

    @property
    def dim_out(self) -> int:
        return self.coefficients.shape[0]

    def __call__(self, x: Any) -> np.ndarray:
        """Diagonal value T(x, ..., x)."""
        p = as_point(x, self.dim)
        return eval_homogeneous(self.coefficients, p[None, :])[0]

    def multilinear(self, *args: Any) -> np.ndarray:
        if len(args) != self.degree:
            raise ArityError(f"degree-{self.degree} form takes {self.degree} arguments, got {len(args)}")
        out = self.coefficients
        for a in reversed(args):
            out = out @ as_point(a, self.dim)
        return out

    def is_symmetric(self, atol: float = 1e-12) -> bool:
        return is_symmetric(self.coefficients, atol)

    def to_json(self) -> dict:
        return {"degree": self.degree, "coefficients": self.coefficients.tolist()}

    @staticmethod
    def from_json(obj: dict) -> "SymmetricForm":
        try:
            cls = _FORMS[int(obj["degree"])]
            return cls(np.asarray(obj["coefficients"], dtype=np.float64))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad form JSON: {exc}") from exc


class QuadraticForm(SymmetricForm):
    degree = 2

    @property
    def matrix(self) -> np.ndarray:
        return self.coefficients


class CubicForm(SymmetricForm):
    degree = 3

    @property
    def tensor(self) -> np.ndarray:
        return self.coefficients


class QuarticForm(SymmetricForm):
    degree = 4

    @property
    def tensor(self) -> np.ndarray:
        return self.coefficients


_FORMS = {2: QuadraticForm, 3: CubicForm, 4: QuarticForm}


# ---------------------------------------------------------------------------
# Even-part extraction maps
# ---------------------------------------------------------------------------

def _doubling_map(f_e: FunctionHandle, k: float, name: str) -> FunctionHandle:
    ev = f_e.evaluator
    doubled = f_e.rescaled(2.0)
    return f_e.derive(lambda p: ev(2.0 * p) - k * ev(p), f"{name}[{f_e.description}]", doubled.domain)


def extract_g(f_e: FunctionHandle) -> FunctionHandle:
    """g(x) = f_e(2x) - 16 f_e(x); annihilates quartic terms, scales x² by -12."""
    return _doubling_map(f_e, 16.0, "g")


def extract_h(f_e: FunctionHandle) -> FunctionHandle:
    """h(x) = f_e(2x) - 4 f_e(x); annihilates quadratic terms, scales x⁴ by 12."""
    return _doubling_map(f_e, 4.0, "h")


def recombine(g: FunctionHandle, h: FunctionHandle) -> FunctionHandle:
    """(h - g) / 12, which reproduces f_e from its g and h images."""
    return (h - g) * (1.0 / 12.0)


# ---------------------------------------------------------------------------
# Polarization and multilinearization
# ---------------------------------------------------------------------------

def polarize_quadratic(f: FunctionHandle, x: Any, y: Any) -> np.ndarray:
    """B(x, y) = (f(x + y) - f(x - y)) / 4."""
    xa, ya = as_point(x, f.dim_in), as_point(y, f.dim_in)
    vals = f.many(np.stack([xa + ya, xa - ya]))
    return 0.25 * (vals[0] - vals[1])


def bilinearity_defect(f: FunctionHandle, x1: Any, x2: Any, y: Any, alpha: float, beta: float) -> float:
    """Scale-normalized failure of B(a x1 + b x2, y) = a B(x1, y) + b B(x2, y).

    Zero (to rounding) exactly when ``f`` is a quadratic form on the sampled points.
    """
    x1, x2 = as_point(x1, f.dim_in), as_point(x2, f.dim_in)
    lhs = polarize_quadratic(f, alpha * x1 + beta * x2, y)
    b1, b2 = polarize_quadratic(f, x1, y), polarize_quadratic(f, x2, y)
    rhs = alpha * b1 + beta * b2
    scale = 1.0 + max(np.max(np.abs(lhs)), np.max(np.abs(alpha * b1)), np.max(np.abs(beta * b2)))
    return float(np.max(np.abs(lhs - rhs)) / scale)


def is_bilinear(f: FunctionHandle, samples: Sequence[tuple], tol: float = 1e-10) -> bool:
    """True when every ``(x1, x2, y, alpha, beta)`` sample passes and B(x, x) = f(x)."""
    for x1, x2, y, a, b in samples:
        if bilinearity_defect(f, x1, x2, y, a, b) > tol:
            return False
        diag = polarize_quadratic(f, x1, x1)
        fx = f(x1)
        if np.max(np.abs(diag - fx)) > tol * (1.0 + np.max(np.abs(fx))):
            return False
    return True


def multilinearize(f: FunctionHandle, degree: int, args: Sequence[Any]) -> np.ndarray:
    """(1/k!) Δ_{a1} ... Δ_{ak} f (0), with Δ_a f(x) = f(x + a) - f(x).

    For a homogeneous polynomial of degree k this is the symmetric k-linear
    form evaluated at ``args``; lower-degree terms are annihilated.
    """
    if degree not in (2, 3, 4):
        raise ArityError(f"degree must be 2, 3 or 4, got {degree}")
    if len(args) != degree:
        raise ArityError(f"degree {degree} needs {degree} arguments, got {len(args)}")
    vecs = np.stack([as_point(a, f.dim_in) for a in args])
    masks = np.array(list(itertools.product((0, 1), repeat=degree)), dtype=np.float64)
    signs = (-1.0) ** (degree - masks.sum(axis=1))
    vals = f.many(masks @ vecs)
    return (signs @ vals) / math.factorial(degree)


def form_from_handle(f: FunctionHandle, degree: int) -> SymmetricForm:
    """Recover the symmetric coefficient tensor of the degree-k part by multilinearization."""
    d = f.dim_in
    basis = np.eye(d)
    tensor = np.zeros((f.dim_out,) + (d,) * degree)
    for idx in itertools.combinations_with_replacement(range(d), degree):
        val = multilinearize(f, degree, [basis[i] for i in idx])
        for perm in set(itertools.permutations(idx)):
            tensor[(slice(None),) + perm] = val
    return _FORMS[degree](tensor)


def build_solution(q1: QuadraticForm, c: CubicForm, q2: QuarticForm) -> FunctionHandle:
    """f(x) = Q1(x, x) + C(x, x, x) + Q2(x, x, x, x), an exact solution of the mixed equation."""
    shapes = {(q.dim, q.dim_out) for q in (q1, c, q2)}
    if len(shapes) != 1:
        raise DimensionError(f"forms disagree on (d, m): {sorted(shapes)}")
    d, m = shapes.pop()
    tensors = [coefficient_tensor(q.coefficients, q.degree, d, m) for q in (q1, c, q2)]
    return poly_handle(*(t if (d, m) != (1, 1) else float(t.reshape(-1)[0]) for t in tensors),
                       description="solution")
