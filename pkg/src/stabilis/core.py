"""Shared domain types: points, norms, function handles, envelopes, configuration."""

from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .errors import DimensionError, DomainError, InvalidEnvelope, InvalidValue

EPS = np.finfo(np.float64).eps


# ---------------------------------------------------------------------------
# Points, values, norms
# ---------------------------------------------------------------------------

def as_point(x: Any, dim: Optional[int] = None) -> np.ndarray:
    """Validate a single point and return it as a 1-D float array."""
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if arr.ndim != 1:
        raise DimensionError(f"a point must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidValue(f"non-finite coordinates in {arr!r}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionError(f"expected dimension {dim}, got {arr.shape[0]}")
    return arr


as_value = as_point


def as_points(x: Any, dim: int) -> np.ndarray:
    """Coerce ``x`` into an ``(N, dim)`` batch.

    A 1-D array is read as N scalar points when ``dim == 1`` and as a single
    point otherwise.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim == 1 else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DimensionError(f"expected points of dimension {dim}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidValue("non-finite coordinates in point batch")
    return arr


class NormSpec(str, enum.Enum):
    MAX = "max"
    EUCLIDEAN = "euclidean"


def norm(v: Any, spec: NormSpec | str = NormSpec.MAX) -> Any:
    """Norm over the last axis; a batch of values gives a batch of norms."""
    arr = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidValue("cannot take the norm of a non-finite value")
    if arr.ndim == 0:
        return float(abs(arr))
    if arr.shape[-1] == 0:
        raise DimensionError("empty value")
    spec = NormSpec(spec)
    big = np.max(np.abs(arr), axis=-1)
    if spec is NormSpec.MAX:
        out = big
    else:
        # scale by the largest entry so squares neither overflow nor underflow
        m = np.where(big > 0, big, 1.0)[..., None]
        out = big * np.sqrt(np.sum((arr / m) ** 2, axis=-1))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Parallel evaluation
# ---------------------------------------------------------------------------

def worker_count() -> int:
    """Thread cap from ``STABILIS_THREADS`` (unset or 0 means serial)."""
    raw = os.environ.get("STABILIS_THREADS", "0").strip() or "0"
    try:
        return max(0, int(raw))
    except ValueError:
        return 0


def map_chunks(fn: Callable[..., np.ndarray], *arrays: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Apply ``fn`` to aligned row-chunks of ``arrays`` and concatenate in order."""
    n = arrays[0].shape[0]
    threads = worker_count()
    if threads <= 1 or n <= chunk:
        return fn(*arrays)
    bounds = [(i, min(i + chunk, n)) for i in range(0, n, chunk)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda b: fn(*(a[b[0]:b[1]] for a in arrays)), bounds))
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
# Function handles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """Axis-aligned evaluation domain of a sample-based handle."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        lo, hi = np.atleast_1d(np.asarray(self.lo, dtype=np.float64)), np.atleast_1d(np.asarray(self.hi, dtype=np.float64))
        if lo.shape != hi.shape or np.any(lo > hi):
            raise DimensionError("box needs lo <= hi with matching shapes")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, pts: np.ndarray, slack: float = 1e-12) -> np.ndarray:
        span = 1.0 + np.maximum(np.abs(self.lo), np.abs(self.hi))
        return np.all((pts >= self.lo - slack * span) & (pts <= self.hi + slack * span), axis=1)

    @property
    def inner_radius(self) -> float:
        """Largest r with the max-norm ball of radius r inside the box."""
        return float(min(np.min(-self.lo), np.min(self.hi)))

    def is_symmetric(self, rtol: float = 1e-12) -> bool:
        scale = 1.0 + np.max(np.abs(np.concatenate([self.lo, self.hi])))
        return bool(np.all(np.abs(self.lo + self.hi) <= rtol * scale))

    def intersect(self, other: Optional["Box"]) -> "Box":
        if other is None:
            return self
        return Box(np.maximum(self.lo, other.lo), np.minimum(self.hi, other.hi))


def _intersect(a: Optional[Box], b: Optional[Box]) -> Optional[Box]:
    if a is None:
        return b
    return a.intersect(b)


@dataclass(frozen=True, eq=False)
class FunctionHandle:
    """A deterministic map from R^dim_in to R^dim_out.

    ``evaluator`` takes an ``(N, dim_in)`` batch and returns ``(N, dim_out)``.
    ``kind`` records provenance: ``"poly"`` and ``"generated"`` handles are
    polynomial (plus perturbation) and get coefficient tensors in reports.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    dim_in: int = 1
    dim_out: int = 1
    description: str = ""
    domain: Optional[Box] = None
    kind: str = "callable"
    spec: Optional[dict] = field(default=None, repr=False)

    @classmethod
    def from_pointwise(cls, fn: Callable[[np.ndarray], Any], dim_in: int = 1, dim_out: int = 1,
                       description: str = "") -> "FunctionHandle":
        """Wrap a single-point callable; it is looped over batches."""

        def batch(pts: np.ndarray) -> np.ndarray:
            out = np.empty((pts.shape[0], dim_out))
            for i, p in enumerate(pts):
                out[i] = np.asarray(fn(p), dtype=np.float64).reshape(dim_out)
            return out

        return cls(batch, dim_in, dim_out, description)

    def many(self, x: Any) -> np.ndarray:
        pts = as_points(x, self.dim_in)
        if self.domain is not None:
            inside = self.domain.contains(pts)
            if not np.all(inside):
                bad = pts[~inside][0]
                raise DomainError(f"{self.description or 'handle'}: point {bad.tolist()} is outside the sample domain")
        out = np.asarray(self.evaluator(pts), dtype=np.float64).reshape(pts.shape[0], self.dim_out)
        return out

    def __call__(self, x: Any) -> np.ndarray:
        return self.many(as_point(x, self.dim_in)[None, :])[0]

    # Derived handles -------------------------------------------------------

    def _check_compatible(self, other: "FunctionHandle") -> None:
        if (self.dim_in, self.dim_out) != (other.dim_in, other.dim_out):
            raise DimensionError(
                f"incompatible handles: {self.dim_in}->{self.dim_out} vs {other.dim_in}->{other.dim_out}")

    def derive(self, evaluator: Callable[[np.ndarray], np.ndarray], description: str,
               domain: Optional[Box] = None) -> "FunctionHandle":
        return FunctionHandle(evaluator, self.dim_in, self.dim_out, description,
                              domain if domain is not None else self.domain, kind="derived")

    def rescaled(self, factor: float) -> "FunctionHandle":
        """x -> f(factor * x); the domain shrinks accordingly."""
        dom = None
        if self.domain is not None:
            a = self.domain.lo / factor
            b = self.domain.hi / factor
            dom = Box(np.minimum(a, b), np.maximum(a, b))
        return self.derive(lambda p: self.evaluator(factor * p), f"{self.description}(({factor})x)", dom)

    def __add__(self, other: "FunctionHandle") -> "FunctionHandle":
        self._check_compatible(other)
        return self.derive(lambda p: self.evaluator(p) + other.evaluator(p),
                           f"({self.description} + {other.description})", _intersect(self.domain, other.domain))

    def __sub__(self, other: "FunctionHandle") -> "FunctionHandle":
        self._check_compatible(other)
        return self.derive(lambda p: self.evaluator(p) - other.evaluator(p),
                           f"({self.description} - {other.description})", _intersect(self.domain, other.domain))

    def __mul__(self, k: float) -> "FunctionHandle":
        k = float(k)
        return self.derive(lambda p: k * self.evaluator(p), f"{k}*{self.description}")

    __rmul__ = __mul__

    def __neg__(self) -> "FunctionHandle":
        return self * -1.0


def zero_handle(dim_in: int = 1, dim_out: int = 1) -> FunctionHandle:
    return FunctionHandle(lambda p: np.zeros((p.shape[0], dim_out)), dim_in, dim_out, "0", kind="poly")


# ---------------------------------------------------------------------------
# Perturbation envelopes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PerturbationBound:
    """Upper bound phi(x, y) on the mixed difference residual.

    Use the ``constant``, ``power`` and ``custom`` constructors. A custom
    envelope must declare its growth: ``"bounded"`` (optionally with a known
    ``sup``) or ``"power"`` with exponent ``p``.
    """

    kind: str
    epsilon: float = 0.0
    theta: float = 0.0
    p: float = 0.0
    evaluator: Optional[Callable[[np.ndarray, np.ndarray], float]] = None
    growth: str = "bounded"
    sup: Optional[float] = None
    norm: NormSpec = NormSpec.MAX

    @classmethod
    def constant(cls, epsilon: float) -> "PerturbationBound":
        epsilon = float(epsilon)
        if not np.isfinite(epsilon) or epsilon < 0:
            raise InvalidEnvelope(f"constant envelope needs a finite epsilon >= 0, got {epsilon}")
        return cls("constant", epsilon=epsilon)

    @classmethod
    def power(cls, theta: float, p: float, norm: NormSpec | str = NormSpec.MAX) -> "PerturbationBound":
        theta, p = float(theta), float(p)
        if not (np.isfinite(theta) and theta >= 0):
            raise InvalidEnvelope(f"power envelope needs a finite theta >= 0, got {theta}")
        if not (np.isfinite(p) and p >= 0):
            # negative exponents blow up at the origin
            raise InvalidEnvelope(f"power envelope needs a finite p >= 0, got {p}")
        return cls("power", theta=theta, p=p, growth="power", norm=NormSpec(norm))

    @classmethod
    def custom(cls, evaluator: Callable[[np.ndarray, np.ndarray], float], growth: str = "bounded",
               p: float = 0.0, sup: Optional[float] = None) -> "PerturbationBound":
        if growth not in ("bounded", "power"):
            raise InvalidEnvelope(f"unknown growth class {growth!r}")
        return cls("custom", evaluator=evaluator, growth=growth, p=float(p), sup=sup)

    @property
    def growth_exponent(self) -> Optional[float]:
        """None for bounded envelopes, else the power-law exponent."""
        if self.kind == "constant" or (self.kind == "custom" and self.growth == "bounded"):
            return None
        if self.kind == "power" and self.theta == 0.0:
            return None
        return self.p

    @property
    def is_zero(self) -> bool:
        return (self.kind == "constant" and self.epsilon == 0.0) or (self.kind == "power" and self.theta == 0.0)

    def __call__(self, x: Any, y: Any) -> Any:
        """Evaluate on single points or on aligned ``(N, d)`` batches."""
        xa = np.asarray(x, dtype=np.float64)
        ya = np.asarray(y, dtype=np.float64)
        single = xa.ndim <= 1 and ya.ndim <= 1
        xa = np.atleast_2d(xa) if xa.ndim <= 1 else xa
        ya = np.atleast_2d(ya) if ya.ndim <= 1 else ya
        if xa.shape != ya.shape:
            raise DimensionError(f"envelope arguments differ in shape: {xa.shape} vs {ya.shape}")
        if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ya))):
            raise InvalidValue("envelope evaluated at a non-finite point")
        if self.kind == "constant":
            out = np.full(xa.shape[0], self.epsilon)
        elif self.kind == "power":
            with np.errstate(over="ignore"):
                out = self.theta * (norm(xa, self.norm) ** self.p + norm(ya, self.norm) ** self.p)
            out = np.atleast_1d(out)
        else:
            out = np.array([float(self.evaluator(a, b)) for a, b in zip(xa, ya)])
            if np.any(out < 0):
                raise InvalidEnvelope("custom envelope returned a negative value")
        if not np.all(np.isfinite(out)):
            raise InvalidEnvelope("envelope evaluated to a non-finite value")
        return float(out[0]) if single else out

    def symmetrized(self) -> "PerturbationBound":
        """(x, y) -> (phi(x, y) + phi(-x, -y)) / 2, the envelope inherited by even and odd parts."""
        if self.kind != "custom":
            return self
        ev = self.evaluator
        return PerturbationBound.custom(lambda a, b: 0.5 * (float(ev(a, b)) + float(ev(-a, -b))),
                                        self.growth, self.p, self.sup)

    def shifted(self, c: float) -> Optional["PerturbationBound"]:
        """phi + c for bounded envelopes; None when the sum leaves the declared class."""
        if c == 0.0:
            return self
        if self.kind == "constant":
            return PerturbationBound.constant(self.epsilon + c)
        if self.kind == "custom" and self.growth == "bounded":
            ev = self.evaluator
            sup = None if self.sup is None else self.sup + c
            return PerturbationBound.custom(lambda a, b: float(ev(a, b)) + c, "bounded", sup=sup)
        return None

    def describe(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "epsilon": self.epsilon}
        if self.kind == "power":
            return {"kind": "power", "theta": self.theta, "p": self.p, "norm": self.norm.value}
        d = {"kind": "custom", "growth": self.growth}
        if self.growth == "power":
            d["p"] = self.p
        if self.sup is not None:
            d["sup"] = self.sup
        return d


def phi_eval(bound: PerturbationBound, x: Any, y: Any) -> float:
    xa, ya = as_point(x), as_point(y)
    if xa.shape != ya.shape:
        raise DimensionError(f"x has dimension {xa.size}, y has {ya.size}")
    return bound(xa, ya)


# ---------------------------------------------------------------------------
# Directions and configuration
# ---------------------------------------------------------------------------

class Direction(str, enum.Enum):
    CONTRACTION = "contraction"   # arguments x / 2**n
    DILATION = "dilation"         # arguments 2**n * x

    @property
    def s(self) -> int:
        return 1 if self is Direction.CONTRACTION else -1


@dataclass(frozen=True)
class ExtractionConfig:
    """Knobs for the iterative extractors. ``direction=None`` selects automatically."""

    direction: Optional[Direction] = None
    max_iterations: int = 40
    tolerance: float = 1e-10
    norm: NormSpec = NormSpec.MAX
    argument_cap: float = 1e12
    probe_radius: float = 2.0
    probe_points: int = 41
    series_terms: int = 64

    def __post_init__(self) -> None:
        if self.direction is not None:
            object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(self, "norm", NormSpec(self.norm))
        if int(self.max_iterations) < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if not self.argument_cap > 0:
            raise ValueError("argument_cap must be > 0")
        if not self.probe_radius > 0 or self.probe_points < 2:
            raise ValueError("probe grid needs a positive radius and at least two points")


def probe_grid(radius: float = 2.0, points: int = 41, dim: int = 1) -> np.ndarray:
    """Equispaced tensor grid on [-radius, radius]^dim as an ``(points**dim, dim)`` array."""
    axis = np.linspace(-radius, radius, points)
    if dim == 1:
        return axis[:, None]
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


# ---------------------------------------------------------------------------
# Report container
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DecompositionReport:
    """Outcome of a full quadratic + cubic + quartic extraction.

    ``certified_bound`` holds the bound at each row of ``probes``; use
    ``certified_bound_at`` for arbitrary points. ``shift`` is the value f(0)
    removed before extraction, so the reconstruction is
    ``shift + Q1 + C + Q2``.
    """

    quadratic_part: FunctionHandle
    cubic_part: FunctionHandle
    quartic_part: FunctionHandle
    probes: np.ndarray
    certified_bound: np.ndarray
    bound_function: Callable[[np.ndarray], np.ndarray]
    iterations_used: dict
    direction_used: dict
    residual_sup: float
    residuals: np.ndarray
    shift: np.ndarray
    envelope: PerturbationBound
    coefficients: Optional[dict] = None
    converged: dict = field(default_factory=dict)
    warnings: Sequence[str] = ()

    def certified_bound_at(self, x: Any) -> Any:
        pts = np.asarray(x, dtype=np.float64)
        single = pts.ndim <= 1 and pts.size == self.quadratic_part.dim_in
        out = self.bound_function(as_points(pts, self.quadratic_part.dim_in))
        return float(out[0]) if single else out

    def reconstruction(self) -> FunctionHandle:
        shift = self.shift
        q1, c, q2 = self.quadratic_part, self.cubic_part, self.quartic_part
        return q1.derive(lambda p: shift + q1.evaluator(p) + c.evaluator(p) + q2.evaluator(p),
                         "reconstruction", None)
