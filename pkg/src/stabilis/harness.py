"""Test-input generators and the least-squares oracle used as independent ground truth."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .core import FunctionHandle, as_points
from .errors import SchemaError, SingularFit
from .functions import poly_handle

PERTURBATIONS = ("none", "trig", "uniform-noise")

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _mix(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def hash_noise(pts: np.ndarray, seed: int, dim_out: int) -> np.ndarray:
    """Deterministic white noise in [-1, 1): a hash of the coordinate bits and the seed."""
    bits = np.ascontiguousarray(pts + 0.0).view(np.uint64)  # +0.0 folds -0.0 onto 0.0
    with np.errstate(over="ignore"):
        h = np.full(pts.shape[0], np.uint64(seed % 2 ** 64)) * _GOLDEN
        for j in range(pts.shape[1]):
            h = _mix(h ^ bits[:, j])
        cols = [_mix(h + np.uint64(k) * _GOLDEN) for k in range(dim_out)]
    u = np.stack([(c >> np.uint64(11)).astype(np.float64) * 2.0 ** -53 for c in cols], axis=1)
    return 2.0 * u - 1.0


@dataclass(frozen=True)
class GeneratorSpec:
    """Exact solution ``a·x² + b·x³ + c·x⁴`` plus an optional bounded perturbation.

    ``domain_radius`` is the radius of the region the instance is meant to be
    probed on; the handle itself evaluates everywhere.
    """

    a: Any = 0.0
    b: Any = 0.0
    c: Any = 0.0
    perturbation: str = "none"
    amplitude: float = 0.0
    seed: int = 0
    domain_radius: float = 2.0

    def __post_init__(self) -> None:
        if self.perturbation not in PERTURBATIONS:
            raise SchemaError(f"unknown perturbation {self.perturbation!r}")
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise SchemaError("perturbation amplitude must be finite and >= 0")
        if not self.domain_radius > 0:
            raise SchemaError("domain_radius must be positive")

    def to_json(self) -> dict:
        def plain(v: Any) -> Any:
            arr = np.asarray(v, dtype=np.float64)
            return float(arr) if arr.ndim == 0 else arr.tolist()

        return {"kind": "generated", "a": plain(self.a), "b": plain(self.b), "c": plain(self.c),
                "perturbation": {"kind": self.perturbation, "amplitude": self.amplitude, "seed": self.seed},
                "domain_radius": self.domain_radius}


def generator_spec_from_json(obj: dict) -> GeneratorSpec:
    pert = obj.get("perturbation", {"kind": "none"})
    if isinstance(pert, str):
        pert = {"kind": pert}
    try:
        return GeneratorSpec(obj.get("a", 0.0), obj.get("b", 0.0), obj.get("c", 0.0),
                             pert.get("kind", "none"), float(pert.get("amplitude", 0.0)),
                             int(pert.get("seed", 0)), float(obj.get("domain_radius", 2.0)))
    except (TypeError, ValueError, AttributeError) as exc:
        raise SchemaError(f"bad generator JSON: {exc}") from exc


def generate(spec: GeneratorSpec) -> FunctionHandle:
    base = poly_handle(spec.a, spec.b, spec.c)
    amp, m = float(spec.amplitude), base.dim_out
    if spec.perturbation == "none" or amp == 0.0:
        noise = None
    elif spec.perturbation == "trig":
        def noise(p: np.ndarray) -> np.ndarray:
            return np.repeat(amp * np.sin(p.sum(axis=1, keepdims=True)), m, axis=1)
    else:
        seed = spec.seed

        def noise(p: np.ndarray) -> np.ndarray:
            return amp * hash_noise(p, seed, m)

    ev = base.evaluator
    evaluate = ev if noise is None else (lambda p: ev(p) + noise(p))
    desc = base.description if noise is None else f"{base.description} + {spec.perturbation}({amp:g})"
    return FunctionHandle(evaluate, base.dim_in, m, desc, kind="generated", spec=spec.to_json())


# ---------------------------------------------------------------------------
# Least-squares oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OracleFit:
    a: Any
    b: Any
    c: Any
    residual_rms: float

    def coefficients(self) -> tuple[Any, Any, Any]:
        return self.a, self.b, self.c


def _monomials(dim: int) -> list[tuple[int, tuple[int, ...]]]:
    return [(k, idx) for k in (2, 3, 4) for idx in itertools.combinations_with_replacement(range(dim), k)]


def oracle_fit(f: FunctionHandle, grid: Sequence[Any]) -> OracleFit:
    """Least-squares fit of degree 2, 3, 4 homogeneous terms to ``f`` on ``grid``."""
    X = as_points(np.asarray(grid, dtype=np.float64), f.dim_in)
    basis = _monomials(f.dim_in)
    if X.shape[0] < len(basis):
        raise SingularFit(f"{X.shape[0]} grid points cannot determine {len(basis)} coefficients")
    design = np.stack([np.prod(X[:, list(idx)], axis=1) for _, idx in basis], axis=1)
    Yv = f.many(X)
    coef, _, rank, _ = np.linalg.lstsq(design, Yv, rcond=None)
    if rank < len(basis):
        raise SingularFit(f"design matrix has rank {rank} < {len(basis)}")
    resid = Yv - design @ coef
    rms = float(np.sqrt(np.mean(np.sum(resid * resid, axis=1))))

    d, m = f.dim_in, f.dim_out
    tensors = {k: np.zeros((m,) + (d,) * k) for k in (2, 3, 4)}
    for row, (k, idx) in enumerate(basis):
        perms = set(itertools.permutations(idx))
        for perm in perms:
            tensors[k][(slice(None),) + perm] = coef[row] / len(perms)
    if d == 1 and m == 1:
        return OracleFit(*(float(tensors[k].reshape(-1)[0]) for k in (2, 3, 4)), rms)
    return OracleFit(tensors[2], tensors[3], tensors[4], rms)


def multiplicity(idx: Sequence[int]) -> int:
    """Number of distinct orderings of a multi-index."""
    counts = Counter(idx)
    out = math.factorial(len(idx))
    for c in counts.values():
        out //= math.factorial(c)
    return out
