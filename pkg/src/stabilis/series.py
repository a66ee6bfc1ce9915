"""A-priori error bounds as truncated series with certified geometric tails.

Every bound is a finite sum of *pieces*

    coef * w**i * phi(cx * 2**(e*i) * x, cy * 2**(e*i) * x),   i = start, start+1, ...

For constant and power-law envelopes each piece is an exact geometric series
with ratio ``w * 2**(e*p)`` (``p = 0`` when bounded), so the tail after the
last summed term is bounded by ``last * rho / (1 - rho)``; for these
envelopes partial sum plus tail equals the infinite sum up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from .core import Direction, PerturbationBound, as_points
from .errors import CriticalExponentError, DivergentSeries, RegimeError, SchemaError

F = Fraction

CRITICAL_EXPONENT = {"quadratic": 2.0, "cubic": 3.0, "quartic": 4.0}

# reference constant quoted for the bounded-envelope case
COR_3_12 = Fraction(431, 420)

SERIES_NAMES = ("cubic_3_2", "quadratic_3_13", "quartic_3_23", "even_combined_3_29", "full_3_33")


@dataclass(frozen=True)
class Piece:
    coef: Fraction
    weight: Fraction
    ax: tuple[Fraction, int]   # argument multiplier cx * 2**(e*i); cx = 0 means the origin
    ay: tuple[Fraction, int]
    start: int

    @property
    def exponent(self) -> int:
        return self.ay[1]

    def ratio(self, p: float) -> float:
        return float(self.weight) * 2.0 ** (self.exponent * p)


def _cubic(direction: Direction) -> list[Piece]:
    # (1/6) phi(0, .) + (4/6) phi(., .), each weighted 8**(s*i - 1)
    if direction is Direction.CONTRACTION:
        return [Piece(F(1, 48), F(8), (F(0), -1), (F(1), -1), 1),
                Piece(F(4, 48), F(8), (F(1), -1), (F(1), -1), 1)]
    return [Piece(F(1, 48), F(1, 8), (F(0), 1), (F(1), 1), 0),
            Piece(F(4, 48), F(1, 8), (F(1), 1), (F(1), 1), 0)]


def _even(r: int, direction: Direction, lead: Fraction) -> list[Piece]:
    # lead * r**(s*i) * [ (1/3) phi(a, b) + (16/3) phi(b, b) ]
    if direction is Direction.CONTRACTION:
        return [Piece(lead / 3, F(r), (F(1), -1), (F(1, 2), -1), 0),
                Piece(lead * 16 / 3, F(r), (F(1, 2), -1), (F(1, 2), -1), 0)]
    return [Piece(lead / 3, F(1, r), (F(2), 1), (F(1), 1), 0),
            Piece(lead * 16 / 3, F(1, r), (F(1), 1), (F(1), 1), 0)]


def even_half(kind: str, direction: Direction) -> list[Piece]:
    """The quadratic (``r = 4``) or quartic (``r = 16``) half of the combined even bound.

    The combined bound is ``(1/12) * (half_quadratic + half_quartic)``. In the
    contraction direction each half equals its component bound; in the
    dilation direction the halves drop the ``1/4`` and ``1/16`` prefactors of
    the component bounds and are correspondingly looser.
    """
    r = 4 if kind == "quadratic" else 16
    return _even(r, direction, F(1))


def pieces(which: str, direction: Direction) -> list[Piece]:
    direction = Direction(direction)
    if which == "cubic_3_2":
        return _cubic(direction)
    if which == "quadratic_3_13":
        lead = F(1) if direction is Direction.CONTRACTION else F(1, 4)
        return _even(4, direction, lead)
    if which == "quartic_3_23":
        lead = F(1) if direction is Direction.CONTRACTION else F(1, 16)
        return _even(16, direction, lead)
    if which == "even_combined_3_29":
        return [_scaled(pc, F(1, 12)) for pc in even_half("quadratic", direction) + even_half("quartic", direction)]
    if which == "full_3_33":
        return pieces("even_combined_3_29", direction) + _cubic(direction)
    raise SchemaError(f"unknown series {which!r}; expected one of {SERIES_NAMES}")


def _scaled(pc: Piece, k: Fraction) -> Piece:
    return Piece(pc.coef * k, pc.weight, pc.ax, pc.ay, pc.start)


@dataclass(frozen=True)
class BoundSeriesSpec:
    which: str
    phi: PerturbationBound
    direction: Direction

    def __post_init__(self) -> None:
        object.__setattr__(self, "direction", Direction(self.direction))
        if self.which not in SERIES_NAMES:
            raise SchemaError(f"unknown series {self.which!r}")


def _max_terms(pcs: list[Piece], requested: int) -> int:
    # keep w**i finite in double precision
    big = max(float(pc.weight) for pc in pcs)
    if big <= 1.0:
        return requested
    return min(requested, int(1000 / math.log2(big)))


def sum_pieces(pcs: list[Piece], phi: PerturbationBound, x: Any, terms: int) -> tuple[Any, Any]:
    """(partial_sum, tail_majorant) of a list of pieces at one point or a batch."""
    if terms < 1:
        raise ValueError("terms must be >= 1")
    # a scalar or 1-D array is one point; batches are (N, d)
    xa = np.asarray(x, dtype=np.float64)
    single = xa.ndim <= 1
    X = xa.reshape(1, -1) if single else xa
    X = as_points(X, X.shape[1])
    n, d = X.shape
    if phi.is_zero:
        z = np.zeros(n)
        return (0.0, 0.0) if single else (z, z.copy())

    p = phi.growth_exponent
    p_eff = 0.0 if p is None else p
    for pc in pcs:
        if pc.ratio(p_eff) >= 1.0:
            kind = "bounded" if p is None else f"power p={p:g}"
            raise DivergentSeries(
                f"series with weight {pc.weight} and argument scaling 2^({pc.exponent}i) diverges for a {kind} envelope")

    terms = _max_terms(pcs, terms)
    partial = np.zeros(n)
    tail = np.zeros(n)
    for pc in pcs:
        idx = np.arange(pc.start, pc.start + terms, dtype=np.float64)
        sx = float(pc.ax[0]) * np.exp2(pc.ax[1] * idx)
        sy = float(pc.ay[0]) * np.exp2(pc.ay[1] * idx)
        # every term of the piece in one envelope call: rows are (term, point)
        A = (sx[:, None, None] * X[None, :, :]).reshape(-1, d)
        B = (sy[:, None, None] * X[None, :, :]).reshape(-1, d)
        vals = np.asarray(phi(A, B)).reshape(terms, n)
        w = float(pc.weight)
        contrib = (float(pc.coef) * w ** idx)[:, None] * vals
        partial += contrib.sum(axis=0)
        last = contrib[-1]
        if p is None and phi.kind == "custom":
            # bounded custom envelope: dominate phi by its declared sup, or by the largest value seen
            sup = phi.sup if phi.sup is not None else vals.max(axis=0)
            tail += float(pc.coef) * w ** (pc.start + terms) / (1.0 - w) * sup
        else:
            rho = pc.ratio(p_eff)
            tail += last * rho / (1.0 - rho)
    if single:
        return float(partial[0]), float(tail[0])
    return partial, tail


def bound_series(spec: BoundSeriesSpec, x: Any, terms: int = 64) -> tuple[Any, Any]:
    """Truncated bound series plus a tail majorant; their sum bounds the infinite series."""
    return sum_pieces(pieces(spec.which, spec.direction), spec.phi, x, terms)


def exact_constant_coefficient(which: str, direction: Direction) -> Fraction:
    """Exact value of the series for phi identically 1, by rational geometric summation."""
    total = Fraction(0)
    for pc in pieces(which, direction):
        if pc.weight >= 1:
            raise DivergentSeries(f"{which} in the {Direction(direction).value} direction diverges for bounded envelopes")
        total += pc.coef * pc.weight ** pc.start / (1 - pc.weight)
    return total


# ---------------------------------------------------------------------------
# Direction choice and closed-form constants
# ---------------------------------------------------------------------------

def select_direction(phi: PerturbationBound, kind: str) -> Direction:
    """Pick the iteration direction whose summability hypothesis holds for ``phi``.

    Bounded envelopes and power laws below the critical exponent (2, 3, 4 for the
    quadratic, cubic, quartic iterations) need dilation; steeper power laws
    need contraction.
    """
    crit = CRITICAL_EXPONENT[kind]
    p = phi.growth_exponent
    if p is None or p < crit:
        return Direction.DILATION
    if p > crit:
        return Direction.CONTRACTION
    raise CriticalExponentError(f"p = {p:g} is the critical exponent of the {kind} iteration; no direction sums")


def corollary_constant(which: str, theta: float = 1.0, p: float = 0.0) -> float:
    """Closed-form coefficient multiplying theta*||x||^p (or epsilon for ``cor_3_12``)."""
    if which == "cor_3_12":
        return float(COR_3_12)
    t = 2.0 ** p
    if which == "cor_3_6":
        if not p > 4:
            raise RegimeError(f"cor_3_6 needs p > 4, got {p:g}")
        return (33 + t) / 36 * (1 / (t - 4) + 1 / (t - 16)) + 3 / (2 * (t - 8))
    if which == "cor_3_11":
        if not p < 3:
            raise RegimeError(f"cor_3_11 needs p < 3, got {p:g}")
        if t == 4.0:
            raise RegimeError("cor_3_11 has a pole at p = 2")
        return (33 + t) / 9 * (1 / (4 - t) + 4 / (16 - t)) + 3 / (2 * (8 - t))
    raise SchemaError(f"unknown corollary {which!r}")


COROLLARY_SERIES = {
    "cor_3_6": Direction.CONTRACTION,
    "cor_3_11": Direction.DILATION,
    "cor_3_12": Direction.DILATION,
}
