"""Iterative extraction of the quadratic, cubic and quartic components of an
approximate solution, with a-priori certified error bounds.

For a base map ``T`` and ratio ``r`` the n-th iterate is

    contraction:  r**n * T(x / 2**n)
    dilation:     T(2**n * x) / r**n

with ``T = f_o, r = 8`` (cubic), ``T = g, r = 4`` (quadratic, g-image) and
``T = h, r = 16`` (quartic, h-image). All scalings are powers of two and are
applied with ``ldexp`` so exact solutions are reproduced bit-for-bit.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Callable, Optional, Union

import numpy as np

from .core import (EPS, DecompositionReport, Direction, ExtractionConfig, FunctionHandle, NormSpec,
                   PerturbationBound, norm, probe_grid)
from .decomposition import form_from_handle
from .errors import ArgumentCapExceeded, DomainError, EvennessError, NoConvergence, OddnessError
from .operators import MIXED, MIXED_CONSTANT_GAIN, combine, even_odd_split, pair_grid
from .series import even_half, pieces, select_direction, sum_pieces

log = logging.getLogger(__name__)

# kind -> (log2 of the ratio r, doubling coefficient k in T(y) = f(2y) - k f(y); None means T = f)
_ITERATION = {
    "cubic": (3, None),
    "quadratic": (2, 16.0),
    "quartic": (4, 4.0),
}
_COMPONENT_SERIES = {"cubic": "cubic_3_2", "quadratic": "quadratic_3_13", "quartic": "quartic_3_23"}

# rounding allowance in units of EPS * (sum of |terms|) when comparing iterates
_ROUNDOFF = 16.0


@dataclass(frozen=True, eq=False)
class ComponentEstimate:
    component: FunctionHandle
    kind: str
    direction_used: Direction
    iterations: int
    certified_bound: Callable[[np.ndarray], np.ndarray]
    converged: bool
    last_delta: float
    probes: np.ndarray
    bound_table: np.ndarray      # certified ||T - limit|| at each probe
    remainder_table: np.ndarray  # certified ||iterate - limit|| at each probe

    def bound_at(self, x: Any) -> float:
        return float(self.certified_bound(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0])


def _iterate_values(f: FunctionHandle, kind: str, direction: Direction, n: int, X: np.ndarray,
                    cap: Optional[float] = None, spec: NormSpec = NormSpec.MAX) -> tuple[np.ndarray, np.ndarray]:
    """Iterate values and their rounding scale (sum of absolute terms) at the rows of ``X``."""
    log_r, k = _ITERATION[kind]
    s = direction.s
    Y = np.ldexp(X, -s * n)
    if cap is not None and direction is Direction.DILATION:
        reach = float(np.max(norm(Y, spec))) * (1.0 if k is None else 2.0)
        if reach > cap:
            raise ArgumentCapExceeded(f"dilation step {n} reaches |2^n x| = {reach:.3g} > cap {cap:.3g}",
                                      iterations=n)
    if k is None:
        fy = f.many(Y)
        val, mag = fy, np.abs(fy)
    else:
        f2, f1 = f.many(2.0 * Y), f.many(Y)
        val, mag = f2 - k * f1, np.abs(f2) + k * np.abs(f1)
    val, mag = np.ldexp(val, s * n * log_r), np.ldexp(mag, s * n * log_r)
    if not (np.all(np.isfinite(val)) and np.all(np.isfinite(mag))):
        raise ArgumentCapExceeded(f"iterate {n} overflowed", iterations=n)
    return val, np.max(mag, axis=1)


def iterate_component(f: FunctionHandle, kind: str, direction: Union[Direction, str], n: int) -> FunctionHandle:
    """Handle evaluating the n-th iterate of the given extractor anywhere."""
    direction = Direction(direction)
    if kind not in _ITERATION:
        raise ValueError(f"unknown component kind {kind!r}")
    return FunctionHandle(lambda p: _iterate_values(f, kind, direction, n, p)[0], f.dim_in, f.dim_out,
                          f"{kind}[{direction.value}, n={n}]({f.description})", kind="derived")


def _check_parity(f: FunctionHandle, X: np.ndarray, even: bool) -> None:
    a, b = f.many(X), f.many(-X)
    defect = a - b if even else a + b
    scale = 1.0 + np.abs(a) + np.abs(b)
    if np.any(np.abs(defect) > 1e-9 * scale):
        if even:
            raise EvennessError(f"{f.description or 'input'} is not even on the probe grid")
        raise OddnessError(f"{f.description or 'input'} is not odd on the probe grid")


def _bound_function(pcs_weighted: list, phi: PerturbationBound, terms: int) -> Callable[[np.ndarray], np.ndarray]:
    def bound(X: np.ndarray) -> np.ndarray:
        total = np.zeros(X.shape[0])
        for pcs in pcs_weighted:
            partial, tail = sum_pieces(pcs, phi, X, terms)
            total += partial + tail
        return total

    return bound


def _extract(f: FunctionHandle, kind: str, phi: PerturbationBound, cfg: ExtractionConfig,
             even: bool) -> ComponentEstimate:
    direction = cfg.direction or select_direction(phi, kind)
    X = probe_grid(cfg.probe_radius, cfg.probe_points, f.dim_in)
    _check_parity(f, X, even)
    pcs = pieces(_COMPONENT_SERIES[kind], direction)
    # fail early on a divergent bound rather than after iterating
    bound_fn = _bound_function([pcs], phi, cfg.series_terms)
    bound_table = bound_fn(X)

    prev, prev_scale = _iterate_values(f, kind, direction, 0, X, cfg.argument_cap, cfg.norm)
    delta = float("inf")
    n = 0
    converged = False
    for n in range(1, cfg.max_iterations + 1):
        cur, cur_scale = _iterate_values(f, kind, direction, n, X, cfg.argument_cap, cfg.norm)
        gaps = np.atleast_1d(norm(cur - prev, cfg.norm))
        delta = float(np.max(gaps))
        allowance = _ROUNDOFF * EPS * (cur_scale + prev_scale)
        if np.all(gaps <= cfg.tolerance + allowance):
            converged = True
            break
        prev, prev_scale = cur, cur_scale
    if not converged:
        raise NoConvergence(f"{kind} extraction ({direction.value}) did not settle in {cfg.max_iterations} "
                            f"iterations; last delta {delta:.3g}", last_delta=delta, iterations=n)
    log.debug("%s extraction converged after %d %s steps (delta %.3g)", kind, n, direction.value, delta)
    remainder = sum_pieces(pcs, phi, X, n)[1]
    return ComponentEstimate(iterate_component(f, kind, direction, n), kind, direction, n, bound_fn,
                             converged, delta, X, bound_table, np.asarray(remainder))


def extract_cubic_stable(f_o: FunctionHandle, phi: PerturbationBound, cfg: ExtractionConfig = ExtractionConfig()) -> ComponentEstimate:
    """Limit of 8**(s n) f_o(2**(-s n) x): the cubic part of an odd approximate solution."""
    return _extract(f_o, "cubic", phi, cfg, even=False)


def extract_quadratic_stable(f_e: FunctionHandle, phi: PerturbationBound, cfg: ExtractionConfig = ExtractionConfig()) -> ComponentEstimate:
    """Limit of the g-iterates; converges to -12 times the quadratic part."""
    return _extract(f_e, "quadratic", phi, cfg, even=True)


def extract_quartic_stable(f_e: FunctionHandle, phi: PerturbationBound, cfg: ExtractionConfig = ExtractionConfig()) -> ComponentEstimate:
    """Limit of the h-iterates; converges to 12 times the quartic part."""
    return _extract(f_e, "quartic", phi, cfg, even=True)


def _handle(c: Union[ComponentEstimate, FunctionHandle]) -> FunctionHandle:
    return c.component if isinstance(c, ComponentEstimate) else c


def normalize_components(q_o1: Union[ComponentEstimate, FunctionHandle],
                         q_o2: Union[ComponentEstimate, FunctionHandle]) -> tuple[FunctionHandle, FunctionHandle]:
    """Q1 = -Q_o1 / 12 and Q2 = Q_o2 / 12."""
    return _handle(q_o1) * (-1.0 / 12.0), _handle(q_o2) * (1.0 / 12.0)


# ---------------------------------------------------------------------------
# Full decomposition
# ---------------------------------------------------------------------------

def envelope_violations(f: FunctionHandle, phi: PerturbationBound, cfg: ExtractionConfig,
                        max_points: int = 41) -> tuple[int, float]:
    """Count probe pairs where ||D_f|| exceeds phi beyond rounding; also the worst excess."""
    points = min(cfg.probe_points, max_points)
    X, Y = pair_grid(cfg.probe_radius, points, f.dim_in, max_pairs=max_points ** 2)
    res, scale = combine(f, MIXED, X, Y)
    mags = np.atleast_1d(norm(res, cfg.norm))
    allowed = np.atleast_1d(phi(X, Y)) + 64.0 * EPS * scale
    excess = mags - allowed
    return int(np.sum(excess > 0)), float(np.max(excess))


def extract_all(f: FunctionHandle, phi: PerturbationBound, cfg: ExtractionConfig = ExtractionConfig()) -> DecompositionReport:
    """Split f, extract every component, and certify ||f - f(0) - Q1 - C - Q2||.

    A nonzero f(0) is removed first and kept as ``report.shift``; for bounded
    envelopes phi is raised by ``22 ||f(0)||`` to cover the shifted function.
    """
    notes: list[str] = []
    origin = np.zeros(f.dim_in)
    try:
        shift = f(origin)
    except DomainError:
        raise DomainError("extraction needs f(0); the origin is outside the sample domain") from None
    g = f
    env = phi
    f0 = float(norm(shift, cfg.norm))
    if f0 > 0.0:
        g = f.derive(lambda p: f.evaluator(p) - shift, f"{f.description} - f(0)")
        raised = phi.shifted(abs(MIXED_CONSTANT_GAIN) * f0)
        if raised is None:
            notes.append(f"f(0) = {shift.tolist()} is incompatible with a {phi.kind} envelope; bound is advisory")
        else:
            env = raised
        notes.append(f"subtracted f(0) = {shift.tolist()} before extraction")

    count, worst = envelope_violations(g, env, cfg)
    if count:
        msg = (f"||D_f|| exceeds the envelope at {count} probe pairs (worst excess {worst:.3g}); "
               "the certified bound is advisory")
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)

    sym = env.symmetrized()
    f_e, f_o = even_odd_split(g)
    dirs = {kind: cfg.direction or select_direction(sym, kind) for kind in ("quadratic", "cubic", "quartic")}
    cubic = extract_cubic_stable(f_o, sym, replace(cfg, direction=dirs["cubic"]))
    q_o1 = extract_quadratic_stable(f_e, sym, replace(cfg, direction=dirs["quadratic"]))
    q_o2 = extract_quartic_stable(f_e, sym, replace(cfg, direction=dirs["quartic"]))
    Q1, Q2 = normalize_components(q_o1, q_o2)
    C = cubic.component
    Q1 = replace(Q1, description="Q1")
    C = replace(C, description="C", kind="derived")
    Q2 = replace(Q2, description="Q2")

    twelfth = Fraction(1, 12)
    weighted = [
        [replace(pc, coef=pc.coef * twelfth) for pc in even_half("quadratic", dirs["quadratic"])],
        [replace(pc, coef=pc.coef * twelfth) for pc in even_half("quartic", dirs["quartic"])],
        pieces("cubic_3_2", dirs["cubic"]),
    ]
    bound_fn = _bound_function(weighted, sym, cfg.series_terms)
    X = probe_grid(cfg.probe_radius, cfg.probe_points, f.dim_in)
    bound_table = bound_fn(X)
    recon = Q1.many(X) + C.many(X) + Q2.many(X)
    residuals = np.atleast_1d(norm(g.many(X) - recon, cfg.norm))

    coefficients = None
    if f.kind in ("poly", "generated"):
        coefficients = {
            "quadratic": form_from_handle(Q1, 2).coefficients,
            "cubic": form_from_handle(C, 3).coefficients,
            "quartic": form_from_handle(Q2, 4).coefficients,
        }

    return DecompositionReport(
        quadratic_part=Q1, cubic_part=C, quartic_part=Q2,
        probes=X, certified_bound=bound_table, bound_function=bound_fn,
        iterations_used={"quadratic": q_o1.iterations, "cubic": cubic.iterations, "quartic": q_o2.iterations},
        direction_used={k: v.value for k, v in dirs.items()},
        residual_sup=float(np.max(residuals)), residuals=residuals,
        shift=np.asarray(shift), envelope=env, coefficients=coefficients,
        converged={"quadratic": q_o1.converged, "cubic": cubic.converged, "quartic": q_o2.converged},
        warnings=tuple(notes),
    )

