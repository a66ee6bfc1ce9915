import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stabilis import (Direction, ExtractionConfig, FunctionHandle, GeneratorSpec, PerturbationBound, extract_all,
                      extract_cubic_stable, extract_quadratic_stable, extract_quartic_stable, even_odd_split,
                      generate, iterate_component, normalize_components, poly_handle, probe_grid, zero_handle)
from stabilis.errors import ArgumentCapExceeded, EvennessError, NoConvergence, OddnessError

D, C = Direction.DILATION, Direction.CONTRACTION
G = probe_grid()
ZERO = PerturbationBound.constant(0.0)


def vals(h):
    return h.many(G)[:, 0]


def test_cubic_exact_every_iterate():
    f_o = poly_handle(0, 3.0, 0)
    for direction in (C, D):
        for n in (0, 1, 5, 12):
            np.testing.assert_allclose(vals(iterate_component(f_o, "cubic", direction, n)), 3 * G[:, 0] ** 3,
                                       rtol=1e-10, atol=1e-12)
    est = extract_cubic_stable(f_o, ZERO, ExtractionConfig(direction=D))
    assert est.iterations == 1 and est.converged


def test_cubic_kills_additive_part_under_dilation():
    f_o = FunctionHandle(lambda p: 1.0 * p)
    est = extract_cubic_stable(f_o, PerturbationBound.constant(12.0), ExtractionConfig(direction=D))
    assert np.max(np.abs(vals(est.component))) <= 1e-9


def test_cubic_bound_example():
    est = extract_cubic_stable(zero_handle(), PerturbationBound.constant(0.42), ExtractionConfig(direction=D))
    assert abs(est.bound_at([0.3]) - 0.05) <= 1e-12
    assert np.allclose(est.bound_table, 0.05, rtol=0, atol=1e-12)


def test_quadratic_and_quartic_examples():
    f_e = poly_handle(2.0, 0, 5.0)
    q1 = extract_quadratic_stable(f_e, ZERO)
    q2 = extract_quartic_stable(f_e, ZERO)
    x = G[:, 0]
    np.testing.assert_allclose(vals(q1.component), -24 * x ** 2, rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(vals(q2.component), 60 * x ** 4, rtol=1e-10, atol=1e-10)
    Q1, Q2 = normalize_components(q1, q2)
    np.testing.assert_allclose(vals(Q1), 2 * x ** 2, rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(vals(Q2), 5 * x ** 4, rtol=1e-10, atol=1e-10)
    assert np.max(np.abs(vals(extract_quadratic_stable(poly_handle(0, 0, 1), ZERO).component))) <= 1e-10
    assert np.max(np.abs(vals(extract_quartic_stable(poly_handle(1, 0, 0), ZERO).component))) <= 1e-10


def test_zero_input_bound_from_series_only():
    eps = 0.3
    est = extract_quadratic_stable(zero_handle(), PerturbationBound.constant(eps))
    assert np.all(vals(est.component) == 0.0)
    # dilation quadratic series: (1/4)(17/3)(4/3) eps
    assert np.allclose(est.bound_table, 17 / 9 * eps, rtol=1e-12)


def test_normalize_zero():
    Q1, Q2 = normalize_components(zero_handle(), zero_handle())
    assert np.all(vals(Q1) == 0.0) and np.all(vals(Q2) == 0.0)


def test_parity_preconditions():
    with pytest.raises(EvennessError):
        extract_quartic_stable(poly_handle(0, 1, 0), ZERO)
    with pytest.raises(OddnessError):
        extract_cubic_stable(poly_handle(1, 0, 0), ZERO)


@settings(max_examples=25, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.sampled_from([C, D]), st.integers(0, 10))
def test_exact_fixed_points(a, b, c, direction, n):
    f = poly_handle(a, b, c)
    f_e, f_o = even_odd_split(f)
    x = G[:, 0]
    for kind, base, want in (("cubic", f_o, b * x ** 3), ("quadratic", f_e, -12 * a * x ** 2),
                             ("quartic", f_e, 12 * c * x ** 4)):
        got = vals(iterate_component(base, kind, direction, n))
        scale = 1 + 200 * 16 ** 2 * (abs(a) + abs(b) + abs(c))
        assert np.max(np.abs(got - want)) <= 1e-10 * scale


@pytest.mark.parametrize("a,b,c", [(1, 1, 1), (-2.5, 0.5, 4), (0, 0, 0)])
def test_exact_recovery_dilation_and_contraction(a, b, c):
    for phi in (ZERO, PerturbationBound.power(1.0, 5.0)):
        r = extract_all(poly_handle(a, b, c), phi)
        got = [float(np.asarray(r.coefficients[k]).ravel()[0]) for k in ("quadratic", "cubic", "quartic")]
        assert np.allclose(got, [a, b, c], atol=1e-8)
        assert max(r.iterations_used.values()) <= 40
        assert r.residual_sup <= 1e-9 * (1 + 16 * (abs(a) + abs(b) + abs(c)))
    assert set(extract_all(poly_handle(a, b, c), PerturbationBound.power(1.0, 5.0)).direction_used.values()) == {"contraction"}


def test_zero_function_report():
    r = extract_all(zero_handle(), PerturbationBound.constant(0.1))
    assert r.residual_sup == 0.0
    assert all(np.all(vals(h) == 0.0) for h in (r.quadratic_part, r.cubic_part, r.quartic_part))
    assert np.allclose(r.certified_bound, 263 / 210 * 0.1)


def test_trig_perturbation_contained():
    f = generate(GeneratorSpec(1, 1, 1, "trig", 0.01))
    r = extract_all(f, PerturbationBound.constant(1.06))
    assert np.all(r.residuals <= r.certified_bound)
    assert r.residual_sup <= r.certified_bound_at(1.0)


def test_uniqueness_across_iteration_counts():
    from stabilis.core import EPS
    from stabilis.series import pieces, sum_pieces
    from stabilis.stability import _COMPONENT_SERIES, _ROUNDOFF, _iterate_values

    f = generate(GeneratorSpec(0.5, -1, 2, "uniform-noise", 1e-3, 3))
    phi = PerturbationBound.constant(0.106)
    f_e, f_o = even_odd_split(f)
    for kind, base, extractor in (("cubic", f_o, extract_cubic_stable), ("quadratic", f_e, extract_quadratic_stable),
                                  ("quartic", f_e, extract_quartic_stable)):
        est = extractor(base, phi, ExtractionConfig(direction=D))
        n1, n2 = est.iterations, est.iterations + 3
        a, sa = _iterate_values(base, kind, D, n1, G)
        b, sb = _iterate_values(base, kind, D, n2, G)
        pcs = pieces(_COMPONENT_SERIES[kind], D)
        tails = sum_pieces(pcs, phi, G, n1)[1] + sum_pieces(pcs, phi, G, n2)[1]
        # the doubling maps cancel large terms, so allow for rounding as the stopping rule does
        rounding = _ROUNDOFF * EPS * (sa + sb)
        assert np.all(np.abs(a - b)[:, 0] <= tails + rounding)


def test_additive_contamination():
    base = poly_handle(1.0, 2.0, 3.0)
    delta = 0.05
    dirty = base + FunctionHandle(lambda p: delta * p)
    phi = PerturbationBound.constant(12 * delta)  # |D of delta*x| = 12 delta |y|, bounded on the probe grid
    clean, contaminated = extract_all(base, ZERO), extract_all(dirty, phi, ExtractionConfig(probe_radius=1.0, probe_points=21))
    X = contaminated.probes
    assert np.max(np.abs(contaminated.quadratic_part.many(X) - clean.quadratic_part.many(X))) <= 1e-9
    assert np.max(np.abs(contaminated.quartic_part.many(X) - clean.quartic_part.many(X))) <= 1e-9
    diff = np.abs(contaminated.cubic_part.many(X) - clean.cubic_part.many(X))[:, 0]
    assert np.all(diff <= contaminated.certified_bound + 1e-12)


def test_shift_recorded_and_envelope_raised():
    f = poly_handle(1, 1, 1) + FunctionHandle(lambda p: np.full_like(p, 0.5))
    r = extract_all(f, PerturbationBound.constant(0.0))
    assert r.shift.tolist() == [0.5]
    assert r.envelope.epsilon == pytest.approx(22 * 0.5)
    assert any("f(0)" in w for w in r.warnings)
    np.testing.assert_allclose(r.reconstruction().many(G), f.many(G), atol=1e-9)


def test_power_envelope_with_shift_is_advisory():
    f = poly_handle(1, 1, 1) + FunctionHandle(lambda p: np.full_like(p, 0.5))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r = extract_all(f, PerturbationBound.power(1.0, 5.0))
    assert any("advisory" in w for w in r.warnings)


def test_envelope_violation_warns():
    f = generate(GeneratorSpec(1, 0, 0, "uniform-noise", 0.1, 1))
    with pytest.warns(RuntimeWarning):
        r = extract_all(f, PerturbationBound.constant(1e-3))
    assert any("exceeds the envelope" in w for w in r.warnings)


def test_argument_cap():
    f = generate(GeneratorSpec(1, 1, 1, "trig", 0.01))
    with pytest.raises(ArgumentCapExceeded) as info:
        extract_all(f, PerturbationBound.constant(1.06), ExtractionConfig(argument_cap=64.0, tolerance=1e-14))
    assert info.value.exit_code == 2


def test_no_convergence():
    f = generate(GeneratorSpec(1, 1, 1, "uniform-noise", 0.01, 9))
    with pytest.raises(NoConvergence) as info:
        extract_all(f, PerturbationBound.constant(1.06), ExtractionConfig(max_iterations=2, tolerance=1e-14))
    assert info.value.iterations == 2 and info.value.last_delta > 0


def test_multidimensional_recovery():
    rng = np.random.default_rng(2)
    A, B, Cq = rng.normal(size=(2, 2)), rng.normal(size=(2, 2, 2)), rng.normal(size=(2, 2, 2, 2))
    f = poly_handle(A, B, Cq)
    r = extract_all(f, ZERO, ExtractionConfig(probe_points=9))
    from stabilis.functions import symmetrize
    np.testing.assert_allclose(r.coefficients["quadratic"][0], symmetrize(A[None])[0], atol=1e-8)
    np.testing.assert_allclose(r.coefficients["quartic"][0], symmetrize(Cq[None])[0], atol=1e-8)
    assert r.residual_sup <= 1e-9
