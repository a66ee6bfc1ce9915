import numpy as np
import pytest
from hypothesis import given, strategies as st

from stabilis import (Box, Direction, ExtractionConfig, FunctionHandle, NormSpec, PerturbationBound, norm,
                      phi_eval, probe_grid, zero_handle)
from stabilis.core import as_point, as_points, map_chunks
from stabilis.errors import DimensionError, DomainError, InvalidEnvelope, InvalidValue

# keep products clear of the subnormal range, where relative precision is lost
finite = st.floats(-1e6, 1e6, allow_nan=False).filter(lambda v: v == 0 or abs(v) > 1e-100)


def test_as_point_rejects_nan():
    with pytest.raises(InvalidValue):
        as_point([1.0, np.nan])


def test_as_point_dimension_mismatch():
    with pytest.raises(DimensionError):
        as_point([1.0, 2.0], dim=3)


def test_as_points_one_dimensional_vector_is_batch():
    assert as_points(np.arange(5.0), 1).shape == (5, 1)
    assert as_points(np.arange(3.0), 3).shape == (1, 3)


def test_norms():
    v = np.array([3.0, -4.0])
    assert norm(v) == 4.0
    assert norm(v, NormSpec.EUCLIDEAN) == 5.0
    with pytest.raises(InvalidValue):
        norm([np.inf])


@given(st.lists(finite, min_size=1, max_size=5), st.floats(-100, 100, allow_nan=False).filter(lambda v: v == 0 or abs(v) > 1e-100))
def test_norm_homogeneous(v, t):
    v = np.array(v)
    for spec in NormSpec:
        assert norm(t * v, spec) == pytest.approx(abs(t) * norm(v, spec), rel=1e-12, abs=1e-300)


@given(st.lists(finite, min_size=2, max_size=2), st.lists(finite, min_size=2, max_size=2))
def test_norm_triangle(a, b):
    a, b = np.array(a), np.array(b)
    for spec in NormSpec:
        assert norm(a + b, spec) <= (norm(a, spec) + norm(b, spec)) * (1 + 1e-12)


def test_map_chunks_preserves_order(monkeypatch):
    monkeypatch.setenv("STABILIS_THREADS", "4")
    x = np.arange(10_000.0)[:, None]
    out = map_chunks(lambda a: 2 * a, x, chunk=333)
    np.testing.assert_array_equal(out, 2 * x)
    monkeypatch.setenv("STABILIS_THREADS", "0")
    np.testing.assert_array_equal(map_chunks(lambda a: 2 * a, x, chunk=333), 2 * x)


def test_box():
    b = Box([-1.0], [2.0])
    assert b.inner_radius == 1.0
    assert not b.is_symmetric()
    assert Box([-2.0], [2.0]).is_symmetric()
    assert list(b.contains(np.array([[0.0], [3.0]]))) == [True, False]


def test_handle_domain_enforced():
    h = FunctionHandle(lambda p: p ** 2, domain=Box([-1.0], [1.0]))
    assert h(0.5)[0] == 0.25
    with pytest.raises(DomainError):
        h(2.0)


def test_handle_arithmetic():
    sq = FunctionHandle.from_pointwise(lambda x: x[0] ** 2)
    cu = FunctionHandle.from_pointwise(lambda x: x[0] ** 3)
    assert (sq + cu)(2.0)[0] == 12.0
    assert (sq - cu)(2.0)[0] == -4.0
    assert (3 * sq)(2.0)[0] == 12.0
    assert (-sq)(2.0)[0] == -4.0
    assert sq.rescaled(2.0)(1.0)[0] == 4.0
    assert zero_handle(2, 3)([1.0, 1.0]).tolist() == [0.0, 0.0, 0.0]


def test_constant_envelope():
    phi = PerturbationBound.constant(0.5)
    assert phi(1.0, 2.0) == 0.5
    assert phi_eval(phi, [1.0], [2.0]) == 0.5
    assert phi.growth_exponent is None
    with pytest.raises(InvalidEnvelope):
        PerturbationBound.constant(-1.0)


def test_power_envelope():
    phi = PerturbationBound.power(2.0, 3.0)
    assert phi(1.0, 2.0) == pytest.approx(2.0 * (1 + 8))
    assert phi.growth_exponent == 3.0
    # zero exponent degenerates to the constant 2 theta
    assert PerturbationBound.power(1.0, 0.0)(5.0, 7.0) == 2.0
    assert PerturbationBound.power(0.0, 3.0).is_zero
    with pytest.raises(InvalidEnvelope):
        PerturbationBound.power(1.0, -1.0)


def test_custom_envelope_negative_rejected():
    phi = PerturbationBound.custom(lambda x, y: -1.0)
    with pytest.raises(InvalidEnvelope):
        phi(0.0, 0.0)


def test_custom_envelope_symmetrized_and_shifted():
    phi = PerturbationBound.custom(lambda x, y: 1.0 + float(x[0] > 0), sup=2.0)
    s = phi.symmetrized()
    assert s(1.0, 0.0) == 1.5 == s(-1.0, 0.0)
    sh = phi.shifted(0.25)
    assert sh(1.0, 0.0) == 2.25 and sh.sup == 2.25
    assert PerturbationBound.power(1, 2).shifted(1.0) is None


def test_direction_sign():
    assert Direction.CONTRACTION.s == 1 and Direction.DILATION.s == -1


def test_config_validation():
    with pytest.raises(ValueError):
        ExtractionConfig(max_iterations=0)
    with pytest.raises(ValueError):
        ExtractionConfig(tolerance=0.0)
    assert ExtractionConfig(direction="dilation").direction is Direction.DILATION


def test_probe_grid_shapes():
    assert probe_grid(2.0, 41, 1).shape == (41, 1)
    g = probe_grid(1.0, 5, 2)
    assert g.shape == (25, 2)
    assert g.min() == -1.0 and g.max() == 1.0


def test_handles_deterministic_across_threads():
    from concurrent.futures import ThreadPoolExecutor

    from stabilis import GeneratorSpec, generate

    f = generate(GeneratorSpec(1, -2, 0.5, "uniform-noise", 0.1, 3))
    x = np.linspace(-2, 2, 257)
    want = f.many(x)
    with ThreadPoolExecutor(8) as pool:
        outs = list(pool.map(lambda _: f.many(x), range(32)))
    assert all(np.array_equal(o, want) for o in outs)
