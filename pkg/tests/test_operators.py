import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from stabilis import (FunctionHandle, d_cubic, d_mixed, d_quadratic, d_quartic, even_odd_split, pair_grid,
                      poly_handle, samples_handle, verify_identity_suite, check_equation)
from stabilis.errors import DimensionError, DomainError
from stabilis.operators import EQUATIONS, IDENTITIES, MIXED_COEFFICIENT_SUM, MIXED_CONSTANT_GAIN, combine

coef = st.floats(-5, 5, allow_nan=False)
arg = st.floats(-10, 10, allow_nan=False)

x_, y_, a_, b_, c_ = sp.symbols("x y a b c")
F = sp.Function("f")


def symbolic(template, f):
    return sp.expand(sum(k * f(al * x_ + be * y_) for k, al, be in template))


def pure(expr):
    return FunctionHandle.from_pointwise(sp.lambdify(x_, expr, "math"))


def test_sympy_kernel_of_mixed_operator():
    # oracle: the mixed operator vanishes identically on a x^2 + b x^3 + c x^4
    f = lambda t: a_ * t ** 2 + b_ * t ** 3 + c_ * t ** 4
    assert symbolic(EQUATIONS["mixed"], f) == 0
    # and not on other monomials up to degree 6
    for k in (0, 1, 5, 6):
        assert symbolic(EQUATIONS["mixed"], lambda t: t ** k) != 0


@pytest.mark.parametrize("name,k", [("quadratic", 2), ("cubic", 3), ("quartic", 4)])
def test_sympy_classical_kernels(name, k):
    assert symbolic(EQUATIONS[name], lambda t: t ** k) == 0


@pytest.mark.parametrize("name", sorted(IDENTITIES))
def test_sympy_identities_on_parity_parts(name):
    which, template = IDENTITIES[name]
    part = (lambda t: a_ * t ** 2 + c_ * t ** 4) if which == "e" else (lambda t: b_ * t ** 3)
    assert symbolic(template, part) == 0


def test_coefficient_sums():
    assert MIXED_COEFFICIENT_SUM == 106
    assert MIXED_CONSTANT_GAIN == -22


def test_mixed_examples():
    assert d_mixed(poly_handle(0, 0, 1), 1.0, 1.0)[0] == 0.0
    identity = FunctionHandle.from_pointwise(lambda p: p[0])
    assert d_mixed(identity, 0.0, 1.0)[0] == -12.0
    assert d_mixed(poly_handle(0, 0, 0), 3.0, -2.0)[0] == 0.0


def test_mixed_nonkernel():
    x5 = FunctionHandle.from_pointwise(lambda p: p[0] ** 5)
    assert d_mixed(x5, 1.0, 1.0)[0] != 0.0


def test_classical_examples():
    assert d_quadratic(poly_handle(1, 0, 0), 2.0, 3.0)[0] == 0.0
    assert d_cubic(poly_handle(0, 1, 0), 1.0, 2.0)[0] == 0.0
    assert d_quartic(poly_handle(0, 1, 0), 1.0, 1.0)[0] == -22.0
    assert d_quadratic(poly_handle(0, 1, 0), 1.0, 1.0)[0] == 4.0


def test_batch_and_scale():
    f = poly_handle(1, 1, 1)
    X, Y = pair_grid(2.0, 5)
    res, scale = combine(f, EQUATIONS["mixed"], X, Y)
    assert res.shape == (25, 1) and scale.shape == (25,)
    assert np.all(scale >= 1.0)


def test_pair_dimension_mismatch():
    f = poly_handle(np.eye(2), 0, 0)
    with pytest.raises(DimensionError):
        d_mixed(f, [1.0, 2.0], [1.0, 2.0, 3.0])


@settings(max_examples=200, deadline=None)
@given(coef, coef, coef, arg, arg)
def test_kernel_property(a, b, c, x, y):
    f = poly_handle(a, b, c)
    from stabilis.operators import residual
    res, scale = residual("mixed", f, x, y)
    assert abs(res[0]) <= 1e-9 * scale


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.tuples(coef, coef, coef), st.tuples(coef, coef, coef), arg, arg)
def test_linearity(al, be, pf, pg, x, y):
    f, g = poly_handle(*pf), poly_handle(*pg)
    quint = FunctionHandle.from_pointwise(lambda p: p[0] ** 5)
    f, g = f + quint, g - quint * 0.5
    lhs = d_mixed(al * f + be * g, x, y)[0]
    rhs = al * d_mixed(f, x, y)[0] + be * d_mixed(g, x, y)[0]
    scale = 1.0 + 106 * (abs(al) + abs(be)) * (4 * 10 + 10) ** 5 * 20
    assert abs(lhs - rhs) <= 1e-10 * scale


def test_even_odd_split_examples():
    f_e, f_o = even_odd_split(poly_handle(1, 1, 0))
    g = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(f_e.many(g)[:, 0], g ** 2, rtol=0, atol=1e-12)
    np.testing.assert_allclose(f_o.many(g)[:, 0], g ** 3, rtol=0, atol=1e-12)
    _, odd = even_odd_split(poly_handle(1, 0, 1))
    assert np.all(odd.many(g) == 0.0)
    ex = FunctionHandle(lambda p: np.exp(p))
    e, o = even_odd_split(ex)
    np.testing.assert_allclose(e.many(g)[:, 0], np.cosh(g), rtol=1e-14)
    np.testing.assert_allclose(o.many(g)[:, 0], np.sinh(g), rtol=1e-12, atol=1e-15)


@given(coef, coef, coef)
def test_split_consistency(a, b, c):
    f = poly_handle(a, b, c) + FunctionHandle(lambda p: np.sin(3 * p) + 1.0)
    e, o = even_odd_split(f)
    g = np.linspace(-2, 2, 41)
    total = e.many(g) + o.many(g)
    np.testing.assert_allclose(total, f.many(g), rtol=1e-12, atol=1e-12)


def test_split_refuses_asymmetric_domain():
    h = samples_handle(np.linspace(-1, 2, 7), np.linspace(-1, 2, 7) ** 2)
    with pytest.raises(DomainError):
        even_odd_split(h)


def test_identity_examples():
    quartic = poly_handle(0, 0, 1)
    cubic = poly_handle(0, 1, 0)
    X, Y = pair_grid(2.0, 9)
    checks = verify_identity_suite(quartic, cubic, X, Y, names=["2.1", "2.16", "2.19"])
    assert all(c.passed and c.max_residual == 0.0 for c in checks)


@settings(max_examples=30, deadline=None)
@given(coef, coef, coef)
def test_identity_suite_property(a, b, c):
    f_e, f_o = even_odd_split(poly_handle(a, b, c))
    X, Y = pair_grid(3.0, 11)
    assert all(chk.passed for chk in verify_identity_suite(f_e, f_o, X, Y))


def test_identity_suite_flags_non_solution():
    f = FunctionHandle(lambda p: p ** 2 + 0.1 * p ** 6)
    f_e, f_o = even_odd_split(f)
    X, Y = pair_grid(2.0, 9)
    assert not all(c.passed for c in verify_identity_suite(f_e, f_o, X, Y))


def test_identity_suite_shrinks_to_sample_domain():
    g = np.linspace(-4, 4, 4001)
    h = samples_handle(g, g ** 2)
    f_e, f_o = even_odd_split(h)
    X, Y = pair_grid(2.0, 5)
    checks = verify_identity_suite(f_e, f_o, X, Y, tol=1e-3)
    assert all(np.max(np.abs(c.argmax)) <= 4.0 for c in checks)
    with pytest.raises(DomainError):
        verify_identity_suite(f_e, f_o, X, Y, shrink=False)


def test_check_equation_reports_argmax():
    chk = check_equation(poly_handle(0, 1, 0), "quadratic", *pair_grid(1.0, 3))
    assert not chk.passed
    d = chk.to_dict()
    assert set(d) == {"identity", "max_residual", "max_normalized", "argmax", "passed"}


def test_multidimensional_kernel():
    rng = np.random.default_rng(1)
    f = poly_handle(rng.normal(size=(2, 2)), rng.normal(size=(2, 2, 2)), rng.normal(size=(2, 2, 2, 2)))
    X, Y = rng.uniform(-3, 3, (50, 2)), rng.uniform(-3, 3, (50, 2))
    assert check_equation(f, "mixed", X, Y).passed
