import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iterlab.errors import DomainError, GridTooCoarse, NonConvergence, StepUnderflow
from iterlab.numerics import (DiffConfig, Grid1D, QuadratureConfig, caputo_half_time_derivative,
                              differentiate, differentiate_with_error, integrate_halfline,
                              integrate_interval, integrate_real_line_even,
                              riesz_modulus_derivative, spectral_second_derivative, step_size)


def test_halfline_matches_mpmath_for_log_singular_integrand():
    ref = float(mpmath.quad(lambda s: mpmath.log(s) ** 2 * mpmath.exp(-s), [0, 1, mpmath.inf]))
    res = integrate_halfline(lambda s: np.log(s) ** 2 * np.exp(-s), QuadratureConfig(rel_tol=1e-12))
    assert res.value == pytest.approx(ref, rel=1e-11)
    assert res.error < 1e-9


def test_halfline_power_singularity_at_origin():
    # int_0^inf s^{-1/2} e^{-s} ds = sqrt(pi)
    res = integrate_halfline(lambda s: s ** -0.5 * np.exp(-s), QuadratureConfig(rel_tol=1e-12))
    assert res.value == pytest.approx(math.sqrt(math.pi), rel=1e-10)


def test_halfline_vector_valued_integrand():
    res = integrate_halfline(lambda s: np.vstack([np.exp(-s), s * np.exp(-s), s ** 2 * np.exp(-s)]))
    np.testing.assert_allclose(res.value, [1.0, 1.0, 2.0], rtol=1e-10)


def test_interval_endpoint_singularity_and_reversed_limits():
    f = lambda s: np.log(s) / np.sqrt(s)
    assert integrate_interval(f, 0.0, 1.0).value == pytest.approx(-4.0, rel=1e-10)
    assert integrate_interval(f, 1.0, 0.0).value == pytest.approx(4.0, rel=1e-10)
    assert integrate_interval(f, 0.3, 0.3).value == 0.0


def test_interval_reports_unresolvable_singularity():
    # 1 - s cannot resolve the singularity at s = 1 below 64 ulp
    with pytest.raises(NonConvergence):
        integrate_interval(lambda s: 1.0 / np.sqrt(s * (1.0 - s)), 0.0, 1.0)


def test_real_line_even_gaussian():
    res = integrate_real_line_even(lambda x: np.exp(-x * x / 2))
    assert res.value == pytest.approx(math.sqrt(2 * math.pi), rel=1e-12)


def test_quadrature_rejects_bad_input():
    with pytest.raises(DomainError):
        QuadratureConfig(rel_tol=0)
    with pytest.raises(DomainError):
        integrate_halfline(np.exp, scale=-1)
    with pytest.raises(DomainError):
        integrate_interval(np.exp, 0, math.inf)


@pytest.mark.parametrize("order,expected", [(1, math.cos(0.7)), (2, -math.sin(0.7)),
                                            (3, -math.cos(0.7)), (4, math.sin(0.7))])
def test_finite_differences_of_sine(order, expected):
    r = differentiate_with_error(math.sin, 0.7, order)
    # rounding grows like eps / h^order
    assert r.value == pytest.approx(expected, abs={1: 1e-11, 2: 1e-10, 3: 1e-9, 4: 2e-7}[order])
    assert abs(r.value - expected) <= max(10 * r.error, 1e-12)


@settings(max_examples=40, deadline=None)
@given(x=st.floats(-5, 5), order=st.integers(1, 4))
def test_differentiation_is_exact_on_low_degree_polynomials(x, order):
    # a cubic has zero fourth derivative and known lower ones
    f = lambda y: 2 * y ** 3 - y ** 2 + 3 * y - 1
    exact = {1: 6 * x * x - 2 * x + 3, 2: 12 * x - 2, 3: 12.0, 4: 0.0}[order]
    assert differentiate(f, x, order) == pytest.approx(exact, abs=1e-5 * max(1, abs(x)) ** 3)


def test_step_size_scale_override():
    cfg = DiffConfig()
    assert step_size(100.0, 2, cfg) == pytest.approx(100 * step_size(0.0, 2, cfg))
    assert step_size(100.0, 2, cfg, scale=1.0) == pytest.approx(step_size(0.0, 2, cfg))


def test_differentiation_errors():
    with pytest.raises(DomainError):
        differentiate(math.sin, 0.0, 5)
    with pytest.raises(DomainError):
        DiffConfig(max_order=6)
    with pytest.raises(StepUnderflow):
        differentiate(math.sin, 1e300, 1, scale=1e-320)


@pytest.mark.parametrize("p", [1.0, 2.0, 2.5])
def test_caputo_half_of_power(p):
    # D^{1/2} t^p = Gamma(p+1) / Gamma(p+1/2) t^{p-1/2}
    t = 1.7
    r = caputo_half_time_derivative(lambda x, s: s ** p, 0.0, t,
                                    dq_dt=lambda x, s: p * s ** (p - 1))
    exact = math.gamma(p + 1) / math.gamma(p + 0.5) * t ** (p - 0.5)
    # only the dropped piece [0, delta] separates the two
    assert abs(r.value - exact) <= r.truncation_bound + 1e-9 * exact
    assert r.truncation_bound < 1e-5 * exact


def test_grid_validation_and_exclusion():
    g = Grid1D.uniform(-1, 1, 5, excluded_radius=0.1)
    assert g.is_uniform() and g.spacing == pytest.approx(0.5)
    np.testing.assert_allclose(g.avoiding([0.0]), [-1, -0.5, 0.5, 1])
    with pytest.raises(DomainError):
        Grid1D((0.0, 0.0))
    with pytest.raises(DomainError):
        Grid1D((0.0, math.nan))


def test_riesz_operator_on_cauchy_profile():
    # |beta| acting on the Cauchy density at scale t equals -d/dt of it
    L, n, t = 400.0, 2 ** 16, 1.0
    x = np.linspace(-L, L, n, endpoint=False)
    g = Grid1D(tuple(x))
    p = t / (math.pi * (x * x + t * t))
    dpdt = (x * x - t * t) / (math.pi * (x * x + t * t) ** 2)
    out = riesz_modulus_derivative(p, g, tail_tol=1e-3)
    mid = np.abs(x) < 3
    # periodization leaves an O(t/L) offset; differences remove it
    np.testing.assert_allclose(np.diff(out[mid]), np.diff(-dpdt[mid]), atol=1e-8)


def test_riesz_rejects_coarse_grid():
    x = np.linspace(-1, 1, 64, endpoint=False)
    with pytest.raises(GridTooCoarse):
        riesz_modulus_derivative(np.sign(x), Grid1D(tuple(x)))


def test_spectral_second_derivative_gaussian():
    x = np.linspace(-20, 20, 1024, endpoint=False)
    f = np.exp(-x * x / 2)
    out = spectral_second_derivative(f, Grid1D(tuple(x)))
    np.testing.assert_allclose(out, (x * x - 1) * f, atol=1e-11)
