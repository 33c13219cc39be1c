import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iterlab.densities import (DensityEvaluator, cdf, cdf_by_density, cdf_table, density,
                               density_cc_expweights, density_cc_integral, density_jet,
                               density_with_error, has_density, ibm_density)
from iterlab.errors import DomainError, SingularPoint
from iterlab.models import (BmOfCauchy, CauchyOfCauchy, CauchyOfFBm, FBm,
                            HalfProductCauchy, IteratedFBm, IteratedFBmChain, ProductFBm,
                            ScaledIterated, WeightedJ)
from iterlab.numerics import integrate_halfline, QuadratureConfig

mpmath.mp.dps = 25

DENSITY_MODELS = [
    IteratedFBm(0.6, 0.4), IteratedFBm(0.5, 0.5), WeightedJ(1, 0.7), WeightedJ(2, 0.6),
    ScaledIterated(0.3, 0.6), CauchyOfFBm(0.4), BmOfCauchy(), CauchyOfCauchy(),
]


def _gauss(x, v):
    return mpmath.exp(-x * x / (2 * v)) / mpmath.sqrt(2 * mpmath.pi * v)


def oracle_iterated(x, t, h1, h2):
    # law of B_{h1}(|B_{h2}(t)|) conditioned on the inner modulus
    f = lambda s: _gauss(x, s ** (2 * h1)) * 2 * _gauss(s, t ** (2 * h2))
    return float(mpmath.quad(f, [0, abs(x), 1, mpmath.inf]))


def oracle_k0_law(x, t, H):
    # B_H(|B_H(t)|^{1/H}) is |G| Z with G ~ N(0, t^{2H}), Z ~ N(0, 1)
    f = lambda g: 2 * _gauss(g, t ** (2 * H)) * _gauss(x, g * g)
    return float(mpmath.quad(f, [0, abs(x), 1, mpmath.inf]))


def test_far_tail_of_gaussian_over_cauchy():
    # the kernel peaks near s = x^2, six decades past the mixing scale t
    x, t = 1e3, 1.3
    f = lambda s: _gauss(x, s) * 2 * t / (mpmath.pi * (s * s + t * t))
    ref = float(mpmath.quad(f, [0, x * x / 10, x * x, 10 * x * x, mpmath.inf]))
    assert density(BmOfCauchy(), x, t) == pytest.approx(ref, rel=1e-6)


@pytest.mark.parametrize("x,t,h1,h2", [(0.3, 1.0, 0.6, 0.4), (-1.7, 2.5, 0.5, 0.5),
                                       (0.05, 0.7, 0.8, 0.3), (4.0, 1.0, 0.3, 0.9)])
def test_iterated_density_against_mpmath(x, t, h1, h2):
    r = density_with_error(IteratedFBm(h1, h2), x, t)
    ref = oracle_iterated(x, t, h1, h2)
    assert r.value == pytest.approx(ref, rel=1e-9)
    assert abs(r.value - ref) <= 10 * r.error + 1e-14


@pytest.mark.parametrize("x,t,H", [(0.01, 1.0, 0.7), (0.5, 2.0, 0.25), (3.0, 0.5, 0.9)])
def test_k0_closed_form_against_definition(x, t, H):
    assert density(WeightedJ(1, H), x, t) == pytest.approx(oracle_k0_law(x, t, H), rel=1e-9)


def test_ibm_direct_definition_matches_mixture():
    for x in (0.1, 0.9, 2.2):
        assert density(IteratedFBm(0.5, 0.5), x, 1.3) == pytest.approx(ibm_density(x, 1.3),
                                                                       rel=1e-10)


@pytest.mark.parametrize("x,t", [(0.3, 1.0), (1.0, 1.0), (1.0 + 1e-8, 1.0), (-2.5, 0.7),
                                 (40.0, 3.0)])
def test_iterated_cauchy_three_forms(x, t):
    a = density(CauchyOfCauchy(), x, t)
    assert density_cc_integral(x, t) == pytest.approx(a, rel=1e-9)
    assert density_cc_expweights(x, t) == pytest.approx(a, rel=1e-8)


def test_iterated_cauchy_diagonal_is_continuous():
    left = density(CauchyOfCauchy(), 1.0 - 2e-6, 1.0)
    mid = density(CauchyOfCauchy(), 1.0, 1.0)
    right = density(CauchyOfCauchy(), 1.0 + 2e-6, 1.0)
    assert mid == pytest.approx(1.0 / math.pi ** 2, rel=1e-15)
    assert abs(left - mid) < 1e-5 * mid and abs(right - mid) < 1e-5 * mid


@pytest.mark.parametrize("model", [WeightedJ(1, 0.5), CauchyOfCauchy(), IteratedFBm(1.0, 0.5),
                                   CauchyOfFBm(0.5), WeightedJ(2, 0.6)])
def test_singular_origin(model):
    with pytest.raises(SingularPoint):
        density(model, 0.0, 1.0)


def test_regular_origin_values():
    # B_{1/2}(|B_{1/2}(1)|) at 0: E[(2 pi |B|)^{-1/2}] = Gamma(1/4) / (2^{3/4} pi)
    exp = math.gamma(0.25) / (2 ** 0.75 * math.pi)
    assert density(IteratedFBm(0.5, 0.5), 0.0, 1.0) == pytest.approx(exp, rel=1e-10)
    assert density(FBm(0.5), 0.0, 1.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)


def test_no_density_for_identity_only_laws():
    for m in (ProductFBm(2, 0.5), HalfProductCauchy(), IteratedFBmChain(0.5, 0.7, 0.8)):
        assert not has_density(m)
    with pytest.raises(DomainError):
        density(FBm(0.5), 1.0, 0.0)


@pytest.mark.parametrize("model", DENSITY_MODELS, ids=lambda m: m.tag)
def test_unit_mass(model):
    # includes x^-3 tails, where the kernel peak needs its own breakpoints
    a = model.self_similarity()
    cfg = QuadratureConfig(rel_tol=1e-9)
    mass = 2 * integrate_halfline(lambda x: np.array([density(model, v, 1.3) for v in x]), cfg,
                                  scale=1.3 ** a).value
    assert mass == pytest.approx(1.0, abs=1e-8)


@settings(max_examples=25, deadline=None)
@given(x=st.floats(0.02, 5.0), t=st.floats(0.2, 5.0), i=st.integers(0, len(DENSITY_MODELS) - 1))
def test_symmetry_and_self_similarity(x, t, i):
    m = DENSITY_MODELS[i]
    a = m.self_similarity()
    p = density(m, x, t)
    assert p >= 0
    assert density(m, -x, t) == pytest.approx(p, rel=1e-12)
    assert t ** a * p == pytest.approx(density(m, x / t ** a, 1.0), rel=1e-8, abs=1e-15)


@pytest.mark.parametrize("model", [IteratedFBm(0.6, 0.4), WeightedJ(2, 0.6), BmOfCauchy(),
                                   CauchyOfCauchy(), ScaledIterated(0.3, 0.6)],
                         ids=lambda m: m.tag)
def test_cdf_two_routes(model):
    for x in (-2.0, 0.3, 1.5):
        assert cdf(model, x, 1.2) == pytest.approx(cdf_by_density(model, x, 1.2), abs=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.floats(-20, 20), st.floats(0.01, 5))
def test_cdf_monotone(x, dx):
    m = CauchyOfFBm(0.4)
    assert cdf(m, x, 1.0) <= cdf(m, x + dx, 1.0) + 1e-12


def test_cdf_table_agrees_with_cdf():
    m = WeightedJ(2, 0.6)
    F = cdf_table(m, 1.5)
    xs = np.array([-3.0, -0.2, 1e-4, 0.05, 0.7, 8.0])
    np.testing.assert_allclose(F(xs), [cdf(m, v, 1.5) for v in xs], atol=5e-5)


def test_evaluator_vectorizes():
    ev = DensityEvaluator(IteratedFBm(0.6, 0.4))
    out = ev(np.array([0.5, 1.0]), 1.0)
    assert out.shape == (2,) and out[0] == ev(0.5, 1.0)


def _fd(f, x, h, order):
    if order == 1:
        return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)
    return (-f(x - 2 * h) + 16 * f(x - h) - 30 * f(x) + 16 * f(x + h) - f(x + 2 * h)) / (12 * h * h)


@pytest.mark.parametrize("model", [IteratedFBm(0.6, 0.4), WeightedJ(2, 0.6), BmOfCauchy(),
                                   CauchyOfFBm(0.4), ScaledIterated(0.3, 0.6)],
                         ids=lambda m: m.tag)
def test_jet_against_finite_differences(model):
    x, t, h = 0.8, 1.1, 1e-3
    jet = density_jet(model, x, t, [(0, 0), (1, 0), (2, 0), (0, 1)])
    v = jet.values
    assert v[(0, 0)] == pytest.approx(density(model, x, t), rel=1e-10)
    assert v[(1, 0)] == pytest.approx(_fd(lambda y: density(model, y, t), x, h, 1), rel=1e-6)
    assert v[(2, 0)] == pytest.approx(_fd(lambda y: density(model, y, t), x, h, 2), rel=1e-5)
    assert v[(0, 1)] == pytest.approx(_fd(lambda s: density(model, x, s), t, h, 1), rel=1e-6)


def test_jet_rejects_origin_and_unavailable_orders():
    with pytest.raises(SingularPoint):
        density_jet(IteratedFBm(0.5, 0.5), 0.0, 1.0, [(1, 0)])
    with pytest.raises(DomainError):
        density_jet(ScaledIterated(0.3, 0.6), 0.5, 1.0, [(0, 2)])
