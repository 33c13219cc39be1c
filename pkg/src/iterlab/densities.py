"""Pointwise densities of the compositions.

Every composition X(|Y(t)|) here is a scale mixture: conditionally on
|Y(t)| = s the outer value is Gaussian with variance v(s, t) or Cauchy with
scale s.  The density is therefore

    p(x, t) = int_0^inf k(x; s, t) w(s, t) ds

with ``k`` the outer kernel and ``w`` the law of |Y(t)| on the half-line.
Space and time derivatives are taken under the integral sign with
closed-form kernel derivatives (``density_jet``), which is what the
equation checks consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numpy.polynomial.hermite_e import hermeval
from scipy.interpolate import PchipInterpolator
from scipy.special import ndtr

from . import specfun
from .errors import DomainError, SingularPoint
from .models import ProcessModel
from .numerics import (QuadratureConfig, integrate_halfline, integrate_interval)

SQRT2PI = math.sqrt(2.0 * math.pi)
INV_PI = 1.0 / math.pi

JET_QUAD = QuadratureConfig(rel_tol=1e-12, abs_tol=1e-14, max_subdivisions=4000)


# -- kernels ----------------------------------------------------------------

def _hermite_coeffs(k: int) -> np.ndarray:
    c = np.zeros(k + 1)
    c[k] = 1.0
    return c


def gauss_dx(x, v, k: int = 0):
    """k-th x-derivative of the N(0, v) density at x."""
    v = np.asarray(v, dtype=float)
    sd = np.sqrt(v)
    z = x / sd
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        phi = np.exp(-0.5 * z * z) / (SQRT2PI * sd)
        out = (-1.0) ** k * hermeval(z, _hermite_coeffs(k)) * phi / sd ** k
    return np.where(phi > 0.0, out, 0.0)


def cauchy_dx(x, s, k: int = 0):
    """k-th x-derivative of s / (pi (s^2 + x^2))."""
    s = np.asarray(s, dtype=float)
    zeta = s + 1j * x
    return INV_PI * np.real((-1j) ** k * math.factorial(k) / zeta ** (k + 1))


def gauss_halfline(s, t, H, b: int = 0):
    """Law of |B_H(t)| on s > 0 and its t-derivatives (b <= 2)."""
    sigma = t ** H
    z2 = (s / sigma) ** 2
    w = 2.0 * np.exp(-0.5 * z2) / (SQRT2PI * sigma)
    if b == 0:
        return w
    a = z2 - 1.0
    if b == 1:
        return (H / t) * a * w
    if b == 2:
        return (H / t ** 2) * w * (H * a * a - a - 2.0 * H * z2)
    raise DomainError("time derivative order > 2 not available")


def cauchy_halfline(s, t, b: int = 0):
    """Law of |C(t)| on s > 0, i.e. 2 t / (pi (s^2 + t^2)), and t-derivatives."""
    r = s * s + t * t
    if b == 0:
        return 2.0 * t * INV_PI / r
    if b == 1:
        return 2.0 * INV_PI * (s * s - t * t) / r ** 2
    if b == 2:
        return -4.0 * t * INV_PI * (3.0 * s * s - t * t) / r ** 3
    raise DomainError("time derivative order > 2 not available")


def k0_halfline(s, t, H, b: int = 0):
    """Law of |J1(t)| on s > 0: 2 K0(s / t^H) / (pi t^H), and its t-derivative."""
    th = t ** H
    z = s / th
    if b == 0:
        return 2.0 * INV_PI * specfun.k0(z) / th
    if b == 1:
        return 2.0 * INV_PI * H / (th * t) * (z * specfun.k1(z) - specfun.k0(z))
    raise DomainError("time derivative order > 1 not available for the K0 kernel")


# -- mixture descriptors ----------------------------------------------------

@dataclass(frozen=True)
class Mixture:
    outer: str                  # "gauss" or "cauchy"
    variance: object            # v(s, t) for gauss outers
    variance_dt_factor: object  # dv/dt / 2 as a function of (s, t), or None
    weight: object              # w(s, t, b)
    scale: object               # natural s-scale as a function of t
    singular_at_zero: bool = False
    max_time_order: int = 2
    peak: object = None         # s where the outer kernel at x peaks, as f(x, t)


def mixture(model: ProcessModel) -> Mixture:
    tag = model.tag
    if tag == "IteratedFBm" or (tag == "IteratedFBmChain" and len(model.hursts) == 2):
        h1, h2 = model.hursts
        return Mixture("gauss", lambda s, t: s ** (2 * h1), None,
                       lambda s, t, b=0: gauss_halfline(s, t, h2, b),
                       lambda t: t ** h2, singular_at_zero=h1 >= 1.0,
                       peak=lambda x, t: abs(x) ** (1.0 / h1))
    if tag == "WeightedJ" and model.n == 1:
        H = model.H
        return Mixture("gauss", lambda s, t: s * s, None,
                       lambda s, t, b=0: gauss_halfline(s, t, H, b),
                       lambda t: t ** H, singular_at_zero=True, peak=lambda x, t: abs(x))
    if tag == "WeightedJ" and model.n == 2:
        H = model.H
        return Mixture("gauss", lambda s, t: s * s, None,
                       lambda s, t, b=0: k0_halfline(s, t, H, b),
                       lambda t: t ** H, singular_at_zero=True, max_time_order=1,
                       peak=lambda x, t: abs(x))
    if tag == "ScaledIterated":
        H, K = model.H, model.K
        return Mixture("gauss", lambda s, t: s * t ** (2 * K),
                       lambda s, t: K * s * t ** (2 * K - 1),
                       lambda s, t, b=0: gauss_halfline(s, t, H, b),
                       lambda t: t ** H, max_time_order=1,
                       peak=lambda x, t: x * x / t ** (2 * K))
    if tag == "CauchyOfFBm":
        H = model.H
        return Mixture("cauchy", None, None,
                       lambda s, t, b=0: gauss_halfline(s, t, H, b),
                       lambda t: t ** H, singular_at_zero=True, peak=lambda x, t: abs(x))
    if tag == "BmOfCauchy":
        return Mixture("gauss", lambda s, t: s, None,
                       lambda s, t, b=0: cauchy_halfline(s, t, b),
                       lambda t: t, peak=lambda x, t: x * x)
    if tag == "CauchyOfCauchy":
        return Mixture("cauchy", None, None,
                       lambda s, t, b=0: cauchy_halfline(s, t, b),
                       lambda t: t, singular_at_zero=True, peak=lambda x, t: abs(x))
    raise DomainError(f"no mixture representation implemented for {tag}")


def _peaks(mix: Mixture, x: float, t: float) -> tuple:
    return (mix.peak(x, t),) if mix.peak is not None and x != 0.0 else ()


def has_density(model: ProcessModel) -> bool:
    if model.tag in ("FBm", "Cauchy"):
        return True
    try:
        mixture(model)
    except DomainError:
        return False
    return True


# -- jets ----------------------------------------------------------------------

class Jet(NamedTuple):
    values: dict
    errors: dict


def density_jet(model: ProcessModel, x: float, t: float, derivs,
                quad: QuadratureConfig | None = None) -> Jet:
    """Mixed partials d^a/dx^a d^b/dt^b p(x, t) for (a, b) in ``derivs``.

    All requested partials are integrated together on one adaptive panel set
    with a tolerance relative to the largest of them.
    """
    quad = quad or JET_QUAD
    if not t > 0:
        raise DomainError("t must be positive")
    mix = mixture(model)
    derivs = [tuple(d) for d in derivs]
    if x == 0.0 and (mix.singular_at_zero or any(a > 0 for a, _ in derivs)):
        raise SingularPoint(f"{model.tag}: derivatives not defined at x = 0")
    for a, b in derivs:
        if b > mix.max_time_order:
            raise DomainError(f"time derivative order {b} unavailable for {model.tag}")

    def outer(s, a):
        if mix.outer == "gauss":
            return gauss_dx(x, mix.variance(s, t), a)
        return cauchy_dx(x, s, a)

    def integrand(s):
        cache_w = {}
        cache_k = {}

        def w(b):
            if b not in cache_w:
                cache_w[b] = mix.weight(s, t, b)
            return cache_w[b]

        def k(a):
            if a not in cache_k:
                cache_k[a] = outer(s, a)
            return cache_k[a]

        rows = []
        for a, b in derivs:
            if mix.variance_dt_factor is None:
                rows.append(k(a) * w(b))
            elif b == 0:
                rows.append(k(a) * w(0))
            else:
                # outer variance depends on t: d/dt k = (dv/dt / 2) d^2k/dx^2
                rows.append(mix.variance_dt_factor(s, t) * k(a + 2) * w(0) + k(a) * w(1))
        return np.vstack(rows)

    res = integrate_halfline(integrand, quad, scale=mix.scale(t), points=_peaks(mix, x, t))
    return Jet({d: float(v) for d, v in zip(derivs, res.value)},
               {d: float(e) for d, e in zip(derivs, res.error)})


# -- densities -------------------------------------------------------------------

class DensityValue(NamedTuple):
    value: float
    error: float


def _cc_closed(x: float, t: float) -> float:
    ax = abs(x)
    if ax == 0.0:
        raise SingularPoint("iterated Cauchy density diverges at x = 0")
    eps = 1.0 - ax / t
    if abs(eps) < 1e-6:
        ratio = 0.5 * (1.0 + eps + 5.0 / 6.0 * eps * eps)
    else:
        ratio = -math.log1p(-eps) / (eps * (2.0 - eps))
    return 2.0 / (math.pi ** 2 * t) * ratio


def density_with_error(model: ProcessModel, x: float, t: float,
                       quad: QuadratureConfig | None = None) -> DensityValue:
    x = float(x)
    t = float(t)
    if not t > 0:
        raise DomainError("density needs t > 0")
    tag = model.tag
    if tag == "FBm":
        return DensityValue(float(gauss_dx(x, t ** (2 * model.hursts[0]))), 0.0)
    if tag == "Cauchy":
        return DensityValue(t * INV_PI / (t * t + x * x), 0.0)
    if tag == "WeightedJ" and model.n == 1:
        if x == 0.0:
            raise SingularPoint("K0 density diverges logarithmically at x = 0")
        th = t ** model.H
        r = specfun.bessel_k0(abs(x) / th)
        return DensityValue(INV_PI * r.value / th, INV_PI * r.est_abs_error / th)
    if tag == "CauchyOfCauchy":
        return DensityValue(_cc_closed(x, t), 4 * np.finfo(float).eps * _cc_closed(x, t))
    mix = mixture(model)
    if x == 0.0 and mix.singular_at_zero:
        raise SingularPoint(f"{tag} density diverges at x = 0")
    cfg = quad or QuadratureConfig()

    def integrand(s):
        k = gauss_dx(x, mix.variance(s, t)) if mix.outer == "gauss" else cauchy_dx(x, s)
        return k * mix.weight(s, t, 0)

    res = integrate_halfline(integrand, cfg, scale=mix.scale(t), points=_peaks(mix, x, t))
    return DensityValue(res.value, res.error)


def density(model: ProcessModel, x: float, t: float,
            quad: QuadratureConfig | None = None) -> float:
    return density_with_error(model, x, t, quad).value


@dataclass(frozen=True)
class DensityEvaluator:
    model: ProcessModel
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)

    def __call__(self, x, t):
        if np.ndim(x) == 0:
            return density(self.model, float(x), t, self.quad)
        return np.array([density(self.model, float(v), t, self.quad) for v in np.ravel(x)])

    def with_error(self, x, t) -> DensityValue:
        return density_with_error(self.model, x, t, self.quad)


def ibm_density(x: float, t: float, quad: QuadratureConfig | None = None) -> float:
    """Iterated Brownian motion density written directly from its definition."""
    def f(s):
        return (2.0 * np.exp(-x * x / (2 * s)) / np.sqrt(2 * np.pi * s)
                * np.exp(-s * s / (2 * t)) / np.sqrt(2 * np.pi * t))
    return integrate_halfline(f, quad, scale=math.sqrt(t)).value


# -- iterated Cauchy: alternative representations ----------------------------

def density_cc_integral(x: float, t: float, quad: QuadratureConfig | None = None) -> float:
    """Iterated Cauchy density from the subordination integral."""
    if not t > 0:
        raise DomainError("t must be positive")
    if x == 0.0:
        raise SingularPoint("iterated Cauchy density diverges at x = 0")
    x2 = x * x

    def f(s):
        return 2.0 / math.pi ** 2 * s / (s * s + x2) * t / (t * t + s * s)

    return integrate_halfline(f, quad, scale=math.sqrt(abs(x) * t)).value


def density_cc_expweights(x: float, t: float, quad: QuadratureConfig | None = None) -> float:
    """Iterated Cauchy density as (1/pi^2) E[t / (x^2 Z1 + t^2 Z2)], Z_i ~ Exp(1).

    Iterated one-dimensional quadrature over both exponential weights.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    if x == 0.0:
        raise SingularPoint("iterated Cauchy density diverges at x = 0")
    cfg = quad or QuadratureConfig(rel_tol=1e-11)
    x2, t2 = x * x, t * t

    def inner(z):
        out = np.empty_like(z)
        for i, zi in enumerate(z):
            c = x2 * zi
            r = c / t2
            # u = log(1 + w / r) flattens the 1/w peak: integrand e^{-w(u)} / t
            out[i] = integrate_halfline(lambda u: np.exp(-r * np.expm1(u)) / t, cfg,
                                        scale=max(1.0, math.log1p(1.0 / r))).value
        return out

    outer = integrate_halfline(lambda z: np.exp(-z) * inner(z), cfg)
    return outer.value / math.pi ** 2


# -- distribution functions ------------------------------------------------------

def cdf(model: ProcessModel, x: float, t: float, quad: QuadratureConfig | None = None) -> float:
    """P(X(t) <= x), by integrating the conditional CDF against the mixing law."""
    x = float(x)
    t = float(t)
    if not t > 0:
        raise DomainError("cdf needs t > 0")
    if x == 0.0:
        return 0.5
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    tag = model.tag
    if tag == "FBm":
        return float(ndtr(x / t ** model.hursts[0]))
    if tag == "Cauchy":
        return 0.5 + math.atan(x / t) / math.pi
    mix = mixture(model)
    cfg = quad or QuadratureConfig(rel_tol=1e-11, abs_tol=1e-14)

    def f(s):
        if mix.outer == "gauss":
            with np.errstate(divide="ignore"):
                c = ndtr(x / np.sqrt(mix.variance(s, t))) - 0.5
        else:
            c = np.arctan(x / s) / math.pi
        return c * mix.weight(s, t, 0)

    return 0.5 + integrate_halfline(f, cfg, scale=mix.scale(t), points=_peaks(mix, x, t)).value


def cdf_by_density(model: ProcessModel, x: float, t: float,
                   quad: QuadratureConfig | None = None) -> float:
    """P(X(t) <= x) as 1/2 + sign(x) int_0^|x| p, for cross-checking ``cdf``."""
    if x == 0.0:
        return 0.5
    cfg = quad or QuadratureConfig(rel_tol=1e-10)

    def f(y):
        return np.array([density(model, float(v), t) for v in y])

    res = integrate_interval(f, 0.0, abs(x), cfg)
    return 0.5 + math.copysign(res.value, x)


def cdf_table(model: ProcessModel, t: float, n: int = 801):
    """Monotone interpolant of ``cdf`` in the variable y = arctan(x / scale).

    Nodes are uniform in y plus a geometric run towards x = 0, where some of
    the laws have an unbounded density.
    """
    scale = t ** model.self_similarity()
    y_uni = np.linspace(0.0, 0.5 * math.pi, n // 2 + 1)[1:-1]
    y_geo = np.arctan(10.0 ** -np.arange(0.25, 12.0, 0.125))
    y = np.unique(np.concatenate([y_uni, y_geo]))
    pos = np.array([cdf(model, float(v), t) for v in scale * np.tan(y)])
    yy = np.concatenate([[-0.5 * math.pi], -y[::-1], [0.0], y, [0.5 * math.pi]])
    vv = np.concatenate([[0.0], 1.0 - pos[::-1], [0.5], pos, [1.0]])
    interp = PchipInterpolator(yy, np.clip(vv, 0.0, 1.0))

    def F(x):
        return interp(np.arctan(np.asarray(x, dtype=float) / scale))

    return F
