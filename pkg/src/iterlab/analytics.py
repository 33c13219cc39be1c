"""Closed-form moments, Mellin transforms and characteristic functions,
with quadrature counterparts."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad as scipy_quad

from . import densities
from .errors import DomainError, SeriesDivergence
from .models import ProcessModel, check_hurst
from .numerics import QuadratureConfig, integrate_halfline
from .specfun import log_gamma

_LOG_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class MomentSpec:
    """Even moment of order 2k of B_{H1}(|B_{H2}(...|B_{H_{n+1}}(t)|...)|).

    Hursts are listed outermost first.  H = 1 is admitted: a unit-Hurst
    outer layer is a Gaussian scaled by the inner modulus.
    """

    k: int
    hursts: tuple

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise DomainError("k must be a positive integer")
        if not self.hursts:
            raise DomainError("need at least one Hurst value")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "hursts", tuple(check_hurst(h) for h in self.hursts))

    @property
    def n(self) -> int:
        return len(self.hursts) - 1


def _exp_checked(log_value: float) -> float:
    if log_value > _LOG_MAX:
        raise OverflowError(f"log-value {log_value:.1f} exceeds the float range")
    return math.exp(log_value)


def log_moment_iterated(spec: MomentSpec, t: float) -> float:
    k, hs = spec.k, spec.hursts
    prods = np.cumprod((1.0,) + hs)  # prods[r] = H_1 ... H_r, prods[0] = 1
    out = (spec.n + 1) * math.log(2.0) + 2 * k * prods[-1] * math.log(t)
    out -= k * float(np.sum(prods[:-1])) * math.log(2.0)
    for p in prods[:-1]:
        out += log_gamma(2 * k * p) - log_gamma(k * p)
    return float(out)


def moment_iterated(spec: MomentSpec, t: float) -> float:
    """E X(t)^{2k} for the iterated fBm chain described by ``spec``."""
    t = float(t)
    if t < 0:
        raise DomainError("t must be >= 0")
    if t == 0.0:
        return 0.0
    return _exp_checked(log_moment_iterated(spec, t))


def variance_iterated(H1: float, H2: float, t: float) -> float:
    """Var B_{H1}(|B_{H2}(t)|) = 2^{1-H1} Gamma(2 H1) / Gamma(H1) t^{2 H1 H2}."""
    H1, H2 = check_hurst(H1), check_hurst(H2)
    if t < 0:
        raise DomainError("t must be >= 0")
    if t == 0:
        return 0.0
    return math.exp((1 - H1) * math.log(2.0) + log_gamma(2 * H1) - log_gamma(H1)
                    + 2 * H1 * H2 * math.log(t))


def variance_exponent(H1: float, H2: float) -> float:
    return 2.0 * check_hurst(H1) * check_hurst(H2)


def ibm_moment(k: int, t: float) -> float:
    """E X^{2k} for iterated Brownian motion, 2^{k/2} (2k)! t^{k/2} / (2^{2k} Gamma(k/2 + 1))."""
    if k < 1:
        raise DomainError("k must be >= 1")
    return _exp_checked(0.5 * k * math.log(2.0) - 2 * k * math.log(2.0)
                        + log_gamma(2 * k + 1) - log_gamma(0.5 * k + 1)
                        + 0.5 * k * math.log(t))


def moment_quadrature(model: ProcessModel, order: int, t: float,
                      quad: QuadratureConfig | None = None) -> float:
    """int x^order p(x, t) dx over the real line, for an even density."""
    cfg = quad or QuadratureConfig(rel_tol=1e-11)

    def f(x):
        return np.array([xi ** order * densities.density(model, float(xi), t) for xi in x])

    res = integrate_halfline(f, cfg, scale=t ** model.self_similarity())
    return 2.0 * res.value if order % 2 == 0 else 0.0


# -- Mellin transforms ----------------------------------------------------

def mellin_weighted_chain(alpha: float, n: int, H: float, t: float) -> float:
    """int_0^inf x^{alpha-1} q(x, t) dx for the modulus law of the n-fold
    Gaussian chain: [2^{alpha/2} Gamma(alpha/2) / sqrt(2 pi)]^n t^{H(alpha-1)}."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if n < 1:
        raise DomainError("n must be >= 1")
    H = check_hurst(H)
    if not t > 0:
        raise DomainError("t must be positive")
    per = 0.5 * alpha * math.log(2.0) + log_gamma(0.5 * alpha) - 0.5 * math.log(2 * math.pi)
    return _exp_checked(n * per + H * (alpha - 1) * math.log(t))


def mellin_k0_numeric(alpha: float, H: float, t: float,
                      quad: QuadratureConfig | None = None) -> float:
    """int_0^inf x^{alpha-1} (2 / (pi t^H)) K0(x / t^H) dx by quadrature."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    th = t ** H
    cfg = quad or QuadratureConfig(rel_tol=1e-12, abs_tol=1e-15)

    def f(x):
        return x ** (alpha - 1) * 2.0 / (math.pi * th) * densities.specfun.k0(x / th)

    return integrate_halfline(f, cfg, scale=th).value


# -- characteristic functions ---------------------------------------------------

def charfn_series(n: int, H: float, beta: float, t: float, max_terms: int = 400) -> float:
    """sum_k (-beta^2)^k / (2k)! ((2k-1)!!)^n t^{2Hk}, truncated adaptively.

    Stops once a term is below 1e-14 of the partial sum; raises
    SeriesDivergence if the terms start growing before that.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    H = check_hurst(H)
    if beta == 0:
        return 1.0
    log_x = 2 * math.log(abs(beta)) + 2 * H * math.log(t)
    total = 1.0
    prev = 0.0
    for k in range(1, max_terms):
        # log (2k-1)!! = log (2k)! - k log 2 - log k!
        log_df = log_gamma(2 * k + 1) - k * math.log(2.0) - log_gamma(k + 1)
        log_term = k * log_x - log_gamma(2 * k + 1) + n * log_df
        if k > 1 and log_term > prev:
            raise SeriesDivergence(
                f"series terms grow at k={k} (|beta| t^H = {math.exp(0.5 * log_x):.3g})")
        if log_term > _LOG_MAX:
            raise SeriesDivergence("series term overflows")
        term = (-1) ** k * math.exp(log_term)
        total += term
        prev = log_term
        if abs(term) < 1e-14 * abs(total):
            return total
    raise SeriesDivergence(f"no convergence in {max_terms} terms")


def charfn_quadrature(model: ProcessModel, beta: float, t: float) -> float:
    """2 int_0^inf cos(beta x) p(x, t) dx (Fourier-weighted QUADPACK)."""
    if beta == 0:
        return 1.0
    b = abs(float(beta))

    def p(x):
        return densities.density(model, float(x), t) if x > 0 else 0.0

    val, _ = scipy_quad(p, 0.0, np.inf, weight="cos", wvar=b, limlst=200, limit=400,
                        epsabs=1e-13)
    return 2.0 * val


def charfn_numeric(model: ProcessModel, beta: float, t: float, method: str = "auto") -> float:
    """Characteristic function E exp(i beta X(t)).

    The laws here are symmetric, so the imaginary part vanishes and the real
    part is returned.  ``method`` is "quadrature", "series" or "auto";
    products of fBm have no implemented density and use the series.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    if method not in ("auto", "quadrature", "series"):
        raise DomainError(f"unknown method {method!r}")
    series_ok = model.tag == "ProductFBm" or (model.tag == "WeightedJ" and model.n == 1)
    if method == "series" or (method == "auto" and model.tag == "ProductFBm"):
        if not series_ok:
            raise DomainError(f"no series available for {model.tag}")
        n = model.n if model.tag == "ProductFBm" else 2
        return charfn_series(n, model.H, beta, t)
    if model.tag == "Cauchy":
        return math.exp(-t * abs(beta))
    if model.tag == "FBm":
        return math.exp(-0.5 * beta * beta * t ** (2 * model.H))
    if not densities.has_density(model):
        raise DomainError(f"no density implemented for {model.tag}")
    return charfn_quadrature(model, beta, t)


def charfn_empirical(samples, beta: float) -> complex:
    x = np.asarray(samples, dtype=float)
    return complex(np.mean(np.exp(1j * beta * x)))
