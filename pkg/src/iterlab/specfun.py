"""Modified Bessel functions K0, K1 and log-Gamma.

K0 and K1 use the ascending series (built from the I_nu series) below
x = 3 and the integral K_nu(x) = int_0^inf exp(-x cosh u) cosh(nu u) du,
summed by the trapezoidal rule, above.  The trapezoidal rule converges
geometrically here because the integrand is analytic in a strip.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286060651209008240243
CROSSOVER = 3.0

_EPS = np.finfo(float).eps
_N_SERIES = 30
_TRAP_STEP = 0.1
# With u = c w, c = min(1, sqrt(3/x)), the exponent x (cosh u - 1) exceeds 40
# (integrand < 4e-18) once w > 7.3 for every x >= CROSSOVER.
_TRAP_U = np.arange(0.0, 8.0 + _TRAP_STEP, _TRAP_STEP)


class SpecFunResult(NamedTuple):
    value: float
    est_abs_error: float


def _check_positive(x):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("Bessel K functions need x > 0")
    return arr


def _series(x: np.ndarray):
    """Ascending series for K0, K1; returns values and rounding-error bounds."""
    q = 0.25 * x * x
    log_half = np.log(0.5 * x)
    term0 = np.ones_like(x)  # q^k / (k!)^2
    term1 = np.ones_like(x)  # q^k / (k! (k+1)!)
    harmonic = 0.0
    i0 = np.zeros_like(x)
    i1 = np.zeros_like(x)
    s0 = np.zeros_like(x)
    s1 = np.zeros_like(x)
    mag0 = np.zeros_like(x)
    mag1 = np.zeros_like(x)
    for k in range(_N_SERIES):
        if k > 0:
            term0 = term0 * q / (k * k)
            term1 = term1 * q / (k * (k + 1))
            harmonic += 1.0 / k
        psi_k1 = -EULER_GAMMA + harmonic
        psi_k2 = psi_k1 + 1.0 / (k + 1)
        i0 += term0
        i1 += term1
        s0 += term0 * harmonic
        s1 += term1 * (psi_k1 + psi_k2)
        mag0 += term0 * (abs(log_half) + EULER_GAMMA + harmonic + 1.0)
        mag1 += term1 * (abs(psi_k1) + abs(psi_k2) + abs(log_half) + 1.0)
    i1 = 0.5 * x * i1
    k0 = -(log_half + EULER_GAMMA) * i0 + s0
    k1 = 1.0 / x + log_half * i1 - 0.25 * x * s1
    err0 = 8 * _EPS * mag0
    err1 = 8 * _EPS * (1.0 / x + x * mag1)
    return k0, k1, err0, err1


def _trapezoid(x: np.ndarray, nu: int):
    """exp(-x) * int exp(-x (cosh u - 1)) cosh(nu u) du, with error estimate."""
    # u = c w keeps the peak width ~ 1/sqrt(x) resolved for large x
    c = np.minimum(1.0, np.sqrt(CROSSOVER / x))
    u = np.outer(c, _TRAP_U)
    shifted = 2.0 * np.sinh(0.5 * u) ** 2
    w = np.exp(-x[:, None] * shifted) * (np.cosh(nu * u) if nu else 1.0)
    w[:, 0] *= 0.5
    fine = c * _TRAP_STEP * w.sum(axis=1)
    coarse = 2.0 * c * _TRAP_STEP * w[:, ::2].sum(axis=1)
    scale = np.exp(-x)
    val = scale * fine
    # coarse rule error bounds the fine one by a wide margin
    err = scale * (np.abs(fine - coarse) * 1e-6 + 8 * _EPS * fine)
    return val, err


def _kn(x, nu: int):
    arr = _check_positive(x)
    flat = np.atleast_1d(arr).astype(float)
    val = np.empty_like(flat)
    err = np.empty_like(flat)
    small = flat < CROSSOVER
    if np.any(small):
        k0, k1, e0, e1 = _series(flat[small])
        val[small] = k0 if nu == 0 else k1
        err[small] = e0 if nu == 0 else e1
    if np.any(~small):
        v, e = _trapezoid(flat[~small], nu)
        val[~small] = v
        err[~small] = e
    return val.reshape(arr.shape), err.reshape(arr.shape)


def k0(x):
    """Vectorized K0 (values only)."""
    return _kn(x, 0)[0]


def k1(x):
    """Vectorized K1 (values only)."""
    return _kn(x, 1)[0]


def bessel_k0(x: float) -> SpecFunResult:
    """K0(x) for x > 0 with an absolute error estimate."""
    v, e = _kn(float(x), 0)
    return SpecFunResult(float(v), float(e))


def bessel_k1(x: float) -> SpecFunResult:
    """K1(x) = -K0'(x) for x > 0 with an absolute error estimate."""
    v, e = _kn(float(x), 1)
    return SpecFunResult(float(v), float(e))


def bessel_k2(x: float) -> float:
    """K2 from the upward recurrence K2 = K0 + (2/x) K1."""
    return bessel_k0(x).value + 2.0 / x * bessel_k1(x).value


def log_gamma(x: float) -> float:
    if not x > 0:
        raise DomainError("log_gamma needs x > 0")
    return math.lgamma(x)
