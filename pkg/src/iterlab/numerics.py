"""Foundation kernels: adaptive quadrature, finite differences, the Caputo
derivative of order 1/2 and the spectral modulus derivative.

Every integrator here accepts *vectorized* integrands: ``f`` receives a 1-D
array of abscissae and returns either an array of the same length or a 2-D
array of shape ``(m, len(s))`` for ``m`` simultaneous integrals sharing one
panel set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, GridTooCoarse, NonConvergence, StepUnderflow

_EPS = np.finfo(float).eps

# Gauss-Kronrod 7/15 pair (QUADPACK qk15 constants).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
WEIGHTS_K = np.concatenate([_WGK[:-1], _WGK[::-1]])
WEIGHTS_G = np.zeros(15)
# Gauss nodes sit at the odd Kronrod positions (xgk[1], xgk[3], xgk[5], 0).
for _i, _w in zip((1, 3, 5), _WG[:3]):
    WEIGHTS_G[_i] = _w
    WEIGHTS_G[14 - _i] = _w
WEIGHTS_G[7] = _WG[3]

# Breakpoints in the compactified variable u = s/(scale + s); the geometric
# run towards 0 resolves s^-1-type prefactors, the run towards 1 the tails.
_HALFLINE_BREAKS = np.array([
    0.0, 1e-12, 1e-9, 1e-6, 1e-4, 1e-3, 1e-2, 0.05, 0.15, 0.3, 0.5, 0.7,
    0.85, 0.95, 0.99, 0.999, 0.9999, 1.0,
])


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not self.rel_tol > 0 or not self.abs_tol > 0:
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class DiffConfig:
    base_step: float = 1e-3
    richardson_levels: int = 3
    max_order: int = 4

    def __post_init__(self):
        if not self.base_step > 0:
            raise DomainError("base_step must be positive")
        if self.max_order not in (1, 2, 3, 4):
            raise DomainError("max_order must be in {1, 2, 3, 4}")
        if self.richardson_levels < 1:
            raise DomainError("richardson_levels must be >= 1")


@dataclass(frozen=True)
class Grid1D:
    points: tuple
    excluded_radius: float = 0.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise DomainError("grid must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(pts)):
            raise DomainError("grid points must be finite")
        if np.any(np.diff(pts) <= 0):
            raise DomainError("grid points must be strictly increasing")
        if self.excluded_radius < 0:
            raise DomainError("excluded_radius must be non-negative")
        object.__setattr__(self, "points", tuple(pts.tolist()))

    @classmethod
    def uniform(cls, lo: float, hi: float, n: int, excluded_radius: float = 0.0):
        return cls(tuple(np.linspace(lo, hi, n)), excluded_radius)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.points)

    @property
    def spacing(self) -> float:
        pts = self.array
        return float(pts[1] - pts[0]) if pts.size > 1 else 0.0

    def is_uniform(self, rtol: float = 1e-9) -> bool:
        d = np.diff(self.array)
        return d.size > 0 and bool(np.all(np.abs(d - d[0]) <= rtol * abs(d[0])))

    def avoiding(self, loci) -> np.ndarray:
        """Grid points farther than ``excluded_radius`` from every locus."""
        pts = self.array
        keep = np.ones(pts.size, dtype=bool)
        for c in loci:
            keep &= np.abs(pts - c) > self.excluded_radius
        return pts[keep]


class QuadResult(NamedTuple):
    value: float | np.ndarray
    error: float | np.ndarray
    n_panels: int


def _panel_rules(f, a, b):
    """Kronrod value, scaled error and |f| integral on each panel."""
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c[:, None] + h[:, None] * NODES[None, :]
    with np.errstate(all="ignore"):
        fx = np.asarray(f(x.ravel()), dtype=float)
    vector = fx.ndim == 2
    fx = fx.reshape((fx.shape[0] if vector else 1, a.size, 15))
    if not np.all(np.isfinite(fx)):
        raise DomainError("integrand produced a NaN/Inf sample")
    k = h[None, :] * (fx @ WEIGHTS_K)
    g = h[None, :] * (fx @ WEIGHTS_G)
    mean = (fx @ WEIGHTS_K) / 2.0
    resasc = h[None, :] * (np.abs(fx - mean[..., None]) @ WEIGHTS_K)
    resabs = h[None, :] * (np.abs(fx) @ WEIGHTS_K)
    diff = np.abs(k - g)
    with np.errstate(all="ignore"):
        scaled = np.where(resasc > 0,
                          resasc * np.minimum(1.0, (200.0 * diff / resasc) ** 1.5),
                          diff)
    floor = 50.0 * _EPS * resabs
    err = np.maximum(scaled, floor)
    return k, err, floor, vector


def _adaptive(f, lo, hi, breaks, cfg: QuadratureConfig) -> QuadResult:
    a = np.asarray(breaks[:-1], dtype=float)
    b = np.asarray(breaks[1:], dtype=float)
    k, err, floor, vector = _panel_rules(f, a, b)
    while True:
        total = k.sum(axis=1)
        total_err = err.sum(axis=1)
        # cancellation can put the rounding floor above rel_tol * |total|
        tol = max(cfg.abs_tol, cfg.rel_tol * float(np.max(np.abs(total))),
                  2.0 * float(np.max(floor.sum(axis=1))))
        if float(np.max(total_err)) <= tol:
            break
        panel_err = err.max(axis=0)
        width = b - a
        splittable = width > 64 * _EPS * np.maximum(np.abs(a), np.abs(b))
        at_floor = panel_err <= 1.001 * floor.max(axis=0)
        cand = (panel_err > tol / (4.0 * a.size)) & splittable & ~at_floor
        if not np.any(cand):
            if float(np.max(total_err)) <= 10.0 * tol:
                break
            raise NonConvergence(
                f"quadrature stalled at error {float(np.max(total_err)):.3g} "
                f"(tolerance {tol:.3g}) on [{lo}, {hi}]")
        if a.size + int(cand.sum()) > cfg.max_subdivisions:
            raise NonConvergence(
                f"max_subdivisions={cfg.max_subdivisions} exhausted; error "
                f"{float(np.max(total_err)):.3g} > tolerance {tol:.3g}")
        mid = 0.5 * (a[cand] + b[cand])
        na = np.concatenate([a[cand], mid])
        nb = np.concatenate([mid, b[cand]])
        nk, nerr, nfloor, _ = _panel_rules(f, na, nb)
        keep = ~cand
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        k = np.concatenate([k[:, keep], nk], axis=1)
        err = np.concatenate([err[:, keep], nerr], axis=1)
        floor = np.concatenate([floor[:, keep], nfloor], axis=1)
        order = np.argsort(a, kind="stable")
        a, b = a[order], b[order]
        k, err, floor = k[:, order], err[:, order], floor[:, order]
    # fixed summation order: panels sorted by left endpoint
    value = k.sum(axis=1)
    error = err.sum(axis=1)
    if vector:
        return QuadResult(value, error, a.size)
    return QuadResult(float(value[0]), float(error[0]), a.size)


def integrate_halfline(f: Callable, cfg: QuadratureConfig | None = None,
                       scale: float = 1.0, points=()) -> QuadResult:
    """Integrate ``f`` over (0, inf).

    Uses the map s = scale * u / (1 - u) onto (0, 1) and adaptive bisection
    with the Gauss-Kronrod 7/15 pair.  ``scale`` should be the natural length
    of the integrand.  ``points`` are extra locations in s (peaks far from
    ``scale``), each added with a decade on either side as breakpoints.
    """
    cfg = cfg or QuadratureConfig()
    if not scale > 0:
        raise DomainError("scale must be positive")
    breaks = _HALFLINE_BREAKS
    extra = [p * r for p in points if p > 0 and math.isfinite(p) for r in (0.1, 1.0, 10.0)]
    if extra:
        u = np.array([e / (scale + e) for e in extra])
        u = u[(u > 1e-14) & (u < 1.0 - 1e-12)]
        breaks = np.unique(np.concatenate([breaks, u]))

    def g(u):
        one_minus = 1.0 - u
        s = scale * u / one_minus
        jac = scale / (one_minus * one_minus)
        return np.asarray(f(s)) * jac

    return _adaptive(g, 0.0, math.inf, breaks, cfg)


def integrate_interval(f: Callable, a: float, b: float,
                       cfg: QuadratureConfig | None = None,
                       breaks=None) -> QuadResult:
    """Integrate ``f`` over the finite interval [a, b].

    Endpoint singularities are handled by bisection; pass ``breaks`` (interior
    points) to pre-split at known kinks or singular points.
    """
    cfg = cfg or QuadratureConfig()
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("integrate_interval needs finite limits")
    if a == b:
        return QuadResult(0.0, 0.0, 0)
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    pts = [a]
    if breaks is not None:
        pts += sorted(float(p) for p in breaks if a < p < b)
    else:
        # geometric refinement towards both ends, cheap insurance for
        # integrable endpoint singularities
        w = b - a
        pts += [a + w * r for r in (1e-6, 1e-3, 0.05)]
        pts += [a + w * r for r in (0.25, 0.5, 0.75)]
        pts += [b - w * r for r in (0.05, 1e-3, 1e-6)]
    pts.append(b)
    res = _adaptive(f, a, b, np.asarray(pts), cfg)
    return QuadResult(sign * res.value, res.error, res.n_panels)


def integrate_real_line_even(f: Callable, cfg: QuadratureConfig | None = None,
                             scale: float = 1.0) -> QuadResult:
    """Integral over R of an even function, as twice the half-line integral."""
    res = integrate_halfline(f, cfg, scale)
    return QuadResult(2.0 * res.value, 2.0 * res.error, res.n_panels)


# -- finite differences ------------------------------------------------------

_STENCILS = {
    1: (np.array([-1.0, 1.0]), np.array([-1.0, 1.0]) / 2.0),
    2: (np.array([-1.0, 0.0, 1.0]), np.array([1.0, -2.0, 1.0])),
    3: (np.array([-2.0, -1.0, 1.0, 2.0]), np.array([-1.0, 2.0, -2.0, 1.0]) / 2.0),
    4: (np.array([-2.0, -1.0, 0.0, 1.0, 2.0]), np.array([1.0, -4.0, 6.0, -4.0, 1.0])),
}


class DiffResult(NamedTuple):
    value: float
    error: float
    step: float


def step_size(x: float, order: int, cfg: DiffConfig, scale: float | None = None) -> float:
    """Initial step relative to ``scale`` (default max(|x|, 1)).

    The factor eps^(1/(order + 2 levels)) balances rounding at the finest
    level against the O(h^(2 levels)) truncation left after extrapolation.
    """
    ref = max(abs(x), 1.0) if scale is None else scale
    return ref * step_factor(order, cfg)


def step_factor(order: int, cfg: DiffConfig) -> float:
    return max(cfg.base_step, _EPS ** (1.0 / (order + 2 * cfg.richardson_levels)))


def differentiate_with_error(f: Callable[[float], float], x: float, order: int,
                             cfg: DiffConfig | None = None,
                             scale: float | None = None) -> DiffResult:
    """Central differences with Richardson extrapolation on h, h/2, h/4, ...

    The error estimate is the difference between the last two extrapolation
    levels.  ``scale`` overrides the max(|x|, 1) step reference.
    """
    cfg = cfg or DiffConfig()
    if order not in _STENCILS or order > cfg.max_order:
        raise DomainError(f"derivative order {order} not supported")
    h = step_size(x, order, cfg, scale)
    if h / 2 ** (cfg.richardson_levels - 1) <= 4 * _EPS * max(abs(x), 1e-300):
        raise StepUnderflow(f"step {h:.3g} collapses at x={x}")
    offs, coefs = _STENCILS[order]
    table = []
    for lev in range(cfg.richardson_levels):
        hl = h / 2.0 ** lev
        vals = np.array([f(x + o * hl) for o in offs], dtype=float)
        if not np.all(np.isfinite(vals)):
            raise DomainError(f"non-finite function value near x={x}")
        row = [float(coefs @ vals) / hl ** order]
        for j in range(1, lev + 1):
            fac = 4.0 ** j
            row.append(row[j - 1] + (row[j - 1] - table[-1][j - 1]) / (fac - 1.0))
        table.append(row)
    best = table[-1][-1]
    if len(table) > 1:
        err = abs(best - table[-2][-1])
    else:
        err = abs(best) * _EPS ** 0.5
    return DiffResult(best, err, h)


def differentiate(f: Callable[[float], float], x: float, order: int,
                  cfg: DiffConfig | None = None, scale: float | None = None) -> float:
    return differentiate_with_error(f, x, order, cfg, scale).value


# -- Caputo derivative of order 1/2 ----------------------------------------

class CaputoResult(NamedTuple):
    value: float
    error: float
    truncation: float
    truncation_bound: float


def caputo_half_time_derivative(q: Callable[[float, float], float], x: float, t: float,
                                quad: QuadratureConfig | None = None,
                                diff: DiffConfig | None = None,
                                dq_dt: Callable | None = None,
                                rel_cutoff: float = 1e-6) -> CaputoResult:
    """Caputo derivative of order 1/2 in time of ``q(x, .)`` at ``t``.

    Evaluates (1/Gamma(1/2)) int_delta^t dq/ds(x, s) (t - s)^(-1/2) ds, using
    the substitution s = t - u^2 on [t/2, t] to remove the kernel
    singularity at s = t.  The lower piece [0, delta], delta = rel_cutoff * t, is dropped
    and bounded assuming |dq/ds| <= C s^(-1/2) with C fitted at s = delta.

    ``dq_dt(x, s)`` may be vectorized in ``s``; without it the time
    derivative of ``q`` is taken by finite differences.
    """
    if not t > 0:
        raise DomainError("Caputo derivative needs t > 0")
    quad = quad or QuadratureConfig()
    delta = rel_cutoff * t

    if dq_dt is None:
        def qs_scalar(s):
            return differentiate(lambda tau: q(x, tau), s, 1, diff, scale=s)

        def qs(s):
            return np.array([qs_scalar(float(v)) for v in np.atleast_1d(s)])
    else:
        def qs(s):
            return np.asarray(dq_dt(x, s), dtype=float)

    # [delta, t/2] directly in s; [t/2, t] with s = t - u^2
    half = 0.5 * t
    s_breaks = [delta] + [b for b in half * 10.0 ** -np.arange(12, 0, -1) if b > delta] + [half]
    near = integrate_interval(lambda s: qs(s) / np.sqrt(t - s), delta, half, quad,
                              breaks=s_breaks)
    umax = math.sqrt(half)
    far = integrate_interval(lambda u: 2.0 * qs(t - u * u), 0.0, umax, quad,
                             breaks=[umax * r for r in (0.25, 0.5, 0.75)])
    res = QuadResult(near.value + far.value, near.error + far.error,
                     near.n_panels + far.n_panels)
    inv_gamma_half = 1.0 / math.sqrt(math.pi)
    edge = abs(float(np.atleast_1d(qs(np.array([delta])))[0]))
    c_const = edge * math.sqrt(delta)
    bound = inv_gamma_half * c_const * 2.0 * math.sqrt(delta) / math.sqrt(t - delta)
    return CaputoResult(inv_gamma_half * res.value, inv_gamma_half * res.error,
                        delta, bound)


# -- spectral modulus derivative -------------------------------------------

def riesz_modulus_derivative(values, grid: Grid1D, tail_fraction: float = 0.125,
                             tail_tol: float = 1e-6) -> np.ndarray:
    """Apply the operator with Fourier symbol |beta| to samples on a uniform grid.

    The samples are treated as one period of a periodic function, so they
    must decay towards the grid ends.  Raises ``GridTooCoarse`` when the top
    ``tail_fraction`` of the band carries more than ``tail_tol`` of the
    spectral mass.
    """
    f = np.asarray(values, dtype=float)
    if f.shape != (len(grid.points),):
        raise DomainError("values and grid differ in length")
    if not grid.is_uniform():
        raise DomainError("riesz_modulus_derivative needs a uniform grid")
    n = f.size
    dx = grid.spacing
    spec = np.fft.fft(f)
    beta = 2.0 * np.pi * np.fft.fftfreq(n, d=dx)
    mag = np.abs(spec)
    total = float(mag.sum())
    if total > 0:
        cutoff = (1.0 - tail_fraction) * np.abs(beta).max()
        tail = float(mag[np.abs(beta) >= cutoff].sum())
        if tail > tail_tol * total:
            raise GridTooCoarse(
                f"spectral tail mass {tail / total:.3g} exceeds {tail_tol:g}")
    return np.real(np.fft.ifft(np.abs(beta) * spec))


def spectral_second_derivative(values, grid: Grid1D) -> np.ndarray:
    """Second derivative by the Fourier multiplier -beta^2."""
    f = np.asarray(values, dtype=float)
    beta = 2.0 * np.pi * np.fft.fftfreq(f.size, d=grid.spacing)
    return np.real(np.fft.ifft(-(beta ** 2) * np.fft.fft(f)))
