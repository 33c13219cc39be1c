"""Residual checks of the governing equations.

Each registry entry pairs a density with the equation it should satisfy.
``strong_residual`` evaluates every term of the equation pointwise on a
grid that avoids singular loci and reports the residual relative to the
largest term.  Terms come from one of four routes:

* ``fd``       finite differences over the pointwise density,
* ``jet``      derivatives under the subordination integral,
* ``spectral`` FFT application of the |beta| Fourier multiplier,
* ``caputo``   the order-1/2 Caputo time derivative.

Delta-forced equations are also checked in weak form against test
functions P(x) exp(-x^2) (``weak_delta_residual``).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import densities
from .errors import DomainError, SingularPoint, ToleranceBudgetExceeded
from .models import (BmOfCauchy, Cauchy, CauchyOfCauchy, CauchyOfFBm, FBm, IteratedFBm,
                     ProcessModel, ScaledIterated, WeightedJ)
from .numerics import (DiffConfig, Grid1D, QuadratureConfig, caputo_half_time_derivative,
                       differentiate_with_error, integrate_halfline, step_factor,
                       riesz_modulus_derivative)

SQRT2PI = math.sqrt(2.0 * math.pi)
FD_QUAD = QuadratureConfig(rel_tol=1e-13, abs_tol=1e-16, max_subdivisions=4000)
DENOMINATOR_FLOOR = 1e-3
WEAK_QUAD = QuadratureConfig(rel_tol=1e-13, abs_tol=1e-16, max_subdivisions=4000)


@dataclass(frozen=True)
class EquationSpec:
    tag: str
    title: str
    model: ProcessModel
    route: str
    loci: tuple = ("zero",)        # "zero" -> x = 0, "diagonal" -> |x| = t
    excluded_radius: float = 0.05  # multiplied by t^a (zero) or t (diagonal)
    diagonal_radius: float = 1e-3
    tolerance: float = 1e-6
    forcing: Callable | None = None
    clock: Callable | None = None  # variance clock g(t) for the Gaussian entry
    delta_term: bool = False
    x_extent: float = 3.0
    times: tuple = (0.5, 1.0, 2.0)

    def __post_init__(self):
        if self.loci and not self.excluded_radius > 0:
            raise DomainError("entries with singular loci need excluded_radius > 0")

    def excluded(self, model: ProcessModel, t: float) -> list:
        out = []
        if "zero" in self.loci:
            out.append((0.0, self.excluded_radius * t ** model.self_similarity()))
        if "diagonal" in self.loci:
            r = self.diagonal_radius * t
            out += [(t, r), (-t, r)]
        return out

    def default_grid(self, model: ProcessModel, t: float, n: int = 13) -> Grid1D:
        ext = self.x_extent * t ** model.self_similarity()
        return Grid1D.uniform(-ext, ext, n)


@dataclass
class PdeResidualReport:
    tag: str
    params: dict
    n_points: int
    times: list
    x_range: tuple
    max_abs_residual: float
    max_rel_residual: float
    error_budget: float
    term_magnitudes: list
    tolerance: float
    verdict: str
    note: str = ""
    runtime_ms: float = 0.0
    points: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "tag": self.tag, "params": self.params,
            "grid": {"n_points": self.n_points, "times": self.times,
                     "x_range": list(self.x_range)},
            "max_abs_residual": self.max_abs_residual,
            "max_rel_residual": self.max_rel_residual,
            "error_budget": self.error_budget,
            "term_magnitudes": self.term_magnitudes,
            "tolerance": self.tolerance, "verdict": self.verdict, "note": self.note,
            "runtime_ms": self.runtime_ms,
        }


# -- per-point term assemblers ------------------------------------------------
# Each returns (terms, errors); the equation states sum(terms) == 0.

class _Fd:
    """Finite-difference partials of a pointwise density with error estimates."""

    def __init__(self, dens: Callable[[float, float], float], x: float, t: float,
                 dist: float, rel_err: float, diff: DiffConfig):
        self.dens, self.x, self.t = dens, x, t
        self.dist = dist
        self.rel_err = rel_err
        self.diff = diff

    def _d(self, fn, at, order, scale):
        r = differentiate_with_error(fn, at, order, self.diff, scale=scale)
        # quadrature noise amplified by the stencil: sum|c| ~ 2^order / h^order
        noise = self.rel_err * abs(fn(at)) * (2.0 ** order) / r.step ** order
        return r.value, r.error + noise

    def _scale(self, ref, order):
        # keep the widest stencil (offset 2h) well inside the distance to a singular locus
        return min(ref, 0.05 * self.dist / step_factor(order, self.diff))

    def dx(self, order):
        scale = self._scale(max(abs(self.x), 1.0), order)
        return self._d(lambda u: self.dens(u, self.t), self.x, order, scale)

    def dt(self, order):
        scale = self._scale(self.t, order)
        return self._d(lambda u: self.dens(self.x, u), self.t, order, scale)

    def value(self):
        v = self.dens(self.x, self.t)
        return v, self.rel_err * abs(v)


def _fd_terms(eq: EquationSpec, model: ProcessModel, x: float, t: float, dist: float,
              diff: DiffConfig):
    tag = eq.tag
    if eq.clock is not None:
        g = eq.clock

        def dens(u, s):
            return float(densities.gauss_dx(u, g(s)))
        rel = 1e-15
    elif densities.has_density(model) and model.tag in ("FBm", "Cauchy", "CauchyOfCauchy") \
            or (model.tag == "WeightedJ" and model.n == 1):
        def dens(u, s):
            return densities.density(model, u, s)
        rel = 1e-15
    else:
        def dens(u, s):
            return densities.density(model, u, s, FD_QUAD)
        rel = FD_QUAD.rel_tol
    fd = _Fd(dens, x, t, dist, rel, diff)
    if tag == "a":
        H = model.H
        (qt, e1), (qxx, e2) = fd.dt(1), fd.dx(2)
        c = H * t ** (2 * H - 1)
        return [qt, -c * qxx], [e1, c * e2]
    if tag == "b":
        dg = _derivative_of_clock(eq.clock, t)
        (qt, e1), (qxx, e2) = fd.dt(1), fd.dx(2)
        return [qt, -0.5 * dg * qxx], [e1, 0.5 * abs(dg) * e2]
    if tag == "f":
        a = model.hursts[0] * model.hursts[1]
        (q, e0), (qt, e1), (qx, e2) = fd.value(), fd.dt(1), fd.dx(1)
        return [t * qt, a * q, a * x * qx], [t * e1, a * e0, a * abs(x) * e2]
    if tag == "g":
        a = model.hursts[0] * model.hursts[1]
        (qt, e1), (qtt, e2), (qx, e3), (qxx, e4) = fd.dt(1), fd.dt(2), fd.dx(1), fd.dx(2)
        return ([(1 + a) * t * qt, t * t * qtt, -2 * a * a * x * qx, -a * a * x * x * qxx],
                [(1 + a) * t * e1, t * t * e2, 2 * a * a * abs(x) * e3, a * a * x * x * e4])
    if tag == "h":
        H = model.H
        c = H * t ** (2 * H - 1)
        (qt, e1), (qxx, e2), (qxxx, e3) = fd.dt(1), fd.dx(2), fd.dx(3)
        return [qt, 2 * c * qxx, c * x * qxxx], [e1, 2 * c * e2, c * abs(x) * e3]
    if tag == "j":
        (qtt, e1), (qxx, e2) = fd.dt(2), fd.dx(2)
        return [qtt, qxx], [e1, e2]
    if tag == "l":
        (qtt, e1), (qxx, e2) = fd.dt(2), fd.dx(2)
        return [qtt, -qxx, -eq.forcing(x, t)], [e1, e2, 0.0]
    if tag == "m":
        H = model.H
        (qt, e1), (qxx, e2) = fd.dt(1), fd.dx(2)
        c = H * t ** (2 * H - 1)
        return [qt, -eq.forcing(x, t), c * qxx], [e1, 0.0, c * e2]
    raise DomainError(f"entry ({tag}) has no finite-difference route")


def _derivative_of_clock(g, t):
    return differentiate_with_error(g, t, 1, DiffConfig(), scale=t).value


def _jet_terms(eq: EquationSpec, model: ProcessModel, x: float, t: float):
    tag = eq.tag
    want = {
        "c": [(0, 1), (0, 0), (1, 0), (4, 0)],
        "d": [(0, 1), (4, 0)],
        "e": [(0, 1), (4, 0)],
        "f": [(0, 1), (0, 0), (1, 0)],
        "g": [(0, 1), (0, 2), (1, 0), (2, 0)],
        "h": [(0, 1), (2, 0), (3, 0)],
        "i": [(0, 1), (2, 0), (3, 0), (4, 0)],
        "m": [(0, 1), (2, 0)],
        "n": [(0, 2), (4, 0)],
    }[tag]
    jet = densities.density_jet(model, x, t, want)
    v, e = jet.values, jet.errors
    H = model.H if model.hursts else 0.0
    if tag == "c":
        K = model.K
        c = 0.25 * H * t ** (4 * K + 2 * H)
        terms = [t * v[(0, 1)], K * v[(0, 0)], K * x * v[(1, 0)], -c * v[(4, 0)]]
        errs = [t * e[(0, 1)], K * e[(0, 0)], K * abs(x) * e[(1, 0)], c * e[(4, 0)]]
    elif tag == "d":
        c = 0.25 * H * t ** (2 * H)
        terms = [t * v[(0, 1)], -c * v[(4, 0)]]
        errs = [t * e[(0, 1)], c * e[(4, 0)]]
    elif tag == "e":
        terms = [v[(0, 1)], -v[(4, 0)] / 8.0]
        errs = [e[(0, 1)], e[(4, 0)] / 8.0]
    elif tag == "f":
        a = model.hursts[0] * model.hursts[1]
        terms = [t * v[(0, 1)], a * v[(0, 0)], a * x * v[(1, 0)]]
        errs = [t * e[(0, 1)], a * e[(0, 0)], a * abs(x) * e[(1, 0)]]
    elif tag == "g":
        a = model.hursts[0] * model.hursts[1]
        terms = [(1 + a) * t * v[(0, 1)], t * t * v[(0, 2)], -2 * a * a * x * v[(1, 0)],
                 -a * a * x * x * v[(2, 0)]]
        errs = [(1 + a) * t * e[(0, 1)], t * t * e[(0, 2)], 2 * a * a * abs(x) * e[(1, 0)],
                a * a * x * x * e[(2, 0)]]
    elif tag == "h":
        c = H * t ** (2 * H - 1)
        terms = [v[(0, 1)], 2 * c * v[(2, 0)], c * x * v[(3, 0)]]
        errs = [e[(0, 1)], 2 * c * e[(2, 0)], c * abs(x) * e[(3, 0)]]
    elif tag == "i":
        c = H * t ** (2 * H - 1)
        terms = [v[(0, 1)], -4 * c * v[(2, 0)], -5 * c * x * v[(3, 0)], -c * x * x * v[(4, 0)]]
        errs = [e[(0, 1)], 4 * c * e[(2, 0)], 5 * c * abs(x) * e[(3, 0)], c * x * x * e[(4, 0)]]
    elif tag == "m":
        c = H * t ** (2 * H - 1)
        terms = [v[(0, 1)], -eq.forcing(x, t), c * v[(2, 0)]]
        errs = [e[(0, 1)], 0.0, c * e[(2, 0)]]
    else:  # "n"
        terms = [v[(0, 2)], 0.25 * v[(4, 0)]]
        errs = [e[(0, 2)], 0.25 * e[(4, 0)]]
    return terms, errs


def _caputo_terms(model: ProcessModel, x: float, t: float):
    if x == 0.0:
        raise SingularPoint("the fractional check needs x != 0")

    def dq_dt(xx, s):
        return [densities.density_jet(model, xx, float(si), [(0, 1)]).values[(0, 1)]
                for si in np.atleast_1d(s)]

    # the density at time s spreads over |x| ~ s^(1/4): keep the dropped
    # piece [0, delta] where it is negligible at this x
    cutoff = min(1e-6, (abs(x) / 20.0) ** 4 / t)
    cap = caputo_half_time_derivative(None, x, t, dq_dt=dq_dt, rel_cutoff=cutoff)
    jet = densities.density_jet(model, x, t, [(2, 0)])
    c = 2.0 ** -1.5
    return ([cap.value, -c * jet.values[(2, 0)]],
            [cap.error + cap.truncation_bound, c * jet.errors[(2, 0)]])


# -- registry -----------------------------------------------------------------

def _forcing_cc(x, t):
    return -2.0 / (math.pi ** 2 * t * x * x)


def _forcing_cbm(H):
    def f(x, t):
        return 2.0 * H * t ** (H - 1) / (math.pi * x * x * SQRT2PI)
    return f


def equation_registry() -> list:
    """The fifteen governing equations, tagged (a) through (o)."""
    return [
        EquationSpec("a", "fBm heat equation", FBm(0.7), "fd", loci=()),
        EquationSpec("b", "Gaussian law with a variance clock", FBm(0.5), "fd", loci=(),
                     clock=lambda t: t + t ** 3),
        EquationSpec("c", "scaled iterated fBm, fourth order", ScaledIterated(0.3, 0.6), "jet",
                     delta_term=True),
        EquationSpec("d", "Brownian motion of |fBm|, fourth order", IteratedFBm(0.5, 0.7),
                     "jet", delta_term=True),
        EquationSpec("e", "iterated Brownian motion, fourth order", IteratedFBm(0.5, 0.5),
                     "jet", delta_term=True),
        EquationSpec("f", "iterated fBm, first order", IteratedFBm(0.6, 0.4), "fd",
                     tolerance=1e-5),
        EquationSpec("g", "iterated fBm, second order", IteratedFBm(0.6, 0.4), "fd",
                     tolerance=1e-5),
        EquationSpec("h", "K0 law, third order", WeightedJ(1, 0.7), "fd", tolerance=1e-5),
        EquationSpec("i", "two-level K0 chain, fourth order", WeightedJ(2, 0.6), "jet",
                     tolerance=1e-5),
        EquationSpec("j", "Cauchy law, Laplace equation", Cauchy(), "fd", loci=()),
        EquationSpec("k", "Cauchy law, space-fractional equation", Cauchy(), "spectral",
                     loci=()),
        EquationSpec("l", "iterated Cauchy law, forced wave equation", CauchyOfCauchy(), "fd",
                     loci=("zero", "diagonal"), forcing=_forcing_cc),
        EquationSpec("m", "Cauchy of |fBm|, forced heat equation", CauchyOfFBm(0.4), "fd",
                     tolerance=1e-5, forcing=_forcing_cbm(0.4)),
        EquationSpec("n", "Brownian motion of |Cauchy|, fourth order", BmOfCauchy(), "jet",
                     delta_term=True),
        EquationSpec("o", "iterated Brownian motion, half-order time derivative",
                     IteratedFBm(0.5, 0.5), "caputo", tolerance=5e-4),
    ]


def registry_entry(tag: str) -> EquationSpec:
    for eq in equation_registry():
        if eq.tag == tag:
            return eq
    raise DomainError(f"unknown equation tag {tag!r}")


def with_model(eq: EquationSpec, model: ProcessModel) -> EquationSpec:
    """Copy of ``eq`` bound to another parameterization of the same family."""
    if model.tag != eq.model.tag:
        raise DomainError(f"entry ({eq.tag}) is stated for {eq.model.tag}, not {model.tag}")
    forcing = _forcing_cbm(model.H) if eq.tag == "m" else eq.forcing
    return EquationSpec(**{**eq.__dict__, "model": model, "forcing": forcing})


# -- residual drivers -------------------------------------------------------------

def _verdict(rel: float, budget: float, tol: float) -> str:
    if rel <= tol:
        return "pass"
    if budget > tol:
        return "inconclusive"
    return "fail"


def _point_verdict(points, tol: float) -> str:
    verdicts = {_verdict(p["rel_residual"], p["budget"], tol) for p in points}
    for v in ("fail", "inconclusive"):
        if v in verdicts:
            return v
    return "pass"


def point_terms(eq: EquationSpec, x: float, t: float, route: str | None = None,
                diff: DiffConfig | None = None):
    """Terms and their error estimates at one (x, t)."""
    route = route or eq.route
    model = eq.model
    dist = min([abs(x - c) for c, _ in eq.excluded(model, t)] + [max(abs(x), t, 1.0)])
    if route == "fd":
        return _fd_terms(eq, model, x, t, dist, diff or DiffConfig())
    if route == "jet":
        return _jet_terms(eq, model, x, t)
    if route == "caputo":
        return _caputo_terms(model, x, t)
    raise DomainError(f"route {route!r} is not pointwise")


def spectral_grid(t: float, doubling: int = 0) -> Grid1D:
    L = 2000.0 * t * 2 ** doubling
    n = 1 << (18 + doubling)
    return Grid1D(tuple(np.linspace(-L, L, n + 1)[:-1]))


def cauchy_riesz(t: float, x_extent: float):
    """|beta| multiplier applied to the Cauchy density on |x| <= x_extent * t.

    The periodization error of a truncated window of half-width L decays like
    L^-2; two windows (L, 2L) at equal spacing are combined by Richardson
    extrapolation.
    """
    out = []
    for d in (0, 1):
        grid = spectral_grid(t, d)
        x = grid.array
        vals = riesz_modulus_derivative(t / (math.pi * (t * t + x * x)), grid)
        sel = np.abs(x) <= x_extent * t
        out.append((x[sel], vals[sel]))
    (x0, r0), (x1, r1) = out
    if x0.size != x1.size or not np.allclose(x0, x1, rtol=0, atol=1e-9 * t):
        raise DomainError("spectral windows are not aligned")
    return x0, (4.0 * r1 - r0) / 3.0


def _spectral_residual(eq: EquationSpec, times, x_extent: float, stride: int = 16):
    rows = []
    for t in times:
        xs, riesz = cauchy_riesz(t, x_extent)
        for xi, ri in zip(xs[::stride], riesz[::stride]):
            xi = float(xi)
            fd = _Fd(lambda u, s: s / (math.pi * (s * s + u * u)), xi, t,
                     max(abs(xi), t), 1e-15, DiffConfig())
            qt, e1 = fd.dt(1)
            rows.append((xi, t, [qt, float(ri)], [e1, 0.0]))
    return rows


def strong_residual(eq: EquationSpec, grid: Grid1D | None = None, times=None,
                    diff: DiffConfig | None = None, tolerance: float | None = None,
                    route: str | None = None) -> PdeResidualReport:
    """Pointwise residual of ``eq`` over ``grid`` x ``times``.

    The relative residual at a point is |sum of terms| / max |term|.  The
    error budget is the same ratio for the summed term error estimates.  A
    point above tolerance fails if its own budget is within tolerance and is
    inconclusive otherwise; any failing point makes the report fail.
    """
    started = time.perf_counter()
    model = eq.model
    times = list(eq.times if times is None else times)
    tol = eq.tolerance if tolerance is None else tolerance
    route = route or eq.route
    rows = []
    x_lo, x_hi = math.inf, -math.inf
    if route == "spectral":
        ext = eq.x_extent if grid is None else max(abs(grid.array[0]), abs(grid.array[-1]))
        rows = _spectral_residual(eq, times, ext)
    else:
        for t in times:
            g = grid or eq.default_grid(model, t)
            pts = g.array
            keep = np.ones(pts.size, dtype=bool)
            for c, r in eq.excluded(model, t):
                keep &= np.abs(pts - c) > max(r, g.excluded_radius)
            for x in pts[keep]:
                terms, errs = point_terms(eq, float(x), t, route, diff)
                rows.append((float(x), t, terms, errs))
    if not rows:
        raise DomainError("no grid points left after excluding singular loci")
    max_abs = max_rel = budget = 0.0
    mags = None
    points = []
    # where every term crosses zero together the pointwise ratio is 0/0; the
    # denominator is floored at a fraction of the largest term at that time
    peak = {}
    for _, t, terms, _ in rows:
        peak[t] = max(peak.get(t, 0.0), max(abs(v) for v in terms))
    for x, t, terms, errs in rows:
        x_lo, x_hi = min(x_lo, x), max(x_hi, x)
        scale = max(max(abs(v) for v in terms), DENOMINATOR_FLOOR * peak[t])
        res = abs(sum(terms))
        rel = res / scale if scale > 0 else 0.0
        b = sum(errs) / scale if scale > 0 else 0.0
        max_abs, max_rel, budget = max(max_abs, res), max(max_rel, rel), max(budget, b)
        m = [abs(v) for v in terms]
        mags = m if mags is None else [max(u, v) for u, v in zip(mags, m)]
        points.append({"x": x, "t": t, "rel_residual": float(rel), "budget": float(b)})
    # a point whose own budget is within tolerance settles the verdict as fail
    verdict = _point_verdict(points, tol)
    note = ""
    if verdict == "inconclusive":
        note = (f"error budget {budget:.2e} exceeds tolerance {tol:.1e}: the residual "
                "cannot be resolved at this precision")
    return PdeResidualReport(
        tag=eq.tag, params=model.params(), n_points=len(rows), times=times,
        x_range=(x_lo, x_hi), max_abs_residual=max_abs, max_rel_residual=max_rel,
        error_budget=budget, term_magnitudes=mags, tolerance=tol, verdict=verdict,
        note=note, runtime_ms=1e3 * (time.perf_counter() - started), points=points)


def require_conclusive(report: PdeResidualReport) -> PdeResidualReport:
    if report.verdict == "inconclusive":
        raise ToleranceBudgetExceeded(report.note)
    return report


def run_suite(tags=None, grid: Grid1D | None = None, tolerance: float | None = None):
    eqs = equation_registry()
    if tags:
        wanted = set(tags)
        unknown = wanted - {e.tag for e in eqs}
        if unknown:
            raise DomainError(f"unknown equation tags {sorted(unknown)}")
        eqs = [e for e in eqs if e.tag in wanted]
    return [strong_residual(e, grid=grid, tolerance=tolerance) for e in eqs]


# -- fractional check --------------------------------------------------------------

def fractional_residual(x: float, t: float) -> float:
    """Relative residual of the half-order time-fractional equation for
    iterated Brownian motion at (x, t), x != 0."""
    if not t > 0:
        raise DomainError("t must be positive")
    terms, _ = _caputo_terms(IteratedFBm(0.5, 0.5), float(x), float(t))
    return abs(sum(terms)) / max(abs(v) for v in terms)


# -- weak forms ------------------------------------------------------------------------

class PolyGaussian:
    """Test function P(x) exp(-x^2) with P an even polynomial (ascending coefficients)."""

    def __init__(self, coef):
        c = np.trim_zeros(np.asarray(coef, dtype=float), "b")
        self.coef = c if c.size else np.zeros(1)

    def derivative(self, k: int = 1) -> "PolyGaussian":
        c = self.coef
        for _ in range(k):
            # (P e^{-x^2})' = (P' - 2 x P) e^{-x^2}
            c = npoly.polysub(npoly.polyder(c), npoly.polymulx(2.0 * c))
        return PolyGaussian(c)

    def times_x(self) -> "PolyGaussian":
        return PolyGaussian(npoly.polymulx(self.coef))

    def __call__(self, x):
        return npoly.polyval(x, self.coef) * np.exp(-np.asarray(x) ** 2)

    def second_derivative_at_zero(self) -> float:
        return float(self.derivative(2)(0.0))

    def gauss_expectation(self, v):
        """E[psi(sqrt(v) Z)], Z standard normal, in closed form.

        exp(-x^2) N(x; v) = (1 + 2v)^{-1/2} N(x; v / (1 + 2v)), and the even
        moments of the narrowed Gaussian are (2m - 1)!! w^m.
        """
        v = np.asarray(v, dtype=float)
        w = v / (1.0 + 2.0 * v)
        out = np.zeros_like(w)
        dfact = 1.0
        for m in range(0, self.coef.size, 2):
            if m:
                dfact *= m - 1
            out = out + self.coef[m] * dfact * w ** (m // 2)
        return out / np.sqrt(1.0 + 2.0 * v)


def gaussian_test_function() -> PolyGaussian:
    return PolyGaussian([1.0])


def quartic_test_function() -> PolyGaussian:
    """x^4 exp(-x^2): its second derivative vanishes at 0."""
    return PolyGaussian([0.0, 0.0, 0.0, 0.0, 1.0])


def paired(model: ProcessModel, psi: PolyGaussian, t: float, b: int = 0,
           quad: QuadratureConfig | None = None) -> float:
    """d^b/dt^b of int q(x, t) psi(x) dx, via the mixture representation.

    int q psi dx = int_0^inf w(s, t) E[psi(sqrt(v(s, t)) Z)] ds, and
    dE/dv = E[psi''] / 2.
    """
    mix = densities.mixture(model)
    if mix.outer != "gauss":
        raise DomainError("weak pairing implemented for Gaussian outer layers")
    cfg = quad or WEAK_QUAD
    psi2 = psi.derivative(2)

    def f(s):
        v = mix.variance(s, t)
        out = mix.weight(s, t, b) * psi.gauss_expectation(v)
        if b == 1 and mix.variance_dt_factor is not None:
            out = out + mix.weight(s, t, 0) * mix.variance_dt_factor(s, t) * \
                psi2.gauss_expectation(v)
        elif b > 1 and mix.variance_dt_factor is not None:
            raise DomainError("second time derivative unavailable for this law")
        return out

    return integrate_halfline(f, cfg, scale=mix.scale(t)).value


@dataclass(frozen=True)
class WeakResult:
    tag: str
    defect: float
    terms: tuple
    delta_coefficient: float

    @property
    def relative_defect(self) -> float:
        return abs(self.defect) / max(abs(v) for v in self.terms)


def weak_delta_residual(tag: str, model: ProcessModel | None = None,
                        testfn: PolyGaussian | None = None, t: float = 1.0,
                        delta_scale: float = 1.0) -> WeakResult:
    """Integrate a delta-forced equation against a test function.

    The delta term contributes its coefficient times phi''(0);
    ``delta_scale`` multiplies that coefficient (the sensitivity check halves it).
    """
    if tag not in ("c", "d", "e", "n"):
        raise DomainError("weak forms are defined for entries c, d, e and n")
    eq = registry_entry(tag)
    model = model or eq.model
    if model.tag != eq.model.tag:
        raise DomainError(f"entry ({tag}) is stated for {eq.model.tag}")
    phi = testfn or gaussian_test_function()
    phi4 = phi.derivative(4)
    d2 = phi.second_derivative_at_zero()
    H = model.H if model.hursts else 0.0
    if tag == "e":
        if model.hursts != (0.5, 0.5):
            raise DomainError("entry (e) is the iterated Brownian motion")
        coef = 1.0 / (2.0 * math.sqrt(2.0 * math.pi * t))
        terms = (paired(model, phi, t, 1), -paired(model, phi4, t) / 8.0)
    elif tag == "d":
        coef = H * t ** H / SQRT2PI
        terms = (t * paired(model, phi, t, 1), -0.25 * H * t ** (2 * H) * paired(model, phi4, t))
    elif tag == "c":
        K = model.K
        coef = H * t ** (2 * K + H) / SQRT2PI
        xphi1 = phi.derivative(1).times_x()
        # -K int d/dx(x q) phi dx = K int x q phi' dx
        terms = (t * paired(model, phi, t, 1), -K * paired(model, xphi1, t),
                 -0.25 * H * t ** (4 * K + 2 * H) * paired(model, phi4, t))
    else:
        coef = -1.0 / (math.pi * t)
        terms = (paired(model, phi, t, 2), 0.25 * paired(model, phi4, t))
    delta = -delta_scale * coef * d2
    terms = terms + (delta,)
    return WeakResult(tag, float(sum(terms)), terms, delta_scale * coef)


# -- scaling solutions of the first-order equation ------------------------------

def scaling_solution_check(f: Callable[[float], float], H1: float, H2: float,
                           points) -> float:
    """Max |t/(H1 H2) u_t + x u_x + u| over ``points`` for u = f(x / t^{H1 H2}) / x."""
    a = H1 * H2
    worst = 0.0
    for x, t in points:
        if x == 0:
            raise SingularPoint("u = f(x / t^a) / x needs x != 0")

        def u(xx, tt):
            return f(xx / tt ** a) / xx

        ut = differentiate_with_error(lambda s: u(x, s), t, 1, scale=t).value
        ux = differentiate_with_error(lambda s: u(s, t), x, 1, scale=abs(x)).value
        worst = max(worst, abs(t / a * ut + x * ux + u(x, t)))
    return worst


def gaussian_scaling_profile(z: float) -> float:
    """z exp(-z^2/2) / sqrt(2 pi): x times the Brownian kernel at unit time."""
    return z * math.exp(-0.5 * z * z) / SQRT2PI
