"""Equality-in-distribution checks by Kolmogorov-Smirnov tests.

Each identity compares the fixed-time marginals of two constructions.  KS
statistics are computed on the scale y = arctan(x / s): the map is monotone,
so the statistic is unchanged, while Cauchy-type draws of size 1e12 and
beyond stay well conditioned.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import kolmogorov

from . import analytics, densities
from .errors import DomainError
from .models import (CauchyOfCauchy, HalfProductCauchy, ProcessModel, ProductFBm,
                     ReciprocalCC, WeightedJ)
from .sampling import RngState, sample_marginal

SIGNIFICANCE = 0.01
MIN_SAMPLES = 10_000
DEFAULT_SEED = 1
IDENTITY_TAGS = ("CC_PRODUCT", "CC_RECIPROCAL", "J_FACTORIZATION", "J_BM_CHAIN", "J1_PAIR")


@dataclass(frozen=True)
class KsReport:
    statistic: float
    approx_p_value: float
    n: int
    m: int

    @property
    def verdict(self) -> str:
        return "pass" if self.approx_p_value >= SIGNIFICANCE else "fail"


def _uniformize(x, scale: float = 1.0):
    return np.arctan(np.asarray(x, dtype=float) / scale)


def ks_two_sample(a, b, scale: float = 1.0) -> KsReport:
    """Two-sample KS statistic with the asymptotic Kolmogorov p-value."""
    a = np.sort(_uniformize(a, scale))
    b = np.sort(_uniformize(b, scale))
    n, m = a.size, b.size
    if n == 0 or m == 0:
        raise DomainError("KS test needs non-empty samples")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / n
    fb = np.searchsorted(b, pts, side="right") / m
    d = float(np.max(np.abs(fa - fb)))
    p = float(kolmogorov(math.sqrt(n * m / (n + m)) * d)) if d > 0 else 1.0
    return KsReport(d, p, n, m)


def ks_one_sample(samples, cdf) -> KsReport:
    """One-sample KS against a vectorized CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise DomainError("KS test needs a non-empty sample")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))
    return KsReport(d, float(kolmogorov(math.sqrt(n) * d)), n, 0)


@dataclass(frozen=True)
class IdentityCase:
    tag: str
    t: float = 1.0
    n_samples: int = 100_000
    seeds: tuple = (RngState(DEFAULT_SEED, 1), RngState(DEFAULT_SEED, 2))
    n: int = 2
    H: float = 0.6
    outer: tuple = ()
    negative_control: bool = False

    def __post_init__(self):
        if self.tag not in IDENTITY_TAGS:
            raise DomainError(f"unknown identity tag {self.tag!r}")
        if self.n_samples < MIN_SAMPLES:
            raise DomainError(f"need at least {MIN_SAMPLES} samples per side")
        if len(self.seeds) != 2 or self.seeds[0] == self.seeds[1]:
            raise DomainError("the two sides need distinct streams")
        if not self.t > 0:
            raise DomainError("t must be positive")

    def sides(self):
        """(left model, left time, right model, right time)."""
        t, H, n = self.t, self.H, self.n
        neg = self.negative_control
        if self.tag == "CC_PRODUCT":
            return CauchyOfCauchy(), t, HalfProductCauchy(), (1.3 * t if neg else t)
        if self.tag == "CC_RECIPROCAL":
            # control: the reciprocal evaluated at the original time, not 1/t
            return CauchyOfCauchy(), t, ReciprocalCC(), (1.0 / t if neg else t)
        if self.tag == "J_FACTORIZATION":
            if n < 2:
                raise DomainError("factorization needs n >= 2")
            h_right = H * n / (n + 1) if neg else H  # factor Hurst H/n -> H/(n+1)
            return WeightedJ(n - 1, H), t, ProductFBm(n, h_right), t
        if self.tag == "J_BM_CHAIN":
            left = WeightedJ(n, H, self.outer or (H,) * n)
            right_h = 0.5 * H if neg else H
            return left, t, WeightedJ(n, right_h, (0.5,) * n), t
        # J1_PAIR: B_H(|B_H|^{1/H}) against B(|B_H|^2) and against B_{H/2} B_{H/2}
        right_h = 0.5 * H if neg else H
        return WeightedJ(1, H), t, ProductFBm(2, right_h), t

    def params(self) -> dict:
        out = {"t": self.t, "n_samples": self.n_samples}
        if self.tag.startswith("J"):
            out.update(n=self.n, H=self.H)
        if self.outer:
            out["outer"] = list(self.outer)
        if self.negative_control:
            out["negative_control"] = True
        return out


@dataclass
class IdentityReport:
    tag: str
    params: dict
    ks: KsReport
    extra_ks: list = field(default_factory=list)
    moment_checks: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    runtime_ms: float = 0.0

    @property
    def verdict(self) -> str:
        ok = self.ks.verdict == "pass" and all(k.verdict == "pass" for k in self.extra_ks)
        ok = ok and all(c["within"] for c in self.moment_checks)
        return "pass" if ok else "fail"

    def to_dict(self) -> dict:
        return {
            "tag": self.tag, "params": self.params, "verdict": self.verdict,
            "ks_statistic": self.ks.statistic, "p_value": self.ks.approx_p_value,
            "extra": [{"ks_statistic": k.statistic, "p_value": k.approx_p_value}
                      for k in self.extra_ks],
            "moment_checks": self.moment_checks, "seeds": self.seeds,
            "runtime_ms": self.runtime_ms,
        }


def _moment_check(x, order: int, target: float, side: str) -> dict:
    p = x ** order
    est = float(np.mean(p))
    se = float(np.std(p, ddof=1) / math.sqrt(p.size))
    return {"side": side, "order": order, "estimate": est, "target": target,
            "std_error": se, "within": abs(est - target) <= 4.0 * se}


def run_identity(case: IdentityCase) -> IdentityReport:
    started = time.perf_counter()
    left, tl, right, tr = case.sides()
    a = sample_marginal(left, tl, case.seeds[0], case.n_samples)
    b = sample_marginal(right, tr, case.seeds[1], case.n_samples)
    scale = case.t ** left.self_similarity()
    report = IdentityReport(case.tag, case.params(), ks_two_sample(a, b, scale),
                            seeds=[[s.seed, s.stream_id] for s in case.seeds])
    if case.tag == "J1_PAIR":
        # middle member B(|B_H|^2): the chain with a Brownian outer layer
        mid = WeightedJ(1, right.H, (0.5,))
        c = sample_marginal(mid, case.t, case.seeds[1].child(1), case.n_samples)
        report.extra_ks.append(ks_two_sample(a, c, scale))
    if case.tag == "J_FACTORIZATION":
        for k in (1, 2):
            target = analytics.mellin_weighted_chain(2 * k + 1, case.n, case.H, case.t)
            report.moment_checks.append(_moment_check(a, 2 * k, target, "chain"))
            report.moment_checks.append(_moment_check(b, 2 * k, target, "product"))
    report.runtime_ms = 1e3 * (time.perf_counter() - started)
    return report


def default_cases(seed: int = DEFAULT_SEED, n_samples: int = 100_000,
                  negative_controls: bool = False) -> list:
    """Desk-scale configurations; every identity once, factorization at n = 2, 3,
    and the chain with mixed outer Hurst values as an extra case."""
    specs = [
        dict(tag="CC_PRODUCT", t=1.0),
        dict(tag="CC_RECIPROCAL", t=2.0),
        dict(tag="J_FACTORIZATION", t=1.5, n=2, H=0.6),
        dict(tag="J_FACTORIZATION", t=1.5, n=3, H=0.6),
        dict(tag="J_BM_CHAIN", t=2.0, n=2, H=0.6),
        dict(tag="J_BM_CHAIN", t=2.0, n=2, H=0.6, outer=(0.3, 0.8)),
        dict(tag="J1_PAIR", t=2.0, n=1, H=0.7),
    ]
    cases = []
    for i, s in enumerate(specs):
        seeds = (RngState(seed, 2 * i + 1), RngState(seed, 2 * i + 2))
        cases.append(IdentityCase(n_samples=n_samples, seeds=seeds,
                                  negative_control=negative_controls, **s))
    return cases


# -- CDF form of the reciprocal identity --------------------------------------------

def reciprocal_cdf(w: float, t: float) -> float:
    """P(1 / Y <= w) with Y the iterated Cauchy law at time 1/t."""
    if w == 0:
        return 0.5
    f = densities.cdf(CauchyOfCauchy(), 1.0 / w, 1.0 / t)
    return 1.5 - f if w > 0 else 0.5 - f


def cdf_identity_check(tag: str = "CC_RECIPROCAL", t: float = 1.0, n_points: int = 50) -> float:
    """Sup over ``n_points`` of |P(1/Y <= w) - P(X <= w)| with X iterated Cauchy at t."""
    if tag != "CC_RECIPROCAL":
        raise DomainError("the CDF variant is implemented for the reciprocal identity")
    if not t > 0:
        raise DomainError("t must be positive")
    # points spread on the arctan scale, zero included
    ws = t * np.tan(np.linspace(-0.49 * math.pi, 0.49 * math.pi, n_points))
    cc = CauchyOfCauchy()
    return max(abs(reciprocal_cdf(float(w), t) - densities.cdf(cc, float(w), t)) for w in ws)


def one_sample_check(model: ProcessModel, t: float, rng: RngState,
                     n_samples: int = 100_000) -> KsReport:
    """Sampler draws against the quadrature CDF of the same law."""
    x = sample_marginal(model, t, rng, n_samples)
    return ks_one_sample(x, densities.cdf_table(model, t))
