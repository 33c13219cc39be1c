"""Acceptance checks, one test per criterion, each at its stated tolerance."""

import json
import math
import time

import numpy as np
import pytest

from iterlab import cli
from iterlab.analytics import (MomentSpec, ibm_moment, mellin_k0_numeric, mellin_weighted_chain,
                               moment_iterated, moment_quadrature, variance_exponent)
from iterlab.densities import (density, density_cc_expweights, density_cc_integral,
                               has_density)
from iterlab.identities import (DEFAULT_SEED, cdf_identity_check, default_cases,
                                ks_two_sample, one_sample_check, run_identity)
from iterlab.models import (BmOfCauchy, Cauchy, CauchyOfCauchy, CauchyOfFBm, FBm, IteratedFBm,
                            ScaledIterated, WeightedJ)
from iterlab.numerics import QuadratureConfig, integrate_halfline
from iterlab.pdecheck import equation_registry, strong_residual, weak_delta_residual
from iterlab.sampling import (RngState, fbm_covariance, fbm_path_cholesky, fbm_path_circulant,
                              sample_marginal)

TOL_BY_TAG = {**{t: 1e-6 for t in "abcdejklno"}, **{t: 1e-5 for t in "fghim"}, "o": 5e-4}


def test_criterion_01_pde_suite(record_criterion):
    start = time.perf_counter()
    reports = [strong_residual(eq) for eq in equation_registry()]
    elapsed = time.perf_counter() - start
    bad = [r.tag for r in reports
           if r.verdict != "pass" or r.max_rel_residual > TOL_BY_TAG[r.tag]]
    worst = max(reports, key=lambda r: r.max_rel_residual / TOL_BY_TAG[r.tag])
    ok = len(reports) == 15 and not bad and elapsed <= 180
    assert record_criterion(1, ok, f"15 entries, failing={bad}, tightest ({worst.tag}) "
                                   f"{worst.max_rel_residual:.1e}, {elapsed:.1f}s")


def test_criterion_02_weak_forms(record_criterion):
    defects, ratios = [], []
    for tag in "cden":
        good = weak_delta_residual(tag, t=1.0)
        half = weak_delta_residual(tag, t=1.0, delta_scale=0.5)
        defects.append(good.relative_defect)
        ratios.append(half.relative_defect / max(good.relative_defect, 1e-5))
    ok = max(defects) <= 1e-5 and min(ratios) >= 10
    assert record_criterion(2, ok, f"max defect {max(defects):.1e}, "
                                   f"min sensitivity ratio {min(ratios):.1e}")


def test_criterion_03_closed_vs_integral(record_criterion):
    rng = np.random.default_rng(2024)
    cc_err = 0.0
    for _ in range(25):
        t = float(rng.uniform(0.2, 4.0))
        x = float(rng.choice([-1, 1]) * t * np.exp(rng.uniform(-3, 3)))
        ref = density(CauchyOfCauchy(), x, t)
        for alt in (density_cc_integral(x, t), density_cc_expweights(x, t)):
            cc_err = max(cc_err, abs(alt - ref) / ref)
    # K0 law against direct quadrature of its subordination integral
    k0_err = 0.0
    cfg = QuadratureConfig(rel_tol=1e-13, abs_tol=1e-300)
    for _ in range(25):
        t, H = float(rng.uniform(0.3, 3.0)), float(rng.uniform(0.2, 0.9))
        x = float(rng.uniform(0.01, 3.0))
        th = t ** H

        def f(s):
            return (2 * np.exp(-x * x / (2 * s * s)) / (2 * np.pi * s)
                    * np.exp(-s * s / (2 * th * th)) / th)

        direct = integrate_halfline(f, cfg, scale=th).value
        k0_err = max(k0_err, abs(density(WeightedJ(1, H), x, t) - direct) / direct)
    ok = cc_err <= 1e-6 and k0_err <= 1e-9
    assert record_criterion(3, ok, f"CC forms {cc_err:.1e} (<=1e-6), K0 {k0_err:.1e} (<=1e-9)")


@pytest.mark.slow
def test_criterion_04_moments(record_criterion):
    pairs = [(0.5, 0.5), (0.7, 0.3), (0.4, 0.8)]
    quad_err, worst_z = 0.0, 0.0
    for i, (h1, h2) in enumerate(pairs):
        t = 1.3
        model = IteratedFBm(h1, h2)
        x = sample_marginal(model, t, RngState(DEFAULT_SEED, 500 + i), 10_000_000)
        for k in range(1, 5):
            closed = moment_iterated(MomentSpec(k, (h1, h2)), t)
            quad_err = max(quad_err, abs(moment_quadrature(model, 2 * k, t) - closed) / closed)
            p = x ** (2 * k)
            se = float(np.std(p, ddof=1)) / math.sqrt(p.size)
            worst_z = max(worst_z, abs(float(np.mean(p)) - closed) / se)
    ibm_err = max(abs(ibm_moment(k, 2.0) - moment_iterated(MomentSpec(k, (0.5, 0.5)), 2.0))
                  / ibm_moment(k, 2.0) for k in range(1, 11))
    ok = quad_err <= 1e-6 and worst_z <= 4 and ibm_err <= 1e-10
    assert record_criterion(4, ok, f"quadrature {quad_err:.1e}, MC worst {worst_z:.2f} SE, "
                                   f"IBM k=1..10 {ibm_err:.1e}")


def test_criterion_05_mellin(record_criterion):
    errs = {}
    for a in (0.5, 1.0, 2.0, 3.0, 4.5):
        errs[a] = abs(mellin_k0_numeric(a, 0.6, 1.7) - mellin_weighted_chain(a, 2, 0.6, 1.7))
    unit = abs(mellin_k0_numeric(1.0, 0.6, 1.7) - 1.0)
    ok = max(errs.values()) <= 1e-8 and unit <= 1e-10
    assert record_criterion(5, ok, f"max abs error {max(errs.values()):.1e}, "
                                   f"alpha=1 mass error {unit:.1e}")


def test_criterion_06_identities(record_criterion):
    reports = [run_identity(c) for c in default_cases()]
    controls = [run_identity(c) for c in default_cases(negative_controls=True)]
    cdf_err = max(cdf_identity_check("CC_RECIPROCAL", t) for t in (0.5, 1.0, 2.0))
    passed = sum(r.verdict == "pass" for r in reports)
    rejected = sum(r.verdict == "fail" for r in controls)
    ok = passed == len(reports) and rejected == len(controls) and cdf_err <= 1e-8
    min_p = min(r.ks.approx_p_value for r in reports)
    assert record_criterion(6, ok, f"{passed}/{len(reports)} identities (min p {min_p:.3f}), "
                                   f"{rejected}/{len(controls)} controls rejected, "
                                   f"CDF form {cdf_err:.1e}")


DENSITY_MODELS = [FBm(0.3), IteratedFBm(0.6, 0.4), WeightedJ(1, 0.7), WeightedJ(2, 0.6),
                  ScaledIterated(0.3, 0.6), Cauchy(), CauchyOfFBm(0.4), BmOfCauchy(),
                  CauchyOfCauchy()]


def test_criterion_07_sampler_density_coherence(record_criterion):
    assert all(has_density(m) for m in DENSITY_MODELS)
    p_values = {}
    # nine tests at 1%: roughly one stream block in eleven rejects some law by chance
    for i, m in enumerate(DENSITY_MODELS):
        r = one_sample_check(m, 1.3, RngState(DEFAULT_SEED, 200 + i), 100_000)
        p_values[m.tag + str(m.n if m.tag == "WeightedJ" else "")] = r.approx_p_value
    failing = [k for k, p in p_values.items() if p < 0.01]
    assert record_criterion(7, not failing, f"{len(p_values)} laws, min p "
                                            f"{min(p_values.values()):.3f}, failing={failing}")


@pytest.mark.slow
def test_criterion_08_path_generators(record_criterion):
    n_paths, n_steps = 100_000, 64
    ks_p, worst_z = [], 0.0
    pairs = [(7, 7), (15, 31), (3, 63), (31, 32), (0, 47)]
    for i, H in enumerate((0.3, 0.5, 0.7)):
        dt = 1.0 / n_steps
        circ = fbm_path_circulant(H, n_steps, dt, RngState(DEFAULT_SEED, 300 + i), n_paths)
        chol = fbm_path_cholesky(H, circ.times, RngState(DEFAULT_SEED, 400 + i), n_paths)
        ks_p.append(ks_two_sample(circ.values[:, -1], chol.values[:, -1]).approx_p_value)
        for a, b in pairs:
            s, t = circ.times[a], circ.times[b]
            c = fbm_covariance(H, s, t)
            prod = circ.values[:, a] * circ.values[:, b]
            se = float(np.std(prod, ddof=1)) / math.sqrt(n_paths)
            worst_z = max(worst_z, abs(float(np.mean(prod)) - c) / se)
    start = time.perf_counter()
    big = fbm_path_circulant(0.7, 1 << 20, 1.0 / (1 << 20), RngState(DEFAULT_SEED, 999))
    elapsed = time.perf_counter() - start
    ok = min(ks_p) >= 0.01 and worst_z <= 4 and elapsed <= 5 and big.values.shape[1] == 1 << 20
    assert record_criterion(8, ok, f"KS min p {min(ks_p):.3f}, covariance worst {worst_z:.2f} "
                                   f"SE, 2^20 steps in {elapsed:.2f}s")


def test_criterion_09_variance_growth(record_criterion):
    # Brownian reference exponent 1/2; pairs straddle H1 H2 = 1/4
    pairs = [(0.4, 0.5), (0.5, 0.45), (0.5, 0.55), (0.6, 0.5), (0.9, 0.3), (0.3, 0.7)]
    rows = []
    for h1, h2 in pairs:
        m = IteratedFBm(h1, h2)
        ratio = moment_quadrature(m, 2, 100.0) / moment_quadrature(m, 2, 10.0)
        exponent = math.log10(ratio)
        rows.append((h1 * h2, exponent))
        assert exponent == pytest.approx(variance_exponent(h1, h2), abs=1e-8)
    ok = all((e > 0.5) == (p > 0.25) for p, e in rows)
    detail = ", ".join(f"H1H2={p:.3f}:{e:.3f}" for p, e in rows)
    assert record_criterion(9, ok, f"log10 Var(100)/Var(10) vs 0.5: {detail}")


def test_criterion_10_determinism(record_criterion, tmp_path, monkeypatch, capsys):
    jobs = {
        "pde": ["verify-pde", "--tags", "a,h,m"],
        "identities": ["verify-identities", "--all", "--samples", "100000"],
        "moments": ["moments", "--chain", "0.5,0.5", "--k", "1,2"],
    }
    same = {}
    for name, argv in jobs.items():
        out = tmp_path / name
        monkeypatch.setenv("ITERLAB_THREADS", "1")
        cli.main(argv + (["--out", str(out)] if name != "moments" else []))
        if name == "moments":
            monkeypatch.setenv("ITERLAB_THREADS", "1")
            cli.main(argv + ["--out", str(tmp_path / "m1.csv")])
            monkeypatch.setenv("ITERLAB_THREADS", "4")
            cli.main(argv + ["--out", str(tmp_path / "m4.csv")])
            same[name] = (tmp_path / "m1.csv").read_bytes() == (tmp_path / "m4.csv").read_bytes()
            continue
        monkeypatch.setenv("ITERLAB_THREADS", "4")
        same[name] = cli.main(["rerun", str(out / "manifest.json")]) == 0
        assert json.loads((out / "manifest.json").read_text())["result_digest"]
    capsys.readouterr()
    ok = all(same.values())
    assert record_criterion(10, ok, "bit-exact across ITERLAB_THREADS 1/4: " +
                            ", ".join(f"{k}={'yes' if v else 'no'}" for k, v in same.items()))
