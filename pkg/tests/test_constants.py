import math

import numpy as np
import pytest
from conftest import build_spec, build_zero_spec

from pklap import (
    DegeneratePerturbationError,
    HypothesisViolationError,
    Nonlinearity,
    NonlinearityConfigError,
    ProblemSpec,
    StructuralConstants,
    check_constant_implications,
    compute_constants,
)

SQRT_PI_HALF = 0.5 * math.sqrt(math.pi)


def _bisect(h, lo, hi):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_reference_instance_values(bench5):
    c = compute_constants(bench5)
    # p = 2 collapses the embedding exponents, so the radius cap is exactly
    # 1/p = 0.5 and both window radii clamp to it
    assert c.r_star == 0.5
    assert c.r1 == 0.5 and c.r2 == 0.5
    assert c.r == 0.25 and c.r_fraction == 0.5
    assert c.c == pytest.approx(2.0 / 15.0, rel=1e-14)
    assert c.c1 == pytest.approx(1.0 / 30.0, rel=1e-14)
    assert c.m == 2.0
    # deepest dip of the perturbation antiderivative: closed form at sqrt(ln 2)
    tmin = math.sqrt(math.log(2.0))
    l_ref = 0.5 * tmin - SQRT_PI_HALF * math.erf(tmin)
    assert l_ref == pytest.approx(-0.2581131216294507, abs=1e-15)
    assert c.l == pytest.approx(l_ref, abs=1e-12)
    # tail landmark: the antiderivative crosses (d/2)|t| at t_star
    t_ref = _bisect(lambda t: 0.25 * t - SQRT_PI_HALF * math.erf(t), 3.0, 4.0)
    assert t_ref == pytest.approx(3.5449058046749555, abs=1e-12)
    assert c.t_star == pytest.approx(t_ref, abs=1e-9)
    assert c.d == 0.5
    assert c.gamma_max == pytest.approx(0.25 / (6.0 * (-l_ref)), rel=1e-12)
    assert c.gamma_max == pytest.approx(0.16142792897791408, abs=1e-12)
    assert c.M_coerc == pytest.approx(-4.0 * l_ref * 5.0 * math.sqrt(5.0) / 0.5, rel=1e-9)
    assert c.M_coerc == pytest.approx(23.086339433924927, abs=1e-6)


def test_two_site_instance():
    spec = build_spec(2, gamma=0.1, lam=1.0)
    c = compute_constants(spec)
    assert c.r_star == 0.5 and c.r2 == 0.5
    # same dip, shallower well: threshold doubles relative to T = 5
    assert c.gamma_max == pytest.approx(0.32285585795582816, abs=1e-12)


def test_cubic_exponent_instance():
    spec = build_spec(5, gamma=0.02, lam=1.0, p=3.0)
    c = compute_constants(spec)
    assert c.r_star == pytest.approx(1.0 / (3.0 * math.sqrt(6.0)), rel=1e-14)
    assert 0 < c.r < c.r2 <= c.r1 <= c.r_star
    assert c.gamma_max > 0


def test_r_fraction_moves_threshold(bench5):
    base = compute_constants(bench5)
    narrow = compute_constants(bench5, r_fraction=0.3)
    assert narrow.r == pytest.approx(0.3 * narrow.r2, rel=1e-14)
    # gamma_max is proportional to r2 - r
    assert narrow.gamma_max == pytest.approx(base.gamma_max * 0.7 / 0.5, rel=1e-12)
    with pytest.raises(ValueError):
        compute_constants(bench5, r_fraction=1.0)


def test_perturbation_weight_scaling(bench5):
    base = compute_constants(bench5)
    scaled = compute_constants(build_spec(5, gamma=0.05, lam=1.0, beta=10.0))
    # the dip deepens tenfold, the admissible weight window shrinks tenfold,
    # while the geometry-only radii and landmarks stay put
    assert scaled.l == pytest.approx(10.0 * base.l, rel=1e-10)
    assert scaled.gamma_max == pytest.approx(base.gamma_max / 10.0, rel=1e-10)
    assert scaled.r2 == base.r2
    assert scaled.M1 == base.M1
    assert scaled.t_star == pytest.approx(base.t_star, abs=1e-9)
    assert scaled.M_coerc == pytest.approx(base.M_coerc, rel=1e-9)


def test_force_weight_is_irrelevant(bench5):
    base = compute_constants(bench5)
    scaled = compute_constants(build_spec(5, gamma=0.05, lam=1.0, alpha=3.0))
    assert scaled.gamma_max == base.gamma_max
    assert scaled.r2 == base.r2


def test_paper_variant_rejected():
    spec = build_spec(4, gamma=0.05, lam=1.0, variant="paper-g")
    with pytest.raises(HypothesisViolationError) as exc:
        compute_constants(spec)
    assert exc.value.report is not None
    assert exc.value.report.checks["A.4"].verdict == "violated"


def test_missing_landmarks_rejected():
    with pytest.raises(NonlinearityConfigError):
        compute_constants(build_zero_spec(3))


def test_flat_window_perturbation_rejected(bench5):
    # nonpositive but never negative: passes the sign window trivially and
    # must then be refused for lack of a genuine dip
    def flat_val(k, t):
        t = np.asarray(t, dtype=float)
        return np.sign(t) * np.maximum(np.abs(t) - 1.0, 0.0)

    def flat_anti(k, t):
        t = np.asarray(t, dtype=float)
        return 0.5 * np.maximum(np.abs(t) - 1.0, 0.0) ** 2

    flat = Nonlinearity(
        value=flat_val,
        antiderivative=flat_anti,
        n_sites=5,
        declared=StructuralConstants(M1=1.0),
        kinks=(-1.0, 1.0),
    )
    spec = ProblemSpec(
        n_sites=5,
        exponents=bench5.exponents,
        force=bench5.force,
        perturbation=flat,
        gamma=0.05,
        lam=1.0,
    )
    with pytest.raises(DegeneratePerturbationError):
        compute_constants(spec)


def test_implications_hold_below_threshold(bench5):
    c = compute_constants(bench5)
    report = check_constant_implications(c, bench5, n_samples=2000, seed=3)
    assert report.ok
    assert report.n_counterexamples == 0
    assert set(report.results) == {"sublevel-sup", "parameter", "far-field"}
    assert all(r.n_tested > 0 for r in report.results.values())


def test_parameter_implication_breaks_above_threshold(bench5):
    from dataclasses import replace

    c = compute_constants(bench5)
    hot = replace(bench5, gamma=2.0 * c.gamma_max)
    report = check_constant_implications(c, hot, n_samples=2000, seed=3)
    assert not report.results["parameter"].ok
    assert report.n_counterexamples > 0
    witness = report.results["parameter"].failures[0]
    assert witness["mu2"] > c.r2
