import math

import numpy as np
import pytest
from conftest import build_spec, build_zero_spec

from pklap import (
    ExponentProfile,
    GridFunction,
    ProblemSpec,
    energy,
    gradient,
    hessian,
    j_term,
    make_example1,
    mu1,
    mu2,
    residual,
)

# force-term breakpoints of the benchmark pair; finite-difference probes
# must keep clear of them (and of the perturbation jump at 0)
FORCE_KINKS = np.array([-8.0, -6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0, 8.0])


def _away_from_kinks(rng, n, lo=-9.5, hi=9.5, gap=1e-3):
    out = np.empty(n)
    got = 0
    while got < n:
        cand = rng.uniform(lo, hi, size=2 * (n - got))
        dist = np.min(np.abs(cand[:, None] - FORCE_KINKS[None, :]), axis=1)
        cand = cand[dist > gap]
        take = min(cand.size, n - got)
        out[got : got + take] = cand[:take]
        got += take
    return out


def test_exponent_profile_validation():
    with pytest.raises(ValueError):
        ExponentProfile.constant(3, 1.0)
    with pytest.raises(ValueError):
        ExponentProfile(np.array([2.0, 2.0]))
    prof = ExponentProfile.linear(4, 2.0, 1.0)
    assert prof.n_interior == 4
    assert prof.p_minus == 2.0
    assert prof.p_plus == 3.0
    assert prof.values[0] == 2.0 and prof.values[-1] == 3.0


def test_problem_spec_validation():
    force, pert = make_example1("corrected-odd-g", 1.0, 1.0, 3)
    prof = ExponentProfile.constant(3, 2.0)
    with pytest.raises(ValueError):
        ProblemSpec(n_sites=4, exponents=prof, force=force, perturbation=pert, gamma=0.1, lam=1.0)
    with pytest.raises(ValueError):
        ProblemSpec(n_sites=3, exponents=prof, force=force, perturbation=pert, gamma=-0.1, lam=1.0)
    spec = ProblemSpec(n_sites=3, exponents=prof, force=force, perturbation=pert, gamma=0.1, lam=1.0)
    np.testing.assert_array_equal(spec.sites, [1, 2, 3])
    assert spec.p_head.shape == (4,)


def test_mu2_tent_quadratic():
    spec = build_spec(3, gamma=0.3, lam=1.0)
    tent = GridFunction(np.array([0.0, 1.0, 2.0, 1.0, 0.0]))
    # four unit differences at p = 2
    assert mu2(tent, spec) == pytest.approx(2.0, abs=1e-15)


def test_mu2_spike_cubic():
    spec = build_spec(3, gamma=0.3, lam=1.0, p=3.0)
    spike = GridFunction.from_interior([0.0, 1.0, 0.0])
    assert mu2(spike, spec) == pytest.approx(2.0 / 3.0, abs=1e-15)


def test_mu2_variable_exponent():
    # hand-summed: |d|^p(k)/p(k) edge by edge with p = (2, 2.25, 2.5, 2.75, 3)
    spec = build_spec(3, gamma=0.0, lam=0.0)
    spec = ProblemSpec(
        n_sites=3,
        exponents=ExponentProfile.linear(3, 2.0, 1.0),
        force=spec.force,
        perturbation=spec.perturbation,
        gamma=0.0,
        lam=0.0,
    )
    x = GridFunction.from_interior([0.5, -1.0, 2.0])
    d = [0.5, -1.5, 3.0, -2.0]
    p = [2.0, 2.25, 2.5, 2.75]
    expected = sum(abs(t) ** q / q for t, q in zip(d, p))
    assert mu2(x, spec) == pytest.approx(expected, rel=1e-15)


def test_energy_spike_closed_form():
    # T = 5 spike of height 1 at gamma = lam = 1: the quadratic part is 1,
    # the force antiderivative adds 1/4, the perturbation antiderivative
    # adds 1/2 - (sqrt(pi)/2) erf(1)
    spec = build_spec(5, gamma=1.0, lam=1.0)
    spike = GridFunction.from_interior([0.0, 1.0, 0.0, 0.0, 0.0])
    expected = 1.75 - 0.5 * math.sqrt(math.pi) * math.erf(1.0)
    assert energy(spike, spec) == pytest.approx(expected, abs=1e-14)
    assert j_term(spike, spec) == pytest.approx(0.25, abs=1e-15)
    g1 = 0.5 - 0.5 * math.sqrt(math.pi) * math.erf(1.0)
    assert mu1(spike, spec) == pytest.approx(1.0 + g1, abs=1e-14)


def test_energy_splits_linearly_in_weights():
    spec_a = build_spec(4, gamma=0.2, lam=1.5)
    spec_b = build_spec(4, gamma=0.0, lam=0.0)
    x = GridFunction.from_interior([0.4, -0.9, 1.2, 0.3])
    base = mu2(x, spec_b)
    assert energy(x, spec_a) == pytest.approx(
        base + (mu1(x, spec_a) - base) + 1.5 * j_term(x, spec_a), rel=1e-14
    )


def test_gradient_matches_finite_differences(rng):
    for _ in range(40):
        T = int(rng.integers(2, 9))
        p = float(rng.uniform(2.0, 3.0))
        spec = build_spec(T, gamma=float(rng.uniform(0.01, 0.3)), lam=float(rng.uniform(0.1, 3.0)), p=p)
        xin = _away_from_kinks(rng, T)
        x = GridFunction.from_interior(xin)
        g = gradient(x, spec)
        h = 1e-6
        for i in range(T):
            e = np.zeros(T)
            e[i] = h
            fd = (
                energy(GridFunction.from_interior(xin + e), spec)
                - energy(GridFunction.from_interior(xin - e), spec)
            ) / (2 * h)
            scale = max(1.0, abs(g[i]))
            assert abs(g[i] - fd) / scale < 1e-6


def test_residual_equals_gradient():
    rng = np.random.default_rng(7)
    for _ in range(50):
        T = int(rng.integers(1, 12))
        spec = build_spec(T, gamma=0.1, lam=0.7, p=float(rng.uniform(2.0, 3.0)))
        x = GridFunction.from_interior(rng.standard_normal(T) * 3.0)
        np.testing.assert_allclose(residual(x, spec), gradient(x, spec), rtol=0, atol=1e-12)


def test_hessian_reduces_to_laplacian():
    spec = build_zero_spec(4)
    x = GridFunction.from_interior([0.3, -0.2, 0.9, 0.1])
    H = hessian(x, spec)
    expected = 2.0 * np.eye(4) - np.eye(4, k=1) - np.eye(4, k=-1)
    np.testing.assert_allclose(H, expected, atol=1e-14)


def test_hessian_matches_gradient_differences(rng):
    for _ in range(10):
        T = int(rng.integers(2, 7))
        spec = build_spec(T, gamma=0.15, lam=0.8, p=float(rng.uniform(2.1, 3.0)))
        xin = _away_from_kinks(rng, T, lo=-5.0, hi=5.0, gap=5e-2)
        H = hessian(GridFunction.from_interior(xin), spec)
        np.testing.assert_allclose(H, H.T, atol=1e-12)
        h = 1e-6
        for i in range(T):
            e = np.zeros(T)
            e[i] = h
            fd = (
                gradient(GridFunction.from_interior(xin + e), spec)
                - gradient(GridFunction.from_interior(xin - e), spec)
            ) / (2 * h)
            np.testing.assert_allclose(H[:, i], fd, rtol=2e-5, atol=2e-5)


def test_low_exponents_rejected_for_derivatives():
    spec = build_spec(3, gamma=0.1, lam=1.0)
    spec = ProblemSpec(
        n_sites=3,
        exponents=ExponentProfile.constant(3, 1.5),
        force=spec.force,
        perturbation=spec.perturbation,
        gamma=0.1,
        lam=1.0,
    )
    x = GridFunction.from_interior([0.5, 0.7, -0.3])
    assert math.isfinite(energy(x, spec))
    for fn in (gradient, residual, hessian):
        with pytest.raises(ValueError):
            fn(x, spec)


def test_size_mismatch_rejected():
    spec = build_spec(3, gamma=0.1, lam=1.0)
    with pytest.raises(ValueError):
        energy(GridFunction.from_interior([1.0, 2.0]), spec)
