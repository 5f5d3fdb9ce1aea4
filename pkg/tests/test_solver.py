import numpy as np
import pytest
from conftest import build_spec, build_zero_spec

from pklap import (
    ExponentProfile,
    GridFunction,
    Nonlinearity,
    NonConvergenceError,
    ProblemSpec,
    SolverConfig,
    brute_force_oracle,
    classify,
    deflated_multistart,
    make_zero,
    minimize_coercive,
    resolve_start_radius,
)


def _linear_force_spec(n_sites, slope, lam=1.0):
    """Force f(t) = slope * t, so the second derivative is L + lam*slope*I."""
    _, zero_g = make_zero(n_sites)
    force = Nonlinearity(
        value=lambda k, t: slope * np.asarray(t, dtype=float),
        antiderivative=lambda k, t: 0.5 * slope * np.asarray(t, dtype=float) ** 2,
        n_sites=n_sites,
        derivative=lambda k, t: np.full_like(np.asarray(t, dtype=float), slope),
    )
    return ProblemSpec(
        n_sites=n_sites,
        exponents=ExponentProfile.constant(n_sites, 2.0),
        force=force,
        perturbation=zero_g,
        gamma=0.0,
        lam=lam,
    )


def _cubic_spec():
    """Single site, f(t) = t^3 - 3t: the stationary equation is x^3 - x = 0."""
    _, zero_g = make_zero(1)
    force = Nonlinearity(
        value=lambda k, t: np.asarray(t, dtype=float) ** 3 - 3.0 * np.asarray(t, dtype=float),
        antiderivative=lambda k, t: 0.25 * np.asarray(t, dtype=float) ** 4
        - 1.5 * np.asarray(t, dtype=float) ** 2,
        n_sites=1,
        derivative=lambda k, t: 3.0 * np.asarray(t, dtype=float) ** 2 - 3.0,
    )
    return ProblemSpec(
        n_sites=1,
        exponents=ExponentProfile.constant(1, 2.0),
        force=force,
        perturbation=zero_g,
        gamma=0.0,
        lam=1.0,
    )


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(n_starts=0)
    with pytest.raises(ValueError):
        SolverConfig(certify_tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(start_radius=-1.0)
    with pytest.raises(ValueError):
        SolverConfig(deflation_power=0.5)
    with pytest.raises(ValueError):
        SolverConfig(max_newton_iters=0)


def test_start_radius_resolution(bench5):
    assert resolve_start_radius(bench5, SolverConfig(start_radius=3.0)) == 3.0
    # the force term declares its outer landmark at 6, twice that is the default
    assert resolve_start_radius(bench5, SolverConfig()) == 12.0
    assert resolve_start_radius(build_zero_spec(3), SolverConfig()) == 10.0


def test_zero_problem_has_only_the_origin():
    spec = build_zero_spec(4)
    result = deflated_multistart(spec, SolverConfig(n_starts=32, seed=1))
    assert len(result) == 1
    only = result.points[0]
    assert only.is_trivial
    assert only.residual_inf_norm <= 1e-12
    assert abs(only.energy_value) <= 1e-20
    assert only.morse == "minimum"
    assert float(np.max(np.abs(only.point.values))) <= 1e-12


def test_cubic_single_site_roots():
    result = deflated_multistart(_cubic_spec(), SolverConfig(n_starts=48, start_radius=3.0, seed=2))
    roots = sorted(float(cp.point.interior[0]) for cp in result)
    assert roots == pytest.approx([-1.0, 0.0, 1.0], abs=1e-9)
    by_root = {round(float(cp.point.interior[0])): cp for cp in result}
    # energy x^4/4 - x^2 has minima at the two nonzero roots
    assert by_root[-1].morse == "minimum" and by_root[1].morse == "minimum"
    assert by_root[0].morse == "maximum"
    assert by_root[0].is_trivial and not by_root[1].is_trivial
    # mu2 = 1 for the unit spike, antiderivative value is 1/4 - 3/2
    assert by_root[1].energy_value == pytest.approx(-0.25, abs=1e-12)


def test_multistart_certifies_and_separates(bench5):
    cfg = SolverConfig(n_starts=64, start_radius=0.08, deflation_power=1.0, seed=0)
    result = deflated_multistart(bench5, cfg)
    assert result.n_starts == 65  # one extra probe at the origin
    assert 0 <= result.n_failed_starts <= result.n_starts
    assert len(result) >= 3
    pts = [cp.point.interior for cp in result]
    for cp in result:
        assert cp.residual_inf_norm <= cfg.certify_tol
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            assert float(np.max(np.abs(pts[i] - pts[j]))) > 1e-4
    # energy-sorted output
    energies = [cp.energy_value for cp in result]
    assert energies == sorted(energies)
    assert any(cp.is_trivial for cp in result)
    assert sum(not cp.is_trivial for cp in result) >= 2


def test_multistart_is_deterministic(bench5):
    cfg = SolverConfig(n_starts=32, start_radius=0.08, deflation_power=1.0, seed=11)
    a = deflated_multistart(bench5, cfg)
    b = deflated_multistart(bench5, cfg)
    assert len(a) == len(b)
    for ca, cb in zip(a, b):
        np.testing.assert_array_equal(ca.point.values, cb.point.values)
        assert ca.energy_value == cb.energy_value


def test_multistart_agrees_with_oracle_on_one_cell():
    spec = build_spec(2, gamma=0.2, lam=1.8)
    found = deflated_multistart(
        spec, SolverConfig(n_starts=256, start_radius=0.2, deflation_power=1.0, seed=0)
    )
    expected = brute_force_oracle(spec, box_radius=10.0, grid_n=512)
    assert len(found) == len(expected)
    for cp in found:
        dist = min(
            float(np.max(np.abs(cp.point.interior - oc.point.interior))) for oc in expected
        )
        assert dist < 1e-4


def test_oracle_input_validation():
    spec = build_spec(2, gamma=0.1, lam=1.0)
    with pytest.raises(ValueError):
        brute_force_oracle(spec, box_radius=10.0, grid_n=32)
    with pytest.raises(ValueError):
        brute_force_oracle(build_spec(4, gamma=0.1, lam=1.0), box_radius=10.0, grid_n=128)
    with pytest.raises(ValueError):
        brute_force_oracle(spec, box_radius=0.0, grid_n=128)


def test_classify_sign_patterns():
    # T = 1 second derivative is the scalar 2 + lam * f'(x); slopes chosen to
    # land on each side of zero
    x = GridFunction.from_interior([0.0])
    assert classify(x, _linear_force_spec(1, 0.0)) == "minimum"
    assert classify(x, _linear_force_spec(1, -5.0)) == "maximum"
    assert classify(x, _linear_force_spec(1, -2.0)) == "degenerate"
    # T = 2 difference operator has eigenvalues 1 and 3; shifting by -2.5
    # splits their signs
    x2 = GridFunction.from_interior([0.0, 0.0])
    assert classify(x2, _linear_force_spec(2, -2.5)) == "saddle"


def test_minimize_coercive_reference(bench5):
    cp = minimize_coercive(bench5, SolverConfig(seed=0))
    assert cp.residual_inf_norm <= 1e-10
    assert cp.morse == "minimum"
    assert not cp.is_trivial
    # the found well is below the trivial level
    assert cp.energy_value < 0.0


def test_minimize_coercive_reports_nonconvergence(bench5):
    cfg = SolverConfig(
        max_descent_iters=1, max_newton_iters=1, certify_tol=1e-15, n_starts=4, seed=0
    )
    with pytest.raises(NonConvergenceError) as exc:
        minimize_coercive(bench5, cfg)
    assert exc.value.best_interior is not None
    assert exc.value.best_residual > 1e-15
