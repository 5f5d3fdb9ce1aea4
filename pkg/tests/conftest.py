import numpy as np
import pytest

from pklap import ExponentProfile, ProblemSpec, make_example1, make_zero


def build_spec(n_sites, gamma, lam, variant="corrected-odd-g", p=2.0, alpha=1.0, beta=1.0):
    force, pert = make_example1(variant, alpha, beta, n_sites)
    return ProblemSpec(
        n_sites=n_sites,
        exponents=ExponentProfile.constant(n_sites, p),
        force=force,
        perturbation=pert,
        gamma=gamma,
        lam=lam,
    )


def build_zero_spec(n_sites, p=2.0):
    force, pert = make_zero(n_sites)
    return ProblemSpec(
        n_sites=n_sites,
        exponents=ExponentProfile.constant(n_sites, p),
        force=force,
        perturbation=pert,
        gamma=0.0,
        lam=0.0,
    )


@pytest.fixture(scope="session")
def bench5():
    """T=5 reference instance used across the constants and solver tests."""
    return build_spec(5, gamma=0.05, lam=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(np.random.SeedSequence(20240817))
