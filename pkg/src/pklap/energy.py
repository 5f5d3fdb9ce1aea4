"""Action functional of the anisotropic discrete two-parameter problem.

For a grid function x on sites 0..T+1 with zero ends, an exponent
profile p(0..T+1) with every p(k) > 1, and parameter weights gamma and
lam, the action is

    E(x) = sum_{k=1}^{T+1} |dx(k-1)|^{p(k-1)} / p(k-1)
           + gamma * sum_{k=1}^{T} G(k, x(k))
           + lam   * sum_{k=1}^{T} F(k, x(k)),

where dx(k-1) = x(k) - x(k-1) and F, G are the antiderivatives of the
force and perturbation terms.  ``mu2`` is the Dirichlet part alone,
``mu1`` adds the perturbation sum, ``j_term`` is the force sum, so
E = mu1 + lam * j_term.

A critical point in the weak sense (gradient zero against every basis
spike) solves the strong difference equation exactly: summation by
parts turns the Dirichlet pairing into the residual

    residual(x)[k] = phi_{k-1}(dx(k-1)) - phi_k(dx(k))
                     + lam * f(k, x(k)) + gamma * g(k, x(k)),

with phi_j(t) = |t|^{p(j)-2} t evaluated as sign(t) |t|^{p(j)-1} so that
t = 0 maps to 0 for every admissible exponent.  ``gradient`` assembles
the weak form literally (transposed incidence matrix applied to the
phi vector); ``residual`` implements the strong form; the two agree to
rounding and are tested against each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import GridFunction
from .nonlinearity import Nonlinearity


@dataclass(frozen=True)
class ExponentProfile:
    """Anisotropy exponents p(0), ..., p(T+1), all greater than 1."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 3:
            raise ValueError("exponent profile must have length T+2 with T >= 1")
        if not np.all(np.isfinite(v)) or np.any(v <= 1.0):
            raise ValueError("every exponent must be finite and greater than 1")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n_interior(self) -> int:
        return self.values.size - 2

    @property
    def p_minus(self) -> float:
        return float(np.min(self.values))

    @property
    def p_plus(self) -> float:
        return float(np.max(self.values))

    @classmethod
    def constant(cls, n_interior: int, p: float) -> "ExponentProfile":
        return cls(np.full(n_interior + 2, float(p)))

    @classmethod
    def linear(cls, n_interior: int, a: float, b: float) -> "ExponentProfile":
        """p(k) = a + b*k/(T+1) across k = 0..T+1."""
        k = np.arange(n_interior + 2, dtype=float)
        return cls(a + b * k / (n_interior + 1))


@dataclass(frozen=True)
class ProblemSpec:
    """One fully specified problem instance.

    Couples the grid size, the exponent profile, the force and
    perturbation nonlinearities, and the two parameter weights.
    """

    n_sites: int
    exponents: ExponentProfile
    force: Nonlinearity
    perturbation: Nonlinearity
    gamma: float
    lam: float

    def __post_init__(self) -> None:
        T = self.n_sites
        if T < 1:
            raise ValueError("n_sites must be at least 1")
        if self.exponents.n_interior != T:
            raise ValueError("exponent profile length must be T+2")
        if self.force.n_sites != T or self.perturbation.n_sites != T:
            raise ValueError("nonlinearity site count must equal n_sites")
        for name in ("gamma", "lam"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and nonnegative")

    @property
    def sites(self) -> np.ndarray:
        """1-based site indices 1..T."""
        return np.arange(1, self.n_sites + 1)

    @property
    def p_head(self) -> np.ndarray:
        """Exponents p(0..T) attached to the T+1 forward differences."""
        return self.exponents.values[:-1]


@lru_cache(maxsize=64)
def _incidence(n_interior: int) -> np.ndarray:
    """(T+1) x T matrix mapping interior values to forward differences."""
    D = np.eye(n_interior + 1, n_interior) - np.eye(n_interior + 1, n_interior, k=-1)
    D.flags.writeable = False
    return D


def _phi(d: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Degenerate power map |t|^(p-2) t, as sign(t) |t|^(p-1) with 0 -> 0."""
    return np.sign(d) * np.abs(d) ** (p - 1.0)


def _check_solver_grade(spec: ProblemSpec, what: str) -> None:
    if spec.exponents.p_minus < 2.0:
        raise ValueError(f"{what} requires every exponent to be at least 2")


def _mu2_full(spec: ProblemSpec, full: np.ndarray) -> float:
    d = np.diff(full)
    p = spec.p_head
    return float(np.sum(np.abs(d) ** p / p))


def _force_sum_full(spec: ProblemSpec, full: np.ndarray) -> float:
    return float(np.sum(spec.force.antiderivative(spec.sites, full[1:-1])))


def _perturbation_sum_full(spec: ProblemSpec, full: np.ndarray) -> float:
    return float(np.sum(spec.perturbation.antiderivative(spec.sites, full[1:-1])))


def _energy_full(spec: ProblemSpec, full: np.ndarray) -> float:
    mu1 = _mu2_full(spec, full) + spec.gamma * _perturbation_sum_full(spec, full)
    return mu1 + spec.lam * _force_sum_full(spec, full)


def _residual_full(spec: ProblemSpec, full: np.ndarray) -> np.ndarray:
    phi = _phi(np.diff(full), spec.p_head)
    xin = full[1:-1]
    K = spec.sites
    return (
        phi[:-1]
        - phi[1:]
        + spec.lam * np.asarray(spec.force.value(K, xin), dtype=float)
        + spec.gamma * np.asarray(spec.perturbation.value(K, xin), dtype=float)
    )


def _gradient_full(spec: ProblemSpec, full: np.ndarray) -> np.ndarray:
    phi = _phi(np.diff(full), spec.p_head)
    xin = full[1:-1]
    K = spec.sites
    D = _incidence(spec.n_sites)
    return (
        D.T @ phi
        + spec.lam * np.asarray(spec.force.value(K, xin), dtype=float)
        + spec.gamma * np.asarray(spec.perturbation.value(K, xin), dtype=float)
    )


def _site_slopes(nl: Nonlinearity, sites: np.ndarray, t: np.ndarray) -> np.ndarray:
    """d/dt of nl.value at each (site, t), kink-aware.

    Uses the closed-form derivative hook away from declared kinks and a
    finite difference otherwise: central in smooth territory, one-sided
    (stepping away from the kink) within a step of a kink.
    """
    t = np.asarray(t, dtype=float)
    h = 1e-7 * np.maximum(1.0, np.abs(t))
    out = np.empty_like(t)

    if nl.kinks:
        kinks = np.asarray(nl.kinks, dtype=float)
        idx = np.argmin(np.abs(t[:, None] - kinks[None, :]), axis=1)
        nearest = kinks[idx]
        near = np.abs(t - nearest) <= h
    else:
        nearest = np.zeros_like(t)
        near = np.zeros(t.shape, dtype=bool)

    smooth = ~near
    if np.any(smooth):
        ks, ts = sites[smooth], t[smooth]
        if nl.derivative is not None:
            out[smooth] = np.asarray(nl.derivative(ks, ts), dtype=float)
        else:
            hs = h[smooth]
            out[smooth] = (
                np.asarray(nl.value(ks, ts + hs), dtype=float)
                - np.asarray(nl.value(ks, ts - hs), dtype=float)
            ) / (2.0 * hs)
    if np.any(near):
        ks, ts, hs = sites[near], t[near], h[near]
        away = np.where(ts >= nearest[near], 1.0, -1.0)
        out[near] = (
            np.asarray(nl.value(ks, ts + away * hs), dtype=float)
            - np.asarray(nl.value(ks, ts), dtype=float)
        ) / (away * hs)
    return out


def _hessian_full(spec: ProblemSpec, full: np.ndarray) -> np.ndarray:
    d = np.diff(full)
    p = spec.p_head
    # |0|^0 evaluates to 1, which is the correct p = 2 limit
    w = (p - 1.0) * np.abs(d) ** (p - 2.0)
    D = _incidence(spec.n_sites)
    H = D.T @ (w[:, None] * D)
    xin = full[1:-1]
    K = spec.sites
    diag = spec.lam * _site_slopes(spec.force, K, xin) + spec.gamma * _site_slopes(
        spec.perturbation, K, xin
    )
    H[np.diag_indices_from(H)] += diag
    return 0.5 * (H + H.T)


def _require_match(x: GridFunction, spec: ProblemSpec) -> np.ndarray:
    if x.n_interior != spec.n_sites:
        raise ValueError("grid function size does not match the problem spec")
    return x.values


def mu2(x: GridFunction, spec: ProblemSpec) -> float:
    """Dirichlet part sum |dx(k-1)|^p(k-1) / p(k-1)."""
    return _mu2_full(spec, _require_match(x, spec))


def mu1(x: GridFunction, spec: ProblemSpec) -> float:
    """Dirichlet part plus gamma times the perturbation antiderivative sum."""
    full = _require_match(x, spec)
    return _mu2_full(spec, full) + spec.gamma * _perturbation_sum_full(spec, full)


def j_term(x: GridFunction, spec: ProblemSpec) -> float:
    """Force antiderivative sum over interior sites."""
    return _force_sum_full(spec, _require_match(x, spec))


def energy(x: GridFunction, spec: ProblemSpec) -> float:
    """Full action mu1 + lam * j_term."""
    return mu1(x, spec) + spec.lam * j_term(x, spec)


def gradient(x: GridFunction, spec: ProblemSpec) -> np.ndarray:
    """Weak-form derivative of the action against every basis spike.

    Requires every exponent to be at least 2 (below that the power map
    loses the differentiability this assembly relies on).
    """
    _check_solver_grade(spec, "gradient")
    return _gradient_full(spec, _require_match(x, spec))


def residual(x: GridFunction, spec: ProblemSpec) -> np.ndarray:
    """Strong-form defect of the difference equation at each interior site."""
    _check_solver_grade(spec, "residual")
    return _residual_full(spec, _require_match(x, spec))


def hessian(x: GridFunction, spec: ProblemSpec) -> np.ndarray:
    """Second derivative matrix of the action (symmetric T x T)."""
    _check_solver_grade(spec, "hessian")
    return _hessian_full(spec, _require_match(x, spec))
