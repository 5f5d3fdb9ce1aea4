"""Site-dependent nonlinearities and their structural hypotheses.

A nonlinearity is a map (k, t) -> real on sites k = 1..T, together with
its antiderivative in t (normalized to vanish at t = 0).  The built-in
pair ``make_example1`` implements a benchmark family: a continuous
piecewise force term

    f(k, t) = alpha(k) * sign(t) * shape(|t|),
    shape(u) = u/2           for u < 2,
               3 - u         for 2 <= u < 4,
               -1            for 4 <= u < 6,
               u - 7         for 6 <= u < 8,
               exp(8 - u)    for u >= 8,

whose antiderivative F(k, t) = alpha(k) * Phi(|t|) has

    Phi(u) = u^2/4, -u^2/2 + 3u - 3, 5 - u, u^2/2 - 7u + 23, -exp(8 - u)

on the same branches (so F(k,2) = F(k,4) = alpha(k), F(k,6) = -alpha(k),
and F -> 0 at infinity), and a saturating perturbation term in two
variants:

    paper-g:         g(k, t) = beta(k) * (1/2 - exp(-t^2))
    corrected-odd-g: g(k, t) = beta(k) * sign(t) * (1/2 - exp(-t^2))

The corrected variant has an even antiderivative G that is nonpositive
exactly on [-M1, M1] and grows like beta(k)|t|/2 in the tail; M1 is the
positive zero of t/2 - int_0^t exp(-s^2) ds, about 1.7487.  The variant
is discontinuous at t = 0 (declared as a kink); the plain variant has an
odd G that is positive for small negative t, which ``verify_assumptions``
reports as a sign-window violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize, special


class NonlinearityConfigError(ValueError):
    """A nonlinearity is missing declared constants required by an operation."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature could not meet the requested tolerance.

    Attributes
    ----------
    achieved : float
        The error estimate actually reached.
    """

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class StructuralConstants:
    """Declared landmarks of a nonlinearity's antiderivative.

    ``m``, ``s1``, ``s2`` locate the sign windows of a force
    antiderivative (positive on [-m, m] away from 0, negative on
    [s1, s2]); ``M1`` is the half-width of the nonpositivity window of a
    perturbation antiderivative.  Any subset may be declared.
    """

    m: float | None = None
    s1: float | None = None
    s2: float | None = None
    M1: float | None = None

    def __post_init__(self) -> None:
        if self.m is not None and not (math.isfinite(self.m) and self.m > 0):
            raise ValueError("m must be positive and finite")
        if (self.s1 is None) != (self.s2 is None):
            raise ValueError("s1 and s2 must be declared together")
        if self.s1 is not None:
            if not (math.isfinite(self.s1) and math.isfinite(self.s2)):
                raise ValueError("s1, s2 must be finite")
            if self.s2 < self.s1:
                raise ValueError("need s1 <= s2")
            if self.m is not None and self.s1 <= self.m:
                raise ValueError("need s1 > m")
        if self.M1 is not None and not (math.isfinite(self.M1) and self.M1 > 0):
            raise ValueError("M1 must be positive and finite")


@dataclass(frozen=True)
class Nonlinearity:
    """A site-dependent scalar nonlinearity with its antiderivative.

    Parameters
    ----------
    value : callable
        ``value(k, t)`` with integer site array ``k`` (1-based) and float
        array ``t``; must broadcast and vectorize over both.
    antiderivative : callable
        Same calling convention; ``antiderivative(k, 0) == 0``.
    n_sites : int
        Number of interior sites T the site index ranges over.
    declared : StructuralConstants, optional
        Landmarks used by hypothesis checks and the constants pipeline.
    derivative : callable, optional
        Closed-form d/dt of ``value``, valid away from ``kinks``.
    kinks : tuple of float
        Points where ``value`` or its derivative only has one-sided
        limits; continuity and monotonicity scans skip a guard band
        around them and curvature uses one-sided differences there.
    tail_slope : ndarray, optional
        Per-site lower tail slope of the antiderivative, i.e. a known
        value of liminf_{|t| -> inf} antiderivative(k, t)/|t|.
    """

    value: Callable
    antiderivative: Callable
    n_sites: int
    declared: StructuralConstants | None = None
    derivative: Callable | None = None
    kinks: tuple[float, ...] = ()
    tail_slope: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.n_sites < 1:
            raise ValueError("n_sites must be at least 1")


def _as_site_array(coeff, n_sites: int, name: str) -> np.ndarray:
    a = np.asarray(coeff, dtype=float)
    if a.ndim == 0:
        a = np.full(n_sites, float(a))
    if a.shape != (n_sites,):
        raise ValueError(f"{name} must be a scalar or a sequence of length {n_sites}")
    if not np.all(np.isfinite(a)) or np.any(a <= 0):
        raise ValueError(f"{name} must be strictly positive and finite")
    a = a.copy()
    a.flags.writeable = False
    return a


_SQRT_PI_HALF = math.sqrt(math.pi) / 2.0


def _gauss_integral(t):
    """int_0^t exp(-s^2) ds, vectorized."""
    return _SQRT_PI_HALF * special.erf(t)


def _force_shape(t):
    t = np.asarray(t, dtype=float)
    u = np.abs(t)
    shape = np.select(
        [u < 2.0, u < 4.0, u < 6.0, u < 8.0],
        [0.5 * u, 3.0 - u, -np.ones_like(u), u - 7.0],
        default=np.exp(8.0 - u),
    )
    return np.sign(t) * shape


def _force_anti_shape(t):
    t = np.asarray(t, dtype=float)
    u = np.abs(t)
    return np.select(
        [u < 2.0, u < 4.0, u < 6.0, u < 8.0],
        [0.25 * u * u, -0.5 * u * u + 3.0 * u - 3.0, 5.0 - u, 0.5 * u * u - 7.0 * u + 23.0],
        default=-np.exp(8.0 - u),
    )


def _force_slope_shape(t):
    t = np.asarray(t, dtype=float)
    u = np.abs(t)
    return np.select(
        [u < 2.0, u < 4.0, u < 6.0, u < 8.0],
        [np.full_like(u, 0.5), np.full_like(u, -1.0), np.zeros_like(u), np.ones_like(u)],
        default=-np.exp(8.0 - u),
    )


def _perturbation_m1() -> float:
    # positive zero of t/2 - int_0^t exp(-s^2) ds, bracketed away from 0
    h = lambda t: 0.5 * t - _gauss_integral(t)
    return float(optimize.brentq(h, 1.0, 4.0, xtol=1e-14, rtol=8.9e-16))


def make_example1(variant: str, alpha, beta, n_sites: int) -> tuple[Nonlinearity, Nonlinearity]:
    """Build the benchmark force/perturbation pair on T = ``n_sites`` sites.

    Parameters
    ----------
    variant : str
        ``"paper-g"`` or ``"corrected-odd-g"``; selects the perturbation
        term (see module docstring).  The force term is the same in both.
    alpha, beta : float or sequence of length n_sites
        Positive site weights of the force and perturbation terms.

    Returns
    -------
    (force, perturbation) : pair of Nonlinearity
    """
    if variant not in ("paper-g", "corrected-odd-g"):
        raise ValueError(f"unknown variant {variant!r}")
    a = _as_site_array(alpha, n_sites, "alpha")
    b = _as_site_array(beta, n_sites, "beta")

    def f_val(k, t):
        return a[np.asarray(k) - 1] * _force_shape(t)

    def f_anti(k, t):
        return a[np.asarray(k) - 1] * _force_anti_shape(t)

    def f_deriv(k, t):
        return a[np.asarray(k) - 1] * _force_slope_shape(t)

    force = Nonlinearity(
        value=f_val,
        antiderivative=f_anti,
        n_sites=n_sites,
        declared=StructuralConstants(m=2.0, s1=6.0, s2=6.0),
        derivative=f_deriv,
        kinks=(-8.0, -6.0, -4.0, -2.0, 2.0, 4.0, 6.0, 8.0),
    )

    m1 = _perturbation_m1()
    if variant == "paper-g":

        def g_val(k, t):
            t = np.asarray(t, dtype=float)
            return b[np.asarray(k) - 1] * (0.5 - np.exp(-t * t))

        def g_anti(k, t):
            t = np.asarray(t, dtype=float)
            return b[np.asarray(k) - 1] * (0.5 * t - _gauss_integral(t))

        def g_deriv(k, t):
            t = np.asarray(t, dtype=float)
            return b[np.asarray(k) - 1] * 2.0 * t * np.exp(-t * t)

        perturbation = Nonlinearity(
            value=g_val,
            antiderivative=g_anti,
            n_sites=n_sites,
            declared=StructuralConstants(M1=m1),
            derivative=g_deriv,
            kinks=(),
            tail_slope=None,
        )
    else:

        def g_val(k, t):
            t = np.asarray(t, dtype=float)
            return b[np.asarray(k) - 1] * np.sign(t) * (0.5 - np.exp(-t * t))

        def g_anti(k, t):
            t = np.asarray(t, dtype=float)
            u = np.abs(t)
            return b[np.asarray(k) - 1] * (0.5 * u - _gauss_integral(u))

        def g_deriv(k, t):
            # valid away from the kink at 0
            t = np.asarray(t, dtype=float)
            return b[np.asarray(k) - 1] * 2.0 * np.abs(t) * np.exp(-t * t)

        slope = 0.5 * b
        slope.flags.writeable = False
        perturbation = Nonlinearity(
            value=g_val,
            antiderivative=g_anti,
            n_sites=n_sites,
            declared=StructuralConstants(M1=m1),
            derivative=g_deriv,
            kinks=(0.0,),
            tail_slope=slope,
        )
    return force, perturbation


def make_zero(n_sites: int) -> tuple[Nonlinearity, Nonlinearity]:
    """The identically zero force/perturbation pair (for control runs)."""

    def zero_val(k, t):
        k = np.asarray(k)
        t = np.asarray(t, dtype=float)
        return np.zeros(np.broadcast(k, t).shape)

    z = Nonlinearity(value=zero_val, antiderivative=zero_val, n_sites=n_sites)
    return z, z


def anti_by_quadrature(nl: Nonlinearity, k: int, t: float, tol: float = 1e-9) -> float:
    """Antiderivative int_0^t nl.value(k, s) ds by adaptive quadrature.

    Independent of ``nl.antiderivative``; used to cross-check closed
    forms.  Raises ``QuadratureError`` when the achieved error estimate
    exceeds ``tol``.
    """
    if not (tol > 0):
        raise ValueError("tol must be positive")
    t = float(t)
    if t == 0.0:
        return 0.0
    lo, hi = (0.0, t) if t > 0 else (t, 0.0)
    interior = sorted(p for p in nl.kinks if lo < p < hi)
    val, err = integrate.quad(
        lambda s: float(nl.value(k, s)),
        lo,
        hi,
        points=interior or None,
        epsabs=0.25 * tol,
        epsrel=1e-12,
        limit=200,
    )
    if not math.isfinite(val) or err > tol:
        raise QuadratureError(
            f"quadrature error estimate {err:.3e} exceeds tolerance {tol:.3e}", achieved=err
        )
    return val if t > 0 else -val


@dataclass
class AssumptionCheck:
    """Outcome of one hypothesis check.

    ``verdict`` is one of ``"holds-on-samples"``, ``"violated"``,
    ``"inconclusive"``.  Each witness is a (site, t, value) triple
    showing an offending sample.
    """

    verdict: str
    witnesses: list[tuple[int, float, float]] = field(default_factory=list)
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.verdict == "holds-on-samples"


@dataclass
class AssumptionReport:
    """Sampled verdicts for the hypothesis labels A.1, A.2, A.4, A.5.

    The label set is the standard numbering for this problem family (the
    family defines no A.3).  A.1: tail growth of the force
    antiderivative relative to |t|^p_minus, plus continuity of the force
    term.  A.2: sign windows of the force antiderivative.  A.4: sign
    window and tail growth of the perturbation antiderivative.  A.5:
    monotonicity of the force term on [-m, m].
    """

    checks: dict[str, AssumptionCheck]
    sample_range: float
    step: float

    def all_hold(self) -> bool:
        return all(c.ok for c in self.checks.values())


def _scan_continuity(nl: Nonlinearity, k: int, grid: np.ndarray, guard: float):
    """Return a (t, gap) jump witness for value(k, .) on the grid, or None.

    An increment far exceeding both neighbours marks a suspect interval,
    which is then refined by repeated halving; a genuine jump keeps a
    finite gap as the interval shrinks, a steep continuous stretch does
    not.
    """
    vals = np.asarray(nl.value(k, grid), dtype=float)
    inc = np.abs(np.diff(vals))
    scale = max(1.0, float(np.max(np.abs(vals))))
    neighbour = np.maximum(
        np.concatenate([[0.0], inc[:-1]]), np.concatenate([inc[1:], [0.0]])
    )
    suspects = np.nonzero((inc > 1e-3 * scale) & (inc > 10.0 * neighbour))[0]
    for i in suspects:
        a, b = float(grid[i]), float(grid[i + 1])
        if any(a - guard <= q <= b + guard for q in nl.kinks):
            continue
        fa, fb = float(nl.value(k, a)), float(nl.value(k, b))
        for _ in range(48):
            mid = 0.5 * (a + b)
            fm = float(nl.value(k, mid))
            if abs(fm - fa) >= abs(fm - fb):
                b, fb = mid, fm
            else:
                a, fa = mid, fm
            if b - a < 1e-13 * max(1.0, abs(a)):
                break
        if abs(fb - fa) > 1e-6 * scale:
            return (0.5 * (a + b), abs(fb - fa))
    return None


def verify_assumptions(
    force: Nonlinearity,
    perturbation: Nonlinearity,
    p_minus: float,
    sample_range: float = 20.0,
    step: float = 0.01,
    tail_tol: float = 1e-2,
) -> AssumptionReport:
    """Check the structural hypotheses of the pair by dense sampling.

    Verdicts are per label: ``holds-on-samples`` when every sample is
    consistent, ``violated`` with witnesses otherwise, and
    ``inconclusive`` for a tail that is still negative but visibly
    decaying at the sampling boundary.  ``sample_range`` must cover the
    declared landmarks (at least max(s2, M1, 10)).
    """
    if p_minus <= 1:
        raise ValueError("p_minus must exceed 1")
    if step <= 0 or sample_range <= 0:
        raise ValueError("step and sample_range must be positive")
    fc = force.declared
    gc = perturbation.declared
    if fc is None or fc.m is None or fc.s1 is None:
        raise NonlinearityConfigError("force term must declare m, s1, s2")
    if gc is None or gc.M1 is None:
        raise NonlinearityConfigError("perturbation term must declare M1")
    if force.n_sites != perturbation.n_sites:
        raise ValueError("force and perturbation must agree on n_sites")
    need = max(fc.s2, gc.M1, 10.0)
    if sample_range < need:
        raise ValueError(f"sample_range must be at least {need}")

    T = force.n_sites
    guard = max(1e-6, step * 1e-4)
    R = sample_range
    checks: dict[str, AssumptionCheck] = {}

    # A.1: continuity of the force term plus tail proxy
    # F(k,t)/|t|^p_minus >= -tail_tol on R/2 <= |t| <= R.
    a1 = AssumptionCheck("holds-on-samples")
    full_grid = np.arange(-R, R + 0.5 * step, step)
    tail = np.arange(R / 2.0, R + 0.5 * step, step)
    tail = np.concatenate([-tail[::-1], tail])
    for k in range(1, T + 1):
        jump = _scan_continuity(force, k, full_grid, guard)
        if jump is not None:
            a1.verdict = "violated"
            a1.witnesses.append((k, jump[0], jump[1]))
            a1.note = "force term has a jump away from declared kinks"
            continue
        ratios = np.asarray(force.antiderivative(k, tail), dtype=float) / np.abs(tail) ** p_minus
        i_min = int(np.argmin(ratios))
        if ratios[i_min] >= -tail_tol:
            continue
        boundary = min(float(ratios[0]), float(ratios[-1]))
        if boundary > float(ratios[i_min]) and boundary >= -tail_tol:
            if a1.verdict == "holds-on-samples":
                a1.verdict = "inconclusive"
                a1.note = "tail still negative but decaying at the sampling boundary"
            a1.witnesses.append((k, float(tail[i_min]), float(ratios[i_min])))
        else:
            a1.verdict = "violated"
            a1.witnesses.append((k, float(tail[i_min]), float(ratios[i_min])))
    checks["A.1"] = a1

    # A.2: F > 0 on [-m, m] away from 0 and F < 0 on [s1, s2].
    a2 = AssumptionCheck("holds-on-samples")
    # arange with the +step/2 stop can overshoot a non-commensurate
    # endpoint, so every window is clipped back to its closed interval
    inner = np.arange(-fc.m, fc.m + 0.5 * step, step)
    inner = inner[(np.abs(inner) > 0.5 * step) & (np.abs(inner) <= fc.m)]
    inner = np.concatenate([inner, [-fc.m, fc.m]])
    neg_window = (
        np.array([fc.s1])
        if fc.s2 == fc.s1
        else np.arange(fc.s1, fc.s2 + 0.5 * step, step)
    )
    neg_window = neg_window[neg_window <= fc.s2]
    for k in range(1, T + 1):
        fin = np.asarray(force.antiderivative(k, inner), dtype=float)
        bad = np.nonzero(fin <= 0.0)[0]
        for i in bad[:3]:
            a2.verdict = "violated"
            a2.witnesses.append((k, float(inner[i]), float(fin[i])))
        fneg = np.asarray(force.antiderivative(k, neg_window), dtype=float)
        bad = np.nonzero(fneg >= 0.0)[0]
        for i in bad[:3]:
            a2.verdict = "violated"
            a2.witnesses.append((k, float(neg_window[i]), float(fneg[i])))
    checks["A.2"] = a2

    # A.4: G <= 0 on [-M1, M1] and G(k,t)/|t| bounded below by a positive
    # margin on R/2 <= |t| <= R.
    a4 = AssumptionCheck("holds-on-samples")
    window = np.arange(-gc.M1, gc.M1 + 0.5 * step, step)
    window = window[np.abs(window) <= gc.M1]
    window = np.concatenate([window, [-gc.M1, gc.M1]])
    for k in range(1, T + 1):
        gw = np.asarray(perturbation.antiderivative(k, window), dtype=float)
        slack = 1e-9 * max(1.0, float(np.max(np.abs(gw))))
        bad = np.nonzero(gw > slack)[0]
        for i in bad[:3]:
            a4.verdict = "violated"
            a4.witnesses.append((k, float(window[i]), float(gw[i])))
        gt = np.asarray(perturbation.antiderivative(k, tail), dtype=float) / np.abs(tail)
        i_min = int(np.argmin(gt))
        if gt[i_min] <= 0.0:
            a4.verdict = "violated"
            a4.witnesses.append((k, float(tail[i_min]), float(gt[i_min])))
    checks["A.4"] = a4

    # A.5: force term non-decreasing on [-m, m], skipping kink straddles.
    a5 = AssumptionCheck("holds-on-samples")
    mono = np.arange(-fc.m, fc.m + 0.5 * step, step)
    mono = mono[np.abs(mono) <= fc.m]
    for k in range(1, T + 1):
        fv = np.asarray(force.value(k, mono), dtype=float)
        slack = 1e-9 * max(1.0, float(np.max(np.abs(fv))))
        dec = np.diff(fv) < -slack
        for i in np.nonzero(dec)[0]:
            a, b = float(mono[i]), float(mono[i + 1])
            if any(a - guard <= q <= b + guard for q in force.kinks):
                continue
            a5.verdict = "violated"
            a5.witnesses.append((k, b, float(fv[i + 1] - fv[i])))
    checks["A.5"] = a5

    return AssumptionReport(checks=checks, sample_range=R, step=step)
