"""Critical-point solvers: certified descent, deflated multistart, grid oracle.

``minimize_coercive`` descends the action from the best of a batch of
random starts and certifies a critical point by the sup norm of the
strong-form residual.  ``deflated_multistart`` hunts for *all* critical
points reachable from a start cloud: each converged point is deflated
out of the residual by the shifted-power factor

    M(x) = prod_i ( 1 / h_norm(x - x_i)^power + shift ),

so later Newton runs cannot return to it.  ``brute_force_oracle`` is an
independent low-dimensional cross-check: it scans a full grid over a
box, flags cells where every residual component changes sign and grid
points where the residual sup norm has a coarse local minimum, and
polishes each candidate with plain Newton.

The zero function is probed explicitly by both routes: with the
sign-convention g(k, 0) = 0 of the odd-corrected perturbation variant it
is an exact residual zero that sits on the kink set, where Newton from
generic starts cannot land.

All randomness flows through numpy SeedSequence streams derived from
``SolverConfig.seed``; runs are sequential and reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import ndimage

from .energy import (
    ProblemSpec,
    _energy_full,
    _hessian_full,
    _incidence,
    _phi,
    _residual_full,
    _check_solver_grade,
)
from .grid import GridFunction


class NonConvergenceError(RuntimeError):
    """The descent solver could not certify a critical point.

    Carries the best iterate seen (``best_interior``) and its residual
    sup norm (``best_residual``).
    """

    def __init__(self, message: str, best_interior: np.ndarray, best_residual: float):
        super().__init__(message)
        self.best_interior = best_interior
        self.best_residual = best_residual


@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by the solvers; defaults are sized for desk runs."""

    n_starts: int = 64
    start_radius: float | None = None
    certify_tol: float = 1e-10
    dedup_tol: float = 1e-6
    trivial_tol: float = 1e-8
    max_newton_iters: int = 40
    max_descent_iters: int = 400
    deflation_power: float = 2.0
    deflation_shift: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_starts < 1:
            raise ValueError("n_starts must be at least 1")
        for name in ("certify_tol", "dedup_tol", "trivial_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.start_radius is not None and not self.start_radius > 0:
            raise ValueError("start_radius must be positive")
        if self.max_newton_iters < 1 or self.max_descent_iters < 1:
            raise ValueError("iteration caps must be positive")
        if self.deflation_power < 1.0 or self.deflation_shift < 0:
            raise ValueError("deflation_power must be at least 1, deflation_shift nonnegative")


@dataclass(frozen=True)
class CriticalPoint:
    """One certified critical point with its classification."""

    point: GridFunction
    energy_value: float
    residual_inf_norm: float
    morse: str
    is_trivial: bool


@dataclass(frozen=True)
class MultistartResult:
    """Certified critical points plus run diagnostics."""

    points: tuple[CriticalPoint, ...]
    n_starts: int
    n_failed_starts: int

    def __iter__(self):
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)


def resolve_start_radius(spec: ProblemSpec, cfg: SolverConfig) -> float:
    """Configured radius, else twice the declared outer landmark s2, else 10."""
    if cfg.start_radius is not None:
        return cfg.start_radius
    fc = spec.force.declared
    if fc is not None and fc.s2 is not None:
        return 2.0 * fc.s2
    return 10.0


@lru_cache(maxsize=64)
def _laplacian(n_interior: int) -> np.ndarray:
    D = _incidence(n_interior)
    L = D.T @ D
    L.flags.writeable = False
    return L


def _full(interior: np.ndarray) -> np.ndarray:
    buf = np.zeros(interior.size + 2)
    buf[1:-1] = interior
    return buf


def _sup(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if v.size else 0.0


def _deflation(
    xin: np.ndarray, roots: list[np.ndarray], L: np.ndarray, power: float, shift: float
):
    """Deflation factor M(x) and its gradient against the known roots."""
    M = 1.0
    grad = np.zeros_like(xin)
    for root in roots:
        v = xin - root
        eta = float(v @ (L @ v))
        if eta <= 1e-300:
            return np.inf, grad
        base = eta ** (-0.5 * power) + shift
        M *= base
        grad += (-0.5 * power) * eta ** (-0.5 * power - 1.0) * (2.0 * (L @ v)) / base
    return M, M * grad


def _newton(
    spec: ProblemSpec,
    start: np.ndarray,
    cfg: SolverConfig,
    roots: list[np.ndarray],
    radius: float,
):
    """Newton with backtracking and diagonal regularization on the
    (possibly deflated) residual.  Returns (interior, converged)."""
    T = spec.n_sites
    L = _laplacian(T)
    x = np.asarray(start, dtype=float).copy()
    wander_cap = 100.0 * (1.0 + radius)
    step_cap = 4.0 * (1.0 + radius)

    # Steps come from the deflated system (that is what bends trajectories
    # away from known roots), but acceptance and certification use the plain
    # residual: the deflated merit walls off any root that sits close to an
    # already-deflated one.  Converging into a known root fails the start.
    for _ in range(cfg.max_newton_iters):
        if _sup(x) > wander_cap:
            return x, False
        if any(_sup(x - root) < cfg.dedup_tol for root in roots):
            return x, False
        r = _residual_full(spec, _full(x))
        if _sup(r) <= cfg.certify_tol:
            return x, True
        M, gM = _deflation(x, roots, L, cfg.deflation_power, cfg.deflation_shift)
        if not np.isfinite(M):
            return x, False
        n2 = float(r @ r)
        J = M * _hessian_full(spec, _full(x)) + np.outer(r, gM)
        try:
            dx = np.linalg.solve(J, -(M * r))
        except np.linalg.LinAlgError:
            return x, False
        if not np.all(np.isfinite(dx)):
            return x, False
        big = _sup(dx)
        if big > step_cap:
            dx = dx * (step_cap / big)
        s, moved = 1.0, False
        for _ in range(20):
            xn = x + s * dx
            rn = _residual_full(spec, _full(xn))
            if float(rn @ rn) <= (1.0 - 1e-4 * s) * n2:
                x, moved = xn, True
                break
            s *= 0.5
        if not moved:
            return x, False
    return x, False


def classify(x: GridFunction, spec: ProblemSpec) -> str:
    """Morse label from the eigenvalues of the action's second derivative.

    ``degenerate`` when any eigenvalue sits within the relative tolerance
    1e-8 * (1 + max |eigenvalue|) of zero; else ``minimum`` / ``maximum``
    / ``saddle`` by sign pattern.
    """
    H = _hessian_full(spec, x.values.copy())
    eigs = np.linalg.eigvalsh(H)
    tol = 1e-8 * (1.0 + float(np.max(np.abs(eigs))))
    if np.any(np.abs(eigs) <= tol):
        return "degenerate"
    if np.all(eigs > tol):
        return "minimum"
    if np.all(eigs < -tol):
        return "maximum"
    return "saddle"


def _make_point(spec: ProblemSpec, xin: np.ndarray, cfg: SolverConfig) -> CriticalPoint:
    gf = GridFunction.from_interior(xin)
    r = _residual_full(spec, gf.values.copy())
    d = np.diff(gf.values)
    hnorm = float(np.sqrt(np.sum(d * d)))
    return CriticalPoint(
        point=gf,
        energy_value=_energy_full(spec, gf.values.copy()),
        residual_inf_norm=_sup(r),
        morse=classify(gf, spec),
        is_trivial=hnorm <= cfg.trivial_tol,
    )


def _sorted_points(points: list[CriticalPoint]) -> tuple[CriticalPoint, ...]:
    return tuple(
        sorted(points, key=lambda cp: (cp.energy_value, tuple(cp.point.values)))
    )


def minimize_coercive(spec: ProblemSpec, cfg: SolverConfig = SolverConfig()) -> CriticalPoint:
    """Descend the action from the best of a random start batch.

    Backtracking gradient descent (accepted steps never increase the
    action) hands over to Newton once the gradient is small; Newton
    steps are halved until they also respect the action up to rounding
    slack.  The returned point's action never exceeds that of any
    sampled start.  Raises ``NonConvergenceError`` when the residual
    certificate cannot be met.
    """
    _check_solver_grade(spec, "minimize_coercive")
    T = spec.n_sites
    radius = resolve_start_radius(spec, cfg)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0]))
    starts = rng.uniform(-radius, radius, size=(cfg.n_starts, T))
    energies = [_energy_full(spec, _full(s)) for s in starts]
    x = starts[int(np.argmin(energies))].copy()
    E = float(np.min(energies))

    for _ in range(cfg.max_descent_iters):
        g = _residual_full(spec, _full(x))
        if _sup(g) <= 1e-6:
            break
        gg = float(g @ g)
        alpha = 1.0 / (1.0 + np.sqrt(gg))
        accepted = False
        for _ in range(40):
            xn = x - alpha * g
            En = _energy_full(spec, _full(xn))
            if En <= E - 1e-4 * alpha * gg:
                x, E, accepted = xn, En, True
                break
            alpha *= 0.5
        if not accepted:
            break

    slack = lambda e: 1e-10 * (1.0 + abs(e))
    for _ in range(cfg.max_newton_iters):
        r = _residual_full(spec, _full(x))
        if _sup(r) <= cfg.certify_tol:
            break
        J = _hessian_full(spec, _full(x))
        nu = 0.0
        nu_base = 1e-8 * (1.0 + _sup(np.diagonal(J)))
        moved = False
        for _ in range(8):
            try:
                dx = np.linalg.solve(J + nu * np.eye(T), -r)
            except np.linalg.LinAlgError:
                dx = None
            if dx is not None and np.all(np.isfinite(dx)):
                s = 1.0
                for _ in range(30):
                    xn = x + s * dx
                    rn = _residual_full(spec, _full(xn))
                    En = _energy_full(spec, _full(xn))
                    if float(rn @ rn) <= (1.0 - 1e-4 * s) * float(r @ r) and En <= E + slack(E):
                        x, E, moved = xn, min(E, En), True
                        break
                    s *= 0.5
                if moved:
                    break
            nu = max(10.0 * nu, nu_base)
        if not moved:
            # fall back to one damped gradient step; stop if even that stalls
            g = r
            gg = float(g @ g)
            alpha, stepped = 1e-3 / (1.0 + np.sqrt(gg)), False
            for _ in range(30):
                xn = x - alpha * g
                En = _energy_full(spec, _full(xn))
                if En <= E - 1e-6 * alpha * gg:
                    x, E, stepped = xn, En, True
                    break
                alpha *= 0.5
            if not stepped:
                break

    r = _residual_full(spec, _full(x))
    if _sup(r) > cfg.certify_tol:
        raise NonConvergenceError(
            f"residual sup norm {_sup(r):.3e} above certify_tol {cfg.certify_tol:.1e}",
            best_interior=x,
            best_residual=_sup(r),
        )
    return _make_point(spec, x, cfg)


def deflated_multistart(spec: ProblemSpec, cfg: SolverConfig = SolverConfig()) -> MultistartResult:
    """Collect distinct certified critical points from a start cloud.

    Starts run sequentially; every certified point is deflated from the
    residual before later starts, so no point is found twice.  The zero
    function closes the start list (see module docstring); placing it
    last keeps the early discovery passes free of its deflation bump.
    Points are sorted by action value, ties by lexicographic values.
    """
    _check_solver_grade(spec, "deflated_multistart")
    T = spec.n_sites
    radius = resolve_start_radius(spec, cfg)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    starts = np.vstack(
        [rng.uniform(-radius, radius, size=(cfg.n_starts, T)), np.zeros((1, T))]
    )
    roots: list[np.ndarray] = []
    n_failed = 0
    for s in starts:
        x, ok = _newton(spec, s, cfg, roots, radius)
        if not ok:
            n_failed += 1
            continue
        if any(_sup(x - root) < cfg.dedup_tol for root in roots):
            n_failed += 1
            continue
        roots.append(x)
    points = [_make_point(spec, root, cfg) for root in roots]
    return MultistartResult(
        points=_sorted_points(points),
        n_starts=starts.shape[0],
        n_failed_starts=n_failed,
    )


def brute_force_oracle(
    spec: ProblemSpec,
    box_radius: float,
    grid_n: int,
    cfg: SolverConfig = SolverConfig(),
) -> tuple[CriticalPoint, ...]:
    """Exhaustive low-dimensional cross-check inside a box.

    Scans the full tensor grid, collects cells where every residual
    component changes sign and grid points where the residual sup norm
    has a coarse local minimum, polishes each candidate with plain
    Newton, and certifies like the multistart route.  Declared
    exhaustive only within the box at the grid resolution; supports
    T <= 3 and grid_n >= 64.
    """
    _check_solver_grade(spec, "brute_force_oracle")
    T = spec.n_sites
    if T > 3:
        raise ValueError("oracle supports at most three interior sites")
    if grid_n < 64:
        raise ValueError("grid_n must be at least 64")
    if not box_radius > 0:
        raise ValueError("box_radius must be positive")

    ax = np.linspace(-box_radius, box_radius, grid_n)
    h = ax[1] - ax[0]
    mesh = np.meshgrid(*([ax] * T), indexing="ij")
    padded = [np.zeros_like(mesh[0])] + list(mesh) + [np.zeros_like(mesh[0])]
    p = spec.p_head
    comps = []
    for k in range(1, T + 1):
        d_prev = padded[k] - padded[k - 1]
        d_next = padded[k + 1] - padded[k]
        rk = (
            _phi(d_prev, p[k - 1])
            - _phi(d_next, p[k])
            + spec.lam * np.asarray(spec.force.value(k, mesh[k - 1]), dtype=float)
            + spec.gamma * np.asarray(spec.perturbation.value(k, mesh[k - 1]), dtype=float)
        )
        comps.append(rk)

    corner_slices = list(itertools.product((slice(None, -1), slice(1, None)), repeat=T))
    flag = np.ones(tuple(grid_n - 1 for _ in range(T)), dtype=bool)
    for rk in comps:
        corners = [rk[c] for c in corner_slices]
        cmin = np.minimum.reduce(corners)
        cmax = np.maximum.reduce(corners)
        flag &= (cmin < 0.0) & (cmax > 0.0)

    # polish every flagged cell from its center AND its corners: several
    # roots can share one cell near the origin cluster, and the center
    # alone only ever reaches one of them
    corner_offsets = list(itertools.product((0.0, 1.0), repeat=T))
    candidates = []
    for idx in np.argwhere(flag):
        base = np.array([ax[i] for i in idx])
        candidates.append(base + 0.5 * h)
        for off in corner_offsets:
            candidates.append(base + h * np.asarray(off))

    sup_field = np.maximum.reduce([np.abs(rk) for rk in comps])
    coarse = 50.0 * h * (1.0 + spec.lam + spec.gamma)
    is_min = (ndimage.minimum_filter(sup_field, size=3, mode="nearest") == sup_field) & (
        sup_field < coarse
    )
    for idx in np.argwhere(is_min):
        candidates.append(np.array([ax[i] for i in idx]))
    candidates.append(np.zeros(T))

    radius = resolve_start_radius(spec, cfg)
    roots: list[np.ndarray] = []
    for cand in candidates:
        x, ok = _newton(spec, cand, cfg, [], radius)
        if not ok:
            continue
        if _sup(x) > box_radius + 1e-9:
            continue
        if any(_sup(x - root) < cfg.dedup_tol for root in roots):
            continue
        roots.append(x)
    points = [_make_point(spec, root, cfg) for root in roots]
    return _sorted_points(points)
