"""Grid functions on a discrete interval with homogeneous Dirichlet ends.

The state space consists of real sequences x(0), ..., x(T+1) with
x(0) = x(T+1) = 0, where T is the number of interior sites.  Two norms
are in play: the difference norm

    h_norm(x) = ( sum_{k=1}^{T+1} |x(k) - x(k-1)|^2 )^(1/2)

and the sup norm over all sites.  They are equivalent with explicit
constants,

    (2 / sqrt(T+1)) * sup_norm(x) <= h_norm(x) <= 2 * sqrt(T) * sup_norm(x),

and the left bound is attained by symmetric tent profiles when T is odd.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GridFunction:
    """Immutable real sequence on sites 0..T+1 vanishing at both ends.

    Parameters
    ----------
    values : array_like
        Full sequence of length T+2 including the two boundary zeros.

    Raises
    ------
    ValueError
        If the array is not 1-d with at least one interior site, contains
        non-finite entries, or has a nonzero boundary value.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 3:
            raise ValueError("values must be a 1-d sequence of length T+2 with T >= 1")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        if v[0] != 0.0 or v[-1] != 0.0:
            raise ValueError("boundary values x(0) and x(T+1) must be exactly zero")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n_interior(self) -> int:
        """Number of interior sites T."""
        return self.values.size - 2

    @property
    def interior(self) -> np.ndarray:
        """View of the interior values x(1), ..., x(T)."""
        return self.values[1:-1]

    @classmethod
    def from_interior(cls, interior) -> "GridFunction":
        """Build a grid function from its interior values, padding zeros."""
        inner = np.asarray(interior, dtype=float)
        if inner.ndim != 1 or inner.size < 1:
            raise ValueError("interior must be a 1-d sequence with at least one entry")
        full = np.zeros(inner.size + 2)
        full[1:-1] = inner
        return cls(full)

    @classmethod
    def zero(cls, n_interior: int) -> "GridFunction":
        """The identically zero grid function with T interior sites."""
        if n_interior < 1:
            raise ValueError("need at least one interior site")
        return cls(np.zeros(n_interior + 2))


@dataclass(frozen=True)
class NormPair:
    """Difference norm and sup norm of one grid function."""

    h_norm: float
    sup_norm: float


def forward_difference(x: GridFunction) -> np.ndarray:
    """Forward differences x(k) - x(k-1) for k = 1..T+1, as an array of length T+1."""
    return np.diff(x.values)


def norms(x: GridFunction) -> NormPair:
    """Compute the difference norm and the sup norm of ``x``.

    The squared difference norm is accumulated with pairwise summation
    (numpy's native reduction), which keeps the result stable for long
    sequences of same-sign terms.
    """
    d = np.diff(x.values)
    h = float(np.sqrt(np.sum(d * d)))
    sup = float(np.max(np.abs(x.values)))
    return NormPair(h_norm=h, sup_norm=sup)
