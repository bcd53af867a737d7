"""Numerical primitives used as independent oracles for the closed forms elsewhere.

Three tools live here: bracketed scalar root-finding, brute-force maximization
on the time simplex, and central finite-difference elasticities. They are kept
deliberately separate from the model code so that closed-form demands and
calibration inversions can be checked against implementations that share
nothing with them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize

__all__ = [
    "Bracket",
    "GridSpec",
    "ConvergenceError",
    "brent_root",
    "grid_maximize",
    "fd_elasticity",
]

# Interior clip for simplex coordinates: objectives only need to be finite on
# the open simplex, so candidate points stay at least this far from the faces.
_SIMPLEX_EPS = 1e-9


class ConvergenceError(RuntimeError):
    """Root (or optimum) search did not converge; carries the last iterate."""

    def __init__(self, message: str, last_iterate: float | None = None):
        super().__init__(message)
        self.last_iterate = last_iterate


@dataclass(frozen=True)
class Bracket:
    """A sign-changing interval [lo, hi] for scalar root-finding."""

    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"bracket requires lo < hi, got [{self.lo}, {self.hi}]")
        if self.f_lo * self.f_hi > 0.0:
            raise ValueError(
                f"bracket endpoints must straddle a root: f(lo)={self.f_lo}, f(hi)={self.f_hi}"
            )

    @classmethod
    def from_function(cls, f: Callable[[float], float], lo: float, hi: float) -> "Bracket":
        return cls(lo=lo, hi=hi, f_lo=f(lo), f_hi=f(hi))


@dataclass(frozen=True)
class GridSpec:
    """Resolution and refinement schedule for the simplex grid search."""

    points_per_dim: int = 200
    refine_rounds: int = 6
    shrink_factor: float = 0.2

    def __post_init__(self) -> None:
        if self.points_per_dim < 3:
            raise ValueError("points_per_dim must be at least 3")
        if self.refine_rounds < 0:
            raise ValueError("refine_rounds must be nonnegative")
        if not 0.0 < self.shrink_factor < 1.0:
            raise ValueError("shrink_factor must lie in (0, 1)")


def brent_root(f: Callable[[float], float], bracket: Bracket, tol: float = 1e-12) -> float:
    """Find a root of ``f`` inside ``bracket`` by Brent's method.

    Wraps :func:`scipy.optimize.brentq`; the result satisfies |f(x)| <= tol or
    lies in an interval of width <= tol. Deterministic for fixed inputs, and
    every iterate stays inside the initial bracket (a property of Brent's
    bracketing updates).
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    # Endpoint roots short-circuit: brentq would also return them, but this
    # avoids re-evaluating f at a known root.
    if bracket.f_lo == 0.0:
        return bracket.lo
    if bracket.f_hi == 0.0:
        return bracket.hi
    try:
        root = optimize.brentq(f, bracket.lo, bracket.hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200)
    except RuntimeError as exc:  # scipy signals iteration-cap failure this way
        raise ConvergenceError(f"brent_root failed to converge: {exc}") from exc
    return float(root)


def _simplex_candidates(grids: list[np.ndarray], total: float) -> np.ndarray:
    """Cartesian product of free-coordinate grids, completed to the simplex.

    The last coordinate is the remainder total - sum(free); rows whose
    remainder falls below the interior clip are discarded. Row order is
    lexicographic in the free coordinates, which fixes tie-breaking.
    """
    mesh = np.meshgrid(*grids, indexing="ij")
    free = np.stack([m.ravel() for m in mesh], axis=1)
    rest = total - free.sum(axis=1)
    keep = rest >= _SIMPLEX_EPS
    return np.column_stack([free[keep], rest[keep]])


def grid_maximize(
    objective: Callable[[np.ndarray], np.ndarray],
    dims: int,
    total: float,
    spec: GridSpec = GridSpec(),
) -> tuple[np.ndarray, float]:
    """Maximize ``objective`` over the interior of the simplex {h >= 0, sum h = total}.

    ``objective`` receives an (n, dims) array of candidate allocations and must
    return n values. The search is an exhaustive grid over dims-1 free
    coordinates followed by ``spec.refine_rounds`` rounds of re-gridding inside
    a window that shrinks by ``spec.shrink_factor`` around the incumbent, so
    the returned value never exceeds the true optimum and improves
    monotonically across rounds.
    """
    if dims not in (2, 3):
        raise ValueError("grid_maximize supports dims in {2, 3}")
    if total <= 0.0:
        raise ValueError("total must be positive")

    lo = np.full(dims - 1, _SIMPLEX_EPS)
    hi = np.full(dims - 1, total - _SIMPLEX_EPS)
    n = spec.points_per_dim

    best_point: np.ndarray | None = None
    best_value = -math.inf
    for round_idx in range(spec.refine_rounds + 1):
        grids = [np.linspace(lo[d], hi[d], n) for d in range(dims - 1)]
        candidates = _simplex_candidates(grids, total)
        if candidates.size:
            values = np.asarray(objective(candidates), dtype=float)
            k = int(np.argmax(values))  # first max = lexicographic tie-break
            if values[k] > best_value:
                best_value = float(values[k])
                best_point = candidates[k]
        if best_point is None:
            raise ConvergenceError("grid_maximize found no interior candidate points")
        # Shrink the window around the incumbent's free coordinates.
        span = (hi - lo) * spec.shrink_factor
        center = best_point[: dims - 1]
        lo = np.maximum(center - span / 2.0, _SIMPLEX_EPS)
        hi = np.minimum(center + span / 2.0, total - _SIMPLEX_EPS)
    assert best_point is not None
    return best_point, best_value


def fd_elasticity(
    h_fn: Callable[[float], np.ndarray],
    H: float,
    step: float = 1e-5,
) -> np.ndarray:
    """Central finite-difference elasticity d ln h_a / d ln H at total time H.

    ``h_fn`` maps a total time budget to the per-activity hours vector. The
    derivative is taken in logs on both sides with a symmetric log step, so the
    discretization error is O(step^2).
    """
    if H <= 0.0:
        raise ValueError("H must be positive")
    if step <= 0.0:
        raise ValueError("step must be positive")
    h_up = np.asarray(h_fn(H * math.exp(step)), dtype=float)
    h_dn = np.asarray(h_fn(H * math.exp(-step)), dtype=float)
    if np.any(h_up <= 0.0) or np.any(h_dn <= 0.0):
        raise ValueError("nonpositive hours at perturbed points; elasticity undefined")
    return (np.log(h_up) - np.log(h_dn)) / (2.0 * step)
