"""Inversion of estimated browsing responses into the implied efficiency gain.

Given Engel elasticities (beta_z, beta_l), the causal log effects of adoption
on productive and leisure time (bgpt_z, bgpt_l), and an assumed average
curvature eta_bar, the identity

    (1 - eta_z) ln(1 + delta_z) - r (1 - eta_l) ln(1 + psi delta_z) = A_z,
    A_z = r * bgpt_l - bgpt_z,  eta_a = beta_a * eta_bar,  r = beta_z / beta_l

pins down the raw efficiency shock delta_z. The reported quantity is the
scaled gain 100 * (exp((1 - eta_z) ln(1 + delta_z)) - 1), which at psi = 0
collapses to 100 * (exp(A_z) - 1) independent of eta_bar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .numerics import Bracket, brent_root

__all__ = [
    "CalibrationInputs",
    "CalibrationCell",
    "CalibrationError",
    "NoSolutionError",
    "InfeasibleBoundsError",
    "compute_az",
    "invert_psi0",
    "invert_psi",
    "grid",
    "eta_bounds",
    "implied_etas",
    "DEFAULT_INPUTS",
    "DEFAULT_ETA_BARS",
    "DEFAULT_PSIS",
]

_RESIDUAL_TOL = 1e-12
_DELTA_MAX = 1e9


class CalibrationError(RuntimeError):
    """Base class for calibration failures."""


class NoSolutionError(CalibrationError):
    """The delta_z equation has no root on [0, inf); names the violated bound."""


class InfeasibleBoundsError(CalibrationError):
    """The eta_bar feasibility interval is empty or degenerate."""


@dataclass(frozen=True)
class CalibrationInputs:
    """Estimated inputs to the inversion.

    ``ratio_r`` is stored explicitly rather than recomputed from
    beta_z / beta_l, so published roundings of the ratio can be honored
    exactly; use ``with_exact_ratio`` when the unrounded ratio is wanted.
    """

    beta_z: float
    beta_l: float
    bgpt_l: float
    bgpt_z: float
    ratio_r: float

    def __post_init__(self) -> None:
        if self.beta_z <= 0.0 or self.beta_l <= 0.0:
            raise ValueError("Engel elasticities must be positive")
        if self.ratio_r <= 0.0:
            raise ValueError("ratio_r must be positive")

    def with_exact_ratio(self) -> "CalibrationInputs":
        return CalibrationInputs(
            beta_z=self.beta_z,
            beta_l=self.beta_l,
            bgpt_l=self.bgpt_l,
            bgpt_z=self.bgpt_z,
            ratio_r=self.beta_z / self.beta_l,
        )


@dataclass(frozen=True)
class CalibrationCell:
    """One (eta_bar, psi) cell: the solved shock and the scaled gain in percent.

    ``error`` carries the failure message for infeasible cells so a grid can
    report them without aborting the remaining cells.
    """

    eta_bar: float
    psi: float
    delta_z: float
    scaled_gain_pct: float
    error: str | None = None


DEFAULT_INPUTS = CalibrationInputs(
    beta_z=0.931, beta_l=1.374, bgpt_l=1.512, bgpt_z=0.011, ratio_r=0.6776
)
DEFAULT_ETA_BARS = (0.73, 0.90, 1.00, 1.07)
DEFAULT_PSIS = (0.0, 0.25, 0.5, 1.0)


def compute_az(inputs: CalibrationInputs) -> float:
    """Identified combination A_z = r * bgpt_l - bgpt_z."""
    return inputs.ratio_r * inputs.bgpt_l - inputs.bgpt_z


def invert_psi0(az: float) -> float:
    """Scaled gain percent when leisure tasks get no efficiency spillover.

    At psi = 0 the equation reduces to (1 - eta_z) ln(1 + delta_z) = A_z, so
    the scaled gain is 100 * (exp(A_z) - 1), independent of eta_bar.
    """
    return 100.0 * math.expm1(az)


def invert_psi(inputs: CalibrationInputs, eta_bar: float, psi: float) -> CalibrationCell:
    """Solve for delta_z at one (eta_bar, psi) cell and return the scaled gain.

    psi = 0 uses the closed form (this keeps the eta_bar-invariance of that
    column exact); psi > 0 root-finds the residual on a geometrically probed
    bracket in [0, 1e9]. Requires eta_z = beta_z * eta_bar < 1 whenever the
    identified gap A_z is positive, else there is no nonnegative solution.
    """
    if eta_bar <= 0.0:
        raise ValueError("eta_bar must be positive")
    if not 0.0 <= psi <= 1.0:
        raise ValueError("psi must lie in [0, 1]")
    eta_z = inputs.beta_z * eta_bar
    eta_l = inputs.beta_l * eta_bar
    az = compute_az(inputs)

    if az == 0.0:
        return CalibrationCell(eta_bar=eta_bar, psi=psi, delta_z=0.0, scaled_gain_pct=0.0)

    if eta_z >= 1.0:
        raise NoSolutionError(
            f"eta_z = beta_z * eta_bar = {eta_z:.6g} >= 1: productive time must be a "
            f"necessity (eta_bar < 1/beta_z = {1.0 / inputs.beta_z:.6g}) for a positive gap"
        )
    if psi > 0.0 and eta_l <= 1.0:
        raise NoSolutionError(
            f"eta_l = beta_l * eta_bar = {eta_l:.6g} <= 1: leisure must be a luxury "
            f"(eta_bar > 1/beta_l = {1.0 / inputs.beta_l:.6g}) for the psi > 0 channel"
        )
    if az < 0.0:
        # The left side is 0 at delta = 0 and strictly increasing on the
        # feasible curvature range, so a negative gap has no solution.
        raise NoSolutionError(
            f"negative identified gap A_z = {az:.6g} has no nonnegative delta_z "
            f"when eta_z < 1"
        )

    if psi == 0.0:
        delta = math.expm1(az / (1.0 - eta_z))
        return CalibrationCell(
            eta_bar=eta_bar, psi=psi, delta_z=delta, scaled_gain_pct=invert_psi0(az)
        )

    def residual(delta: float) -> float:
        return (
            (1.0 - eta_z) * math.log1p(delta)
            - inputs.ratio_r * (1.0 - eta_l) * math.log1p(psi * delta)
            - az
        )

    # residual(0) = -az < 0 and the residual is strictly increasing to +inf
    # here; probe geometrically for the sign change.
    r0 = residual(0.0)
    hi = 1e-6
    while residual(hi) * r0 > 0.0:
        hi *= 10.0
        if hi > _DELTA_MAX:
            raise NoSolutionError(
                f"delta_z equation has no root on [0, {_DELTA_MAX:g}] for "
                f"eta_bar={eta_bar}, psi={psi}"
            )
    bracket = Bracket(lo=0.0, hi=hi, f_lo=r0, f_hi=residual(hi))
    delta = brent_root(residual, bracket, tol=_RESIDUAL_TOL)
    gain = 100.0 * math.expm1((1.0 - eta_z) * math.log1p(delta))
    return CalibrationCell(eta_bar=eta_bar, psi=psi, delta_z=delta, scaled_gain_pct=gain)


def grid(
    inputs: CalibrationInputs,
    eta_bars: Sequence[float] = DEFAULT_ETA_BARS,
    psis: Sequence[float] = DEFAULT_PSIS,
) -> list[CalibrationCell]:
    """Full (eta_bar, psi) cross product, ordered by (eta_bar, psi).

    Cells that fail (for example eta_bar above the feasibility bound) are
    recorded in-cell with NaN values and the grid continues.
    """
    cells: list[CalibrationCell] = []
    for eta_bar in eta_bars:
        for psi in psis:
            try:
                cells.append(invert_psi(inputs, eta_bar, psi))
            except CalibrationError as exc:
                cells.append(
                    CalibrationCell(
                        eta_bar=eta_bar,
                        psi=psi,
                        delta_z=math.nan,
                        scaled_gain_pct=math.nan,
                        error=str(exc),
                    )
                )
    cells.sort(key=lambda c: (c.eta_bar, c.psi))
    return cells


def eta_bounds(beta_z: float, beta_l: float) -> tuple[float, float]:
    """Feasible eta_bar interval (1/beta_l, 1/beta_z).

    The upper bound makes productive time a necessity (eta_z < 1), the lower
    bound makes leisure a luxury (eta_l > 1). An empty or degenerate interval
    raises.
    """
    if beta_z <= 0.0 or beta_l <= 0.0:
        raise ValueError("Engel elasticities must be positive")
    lower = 1.0 / beta_l
    upper = 1.0 / beta_z
    if lower >= upper:
        raise InfeasibleBoundsError(
            f"infeasible eta_bar bounds: 1/beta_l = {lower:.6g} >= 1/beta_z = {upper:.6g}"
        )
    return lower, upper


def implied_etas(beta, eta_bar: float):
    """Per-activity curvature eta_a = beta_a * eta_bar.

    Accepts a mapping (returns a dict) or a sequence (returns a tuple).
    """
    if eta_bar <= 0.0:
        raise ValueError("eta_bar must be positive")
    if isinstance(beta, Mapping):
        return {name: value * eta_bar for name, value in beta.items()}
    return tuple(value * eta_bar for value in beta)
