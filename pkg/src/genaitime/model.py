"""Household digital time-allocation model.

A household splits a fixed time budget H across activities with isoelastic
utility sum_a (theta_a xi_a h_a)^(1-1/eta_a) / (1-1/eta_a). This module houses
the closed-form demand system, the equilibrium allocation solver, the adoption
rule for the efficiency-improving technology, and the implied treatment
effects on log time use (both exact, via two equilibrium solves, and the
two-activity first-order formulas).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "PRODUCTIVE",
    "LEISURE",
    "OTHER",
    "ActivityParams",
    "Preferences",
    "Allocation",
    "TechShock",
    "TreatmentEffects",
    "AllocationError",
    "UnsupportedConfigurationError",
    "demand",
    "utility",
    "solve_allocation",
    "adoption_gain",
    "should_adopt",
    "exact_effects",
    "firstorder_effects",
    "gap_identity_lhs",
]

PRODUCTIVE = "productive"
LEISURE = "leisure"
OTHER = "other"

# Curvatures this close to 1 route to the logarithmic branch; the power form
# suffers catastrophic cancellation in (1 - 1/eta) there.
_LOG_UTILITY_BAND = 1e-9

# Shadow-price bracket: initial window and the geometric expansion limit.
_OMEGA_BRACKET = (1e-9, 1e9)
_OMEGA_LIMIT = (1e-15, 1e15)
_BISECT_REL_TOL = 1e-12
_BISECT_MAX_ITER = 200


class AllocationError(RuntimeError):
    """Equilibrium solve failed; the message carries the diagnostic bracket."""


class UnsupportedConfigurationError(ValueError):
    """Operation called outside the configuration it is derived for."""


@dataclass(frozen=True)
class ActivityParams:
    """Per-activity taste (theta), efficiency (xi), and curvature (eta)."""

    theta: float
    xi: float
    eta: float

    def __post_init__(self) -> None:
        if self.theta <= 0.0 or self.xi <= 0.0 or self.eta <= 0.0:
            raise ValueError(f"theta, xi, eta must be positive, got {self}")

    @property
    def scale(self) -> float:
        """The combined shifter theta * xi that demand depends on."""
        return self.theta * self.xi

    @property
    def is_log_utility(self) -> bool:
        return abs(self.eta - 1.0) < _LOG_UTILITY_BAND


@dataclass(frozen=True)
class Preferences:
    """Ordered activity set; two or three of (leisure, productive, other)."""

    activities: tuple[tuple[str, ActivityParams], ...]

    def __post_init__(self) -> None:
        if len(self.activities) < 2:
            raise ValueError("preferences need at least 2 activities")
        labels = [label for label, _ in self.activities]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate activity labels: {labels}")

    @classmethod
    def from_mapping(cls, params: Mapping[str, ActivityParams]) -> "Preferences":
        return cls(tuple(params.items()))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.activities)

    @property
    def etas(self) -> np.ndarray:
        return np.array([p.eta for _, p in self.activities])

    @property
    def scales(self) -> np.ndarray:
        return np.array([p.scale for _, p in self.activities])

    def params(self, label: str) -> ActivityParams:
        for name, p in self.activities:
            if name == label:
                return p
        raise KeyError(f"no activity labeled {label!r}")

    def with_shock(self, shock: "TechShock") -> "Preferences":
        """Preferences after adoption: xi_z scaled by 1+delta, xi_l by 1+psi*delta."""
        shocked = []
        for label, p in self.activities:
            if label == PRODUCTIVE:
                p = replace(p, xi=p.xi * (1.0 + shock.delta_z))
            elif label == LEISURE:
                p = replace(p, xi=p.xi * (1.0 + shock.psi * shock.delta_z))
            shocked.append((label, p))
        return Preferences(tuple(shocked))


@dataclass(frozen=True)
class Allocation:
    """An equilibrium time split: per-activity hours, budget, shadow price."""

    hours: dict[str, float]
    total: float
    shadow_price: float

    def hours_array(self, labels: Iterable[str]) -> np.ndarray:
        return np.array([self.hours[label] for label in labels])


@dataclass(frozen=True)
class TechShock:
    """Adoption shock: productive efficiency gain delta_z, spillover ratio psi,
    and the time-denominated adoption cost."""

    delta_z: float
    psi: float = 0.0
    cost_time: float = 0.0

    def __post_init__(self) -> None:
        if self.delta_z < 0.0:
            raise ValueError("delta_z must be nonnegative")
        if not 0.0 <= self.psi <= 1.0:
            raise ValueError("psi must lie in [0, 1]")
        if self.cost_time < 0.0:
            raise ValueError("cost_time must be nonnegative")


@dataclass(frozen=True)
class TreatmentEffects:
    """Per-activity log-point changes in time use from adoption.

    ``exact`` is True when the values come from two equilibrium solves
    (ln h_adopt - ln h_no), False for the first-order formulas.
    """

    beta_gpt: dict[str, float]
    exact: bool


def demand(params: ActivityParams, omega: float) -> float:
    """Closed-form activity demand (theta xi)^(eta-1) * omega^(-eta).

    At eta = 1 the shifters drop out and demand is 1/omega. Computed in the
    log domain so extreme parameter draws do not overflow.
    """
    if omega <= 0.0:
        raise ValueError("omega must be positive")
    if params.is_log_utility:
        return 1.0 / omega
    return math.exp((params.eta - 1.0) * math.log(params.scale) - params.eta * math.log(omega))


def utility(prefs: Preferences, hours: np.ndarray) -> np.ndarray | float:
    """Flow utility of an allocation; vectorized over leading axes of ``hours``.

    ``hours`` has the activity axis last, ordered as ``prefs.activities``.
    Nonpositive hours yield -inf (the isoelastic terms are not defined there),
    which keeps grid-search objectives well behaved near the simplex faces.
    """
    h = np.asarray(hours, dtype=float)
    if h.shape[-1] != len(prefs.activities):
        raise ValueError(f"hours last axis must have length {len(prefs.activities)}")
    out = np.zeros(h.shape[:-1])
    valid = np.all(h > 0.0, axis=-1)
    # Invalid entries get a dummy log so the arithmetic stays finite; they are
    # masked to -inf at the end.
    log_h = np.log(np.where(h > 0.0, h, 1.0))
    for idx, (_, p) in enumerate(prefs.activities):
        log_term = math.log(p.scale) + log_h[..., idx]
        if p.is_log_utility:
            out = out + log_term
        else:
            a = 1.0 - 1.0 / p.eta
            out = out + np.exp(a * log_term) / a
    out = np.where(valid, out, -np.inf)
    return float(out) if out.ndim == 0 else out


def _excess_demand(prefs: Preferences, omega: float, total: float) -> float:
    return sum(demand(p, omega) for _, p in prefs.activities) - total


def _bracket_shadow_price(prefs: Preferences, total: float) -> tuple[float, float]:
    """Find [lo, hi] with excess demand positive at lo and negative at hi.

    Excess demand is strictly decreasing in omega. Starts from the default
    window and expands geometrically to the hard limits before giving up.
    """
    lo, hi = _OMEGA_BRACKET
    while _excess_demand(prefs, lo, total) <= 0.0:
        lo /= 10.0
        if lo < _OMEGA_LIMIT[0]:
            raise AllocationError(
                f"no sign change: excess demand nonpositive down to omega={lo * 10.0:g} "
                f"(bracket [{lo * 10.0:g}, {hi:g}])"
            )
    while _excess_demand(prefs, hi, total) >= 0.0:
        hi *= 10.0
        if hi > _OMEGA_LIMIT[1]:
            raise AllocationError(
                f"no sign change: excess demand nonnegative up to omega={hi / 10.0:g} "
                f"(bracket [{lo:g}, {hi / 10.0:g}])"
            )
    return lo, hi


def solve_allocation(prefs: Preferences, total: float, tol: float = 1e-8) -> Allocation:
    """Solve for the equilibrium allocation of ``total`` time across activities.

    Root-finds the shadow price on g(omega) = sum_a demand_a(omega) - total,
    which is strictly decreasing: bisection in log omega to relative tolerance
    1e-12 (capped at 200 iterations), then a single Newton polish. Returned
    hours satisfy the budget within ``tol`` and the first-order conditions
    exactly by construction (hours are evaluated from the demand system).
    """
    if total <= 0.0:
        raise ValueError("total must be positive")
    if tol <= 0.0:
        raise ValueError("tol must be positive")

    lo, hi = _bracket_shadow_price(prefs, total)
    log_lo, log_hi = math.log(lo), math.log(hi)
    for _ in range(_BISECT_MAX_ITER):
        if log_hi - log_lo <= _BISECT_REL_TOL:
            break
        mid = 0.5 * (log_lo + log_hi)
        if _excess_demand(prefs, math.exp(mid), total) > 0.0:
            log_lo = mid
        else:
            log_hi = mid

    omega = math.exp(0.5 * (log_lo + log_hi))
    # Newton polish: g'(omega) = -sum eta_a h_a / omega.
    hours_at = np.array([demand(p, omega) for _, p in prefs.activities])
    g = hours_at.sum() - total
    g_prime = -(prefs.etas * hours_at).sum() / omega
    if g_prime != 0.0:
        polished = omega - g / g_prime
        if polished > 0.0:
            omega = polished

    hours = {label: demand(p, omega) for label, p in prefs.activities}
    residual = abs(sum(hours.values()) - total)
    if residual > tol:
        raise AllocationError(
            f"budget residual {residual:g} exceeds tol {tol:g} at omega={omega:g}"
        )
    return Allocation(hours=hours, total=total, shadow_price=omega)


def adoption_gain(prefs: Preferences, alloc_no: Allocation, shock: TechShock) -> float:
    """First-order envelope approximation of the utility gain from adoption.

    Equals delta_z * z_no * omega_no: only the direct efficiency effect on the
    productive margin matters to first order, since the reallocation itself is
    an envelope term.
    """
    if PRODUCTIVE not in alloc_no.hours:
        raise KeyError("no-adopt allocation lacks a productive activity")
    return shock.delta_z * alloc_no.hours[PRODUCTIVE] * alloc_no.shadow_price


def should_adopt(shock: TechShock, alloc_no: Allocation) -> bool:
    """Adopt iff the freed productive time delta_z * z_no covers the time cost."""
    if PRODUCTIVE not in alloc_no.hours:
        raise KeyError("no-adopt allocation lacks a productive activity")
    return shock.delta_z * alloc_no.hours[PRODUCTIVE] >= shock.cost_time


def exact_effects(prefs: Preferences, total: float, shock: TechShock, tol: float = 1e-8) -> TreatmentEffects:
    """Treatment effects from two equilibrium solves: ln h_adopt - ln h_no."""
    alloc_no = solve_allocation(prefs, total, tol)
    alloc_adopt = solve_allocation(prefs.with_shock(shock), total, tol)
    beta = {
        label: math.log(alloc_adopt.hours[label]) - math.log(alloc_no.hours[label])
        for label in prefs.labels
    }
    return TreatmentEffects(beta_gpt=beta, exact=True)


def firstorder_effects(prefs: Preferences, alloc_no: Allocation, shock: TechShock) -> TreatmentEffects:
    """First-order treatment effects for the two-activity, psi = 0 case.

    beta_z = (eta_z - 1) / (1 + (eta_z/eta_l)(z/l)) * ln(1 + delta)
    beta_l = (1 - eta_z) (eta_l/eta_z) / (1 + (eta_l/eta_z)(l/z)) * ln(1 + delta)

    evaluated at the no-adopt shares. Three-activity preferences or psi != 0
    have no closed first-order form here and are rejected.
    """
    if len(prefs.activities) != 2:
        raise UnsupportedConfigurationError(
            "first-order effects are derived for exactly 2 activities"
        )
    if shock.psi != 0.0:
        raise UnsupportedConfigurationError("first-order effects require psi = 0")
    if set(prefs.labels) != {PRODUCTIVE, LEISURE}:
        raise UnsupportedConfigurationError(
            f"first-order effects need labels ({PRODUCTIVE}, {LEISURE}), got {prefs.labels}"
        )
    eta_z = prefs.params(PRODUCTIVE).eta
    eta_l = prefs.params(LEISURE).eta
    z = alloc_no.hours[PRODUCTIVE]
    ell = alloc_no.hours[LEISURE]
    log_gain = math.log1p(shock.delta_z)
    beta_z = (eta_z - 1.0) / (1.0 + (eta_z / eta_l) * (z / ell)) * log_gain
    beta_l = (1.0 - eta_z) * (eta_l / eta_z) / (1.0 + (eta_l / eta_z) * (ell / z)) * log_gain
    return TreatmentEffects(beta_gpt={PRODUCTIVE: beta_z, LEISURE: beta_l}, exact=False)


def gap_identity_lhs(effects: TreatmentEffects, prefs: Preferences) -> float:
    """Curvature-deflated effect gap beta_z/eta_z - beta_l/eta_l.

    For exact effects this equals ((eta_z-1)/eta_z) ln(1+delta_z)
    - ((eta_l-1)/eta_l) ln(1+psi delta_z) to machine precision; callers
    compare against that right-hand side.
    """
    if PRODUCTIVE not in effects.beta_gpt or LEISURE not in effects.beta_gpt:
        raise KeyError("effects must include productive and leisure activities")
    eta_z = prefs.params(PRODUCTIVE).eta
    eta_l = prefs.params(LEISURE).eta
    return effects.beta_gpt[PRODUCTIVE] / eta_z - effects.beta_gpt[LEISURE] / eta_l
