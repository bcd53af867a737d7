"""Synthetic household browsing panels with known structural ground truth.

Three generators share one config: a household-level long-difference panel
with endogenous technology adoption and a pre-release exposure instrument, a
cell-level Engel panel whose hours come from the structural allocation model
(so true elasticities are known by construction), and 30-minute interval data
with a configurable GPT-window reallocation gap. Every generator is a pure
function of the config, including its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Mapping

import numpy as np
import pandas as pd

from .errors import ConfigError
from .model import (
    ActivityParams,
    Preferences,
    TreatmentEffects,
    solve_allocation,
)

__all__ = [
    "CATEGORIES",
    "DgpConfig",
    "SimulationTruth",
    "generate_long_difference",
    "generate_engel_panel",
    "engel_truth",
    "generate_intervals",
    "config_from_text",
    "load_config",
    "config_to_text",
]

CATEGORIES = ("leisure", "productive", "mixed", "adcdn")

# Quarterly log-duration intercepts (seconds) by category.
_BASE_LOG_SECONDS = {
    "leisure": math.log(9000.0),
    "productive": math.log(4320.0),
    "mixed": math.log(5400.0),
    "adcdn": math.log(360.0),
}

# 30-minute slots 09:00-18:00; interval composition tilts toward productive
# browsing here, which is what makes time-of-day matching meaningful.
_WORK_BUCKETS = np.arange(18, 36)
_OFF_BUCKETS = np.array([b for b in range(48) if b not in set(_WORK_BUCKETS.tolist())])
_WORK_PROB_GPT = 0.55
_WORK_PROB_CONTROL = 0.42
_WORK_TILT = {"leisure": -0.05, "productive": 0.06, "mixed": -0.01, "adcdn": 0.0}
_INCOME_TILT = {"leisure": -0.01, "productive": 0.01, "mixed": 0.0, "adcdn": 0.0}

_NOISE_KEYS = ("panel", "adoption", "household", "cell", "quarter", "engel_taste", "engel_h")


def _default_effects() -> TreatmentEffects:
    return TreatmentEffects(
        beta_gpt={"leisure": 1.512, "productive": 0.011, "mixed": -0.285, "adcdn": 0.0},
        exact=True,
    )


def _default_engel_etas() -> dict[str, float]:
    return {"leisure": 1.2366, "productive": 0.8379, "mixed": 0.999}


def _default_noise_sd() -> dict[str, float]:
    return {
        "panel": 0.8,  # idiosyncratic quarterly log-duration noise
        "adoption": 1.0,  # latent adoption propensity noise
        "household": 0.5,  # permanent household taste heterogeneity
        "cell": 0.3,  # demographic-cell adoption shifters
        "quarter": 0.2,  # cell-by-quarter outcome shifters
        "engel_taste": 0.05,  # per-activity taste shocks in the Engel panel
        "engel_h": 0.12,  # non-rain shocks to cell total browsing time
    }


@dataclass(frozen=True)
class DgpConfig:
    """Everything the generators need; a fixed seed gives byte-identical output.

    ``true_effects`` holds the per-category log-point adoption effects applied
    to post-period durations. ``engel_etas`` are the per-activity curvatures of
    the Engel panel; its base-period shares are either given explicitly or
    derived so that the share-weighted curvature equals ``engel_eta_bar`` with
    the productive share pinned at ``engel_productive_share``.
    """

    n_households: int = 10_000
    n_quarters: int = 12
    seed: int = 777
    true_effects: TreatmentEffects = field(default_factory=_default_effects)
    exposure_strength: float = 0.15
    confound_strength: float = 0.8
    engel_etas: dict[str, float] = field(default_factory=_default_engel_etas)
    rain_elasticity: float = 0.15
    noise_sd: dict[str, float] = field(default_factory=_default_noise_sd)
    demographic_cells: tuple[int, int, int] = (3, 3, 4)
    adoption_rate: float = 0.2
    adoption_quarter: int = 1
    exposure_log_mean: float = -2.23
    exposure_log_sd: float = 1.3
    engel_eta_bar: float = 0.9
    engel_base_shares: dict[str, float] | None = None
    engel_productive_share: float = 0.75
    engel_total_hours: float = 4.0
    n_intervals: int = 50_000
    gpt_window_share: float = 0.3
    window_gap_productive: float = 0.252
    window_gap_leisure: float = -0.137
    interval_concentration: float = 30.0

    def __post_init__(self) -> None:
        if self.n_households < 1:
            raise ConfigError("n_households must be at least 1")
        if self.n_quarters < 8:
            raise ConfigError("n_quarters must be at least 8 (four pre, four post)")
        if self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        missing = [k for k in _NOISE_KEYS if k not in self.noise_sd]
        if missing:
            raise ConfigError(f"noise_sd missing keys: {missing}")
        bad_sd = {k: v for k, v in self.noise_sd.items() if v <= 0.0}
        if bad_sd:
            raise ConfigError(f"noise_sd entries must be positive: {bad_sd}")
        if self.exposure_log_sd <= 0.0:
            raise ConfigError("exposure_log_sd must be positive (degenerate exposure)")
        if not 0.0 < self.adoption_rate < 1.0:
            raise ConfigError("adoption_rate must lie strictly between 0 and 1")
        if not 1 <= self.adoption_quarter <= self.n_quarters - 8:
            raise ConfigError(
                "adoption_quarter must be >= 1 (post-release) and leave the last "
                "four quarters fully treated"
            )
        if len(self.demographic_cells) != 3 or any(c < 1 for c in self.demographic_cells):
            raise ConfigError("demographic_cells must be three positive counts")
        if unknown := set(self.true_effects.beta_gpt) - set(CATEGORIES):
            raise ConfigError(f"true_effects has unknown categories: {sorted(unknown)}")
        if len(self.engel_etas) < 2:
            raise ConfigError("engel_etas needs at least 2 activities")
        if any(v <= 0.0 for v in self.engel_etas.values()):
            raise ConfigError("engel_etas must be positive")
        if self.engel_eta_bar <= 0.0 or self.engel_total_hours <= 0.0:
            raise ConfigError("engel_eta_bar and engel_total_hours must be positive")
        if not 0.0 < self.engel_productive_share < 1.0:
            raise ConfigError("engel_productive_share must lie in (0, 1)")
        if self.n_intervals < 1:
            raise ConfigError("n_intervals must be at least 1")
        if not 0.0 <= self.gpt_window_share < 1.0:
            raise ConfigError("gpt_window_share must lie in [0, 1)")
        if self.interval_concentration <= 0.0:
            raise ConfigError("interval_concentration must be positive")

    @property
    def quarters(self) -> list[int]:
        """Quarter indexes, release quarter = 0, four pre-release quarters."""
        return list(range(-4, self.n_quarters - 4))

    @property
    def n_cells(self) -> int:
        ni, na, nr = self.demographic_cells
        return ni * na * nr


@dataclass(frozen=True)
class SimulationTruth:
    """Ground truth stored alongside a long-difference panel.

    ``households`` includes the unobservable confound draw; ``noise_free``
    (when requested) carries the pre-noise log durations and their no-adoption
    counterfactuals at (household, quarter, category) grain.
    """

    households: pd.DataFrame
    true_effects: dict[str, float]
    adoption_quarter: int
    noise_free: pd.DataFrame | None = None


def _household_cells(rng: np.random.Generator, config: DgpConfig) -> pd.DataFrame:
    ni, na, nr = config.demographic_cells
    n = config.n_households
    return pd.DataFrame(
        {
            "household_id": np.arange(1, n + 1),
            "income_bin": rng.integers(1, ni + 1, n),
            "age_bin": rng.integers(1, na + 1, n),
            "region_id": rng.integers(1, nr + 1, n),
        }
    )


def generate_long_difference(
    config: DgpConfig, include_noise_free: bool = False
) -> tuple[pd.DataFrame, SimulationTruth]:
    """Panel of quarterly category durations with endogenous adoption.

    Households draw a log-normal pre-release exposure and a latent adoption
    propensity exposure_strength * ln(exposure) + cell effect +
    confound_strength * u + noise, thresholded at the adoption-rate quantile.
    Adopters' post-period log durations shift by the configured true effects;
    the same confound u loads on post-period leisure, which is what biases
    naive OLS while leaving the exposure instrument valid (u is drawn
    independently of exposure).
    """
    rng = np.random.default_rng([config.seed, 1])
    n = config.n_households
    quarters = np.array(config.quarters)
    n_q = len(quarters)
    n_cat = len(CATEGORIES)

    households = _household_cells(rng, config)
    ni, na, nr = config.demographic_cells
    cell_idx = (
        (households["income_bin"].to_numpy() - 1) * na * nr
        + (households["age_bin"].to_numpy() - 1) * nr
        + (households["region_id"].to_numpy() - 1)
    )

    ln_exposure = rng.normal(config.exposure_log_mean, config.exposure_log_sd, n)
    u = rng.normal(0.0, 1.0, n)
    cell_eff = rng.normal(0.0, config.noise_sd["cell"], config.n_cells)
    eps_adopt = rng.normal(0.0, config.noise_sd["adoption"], n)
    latent = (
        config.exposure_strength * (ln_exposure - config.exposure_log_mean)
        + cell_eff[cell_idx]
        + config.confound_strength * u
        + eps_adopt
    )
    if np.var(latent) == 0.0:
        raise ConfigError("degenerate adoption latent: no variance")
    threshold = np.quantile(latent, 1.0 - config.adoption_rate)
    adopted = latent >= threshold

    hh_eff = rng.normal(0.0, config.noise_sd["household"], (n, n_cat))
    qcell_eff = rng.normal(0.0, config.noise_sd["quarter"], (config.n_cells, n_q, n_cat))
    eps_panel = rng.normal(0.0, config.noise_sd["panel"], (n, n_q, n_cat))
    coverage = rng.uniform(0.3, 0.9, n)

    base = np.array([_BASE_LOG_SECONDS[c] for c in CATEGORIES])
    beta = np.array([config.true_effects.beta_gpt.get(c, 0.0) for c in CATEGORIES])
    post = (quarters >= config.adoption_quarter).astype(float)
    leisure_mask = np.array([1.0 if c == "leisure" else 0.0 for c in CATEGORIES])

    ln_nf = (
        base[None, None, :]
        + hh_eff[:, None, :]
        + qcell_eff[cell_idx, :, :]
        + adopted[:, None, None] * beta[None, None, :] * post[None, :, None]
        + u[:, None, None] * post[None, :, None] * leisure_mask[None, None, :]
    )
    ln_cf = ln_nf - adopted[:, None, None] * beta[None, None, :] * post[None, :, None]
    duration = np.exp(ln_nf + eps_panel)

    panel = pd.DataFrame(
        {
            "household_id": np.repeat(households["household_id"].to_numpy(), n_q * n_cat),
            "quarter": np.tile(np.repeat(quarters, n_cat), n),
            "income_bin": np.repeat(households["income_bin"].to_numpy(), n_q * n_cat),
            "age_bin": np.repeat(households["age_bin"].to_numpy(), n_q * n_cat),
            "region_id": np.repeat(households["region_id"].to_numpy(), n_q * n_cat),
            "category": np.tile(np.array(CATEGORIES, dtype=object), n * n_q),
            "duration_seconds": duration.reshape(-1),
            "weight": np.ones(n * n_q * n_cat),
        }
    )

    truth_households = households.assign(
        exposure=np.exp(ln_exposure),
        coverage=coverage,
        adopted=adopted.astype(int),
        confound=u,
        latent=latent,
    )
    noise_free = None
    if include_noise_free:
        noise_free = pd.DataFrame(
            {
                "household_id": panel["household_id"],
                "quarter": panel["quarter"],
                "category": panel["category"],
                "ln_duration": ln_nf.reshape(-1),
                "ln_duration_counterfactual": ln_cf.reshape(-1),
            }
        )
    truth = SimulationTruth(
        households=truth_households,
        true_effects=dict(config.true_effects.beta_gpt),
        adoption_quarter=config.adoption_quarter,
        noise_free=noise_free,
    )
    return panel, truth


# --------------------------------------------------------------------------
# Engel panel


def _solve_base_shares(config: DgpConfig) -> dict[str, float]:
    """Base-period activity shares consistent with the target average curvature.

    Explicit shares win. Otherwise: with two activities the single share
    solves s*eta_1 + (1-s)*eta_2 = eta_bar; with three, the productive share
    is pinned and the other two solve the remaining 2x2 system. Equal
    curvatures split the remainder evenly (any split is consistent, but then
    eta_bar must equal the common curvature).
    """
    etas = config.engel_etas
    labels = list(etas)
    if config.engel_base_shares is not None:
        shares = dict(config.engel_base_shares)
        if set(shares) != set(labels):
            raise ConfigError("engel_base_shares labels must match engel_etas")
        total = sum(shares.values())
        if abs(total - 1.0) > 1e-9 or any(s <= 0.0 for s in shares.values()):
            raise ConfigError("engel_base_shares must be positive and sum to 1")
        return shares

    target = config.engel_eta_bar
    if len(labels) == 2:
        a, b = labels
        if abs(etas[a] - etas[b]) < 1e-12:
            if abs(etas[a] - target) > 1e-9:
                raise ConfigError("equal curvatures require engel_eta_bar to match them")
            return {a: 0.5, b: 0.5}
        s = (target - etas[b]) / (etas[a] - etas[b])
        shares = {a: s, b: 1.0 - s}
    else:
        if "productive" not in labels:
            raise ConfigError("three-activity engel_etas must include 'productive'")
        others = [lab for lab in labels if lab != "productive"]
        if len(others) != 2:
            raise ConfigError("share derivation supports at most 3 activities")
        p = config.engel_productive_share
        rest = 1.0 - p
        remainder = target - p * etas["productive"]
        a, b = others
        if abs(etas[a] - etas[b]) < 1e-12:
            if abs(rest * etas[a] - remainder) > 1e-9:
                raise ConfigError(
                    "equal non-productive curvatures are inconsistent with engel_eta_bar"
                )
            shares = {"productive": p, a: rest / 2.0, b: rest / 2.0}
        else:
            s_a = (remainder - rest * etas[b]) / (etas[a] - etas[b])
            shares = {"productive": p, a: s_a, b: rest - s_a}
    if any(not 0.0 < s < 1.0 for s in shares.values()):
        raise ConfigError(
            f"derived base shares {shares} infeasible; adjust engel_eta_bar or supply "
            f"engel_base_shares"
        )
    return shares


def _base_scales(config: DgpConfig, shares: Mapping[str, float]) -> dict[str, float]:
    """Combined shifters theta*xi that reproduce the base shares at the base H.

    Anchors the activity with curvature closest to 1 at scale 1 and backs out
    the shadow price from its demand; the remaining scales then invert the
    demand system. Works at eta = 1 for the anchor (demand is scale-free
    there); a second unit-curvature activity is only consistent if it has the
    same share.
    """
    etas = config.engel_etas
    H = config.engel_total_hours
    labels = list(etas)
    anchor = min(labels, key=lambda lab: abs(etas[lab] - 1.0))
    ln_omega = -math.log(shares[anchor] * H) / etas[anchor]
    scales = {anchor: 1.0}
    for lab in labels:
        if lab == anchor:
            continue
        if abs(etas[lab] - 1.0) < 1e-9:
            if abs(shares[lab] - shares[anchor]) > 1e-12:
                raise ConfigError(
                    "two unit-curvature activities need equal base shares"
                )
            scales[lab] = 1.0
            continue
        scales[lab] = math.exp(
            (math.log(shares[lab] * H) + etas[lab] * ln_omega) / (etas[lab] - 1.0)
        )
    return scales


def engel_truth(config: DgpConfig) -> dict:
    """Ground truth of the Engel panel: per-activity elasticities eta_a / eta_bar."""
    shares = _solve_base_shares(config)
    eta_bar = sum(shares[lab] * eta for lab, eta in config.engel_etas.items())
    return {
        "beta": {lab: eta / eta_bar for lab, eta in config.engel_etas.items()},
        "eta_bar": eta_bar,
        "base_shares": shares,
    }


def generate_engel_panel(config: DgpConfig) -> pd.DataFrame:
    """Cell-by-quarter panel of activity hours driven by rain-shifted budgets.

    Total browsing time moves with log precipitation (the instrument), cell
    and quarter effects, and an idiosyncratic shock; hours then come from the
    structural allocation at the configured curvatures, so the true Engel
    elasticities are eta_a / eta_bar by construction. The idiosyncratic budget
    shock also tilts leisure tastes with weight ``confound_strength``, which
    makes naive OLS inconsistent while rain stays valid.
    """
    rng = np.random.default_rng([config.seed, 2])
    ni, na, nr = config.demographic_cells
    quarters = config.quarters
    n_cells = config.n_cells
    n_q = len(quarters)
    labels = list(config.engel_etas)
    etas = config.engel_etas

    shares = _solve_base_shares(config)
    scales = _base_scales(config, shares)

    ln_precip = rng.normal(1.0, 0.5, (n_cells, n_q))
    cell_eff = rng.normal(0.0, 0.15, n_cells)
    q_eff = rng.normal(0.0, 0.1, n_q)
    v_h = rng.normal(0.0, config.noise_sd["engel_h"], (n_cells, n_q))
    taste = rng.normal(0.0, config.noise_sd["engel_taste"], (n_cells, n_q, len(labels)))
    if "leisure" in labels:
        taste[:, :, labels.index("leisure")] += config.confound_strength * v_h

    ln_h = (
        math.log(config.engel_total_hours)
        + config.rain_elasticity * (ln_precip - 1.0)
        + cell_eff[:, None]
        + q_eff[None, :]
        + v_h
    )

    cells = [
        (i + 1, a + 1, r + 1)
        for i in range(ni)
        for a in range(na)
        for r in range(nr)
    ]
    rows = []
    for c_idx, (inc, age, reg) in enumerate(cells):
        for q_idx, quarter in enumerate(quarters):
            total = math.exp(ln_h[c_idx, q_idx])
            prefs = Preferences(
                tuple(
                    (
                        lab,
                        ActivityParams(
                            theta=scales[lab] * math.exp(taste[c_idx, q_idx, j]),
                            xi=1.0,
                            eta=etas[lab],
                        ),
                    )
                    for j, lab in enumerate(labels)
                )
            )
            alloc = solve_allocation(prefs, total)
            rows.append(
                (c_idx + 1, inc, age, reg, quarter, ln_precip[c_idx, q_idx], total)
                + tuple(alloc.hours[lab] for lab in labels)
            )
    columns = [
        "cell_id",
        "income_bin",
        "age_bin",
        "region_id",
        "quarter",
        "ln_precip",
        "total_hours",
        *[f"hours_{lab}" for lab in labels],
    ]
    return pd.DataFrame(rows, columns=columns)


# --------------------------------------------------------------------------
# intervals


def _interval_targets(config: DgpConfig) -> tuple[np.ndarray, np.ndarray]:
    """Never-user and GPT-window share targets per (work-hours, income) cell.

    Returns two arrays of shape (2, n_income, n_categories). The GPT side adds
    the configured productive/leisure gaps; the residual (shares must still
    sum to one) is absorbed by mixed and adcdn in proportion to their base
    shares.
    """
    ni = config.demographic_cells[0]
    base = {"leisure": 0.213, "productive": 0.549, "mixed": 0.215, "adcdn": 0.023}
    gap_p = config.window_gap_productive
    gap_l = config.window_gap_leisure

    control = np.empty((2, ni, len(CATEGORIES)))
    gpt = np.empty_like(control)
    for work in (0, 1):
        for inc in range(ni):
            cell = {
                c: base[c] + work * _WORK_TILT[c] + (inc - 1) * _INCOME_TILT[c]
                for c in CATEGORIES
            }
            resid = -(gap_p + gap_l)
            denom = cell["mixed"] + cell["adcdn"]
            gaps = {
                "productive": gap_p,
                "leisure": gap_l,
                "mixed": resid * cell["mixed"] / denom,
                "adcdn": resid * cell["adcdn"] / denom,
            }
            shifted = {c: cell[c] + gaps[c] for c in CATEGORIES}
            if any(v < 1e-3 for v in shifted.values()) or any(
                v < 1e-3 for v in cell.values()
            ):
                raise ConfigError(
                    f"window gaps push category shares below 1e-3 in cell "
                    f"(work={work}, income={inc + 1}): {shifted}"
                )
            control[work, inc] = [cell[c] for c in CATEGORIES]
            gpt[work, inc] = [shifted[c] for c in CATEGORIES]
    return control, gpt


def generate_intervals(config: DgpConfig) -> pd.DataFrame:
    """30-minute browsing intervals: user GPT windows plus never-user intervals.

    GPT windows oversample work hours and shift duration shares by the
    configured gaps; never-user intervals carry the base composition. Shares
    within an interval are Dirichlet draws around the cell target, so the
    matched contrast recovers the gaps in expectation.
    """
    rng = np.random.default_rng([config.seed, 3])
    n = config.n_intervals
    ni, na, _ = config.demographic_cells
    n_gpt = int(round(n * config.gpt_window_share))
    n_ctrl = n - n_gpt
    control_target, gpt_target = _interval_targets(config)

    def _draw_side(count: int, is_gpt: bool, id_base: int) -> pd.DataFrame:
        if count == 0:
            return pd.DataFrame()
        n_hh = max(1, count // 20)
        hh_income = rng.integers(1, ni + 1, n_hh)
        hh_age = rng.integers(1, na + 1, n_hh)
        hh = rng.integers(0, n_hh, count)
        dow = rng.integers(0, 7, count)
        p_work = _WORK_PROB_GPT if is_gpt else _WORK_PROB_CONTROL
        at_work = rng.random(count) < p_work
        bucket = np.where(
            at_work,
            _WORK_BUCKETS[rng.integers(0, len(_WORK_BUCKETS), count)],
            _OFF_BUCKETS[rng.integers(0, len(_OFF_BUCKETS), count)],
        )
        total = rng.uniform(300.0, 1800.0, count)
        target = gpt_target if is_gpt else control_target
        probs = target[at_work.astype(int), hh_income[hh] - 1]
        gamma = rng.gamma(shape=config.interval_concentration * probs)
        shares = gamma / gamma.sum(axis=1, keepdims=True)
        durations = shares * total[:, None]
        frame = pd.DataFrame(
            {
                "household_id": id_base + hh,
                "day_of_week": dow,
                "hour_bucket": bucket,
                "income_bin": hh_income[hh],
                "age_bin": hh_age[hh],
                "is_gpt_window": int(is_gpt),
            }
        )
        for j, cat in enumerate(CATEGORIES):
            frame[f"dur_{cat}"] = durations[:, j]
        return frame

    gpt_frame = _draw_side(n_gpt, True, 1)
    ctrl_frame = _draw_side(n_ctrl, False, 500_001)
    out = pd.concat([f for f in (gpt_frame, ctrl_frame) if not f.empty], ignore_index=True)
    return out


# --------------------------------------------------------------------------
# config file round trip


_INT_FIELDS = {"n_households", "n_quarters", "seed", "adoption_quarter", "n_intervals"}
_TUPLE_INT_FIELDS = {"demographic_cells"}
_MAPPING_FIELDS = {"noise_sd", "engel_etas", "engel_base_shares", "true_effects"}


def _parse_mapping(text: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" not in part:
            raise ConfigError(f"mapping entries need key:value form, got {part!r}")
        key, value = part.split(":", 1)
        out[key.strip()] = float(value)
    return out


def config_from_text(text: str) -> DgpConfig:
    """Parse a key = value config file into a DgpConfig.

    Keys are exactly the DgpConfig field names; '#' starts a comment. Mappings
    are written key:value comma lists, demographic_cells as three comma
    separated counts, and engel_base_shares accepts 'none'.
    """
    known = {f.name for f in fields(DgpConfig)}
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        try:
            if key in _INT_FIELDS:
                values[key] = int(value)
            elif key in _TUPLE_INT_FIELDS:
                values[key] = tuple(int(v) for v in value.split(","))
            elif key == "true_effects":
                values[key] = TreatmentEffects(beta_gpt=_parse_mapping(value), exact=True)
            elif key in _MAPPING_FIELDS:
                values[key] = None if value.lower() == "none" else _parse_mapping(value)
            else:
                values[key] = float(value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    return DgpConfig(**values)


def load_config(path) -> DgpConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_text(fh.read())


def config_to_text(config: DgpConfig) -> str:
    """Serialize a config back to the key = value format (17 significant digits)."""

    def fmt(value) -> str:
        if isinstance(value, bool):
            return str(value)
        if isinstance(value, float):
            return f"{value:.17g}"
        return str(value)

    lines = []
    for f in fields(DgpConfig):
        value = getattr(config, f.name)
        if f.name == "true_effects":
            body = ",".join(f"{k}:{fmt(v)}" for k, v in value.beta_gpt.items())
        elif isinstance(value, Mapping):
            body = ",".join(f"{k}:{fmt(v)}" for k, v in value.items())
        elif isinstance(value, tuple):
            body = ",".join(str(v) for v in value)
        elif value is None:
            body = "none"
        else:
            body = fmt(value)
        lines.append(f"{f.name} = {body}")
    return "\n".join(lines) + "\n"


def with_seed(config: DgpConfig, seed: int) -> DgpConfig:
    return replace(config, seed=seed)
