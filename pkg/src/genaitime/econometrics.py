"""Fixed-effects panel estimators and survey utilities.

Implements the within transform (composite categorical keys), weighted OLS and
just-identified 2SLS with heteroskedasticity-robust, one-way, and two-way
clustered covariance, the dynamic event study, Engel regressions in log and
share form, the matched GPT-window contrast, and post-stratification raking.

Normal equations are solved through orthogonal decompositions, never explicit
inverses, so rank problems surface as named-column errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import DataError

__all__ = [
    "RegressionSpec",
    "RegressionResult",
    "EngelEstimates",
    "WindowContrast",
    "RankError",
    "NoTreatmentWindowsError",
    "RakingError",
    "within_transform",
    "ols",
    "tsls",
    "event_study",
    "long_difference",
    "engel_loglog",
    "engel_shares",
    "window_contrast",
    "raking_weights",
]

_DEMEAN_TOL = 1e-12
_WEAK_F_THRESHOLD = 1.0


class RankError(ValueError):
    """Design matrix is rank deficient; names the collinear columns."""


class NoTreatmentWindowsError(ValueError):
    """The interval data contains no GPT windows to contrast."""


class RakingError(ValueError):
    """Raking inputs are inconsistent (bad target or unsupported cells)."""


@dataclass(frozen=True)
class RegressionSpec:
    """What to regress on what.

    ``fixed_effect_key`` and each cluster key are composite categoricals: a
    single column name or a tuple of column names treated as one interacted
    key. ``cluster_key`` is None, a single key, or a list of one or two keys
    (a list is always a collection of keys; use a tuple for one composite
    key).
    """

    outcome: str
    regressors: tuple[str, ...] = ()
    endogenous: str | None = None
    instrument: str | None = None
    fixed_effect_key: str | tuple[str, ...] | None = None
    cluster_key: object = None
    weights: str | None = None

    def __post_init__(self) -> None:
        if (self.endogenous is None) != (self.instrument is None):
            raise ValueError("endogenous and instrument must be supplied together")
        if len(self.cluster_keys()) > 2:
            raise ValueError("at most two cluster keys are supported")

    def cluster_keys(self) -> list:
        if self.cluster_key is None:
            return []
        if isinstance(self.cluster_key, list):
            return list(self.cluster_key)
        return [self.cluster_key]


@dataclass
class RegressionResult:
    """Point estimates with a robust covariance and bookkeeping.

    ``cluster_components`` holds the corrected per-key covariance pieces of
    the two-way estimator (keys "A", "B", "AB") when two cluster keys are
    used. ``dropped_rows`` counts observations removed for nonfinite values
    (for example zero durations after a log transform).
    """

    coefficients: pd.Series
    covariance: pd.DataFrame
    t_stats: pd.Series
    n_obs: int
    first_stage_f: float | None
    dof_adjustment: str
    warnings: list[str] = field(default_factory=list)
    dropped_rows: int = 0
    cluster_components: dict[str, pd.DataFrame] | None = None

    @property
    def se(self) -> pd.Series:
        return pd.Series(np.sqrt(np.diag(self.covariance.values)), index=self.coefficients.index)


@dataclass
class EngelEstimates:
    """Per-activity Engel estimates in one of the two functional forms.

    Log form populates ``beta`` directly; share form populates ``gamma`` and
    maps it to ``implied_beta_from_shares`` = 1 + gamma / mean_share (which is
    then also exposed as ``beta``, the elasticity this form delivers).
    """

    beta: dict[str, float]
    beta_se: dict[str, float]
    mean_share: dict[str, float]
    gamma: dict[str, float] | None = None
    gamma_se: dict[str, float] | None = None
    implied_beta_from_shares: dict[str, float] | None = None
    first_stage_f: dict[str, float] | None = None
    n_obs: int = 0
    dropped_rows: int = 0

    def gamma_addup(self) -> tuple[float, float]:
        """Sum of share coefficients and its combined SE (root sum of squares)."""
        if self.gamma is None or self.gamma_se is None:
            raise ValueError("share-form coefficients are not populated")
        total = sum(self.gamma.values())
        combined = math.sqrt(sum(se * se for se in self.gamma_se.values()))
        return total, combined


@dataclass
class WindowContrast:
    """Duration-weighted category shares inside GPT windows versus matched
    never-user intervals, and their difference."""

    gpt_shares: dict[str, float]
    control_shares: dict[str, float]
    difference: dict[str, float]
    cells_used: int
    dropped_cells: int
    n_gpt: int
    n_control: int


# --------------------------------------------------------------------------
# grouping / demeaning


def _group_codes(data: pd.DataFrame, key) -> np.ndarray:
    """Integer codes for a composite categorical key (order of appearance)."""
    if isinstance(key, str):
        cols = [key]
    else:
        cols = list(key)
    missing = [c for c in cols if c not in data.columns]
    if missing:
        raise DataError(f"key columns not in data: {missing}")
    if len(cols) == 1:
        codes, _ = pd.factorize(data[cols[0]], use_na_sentinel=False)
    else:
        codes, _ = pd.factorize(
            pd.MultiIndex.from_arrays([data[c] for c in cols]), use_na_sentinel=False
        )
    return codes.astype(np.int64)


def _demean_matrix(
    mat: np.ndarray, codes: np.ndarray, weights: np.ndarray | None = None
) -> np.ndarray:
    """Subtract (weighted) group means from each column of ``mat``."""
    n_groups = int(codes.max()) + 1 if codes.size else 0
    if weights is None:
        denom = np.bincount(codes, minlength=n_groups)
        out = np.empty_like(mat)
        for j in range(mat.shape[1]):
            sums = np.bincount(codes, weights=mat[:, j], minlength=n_groups)
            out[:, j] = mat[:, j] - (sums / denom)[codes]
        return out
    denom = np.bincount(codes, weights=weights, minlength=n_groups)
    out = np.empty_like(mat)
    for j in range(mat.shape[1]):
        sums = np.bincount(codes, weights=weights * mat[:, j], minlength=n_groups)
        out[:, j] = mat[:, j] - (sums / denom)[codes]
    return out


def within_transform(
    data: pd.DataFrame,
    fe_key,
    columns: Sequence[str] | None = None,
    weights: str | None = None,
) -> pd.DataFrame:
    """Demean columns inside each cell of a composite categorical key.

    Equivalent to including the full set of cell dummies. Returns only the
    demeaned columns (same index as ``data``); group means of the result are
    zero to 1e-12, and the transform is idempotent.
    """
    codes = _group_codes(data, fe_key)
    key_cols = {fe_key} if isinstance(fe_key, str) else set(fe_key)
    if columns is None:
        columns = [
            c
            for c in data.columns
            if c not in key_cols and c != weights and pd.api.types.is_numeric_dtype(data[c])
        ]
    mat = data[list(columns)].to_numpy(dtype=float)
    w = data[weights].to_numpy(dtype=float) if weights is not None else None
    demeaned = _demean_matrix(mat, codes, w)
    return pd.DataFrame(demeaned, columns=list(columns), index=data.index)


def _demean_multiway(
    mat: np.ndarray,
    codes_list: list[np.ndarray],
    weights: np.ndarray | None = None,
    tol: float = _DEMEAN_TOL,
    max_iter: int = 500,
) -> np.ndarray:
    """Iterated demeaning over several FE groupings until all group means vanish."""
    out = mat.copy()
    scale = max(1.0, float(np.abs(mat).max())) if mat.size else 1.0
    for _ in range(max_iter):
        for codes in codes_list:
            out = _demean_matrix(out, codes, weights)
        worst = 0.0
        for codes in codes_list:
            n_groups = int(codes.max()) + 1
            if weights is None:
                denom = np.bincount(codes, minlength=n_groups)
            else:
                denom = np.bincount(codes, weights=weights, minlength=n_groups)
            for j in range(out.shape[1]):
                wcol = out[:, j] if weights is None else weights * out[:, j]
                means = np.bincount(codes, weights=wcol, minlength=n_groups) / denom
                worst = max(worst, float(np.abs(means).max()))
        if worst <= tol * scale:
            return out
    raise RuntimeError(f"iterated demeaning did not converge (residual {worst:g})")


# --------------------------------------------------------------------------
# core WLS / sandwich machinery


def _qr_solve(Xw: np.ndarray, yw: np.ndarray, names: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Least squares via QR; returns (coefficients, (X'X)^-1). Raises RankError."""
    q, r = np.linalg.qr(Xw)
    diag = np.abs(np.diag(r))
    tol = diag.max() * max(Xw.shape) * np.finfo(float).eps if diag.size else 0.0
    bad = [names[i] for i in range(len(names)) if diag[i] <= tol]
    if bad:
        raise RankError(f"design matrix is rank deficient; collinear columns: {bad}")
    coef = np.linalg.solve(r, q.T @ yw)
    r_inv = np.linalg.solve(r, np.eye(r.shape[0]))
    xtx_inv = r_inv @ r_inv.T
    return coef, xtx_inv


def _cluster_meat(scores: np.ndarray, codes: np.ndarray | None) -> tuple[np.ndarray, int]:
    """Outer-product meat matrix, summed within clusters; returns (meat, G)."""
    if codes is None:
        return scores.T @ scores, scores.shape[0]
    n_groups = int(codes.max()) + 1
    sums = np.zeros((n_groups, scores.shape[1]))
    for j in range(scores.shape[1]):
        sums[:, j] = np.bincount(codes, weights=scores[:, j], minlength=n_groups)
    return sums.T @ sums, n_groups


def _clip_psd(mat: np.ndarray) -> np.ndarray:
    """Repair a symmetric matrix to PSD by clipping negative eigenvalues at 0."""
    sym = 0.5 * (mat + mat.T)
    vals, vecs = np.linalg.eigh(sym)
    if vals.min() >= 0.0:
        return sym
    return (vecs * np.clip(vals, 0.0, None)) @ vecs.T


def _intersection_codes(codes_a: np.ndarray, codes_b: np.ndarray) -> np.ndarray:
    pair = codes_a.astype(np.int64) * (int(codes_b.max()) + 1) + codes_b
    codes, _ = pd.factorize(pair, use_na_sentinel=False)
    return codes.astype(np.int64)


def _sandwich(
    data: pd.DataFrame,
    bread_left: np.ndarray,
    bread_right: np.ndarray,
    scores: np.ndarray,
    n: int,
    k: int,
    cluster_keys: list,
    names: Sequence[str],
) -> tuple[pd.DataFrame, str, dict[str, pd.DataFrame] | None]:
    """Robust covariance with 0, 1, or 2 cluster keys.

    No keys: HC1 scaling n/(n-k). One key: CR1 scaling (G/(G-1))((n-1)/(n-k)).
    Two keys: CR1-corrected C_A + C_B - C_AB with PSD repair by eigenvalue
    clipping; the corrected components are returned for inspection.
    """

    def cov_for(codes: np.ndarray | None) -> tuple[np.ndarray, str]:
        meat, g = _cluster_meat(scores, codes)
        if codes is None:
            factor = n / (n - k)
            desc = f"HC1: n/(n-k) with n={n}, k={k}"
        else:
            factor = (g / (g - 1)) * ((n - 1) / (n - k))
            desc = f"CR1: (G/(G-1))((n-1)/(n-k)) with G={g}, n={n}, k={k}"
        return factor * (bread_left @ meat @ bread_right), desc

    if not cluster_keys:
        cov, desc = cov_for(None)
        return pd.DataFrame(cov, index=names, columns=names), desc, None
    if len(cluster_keys) == 1:
        cov, desc = cov_for(_group_codes(data, cluster_keys[0]))
        return pd.DataFrame(cov, index=names, columns=names), desc, None

    codes_a = _group_codes(data, cluster_keys[0])
    codes_b = _group_codes(data, cluster_keys[1])
    cov_a, desc_a = cov_for(codes_a)
    cov_b, desc_b = cov_for(codes_b)
    cov_ab, desc_ab = cov_for(_intersection_codes(codes_a, codes_b))
    combined = _clip_psd(cov_a + cov_b - cov_ab)
    components = {
        "A": pd.DataFrame(cov_a, index=names, columns=names),
        "B": pd.DataFrame(cov_b, index=names, columns=names),
        "AB": pd.DataFrame(cov_ab, index=names, columns=names),
    }
    desc = f"two-way CGM: [{desc_a}] + [{desc_b}] - [{desc_ab}], PSD repair by eigenvalue clipping"
    return pd.DataFrame(combined, index=names, columns=names), desc, components


def _prepare(
    data: pd.DataFrame,
    value_cols: list[str],
    spec: RegressionSpec,
) -> tuple[pd.DataFrame, np.ndarray, int]:
    """Subset to used columns, drop nonfinite rows, return (frame, weights, dropped)."""
    key_cols: list[str] = []
    for key in ([spec.fixed_effect_key] if spec.fixed_effect_key is not None else []) + spec.cluster_keys():
        key_cols.extend([key] if isinstance(key, str) else list(key))
    if spec.weights is not None:
        key_cols.append(spec.weights)
    missing = [c for c in value_cols + key_cols if c not in data.columns]
    if missing:
        raise DataError(f"columns not in data: {missing}")
    frame = data[list(dict.fromkeys(value_cols + key_cols))].copy()
    finite = np.isfinite(frame[value_cols].to_numpy(dtype=float)).all(axis=1)
    if spec.weights is not None:
        finite &= np.isfinite(frame[spec.weights].to_numpy(dtype=float))
    dropped = int((~finite).sum())
    frame = frame.loc[finite].reset_index(drop=True)
    if frame.empty:
        raise DataError("no finite observations left after dropping bad rows")
    if spec.weights is not None:
        w = frame[spec.weights].to_numpy(dtype=float)
        if (w <= 0).any():
            raise DataError("weights must be strictly positive")
    else:
        w = np.ones(len(frame))
    return frame, w, dropped


def _design(
    frame: pd.DataFrame,
    spec: RegressionSpec,
    x_cols: list[str],
    extra_cols: list[str],
    w: np.ndarray,
) -> tuple[np.ndarray, dict[str, np.ndarray], list[str]]:
    """Within-transform (or add a constant) and return the design pieces.

    Returns (X, extras, names) where extras maps each column in
    ``extra_cols`` (outcome, endogenous, instrument) to its transformed
    vector. Demeaning uses the regression weights so FE results match
    weighted dummy-variable regression.
    """
    all_cols = x_cols + extra_cols
    mat = frame[all_cols].to_numpy(dtype=float)
    if spec.fixed_effect_key is not None:
        codes = _group_codes(frame, spec.fixed_effect_key)
        mat = _demean_matrix(mat, codes, w if spec.weights is not None else None)
        X = mat[:, : len(x_cols)]
        names = list(x_cols)
    else:
        X = np.column_stack([np.ones(len(frame)), mat[:, : len(x_cols)]])
        names = ["const", *x_cols]
    extras = {c: mat[:, len(x_cols) + i] for i, c in enumerate(extra_cols)}
    return X, extras, names


def ols(spec: RegressionSpec, data: pd.DataFrame) -> RegressionResult:
    """Weighted least squares with fixed effects and robust/clustered errors.

    Without a fixed-effect key a constant is added automatically. Rows with
    nonfinite values in any used column are dropped and counted in
    ``dropped_rows``.
    """
    if spec.endogenous is not None:
        raise ValueError("spec has an endogenous regressor; use tsls")
    frame, w, dropped = _prepare(data, [spec.outcome, *spec.regressors], spec)
    X, extras, names = _design(frame, spec, list(spec.regressors), [spec.outcome], w)
    y = extras[spec.outcome]

    sw = np.sqrt(w)
    coef, xtx_inv = _qr_solve(X * sw[:, None], y * sw, names)
    resid = y - X @ coef
    scores = X * (w * resid)[:, None]
    n, k = X.shape
    cov, desc, components = _sandwich(frame, xtx_inv, xtx_inv, scores, n, k, spec.cluster_keys(), names)

    with np.errstate(divide="ignore", invalid="ignore"):
        t = coef / np.sqrt(np.diag(cov.values))
    return RegressionResult(
        coefficients=pd.Series(coef, index=names),
        covariance=cov,
        t_stats=pd.Series(t, index=names),
        n_obs=n,
        first_stage_f=None,
        dof_adjustment=desc,
        dropped_rows=dropped,
        cluster_components=components,
    )


def tsls(spec: RegressionSpec, data: pd.DataFrame) -> RegressionResult:
    """Just-identified two-stage least squares on within-transformed data.

    Exactly one endogenous regressor and one excluded instrument. Reports the
    cluster-robust Wald statistic on the excluded instrument (the effective
    first-stage F; identical to the Kleibergen-Paap statistic in this
    just-identified single-endogenous case) in ``first_stage_f`` and attaches
    a weak-instrument warning when it falls below 1.
    """
    if spec.endogenous is None or spec.instrument is None:
        raise ValueError("tsls needs an endogenous regressor and an instrument")
    frame, w, dropped = _prepare(
        data, [spec.outcome, spec.endogenous, spec.instrument, *spec.regressors], spec
    )
    X_exog, extras, exog_names = _design(
        frame, spec, list(spec.regressors), [spec.outcome, spec.endogenous, spec.instrument], w
    )
    y = extras[spec.outcome]
    d = extras[spec.endogenous]
    z = extras[spec.instrument]

    # First stage: endogenous on instrument plus included exogenous columns.
    fs_X = np.column_stack([z, X_exog])
    fs_names = [spec.instrument, *exog_names]
    sw = np.sqrt(w)
    fs_coef, fs_xtx_inv = _qr_solve(fs_X * sw[:, None], d * sw, fs_names)
    fs_resid = d - fs_X @ fs_coef
    fs_scores = fs_X * (w * fs_resid)[:, None]
    n, k_fs = fs_X.shape
    fs_cov, _, _ = _sandwich(
        frame, fs_xtx_inv, fs_xtx_inv, fs_scores, n, k_fs, spec.cluster_keys(), fs_names
    )
    fs_se = math.sqrt(fs_cov.values[0, 0])
    first_stage_f = float((fs_coef[0] / fs_se) ** 2) if fs_se > 0 else math.inf

    # Second stage, solved from the just-identified IV normal equations.
    Xmat = np.column_stack([d, X_exog])
    Zmat = np.column_stack([z, X_exog])
    names = [spec.endogenous, *exog_names]
    A = Zmat.T @ (Xmat * w[:, None])
    try:
        coef = np.linalg.solve(A, Zmat.T @ (y * w))
        A_inv = np.linalg.solve(A, np.eye(A.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise RankError(f"IV normal equations are singular: {exc}") from exc
    resid = y - Xmat @ coef
    scores = Zmat * (w * resid)[:, None]
    k = Xmat.shape[1]
    cov, desc, components = _sandwich(
        frame, A_inv, A_inv.T, scores, n, k, spec.cluster_keys(), names
    )

    warnings_list = []
    if first_stage_f < _WEAK_F_THRESHOLD:
        warnings_list.append(
            f"weak instrument: effective first-stage F = {first_stage_f:.3g} < {_WEAK_F_THRESHOLD}"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        t = coef / np.sqrt(np.diag(cov.values))
    return RegressionResult(
        coefficients=pd.Series(coef, index=names),
        covariance=cov,
        t_stats=pd.Series(t, index=names),
        n_obs=n,
        first_stage_f=first_stage_f,
        dof_adjustment=desc,
        warnings=warnings_list,
        dropped_rows=dropped,
        cluster_components=components,
    )


# --------------------------------------------------------------------------
# event study


def event_study(
    panel: pd.DataFrame,
    exposure,
    reference_quarter: int = 0,
    outcome: str = "duration_seconds",
    log_outcome: bool = True,
    cell_cols: tuple[str, ...] = ("income_bin", "age_bin", "region_id"),
) -> pd.DataFrame:
    """Reduced-form dynamic path: ln(exposure) interacted with quarter dummies.

    Includes household fixed effects and quarter-by-cell fixed effects via
    iterated demeaning; the reference quarter is normalized to exactly 0.
    Quarters whose interaction has no variation left after demeaning are
    flagged missing rather than reported as zero. Standard errors are
    clustered by household.

    ``exposure`` maps household_id to the (level) exposure instrument; zero or
    negative exposures cannot enter in logs and those households are dropped.
    Returns a frame with columns quarter, coefficient, se, t_stat, missing.
    """
    if isinstance(exposure, pd.DataFrame):
        exposure = exposure.set_index("household_id")["exposure"]
    exposure = pd.Series(exposure)
    frame = panel.copy()
    frame["_exp"] = frame["household_id"].map(exposure)
    if frame["_exp"].isna().any():
        raise DataError("panel contains households with no exposure value")
    positive_exp = frame["_exp"] > 0.0
    dropped_zero_exposure = int(frame.loc[~positive_exp, "household_id"].nunique())
    frame = frame[positive_exp]
    frame["_lnexp"] = np.log(frame["_exp"].to_numpy(dtype=float))

    yvals = frame[outcome].to_numpy(dtype=float)
    if log_outcome:
        with np.errstate(divide="ignore"):
            yvals = np.where(yvals > 0.0, np.log(np.where(yvals > 0.0, yvals, 1.0)), -np.inf)
    keep = np.isfinite(yvals)
    frame = frame.loc[keep].reset_index(drop=True)
    yvals = yvals[keep]

    quarters = sorted(frame["quarter"].unique().tolist())
    if reference_quarter not in quarters:
        raise DataError(f"reference quarter {reference_quarter} not present in panel")

    lnexp = frame["_lnexp"].to_numpy(dtype=float)
    qvals = frame["quarter"].to_numpy()
    q_included = [q for q in quarters if q != reference_quarter]
    D = np.empty((len(frame), len(q_included)))
    for j, q in enumerate(q_included):
        D[:, j] = lnexp * (qvals == q)

    hh_codes = _group_codes(frame, "household_id")
    qcell_codes = _group_codes(frame, ("quarter", *cell_cols))
    stacked = np.column_stack([yvals, D])
    demeaned = _demean_multiway(stacked, [hh_codes, qcell_codes])
    y_t = demeaned[:, 0]
    D_t = demeaned[:, 1:]

    scale = max(1.0, float(np.abs(lnexp).max()))
    norms = np.sqrt((D_t**2).mean(axis=0))
    active = norms > 1e-10 * scale
    names = [f"q{q}" for q, a in zip(q_included, active) if a]
    X = D_t[:, active]
    if X.shape[1] == 0:
        raise DataError("no quarter interaction has any variation after demeaning")

    coef, xtx_inv = _qr_solve(X, y_t, names)
    resid = y_t - X @ coef
    scores = X * resid[:, None]
    n, k = X.shape
    cov, _, _ = _sandwich(frame, xtx_inv, xtx_inv, scores, n, k, ["household_id"], names)
    ses = np.sqrt(np.diag(cov.values))

    rows = []
    est_iter = iter(zip(coef, ses))
    for q, a in zip(q_included, active):
        if a:
            b, s = next(est_iter)
            rows.append((q, float(b), float(s), float(b / s) if s > 0 else math.nan, False))
        else:
            rows.append((q, math.nan, math.nan, math.nan, True))
    rows.append((reference_quarter, 0.0, 0.0, math.nan, False))
    out = pd.DataFrame(rows, columns=["quarter", "coefficient", "se", "t_stat", "missing"])
    out = out.sort_values("quarter", ignore_index=True)
    out.attrs["dropped_zero_exposure_households"] = dropped_zero_exposure
    out.attrs["dropped_zero_outcome_rows"] = int((~keep).sum())
    return out


# --------------------------------------------------------------------------
# long difference


def long_difference(
    panel: pd.DataFrame,
    n_window: int = 4,
    pre_quarters: Sequence[int] | None = None,
    post_quarters: Sequence[int] | None = None,
    outcome: str = "duration_seconds",
) -> tuple[pd.DataFrame, int]:
    """Household-level change in mean log duration, post window minus pre.

    Defaults to the first ``n_window`` and last ``n_window`` quarters present.
    Zero durations drop out of the window means (they have no log); households
    with an empty window for some category get NaN for that category. Returns
    (wide frame with one dln_<category> column per category plus demographics,
    count of zero-duration records dropped).
    """
    quarters = sorted(panel["quarter"].unique().tolist())
    if pre_quarters is None:
        pre_quarters = quarters[:n_window]
    if post_quarters is None:
        post_quarters = quarters[-n_window:]
    if set(pre_quarters) & set(post_quarters):
        raise ValueError("pre and post windows overlap")

    frame = panel[panel["quarter"].isin([*pre_quarters, *post_quarters])].copy()
    dur = frame[outcome].to_numpy(dtype=float)
    positive = dur > 0.0
    dropped = int((~positive).sum())
    frame = frame.loc[positive]
    frame["_ln"] = np.log(frame[outcome].to_numpy(dtype=float))
    frame["_window"] = np.where(frame["quarter"].isin(post_quarters), "post", "pre")

    means = (
        frame.groupby(["household_id", "category", "_window"], sort=True)["_ln"]
        .mean()
        .unstack("_window")
    )
    diff = (means["post"] - means["pre"]).unstack("category")
    diff.columns = [f"dln_{c}" for c in diff.columns]

    demo_cols = [c for c in ("income_bin", "age_bin", "region_id", "weight") if c in panel.columns]
    demos = panel.sort_values("quarter").groupby("household_id", sort=True)[demo_cols].first()
    out = demos.join(diff, how="left").reset_index()
    return out, dropped


# --------------------------------------------------------------------------
# Engel regressions


def _engel_activities(cell_panel: pd.DataFrame) -> list[str]:
    acts = [c.removeprefix("hours_") for c in cell_panel.columns if c.startswith("hours_")]
    if not acts:
        raise DataError("cell panel has no hours_<activity> columns")
    return acts


def _engel_prepare(cell_panel: pd.DataFrame, need_iv: bool) -> pd.DataFrame:
    required = {"cell_id", "quarter", "total_hours"}
    if need_iv:
        required.add("ln_precip")
    missing = required - set(cell_panel.columns)
    if missing:
        raise DataError(f"cell panel missing columns: {sorted(missing)}")
    if (cell_panel["total_hours"] <= 0).any():
        raise DataError("total_hours must be strictly positive")
    return cell_panel.reset_index(drop=True)


def _fe_iv_estimate(
    frame: pd.DataFrame, y: np.ndarray, x: np.ndarray, z: np.ndarray | None
) -> tuple[float, float, float | None]:
    """Single-regressor estimate with cell and quarter FE, clustered by cell.

    Returns (coefficient, se, first_stage_f or None). ``z`` switches between
    OLS (None) and just-identified IV.
    """
    cell_codes = _group_codes(frame, "cell_id")
    quarter_codes = _group_codes(frame, "quarter")
    cols = [y, x] + ([z] if z is not None else [])
    demeaned = _demean_multiway(np.column_stack(cols), [cell_codes, quarter_codes])
    y_t, x_t = demeaned[:, 0], demeaned[:, 1]
    z_t = demeaned[:, 2] if z is not None else x_t

    denom = float(z_t @ x_t)
    if abs(denom) < 1e-14 * len(y_t):
        raise RankError("regressor has no variation after demeaning")
    b = float(z_t @ y_t) / denom
    resid = y_t - b * x_t
    scores = z_t * resid
    n = len(y_t)
    k = 1  # single regressor; FE are absorbed, not counted
    g_sums = np.bincount(cell_codes, weights=scores)
    meat = float(g_sums @ g_sums)
    g = int(cell_codes.max()) + 1
    factor = (g / (g - 1)) * ((n - 1) / (n - k))
    var = factor * meat / denom**2
    se = math.sqrt(var)

    f_stat = None
    if z is not None:
        zz = float(z_t @ z_t)
        b_fs = float(z_t @ x_t) / zz
        fs_resid = x_t - b_fs * z_t
        fs_sums = np.bincount(cell_codes, weights=z_t * fs_resid)
        fs_var = factor * float(fs_sums @ fs_sums) / zz**2
        f_stat = float(b_fs**2 / fs_var) if fs_var > 0 else math.inf
    return b, se, f_stat


def engel_loglog(cell_panel: pd.DataFrame, use_iv: bool) -> EngelEstimates:
    """Engel elasticities from ln(hours_a) on ln(total), cell and quarter FE.

    The IV variant instruments ln(total) with log precipitation. Cells with
    zero hours in an activity are dropped (with a count) for that activity's
    regression; an activity with no positive hours at all is an error.
    Standard errors cluster by cell.
    """
    frame = _engel_prepare(cell_panel, use_iv)
    activities = _engel_activities(frame)
    ln_total = np.log(frame["total_hours"].to_numpy(dtype=float))
    z_all = frame["ln_precip"].to_numpy(dtype=float) if use_iv else None

    beta: dict[str, float] = {}
    beta_se: dict[str, float] = {}
    mean_share: dict[str, float] = {}
    f_stats: dict[str, float] = {}
    dropped_total = 0
    n_used = 0
    for act in activities:
        hours = frame[f"hours_{act}"].to_numpy(dtype=float)
        positive = hours > 0.0
        if not positive.any():
            raise DataError(f"activity {act!r} has no positive hours")
        dropped_total += int((~positive).sum())
        sub = frame.loc[positive]
        y = np.log(hours[positive])
        x = ln_total[positive]
        z = z_all[positive] if z_all is not None else None
        b, se, f = _fe_iv_estimate(sub, y, x, z)
        beta[act] = b
        beta_se[act] = se
        if f is not None:
            f_stats[act] = f
        mean_share[act] = float((hours[positive] / sub["total_hours"].to_numpy(dtype=float)).mean())
        n_used = max(n_used, int(positive.sum()))
    return EngelEstimates(
        beta=beta,
        beta_se=beta_se,
        mean_share=mean_share,
        first_stage_f=f_stats if use_iv else None,
        n_obs=n_used,
        dropped_rows=dropped_total,
    )


def engel_shares(cell_panel: pd.DataFrame, use_iv: bool) -> EngelEstimates:
    """Share-form Engel system: activity share on ln(total), mapped to
    elasticities via 1 + gamma / mean share.

    Per-row shares must sum to 1 within 1e-6. The add-up restriction (share
    coefficients summing to about zero) is exposed through ``gamma_addup``.
    """
    frame = _engel_prepare(cell_panel, use_iv)
    activities = _engel_activities(frame)
    total = frame["total_hours"].to_numpy(dtype=float)
    shares = np.column_stack(
        [frame[f"hours_{a}"].to_numpy(dtype=float) / total for a in activities]
    )
    sums = shares.sum(axis=1)
    if np.abs(sums - 1.0).max() > 1e-6:
        worst = int(np.abs(sums - 1.0).argmax())
        raise DataError(
            f"activity shares must sum to 1 per cell-quarter; row {worst} sums to {sums[worst]!r}"
        )

    ln_total = np.log(total)
    z_all = frame["ln_precip"].to_numpy(dtype=float) if use_iv else None
    gamma: dict[str, float] = {}
    gamma_se: dict[str, float] = {}
    mean_share: dict[str, float] = {}
    implied: dict[str, float] = {}
    f_stats: dict[str, float] = {}
    for j, act in enumerate(activities):
        b, se, f = _fe_iv_estimate(frame, shares[:, j], ln_total, z_all)
        gamma[act] = b
        gamma_se[act] = se
        if f is not None:
            f_stats[act] = f
        mean_share[act] = float(shares[:, j].mean())
        implied[act] = 1.0 + b / mean_share[act]
    return EngelEstimates(
        beta=dict(implied),
        beta_se={a: gamma_se[a] / mean_share[a] for a in activities},
        mean_share=mean_share,
        gamma=gamma,
        gamma_se=gamma_se,
        implied_beta_from_shares=implied,
        first_stage_f=f_stats if use_iv else None,
        n_obs=len(frame),
    )


# --------------------------------------------------------------------------
# GPT-window contrast


def window_contrast(
    intervals: pd.DataFrame,
    match_keys: tuple[str, ...] = ("day_of_week", "hour_bucket", "income_bin", "age_bin"),
) -> WindowContrast:
    """Matched difference in category duration shares, GPT windows vs never-users.

    Within each occupied match cell the per-category duration shares are
    computed on both sides; cells lacking a never-user match are dropped and
    counted. Cell contributions are weighted by the cell's GPT-window
    duration, so the aggregate is the average contrast experienced by GPT
    windows.
    """
    categories = [c.removeprefix("dur_") for c in intervals.columns if c.startswith("dur_")]
    if not categories:
        raise DataError("interval data has no dur_<category> columns")
    missing = [c for c in match_keys if c not in intervals.columns]
    if missing:
        raise DataError(f"interval data missing match keys: {missing}")
    flags = intervals["is_gpt_window"].astype(bool)
    n_gpt = int(flags.sum())
    if n_gpt == 0:
        raise NoTreatmentWindowsError("no GPT windows present in interval data")

    dur_cols = [f"dur_{c}" for c in categories]
    agg = (
        intervals.assign(_gpt=flags)
        .groupby([*match_keys, "_gpt"], sort=True)[dur_cols]
        .sum()
    )
    totals = agg.sum(axis=1)
    cell_shares = agg.div(totals.where(totals > 0.0), axis=0)
    wide_shares = cell_shares.unstack("_gpt")
    wide_totals = totals.unstack("_gpt")
    # A side with zero total duration has undefined shares; treat as unmatched.
    wide_totals = wide_totals.where(wide_totals > 0.0)

    has_gpt = wide_totals.get(True)
    has_ctrl = wide_totals.get(False)
    if has_gpt is None:
        raise NoTreatmentWindowsError("no GPT windows present in interval data")
    matched = has_gpt.notna() & (has_ctrl.notna() if has_ctrl is not None else False)
    dropped = int((has_gpt.notna() & ~matched).sum())
    if not matched.any():
        raise DataError("no match cell contains both GPT windows and never-user intervals")

    w = has_gpt[matched].to_numpy(dtype=float)
    w = w / w.sum()
    gpt_shares = {}
    ctrl_shares = {}
    for cat in categories:
        gpt_shares[cat] = float(w @ wide_shares[(f"dur_{cat}", True)][matched].to_numpy(dtype=float))
        ctrl_shares[cat] = float(w @ wide_shares[(f"dur_{cat}", False)][matched].to_numpy(dtype=float))
    diff = {c: gpt_shares[c] - ctrl_shares[c] for c in categories}
    return WindowContrast(
        gpt_shares=gpt_shares,
        control_shares=ctrl_shares,
        difference=diff,
        cells_used=int(matched.sum()),
        dropped_cells=dropped,
        n_gpt=n_gpt,
        n_control=int((~flags).sum()),
    )


# --------------------------------------------------------------------------
# raking


def raking_weights(
    sample_counts: Mapping[tuple, int], target_shares: Mapping[tuple, float]
) -> dict[tuple, float]:
    """Post-stratification weights: target share over sample share per cell.

    Weighted cell shares then equal the target distribution exactly on the
    occupied cells, and the total weighted count equals the sample size when
    the target puts no mass on unoccupied cells. Occupied cells without a
    positive target are an error.
    """
    total = sum(sample_counts.values())
    if total <= 0:
        raise RakingError("sample is empty")
    if any(c < 0 for c in sample_counts.values()):
        raise RakingError("sample counts must be nonnegative")
    target_total = sum(target_shares.values())
    if abs(target_total - 1.0) > 1e-9:
        raise RakingError(f"target shares must sum to 1, got {target_total!r}")

    occupied = [cell for cell, count in sample_counts.items() if count > 0]
    bad = [cell for cell in occupied if target_shares.get(cell, 0.0) <= 0.0]
    if bad:
        raise RakingError(f"occupied sample cells with zero target share: {sorted(bad)}")
    return {
        cell: target_shares[cell] / (sample_counts[cell] / total) for cell in occupied
    }
