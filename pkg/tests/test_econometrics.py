import math

import numpy as np
import pandas as pd
import pytest

from genaitime.econometrics import (
    EngelEstimates,
    NoTreatmentWindowsError,
    RakingError,
    RankError,
    RegressionSpec,
    engel_loglog,
    engel_shares,
    event_study,
    long_difference,
    ols,
    raking_weights,
    tsls,
    window_contrast,
    within_transform,
)
from genaitime.errors import DataError


class TestRegressionSpec:
    def test_endogenous_requires_instrument(self):
        with pytest.raises(ValueError, match="together"):
            RegressionSpec(outcome="y", endogenous="d")

    def test_at_most_two_cluster_keys(self):
        with pytest.raises(ValueError, match="two cluster"):
            RegressionSpec(outcome="y", cluster_key=["a", "b", "c"])

    def test_tuple_is_one_composite_key(self):
        spec = RegressionSpec(outcome="y", cluster_key=("a", "b"))
        assert spec.cluster_keys() == [("a", "b")]


class TestWithinTransform:
    def test_group_means_vanish(self):
        rng = np.random.default_rng(0)
        df = pd.DataFrame(
            {"g": rng.integers(0, 7, 200), "x": rng.normal(size=200), "y": rng.normal(size=200)}
        )
        out = within_transform(df, "g")
        for _, sub in out.join(df["g"]).groupby("g"):
            assert abs(sub["x"].mean()) < 1e-12
            assert abs(sub["y"].mean()) < 1e-12

    def test_matches_hand_demeaning(self):
        df = pd.DataFrame({"g": [0, 0, 1, 1], "x": [1.0, 3.0, 10.0, 14.0]})
        out = within_transform(df, "g", columns=["x"])
        assert out["x"].tolist() == [-1.0, 1.0, -2.0, 2.0]

    def test_idempotent(self):
        rng = np.random.default_rng(1)
        df = pd.DataFrame({"g": rng.integers(0, 5, 100), "x": rng.normal(size=100)})
        once = within_transform(df, "g", columns=["x"])
        twice = within_transform(once.join(df["g"]), "g", columns=["x"])
        assert np.allclose(once["x"], twice["x"], atol=1e-12)

    def test_weighted_group_means_vanish(self):
        rng = np.random.default_rng(2)
        df = pd.DataFrame(
            {
                "g": rng.integers(0, 4, 120),
                "x": rng.normal(size=120),
                "w": rng.uniform(0.5, 2.0, 120),
            }
        )
        out = within_transform(df, "g", columns=["x"], weights="w")
        joined = out.join(df[["g", "w"]])
        for _, sub in joined.groupby("g"):
            assert abs(np.average(sub["x"], weights=sub["w"])) < 1e-12

    def test_composite_key(self):
        df = pd.DataFrame(
            {"a": [0, 0, 1, 1], "b": [0, 1, 0, 1], "x": [1.0, 2.0, 3.0, 4.0]}
        )
        out = within_transform(df, ("a", "b"), columns=["x"])
        # every (a, b) cell is a singleton, so everything demeans to zero
        assert np.allclose(out["x"], 0.0)

    def test_missing_key_column(self):
        df = pd.DataFrame({"x": [1.0, 2.0]})
        with pytest.raises(DataError, match="key columns"):
            within_transform(df, "g")


def _linear_data(n=400, seed=3):
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n)
    x2 = rng.normal(size=n)
    e = rng.normal(size=n)
    y = 1.5 + 2.0 * x1 - 0.7 * x2 + 0.5 * e
    return pd.DataFrame(
        {
            "y": y,
            "x1": x1,
            "x2": x2,
            "g": rng.integers(0, 20, n),
            "h": rng.integers(0, 15, n),
            "w": rng.uniform(0.5, 2.0, n),
        }
    )


class TestOls:
    def test_exact_fit(self):
        df = pd.DataFrame({"x": [0.0, 1.0, 2.0, 3.0]})
        df["y"] = 3.0 + 2.0 * df["x"]
        res = ols(RegressionSpec(outcome="y", regressors=("x",)), df)
        assert res.coefficients["const"] == pytest.approx(3.0, abs=1e-12)
        assert res.coefficients["x"] == pytest.approx(2.0, abs=1e-12)

    def test_matches_lstsq(self):
        df = _linear_data()
        res = ols(RegressionSpec(outcome="y", regressors=("x1", "x2")), df)
        X = np.column_stack([np.ones(len(df)), df["x1"], df["x2"]])
        expected, *_ = np.linalg.lstsq(X, df["y"].to_numpy(), rcond=None)
        assert np.allclose(res.coefficients.to_numpy(), expected, rtol=1e-10)

    def test_hc1_matches_hand_formula(self):
        df = _linear_data(n=60, seed=4)
        res = ols(RegressionSpec(outcome="y", regressors=("x1",)), df)
        X = np.column_stack([np.ones(len(df)), df["x1"]])
        y = df["y"].to_numpy()
        xtx_inv = np.linalg.inv(X.T @ X)
        e = y - X @ (xtx_inv @ X.T @ y)
        meat = (X * e[:, None]).T @ (X * e[:, None])
        n, k = X.shape
        V = n / (n - k) * xtx_inv @ meat @ xtx_inv
        assert np.allclose(res.covariance.to_numpy(), V, rtol=1e-10)
        assert "HC1" in res.dof_adjustment

    def test_fe_equals_dummy_regression(self):
        df = _linear_data(n=300, seed=5)
        df["y"] = df["y"] + df["g"] * 0.3
        fe = ols(RegressionSpec(outcome="y", regressors=("x1", "x2"), fixed_effect_key="g"), df)
        dummies = pd.get_dummies(df["g"], prefix="g", drop_first=True, dtype=float)
        dum_df = pd.concat([df, dummies], axis=1)
        full = ols(
            RegressionSpec(outcome="y", regressors=("x1", "x2", *dummies.columns)), dum_df
        )
        assert fe.coefficients["x1"] == pytest.approx(full.coefficients["x1"], rel=1e-9)
        assert fe.coefficients["x2"] == pytest.approx(full.coefficients["x2"], rel=1e-9)

    def test_weights_equal_row_duplication(self):
        df = _linear_data(n=80, seed=6)
        df["w"] = np.where(np.arange(len(df)) % 3 == 0, 2.0, 1.0)
        weighted = ols(RegressionSpec(outcome="y", regressors=("x1",), weights="w"), df)
        stacked = pd.concat([df, df[df["w"] == 2.0]], ignore_index=True)
        doubled = ols(RegressionSpec(outcome="y", regressors=("x1",)), stacked)
        assert weighted.coefficients["x1"] == pytest.approx(
            doubled.coefficients["x1"], rel=1e-12
        )

    def test_rank_error_names_column(self):
        df = _linear_data(n=50, seed=7)
        df["x_dup"] = df["x1"]
        with pytest.raises(RankError, match="x_dup"):
            ols(RegressionSpec(outcome="y", regressors=("x1", "x_dup")), df)

    def test_endogenous_spec_rejected(self):
        df = _linear_data(n=20, seed=8)
        spec = RegressionSpec(outcome="y", endogenous="x1", instrument="x2")
        with pytest.raises(ValueError, match="tsls"):
            ols(spec, df)

    def test_nonfinite_rows_dropped_and_counted(self):
        df = _linear_data(n=40, seed=9)
        df.loc[3, "y"] = np.nan
        df.loc[7, "x1"] = np.inf
        res = ols(RegressionSpec(outcome="y", regressors=("x1",)), df)
        assert res.dropped_rows == 2
        assert res.n_obs == 38

    def test_nonpositive_weights_rejected(self):
        df = _linear_data(n=20, seed=10)
        df.loc[0, "w"] = 0.0
        with pytest.raises(DataError, match="positive"):
            ols(RegressionSpec(outcome="y", regressors=("x1",), weights="w"), df)

    def test_missing_column(self):
        df = _linear_data(n=20, seed=11)
        with pytest.raises(DataError, match="nope"):
            ols(RegressionSpec(outcome="y", regressors=("nope",)), df)


class TestClusteredErrors:
    def test_singleton_clusters_equal_hc1(self):
        df = _linear_data(n=150, seed=12)
        df["unit"] = np.arange(len(df))
        plain = ols(RegressionSpec(outcome="y", regressors=("x1",)), df)
        clustered = ols(
            RegressionSpec(outcome="y", regressors=("x1",), cluster_key="unit"), df
        )
        assert np.allclose(
            plain.covariance.to_numpy(), clustered.covariance.to_numpy(), rtol=1e-12
        )

    def test_oneway_cr1_matches_hand_formula(self):
        df = _linear_data(n=90, seed=13)
        res = ols(RegressionSpec(outcome="y", regressors=("x1",), cluster_key="g"), df)
        X = np.column_stack([np.ones(len(df)), df["x1"]])
        y = df["y"].to_numpy()
        xtx_inv = np.linalg.inv(X.T @ X)
        e = y - X @ (xtx_inv @ X.T @ y)
        scores = X * e[:, None]
        sums = np.zeros((df["g"].nunique(), X.shape[1]))
        for code, grp in enumerate(sorted(df["g"].unique())):
            sums[code] = scores[df["g"].to_numpy() == grp].sum(axis=0)
        g, (n, k) = sums.shape[0], X.shape
        V = (g / (g - 1)) * ((n - 1) / (n - k)) * xtx_inv @ (sums.T @ sums) @ xtx_inv
        assert np.allclose(res.covariance.to_numpy(), V, rtol=1e-10)
        assert "CR1" in res.dof_adjustment

    def test_twoway_components_identity(self):
        df = _linear_data(n=500, seed=14)
        res = ols(
            RegressionSpec(outcome="y", regressors=("x1",), cluster_key=["g", "h"]), df
        )
        comp = res.cluster_components
        assert set(comp) == {"A", "B", "AB"}
        raw = comp["A"].to_numpy() + comp["B"].to_numpy() - comp["AB"].to_numpy()
        # no PSD repair needed for this draw, so the identity holds exactly
        assert np.linalg.eigvalsh(0.5 * (raw + raw.T)).min() > 0
        assert np.allclose(res.covariance.to_numpy(), 0.5 * (raw + raw.T), rtol=1e-12)

    def test_twoway_covariance_is_psd(self):
        df = _linear_data(n=200, seed=15)
        res = ols(
            RegressionSpec(outcome="y", regressors=("x1", "x2"), cluster_key=["g", "h"]),
            df,
        )
        assert np.linalg.eigvalsh(res.covariance.to_numpy()).min() >= -1e-12


def _iv_data(n=2000, seed=16, beta=1.3):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=n)
    v = rng.normal(size=n)
    u = 0.8 * v + 0.3 * rng.normal(size=n)
    d = 0.9 * z + v
    ctrl = rng.normal(size=n)
    y = beta * d + 0.4 * ctrl + u
    return pd.DataFrame(
        {"y": y, "d": d, "z": z, "ctrl": ctrl, "g": rng.integers(0, 40, n)}
    )


class TestTsls:
    def test_matches_hand_iv_formula(self):
        df = _iv_data(n=300, seed=17)
        spec = RegressionSpec(outcome="y", regressors=("ctrl",), endogenous="d", instrument="z")
        res = tsls(spec, df)
        n = len(df)
        X = np.column_stack([df["d"], np.ones(n), df["ctrl"]])
        Z = np.column_stack([df["z"], np.ones(n), df["ctrl"]])
        expected = np.linalg.solve(Z.T @ X, Z.T @ df["y"].to_numpy())
        assert np.allclose(res.coefficients.to_numpy(), expected, rtol=1e-12)

    def test_consistent_under_confounding(self):
        df = _iv_data(n=20000, seed=18)
        spec = RegressionSpec(outcome="y", regressors=("ctrl",), endogenous="d", instrument="z")
        res = tsls(spec, df)
        b, se = res.coefficients["d"], res.se["d"]
        assert abs(b - 1.3) < 2.5 * se
        biased = ols(RegressionSpec(outcome="y", regressors=("d", "ctrl")), df)
        assert abs(biased.coefficients["d"] - 1.3) > 10 * se

    def test_instrument_equal_endogenous_reduces_to_ols(self):
        df = _iv_data(n=400, seed=19)
        df["zx"] = df["d"]
        iv = tsls(
            RegressionSpec(outcome="y", regressors=("ctrl",), endogenous="d", instrument="zx"),
            df,
        )
        ls = ols(RegressionSpec(outcome="y", regressors=("d", "ctrl")), df)
        assert iv.coefficients["d"] == pytest.approx(ls.coefficients["d"], rel=1e-10)

    def test_first_stage_f_is_wald_on_instrument(self):
        df = _iv_data(n=600, seed=20)
        spec = RegressionSpec(
            outcome="y",
            regressors=("ctrl",),
            endogenous="d",
            instrument="z",
            cluster_key="g",
        )
        res = tsls(spec, df)
        fs = ols(
            RegressionSpec(outcome="d", regressors=("z", "ctrl"), cluster_key="g"), df
        )
        assert res.first_stage_f == pytest.approx(fs.t_stats["z"] ** 2, rel=1e-9)

    def test_weak_instrument_warning(self):
        rng = np.random.default_rng(21)
        n = 40
        df = pd.DataFrame(
            {
                "y": rng.normal(size=n),
                "d": rng.normal(size=n),
                "z": rng.normal(size=n) * 1e-3,
            }
        )
        res = tsls(RegressionSpec(outcome="y", endogenous="d", instrument="z"), df)
        if res.first_stage_f < 1.0:
            assert any("weak instrument" in w for w in res.warnings)
        else:  # pragma: no cover - draw-dependent guard
            assert res.warnings == []

    def test_requires_instrument(self):
        df = _iv_data(n=30, seed=22)
        with pytest.raises(ValueError, match="endogenous"):
            tsls(RegressionSpec(outcome="y", regressors=("d",)), df)

    def test_covariance_matches_hand_sandwich(self):
        df = _iv_data(n=200, seed=23)
        spec = RegressionSpec(outcome="y", endogenous="d", instrument="z", cluster_key="g")
        res = tsls(spec, df)
        n = len(df)
        X = np.column_stack([df["d"], np.ones(n)])
        Z = np.column_stack([df["z"], np.ones(n)])
        A = Z.T @ X
        coef = np.linalg.solve(A, Z.T @ df["y"].to_numpy())
        resid = df["y"].to_numpy() - X @ coef
        scores = Z * resid[:, None]
        codes = df["g"].to_numpy()
        groups = sorted(df["g"].unique())
        sums = np.vstack([scores[codes == grp].sum(axis=0) for grp in groups])
        g, k = len(groups), X.shape[1]
        factor = (g / (g - 1)) * ((n - 1) / (n - k))
        A_inv = np.linalg.inv(A)
        V = factor * A_inv @ (sums.T @ sums) @ A_inv.T
        assert np.allclose(res.covariance.to_numpy(), V, rtol=1e-9)


def _event_panel():
    """Noise-free panel whose dynamic coefficients are known exactly."""
    households = np.arange(1, 9)
    exposure = pd.Series(np.linspace(0.2, 1.6, 8), index=households)
    quarters = [-2, -1, 0, 1, 2]
    gamma = {-2: 0.0, -1: 0.0, 0: 0.0, 1: 0.05, 2: 0.11}
    hh_eff = {h: 0.3 * h for h in households}
    q_eff = {q: 0.1 * q for q in quarters}
    rows = []
    for h in households:
        for q in quarters:
            y = hh_eff[h] + q_eff[q] + gamma[q] * math.log(exposure[h])
            rows.append((h, q, 0, 0, 0, y))
    panel = pd.DataFrame(
        rows,
        columns=["household_id", "quarter", "income_bin", "age_bin", "region_id", "y"],
    )
    return panel, exposure, gamma


class TestEventStudy:
    def test_recovers_known_path(self):
        panel, exposure, gamma = _event_panel()
        out = event_study(panel, exposure, outcome="y", log_outcome=False)
        assert out["quarter"].tolist() == [-2, -1, 0, 1, 2]
        for _, row in out.iterrows():
            assert not row["missing"]
            assert row["coefficient"] == pytest.approx(gamma[row["quarter"]], abs=1e-6)

    def test_reference_quarter_exactly_zero(self):
        panel, exposure, _ = _event_panel()
        out = event_study(panel, exposure, outcome="y", log_outcome=False)
        ref = out[out["quarter"] == 0].iloc[0]
        assert ref["coefficient"] == 0.0
        assert ref["se"] == 0.0

    def test_exposure_frame_accepted(self):
        panel, exposure, gamma = _event_panel()
        frame = exposure.rename("exposure").rename_axis("household_id").reset_index()
        out = event_study(panel, frame, outcome="y", log_outcome=False)
        row = out[out["quarter"] == 2].iloc[0]
        assert row["coefficient"] == pytest.approx(gamma[2], abs=1e-6)

    def test_no_variation_rejected(self):
        panel, exposure, _ = _event_panel()
        flat = pd.Series(0.7, index=exposure.index)
        with pytest.raises(DataError, match="no quarter interaction"):
            event_study(panel, flat, outcome="y", log_outcome=False)

    def test_single_household_quarter_flagged_missing(self):
        panel, exposure, _ = _event_panel()
        extra = pd.DataFrame(
            [[1, 3, 0, 0, 0, 5.0]],
            columns=["household_id", "quarter", "income_bin", "age_bin", "region_id", "y"],
        )
        out = event_study(pd.concat([panel, extra], ignore_index=True), exposure,
                          outcome="y", log_outcome=False)
        row = out[out["quarter"] == 3].iloc[0]
        assert bool(row["missing"])
        assert math.isnan(row["coefficient"])

    def test_zero_exposure_households_dropped(self):
        panel, exposure, _ = _event_panel()
        exposure = exposure.copy()
        exposure[1] = 0.0
        out = event_study(panel, exposure, outcome="y", log_outcome=False)
        assert out.attrs["dropped_zero_exposure_households"] == 1

    def test_unmapped_household_rejected(self):
        panel, exposure, _ = _event_panel()
        with pytest.raises(DataError, match="no exposure"):
            event_study(panel, exposure.drop(3), outcome="y", log_outcome=False)

    def test_missing_reference_quarter(self):
        panel, exposure, _ = _event_panel()
        with pytest.raises(DataError, match="reference quarter"):
            event_study(panel, exposure, reference_quarter=9, outcome="y", log_outcome=False)


class TestLongDifference:
    def _panel(self):
        rows = []
        for q in range(8):
            rows.append((1, q, "leisure", 100.0 * (q + 1), 2, 3, 1, 1.0))
        for q in range(8):
            rows.append((1, q, "productive", 50.0 if q < 4 else 200.0, 2, 3, 1, 1.0))
        return pd.DataFrame(
            rows,
            columns=[
                "household_id",
                "quarter",
                "category",
                "duration_seconds",
                "income_bin",
                "age_bin",
                "region_id",
                "weight",
            ],
        )

    def test_hand_computed_difference(self):
        out, dropped = long_difference(self._panel())
        assert dropped == 0
        row = out.iloc[0]
        pre = np.mean([math.log(100.0 * (q + 1)) for q in range(4)])
        post = np.mean([math.log(100.0 * (q + 1)) for q in range(4, 8)])
        assert row["dln_leisure"] == pytest.approx(post - pre, abs=1e-12)
        assert row["dln_productive"] == pytest.approx(math.log(4.0), abs=1e-12)
        assert row["income_bin"] == 2 and row["age_bin"] == 3

    def test_custom_windows(self):
        out, _ = long_difference(self._panel(), pre_quarters=[0, 1], post_quarters=[6, 7])
        pre = np.mean([math.log(100.0), math.log(200.0)])
        post = np.mean([math.log(700.0), math.log(800.0)])
        assert out.iloc[0]["dln_leisure"] == pytest.approx(post - pre, abs=1e-12)

    def test_overlapping_windows_rejected(self):
        with pytest.raises(ValueError, match="overlap"):
            long_difference(self._panel(), pre_quarters=[0, 1], post_quarters=[1, 2])

    def test_zero_durations_dropped(self):
        panel = self._panel()
        panel.loc[0, "duration_seconds"] = 0.0
        out, dropped = long_difference(panel)
        assert dropped == 1
        pre = np.mean([math.log(100.0 * (q + 1)) for q in range(1, 4)])
        post = np.mean([math.log(100.0 * (q + 1)) for q in range(4, 8)])
        assert out.iloc[0]["dln_leisure"] == pytest.approx(post - pre, abs=1e-12)

    def test_empty_window_gives_nan(self):
        panel = self._panel()
        zero = panel["category"].eq("productive") & panel["quarter"].ge(4)
        panel.loc[zero, "duration_seconds"] = 0.0
        out, _ = long_difference(panel)
        assert math.isnan(out.iloc[0]["dln_productive"])


def _engel_panel(confound=0.0, seed=24, n_cells=60, n_quarters=8):
    """Cell panel with exact log-linear Engel structure."""
    rng = np.random.default_rng(seed)
    betas = {"leisure": 1.37, "productive": 0.93, "mixed": 1.11}
    rows = []
    for c in range(n_cells):
        a_c = rng.normal(0.0, 0.2)
        for q in range(n_quarters):
            lnp = rng.normal(1.0, 0.5)
            u = rng.normal(0.0, 0.1)
            ln_total = 4.0 + a_c + 0.05 * q + 0.3 * (lnp - 1.0) + u
            row = {
                "cell_id": c,
                "quarter": q,
                "ln_precip": lnp,
                "total_hours": math.exp(ln_total),
            }
            for act, b in betas.items():
                shift = confound * u if act == "leisure" else 0.0
                row[f"hours_{act}"] = math.exp(-2.0 + b * ln_total + shift)
            rows.append(row)
    return pd.DataFrame(rows), betas


class TestEngelLogLog:
    def test_exact_recovery_without_noise(self):
        panel, betas = _engel_panel()
        for use_iv in (False, True):
            est = engel_loglog(panel, use_iv=use_iv)
            for act, b in betas.items():
                assert est.beta[act] == pytest.approx(b, abs=1e-8)
                assert est.beta_se[act] < 1e-8
        assert est.first_stage_f is not None
        assert min(est.first_stage_f.values()) > 10.0

    def test_iv_removes_confound(self):
        panel, betas = _engel_panel(confound=1.0, n_cells=150)
        ols_est = engel_loglog(panel, use_iv=False)
        iv_est = engel_loglog(panel, use_iv=True)
        assert ols_est.beta["leisure"] - betas["leisure"] > 0.15
        assert abs(iv_est.beta["leisure"] - betas["leisure"]) < 3 * iv_est.beta_se["leisure"]

    def test_zero_hour_rows_dropped(self):
        panel, _ = _engel_panel()
        panel.loc[0, "hours_mixed"] = 0.0
        est = engel_loglog(panel, use_iv=False)
        assert est.dropped_rows == 1

    def test_all_zero_activity_rejected(self):
        panel, _ = _engel_panel(n_cells=5)
        panel["hours_mixed"] = 0.0
        with pytest.raises(DataError, match="no positive hours"):
            engel_loglog(panel, use_iv=False)

    def test_iv_needs_precipitation(self):
        panel, _ = _engel_panel(n_cells=5)
        with pytest.raises(DataError, match="ln_precip"):
            engel_loglog(panel.drop(columns=["ln_precip"]), use_iv=True)

    def test_nonpositive_total_rejected(self):
        panel, _ = _engel_panel(n_cells=5)
        panel.loc[0, "total_hours"] = 0.0
        with pytest.raises(DataError, match="total_hours"):
            engel_loglog(panel, use_iv=False)

    def test_addup_not_defined_for_log_form(self):
        panel, _ = _engel_panel(n_cells=5)
        est = engel_loglog(panel, use_iv=False)
        with pytest.raises(ValueError, match="share-form"):
            est.gamma_addup()


def _share_panel(seed=25, n_cells=50, n_quarters=8):
    """Cell panel whose shares are exactly linear in ln(total)."""
    rng = np.random.default_rng(seed)
    base = {"leisure": 0.30, "productive": 0.55, "mixed": 0.15}
    slope = {"leisure": 0.04, "productive": -0.03, "mixed": -0.01}
    rows = []
    for c in range(n_cells):
        a_c = rng.normal(0.0, 0.15)
        for q in range(n_quarters):
            lnp = rng.normal(1.0, 0.5)
            ln_total = 4.0 + a_c + 0.05 * q + 0.3 * (lnp - 1.0) + rng.normal(0.0, 0.05)
            centered = ln_total - 4.0
            row = {
                "cell_id": c,
                "quarter": q,
                "ln_precip": lnp,
                "total_hours": math.exp(ln_total),
            }
            for act in base:
                row[f"hours_{act}"] = (base[act] + slope[act] * centered) * math.exp(ln_total)
            rows.append(row)
    return pd.DataFrame(rows), base, slope


class TestEngelShares:
    def test_recovers_share_slopes(self):
        panel, base, slope = _share_panel()
        est = engel_shares(panel, use_iv=False)
        for act in base:
            assert est.gamma[act] == pytest.approx(slope[act], abs=1e-10)
            mean_share = est.mean_share[act]
            assert est.implied_beta_from_shares[act] == pytest.approx(
                1.0 + slope[act] / mean_share, abs=1e-10
            )
            assert est.beta[act] == est.implied_beta_from_shares[act]

    def test_addup_near_zero(self):
        panel, *_ = _share_panel()
        est = engel_shares(panel, use_iv=True)
        total, se = est.gamma_addup()
        assert abs(total) < 1e-10
        assert se >= 0.0

    def test_share_sum_violation_rejected(self):
        panel, *_ = _share_panel(n_cells=5)
        panel.loc[0, "hours_leisure"] *= 2.0
        with pytest.raises(DataError, match="sum to 1"):
            engel_shares(panel, use_iv=False)


def _interval_fixture(seed=26, n=1200):
    rng = np.random.default_rng(seed)
    cats = ["leisure", "productive", "mixed"]
    rows = []
    for i in range(n):
        rows.append(
            {
                "day_of_week": int(rng.integers(0, 7)),
                "hour_bucket": int(rng.integers(0, 4)),
                "income_bin": int(rng.integers(0, 3)),
                "age_bin": int(rng.integers(0, 2)),
                "is_gpt_window": bool(rng.random() < 0.3),
                **{f"dur_{c}": float(rng.uniform(0.0, 100.0)) for c in cats},
            }
        )
    return pd.DataFrame(rows), cats


class TestWindowContrast:
    def test_hand_computed(self):
        rows = [
            # cell A: gpt 30/10, control 10/30
            (0, 0, 0, 0, True, 30.0, 10.0),
            (0, 0, 0, 0, False, 10.0, 30.0),
            # cell B: gpt 10/10, control 0/20
            (1, 0, 0, 0, True, 10.0, 10.0),
            (1, 0, 0, 0, False, 0.0, 20.0),
        ]
        df = pd.DataFrame(
            rows,
            columns=["day_of_week", "hour_bucket", "income_bin", "age_bin",
                     "is_gpt_window", "dur_x", "dur_y"],
        )
        res = window_contrast(df)
        assert res.cells_used == 2
        assert res.gpt_shares["x"] == pytest.approx(2 / 3 * 0.75 + 1 / 3 * 0.5)
        assert res.control_shares["x"] == pytest.approx(2 / 3 * 0.25)
        assert res.difference["x"] == pytest.approx(0.5)
        assert res.difference["y"] == pytest.approx(-0.5)

    def test_brute_force_oracle(self):
        df, cats = _interval_fixture()
        res = window_contrast(df)

        sums: dict[tuple, dict[str, float]] = {}
        for row in df.itertuples(index=False):
            key = (row.day_of_week, row.hour_bucket, row.income_bin, row.age_bin,
                   row.is_gpt_window)
            acc = sums.setdefault(key, {c: 0.0 for c in cats})
            for c in cats:
                acc[c] += getattr(row, f"dur_{c}")
        cells = sorted({k[:4] for k in sums})
        matched, weights, gpt_sh, ctl_sh = [], [], [], []
        for cell in cells:
            g = sums.get((*cell, True))
            c = sums.get((*cell, False))
            if g is None or c is None:
                continue
            g_tot, c_tot = sum(g.values()), sum(c.values())
            if g_tot <= 0 or c_tot <= 0:
                continue
            matched.append(cell)
            weights.append(g_tot)
            gpt_sh.append({k: v / g_tot for k, v in g.items()})
            ctl_sh.append({k: v / c_tot for k, v in c.items()})
        wsum = sum(weights)
        for cat in cats:
            g_exp = sum(w * s[cat] for w, s in zip(weights, gpt_sh)) / wsum
            c_exp = sum(w * s[cat] for w, s in zip(weights, ctl_sh)) / wsum
            assert res.gpt_shares[cat] == pytest.approx(g_exp, rel=1e-12)
            assert res.control_shares[cat] == pytest.approx(c_exp, rel=1e-12)
            assert res.difference[cat] == pytest.approx(g_exp - c_exp, rel=1e-10)
        assert res.cells_used == len(matched)

    def test_unmatched_gpt_cells_dropped(self):
        df, _ = _interval_fixture(n=40)
        solo = df.iloc[:1].copy()
        solo["day_of_week"] = 99
        solo["is_gpt_window"] = True
        res = window_contrast(pd.concat([df, solo], ignore_index=True))
        assert res.dropped_cells >= 1

    def test_no_gpt_windows(self):
        df, _ = _interval_fixture(n=30)
        df["is_gpt_window"] = False
        with pytest.raises(NoTreatmentWindowsError):
            window_contrast(df)

    def test_no_matched_cells(self):
        df, _ = _interval_fixture(n=30)
        df["is_gpt_window"] = True
        with pytest.raises(DataError, match="both"):
            window_contrast(df)

    def test_missing_keys_rejected(self):
        df, _ = _interval_fixture(n=10)
        with pytest.raises(DataError, match="match keys"):
            window_contrast(df.drop(columns=["age_bin"]))

    def test_no_duration_columns(self):
        df, cats = _interval_fixture(n=10)
        with pytest.raises(DataError, match="dur_"):
            window_contrast(df.drop(columns=[f"dur_{c}" for c in cats]))


ACS_INCOME = [13.94, 10.45, 14.33, 9.89, 13.38, 17.50, 9.19, 11.33]
ACS_AGE = [4.09, 16.14, 18.50, 17.69, 18.64, 24.93]
PANEL_INCOME = [21.25, 21.38, 13.99, 4.67, 7.34, 9.96, 2.49, 18.93]
PANEL_AGE = [7.19, 9.78, 14.06, 38.63, 16.68, 13.53]


class TestRakingWeights:
    def test_weighted_shares_hit_target_exactly(self):
        rng = np.random.default_rng(27)
        cells = [(i, j) for i in range(5) for j in range(4)]
        counts = {c: int(rng.integers(1, 50)) for c in cells}
        raw = rng.uniform(0.5, 2.0, len(cells))
        shares = raw / raw.sum()
        target = {c: float(s) for c, s in zip(cells, shares)}
        weights = raking_weights(counts, target)
        wtotal = sum(counts[c] * weights[c] for c in cells)
        for c in cells:
            assert counts[c] * weights[c] / wtotal == pytest.approx(target[c], abs=1e-14)

    def test_total_weighted_count_preserved(self):
        counts = {("a",): 30, ("b",): 70}
        target = {("a",): 0.5, ("b",): 0.5}
        weights = raking_weights(counts, target)
        assert sum(counts[c] * weights[c] for c in counts) == pytest.approx(100.0)

    def test_unoccupied_cells_get_no_weight(self):
        counts = {("a",): 10, ("b",): 0}
        target = {("a",): 0.6, ("b",): 0.4}
        weights = raking_weights(counts, target)
        assert set(weights) == {("a",)}

    def test_empty_sample(self):
        with pytest.raises(RakingError, match="empty"):
            raking_weights({("a",): 0}, {("a",): 1.0})

    def test_negative_counts(self):
        with pytest.raises(RakingError, match="nonnegative"):
            raking_weights({("a",): -1, ("b",): 5}, {("a",): 0.5, ("b",): 0.5})

    def test_target_must_sum_to_one(self):
        with pytest.raises(RakingError, match="sum to 1"):
            raking_weights({("a",): 5}, {("a",): 0.7})

    def test_occupied_cell_without_target(self):
        with pytest.raises(RakingError, match="zero target"):
            raking_weights({("a",): 5, ("b",): 5}, {("a",): 1.0})

    def test_census_joint_distribution_fixture(self):
        """Demographic reweighting example: panel sample raked to census
        income-by-age shares, built as products of the published marginals."""
        inc_t = np.array(ACS_INCOME) / sum(ACS_INCOME)
        age_t = np.array(ACS_AGE) / sum(ACS_AGE)
        inc_s = np.array(PANEL_INCOME) / sum(PANEL_INCOME)
        age_s = np.array(PANEL_AGE) / sum(PANEL_AGE)

        target = {
            (i, j): float(inc_t[i] * age_t[j])
            for i in range(len(inc_t))
            for j in range(len(age_t))
        }
        counts = {
            (i, j): max(1, round(20000 * inc_s[i] * age_s[j]))
            for i in range(len(inc_s))
            for j in range(len(age_s))
        }
        weights = raking_weights(counts, target)
        wtotal = sum(counts[c] * weights[c] for c in counts)

        for c in counts:
            assert abs(counts[c] * weights[c] / wtotal - target[c]) < 1e-12

        for i in range(len(inc_t)):
            marg = sum(
                counts[(i, j)] * weights[(i, j)] for j in range(len(age_t))
            ) / wtotal
            assert abs(marg - inc_t[i]) < 1e-12
        for j in range(len(age_t)):
            marg = sum(
                counts[(i, j)] * weights[(i, j)] for i in range(len(inc_t))
            ) / wtotal
            assert abs(marg - age_t[j]) < 1e-12
