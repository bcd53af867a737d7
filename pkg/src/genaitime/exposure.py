"""Deterministic measurement layer: exposure scores, the household exposure
instrument, purpose-share aggregation, and rainfall grid-to-region aggregation.

All operations are pure aggregations over tabular inputs. Functions accept
either pandas DataFrames with the documented columns or iterables of the typed
records defined here.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import pandas as pd

from .errors import DataError

__all__ = [
    "PURPOSES",
    "HIGH_EXPOSURE_SCORES",
    "WebsiteLabel",
    "BrowseShare",
    "WeatherGridRecord",
    "WeatherAggregate",
    "DataError",
    "PaddedFlagsWarning",
    "normalize_domain",
    "website_exposure_score",
    "household_exposure",
    "purpose_shares",
    "aggregate_weather",
]

PURPOSES = ("productive", "leisure", "mixed", "adcdn")

# Exposure counts that mark a website as highly substitutable by a chatbot.
HIGH_EXPOSURE_SCORES = frozenset({4, 5})

_SHARE_SUM_TOL = 1e-9


class PaddedFlagsWarning(UserWarning):
    """Fewer than five activity flags were supplied and padded with False."""


def normalize_domain(domain: str) -> str:
    """Canonical domain form: lowercase, strip one leading "www.".

    No public-suffix logic beyond that; labels and browsing rows must agree at
    this grain.
    """
    d = domain.strip().lower()
    if d.startswith("www."):
        d = d[4:]
    return d


@dataclass(frozen=True)
class WebsiteLabel:
    """A labeled domain: purpose class and exposure count E in 0..5."""

    domain: str
    purpose: str
    exposure_count: int

    def __post_init__(self) -> None:
        if self.purpose not in PURPOSES:
            raise DataError(f"purpose must be one of {PURPOSES}, got {self.purpose!r}")
        if not 0 <= self.exposure_count <= 5:
            raise DataError(f"exposure_count must lie in 0..5, got {self.exposure_count}")
        object.__setattr__(self, "domain", normalize_domain(self.domain))

    @property
    def high_exposure(self) -> bool:
        return self.exposure_count in HIGH_EXPOSURE_SCORES


@dataclass(frozen=True)
class BrowseShare:
    """One household-by-domain duration share over the benchmark window."""

    household_id: object
    domain: str
    share: float


@dataclass(frozen=True)
class WeatherGridRecord:
    """Daily precipitation at one weather grid cell, tagged with its county."""

    grid_cell_id: object
    county_fips: str
    date: str
    precipitation: float


@dataclass(frozen=True)
class WeatherAggregate:
    """Region-month mean daily precipitation plus the unmapped-county count."""

    table: pd.DataFrame
    dropped_counties: int


def website_exposure_score(activity_flags: Sequence[bool]) -> int:
    """Number of a website's top-5 activities flagged as chatbot-substitutable.

    Shorter flag lists are padded with False (a warning records the padding);
    more than 5 flags is a data error.
    """
    flags = list(activity_flags)
    if len(flags) > 5:
        raise DataError(f"expected at most 5 activity flags, got {len(flags)}")
    if len(flags) < 5:
        warnings.warn(
            f"padded {5 - len(flags)} missing activity flags with False",
            PaddedFlagsWarning,
            stacklevel=2,
        )
        flags = flags + [False] * (5 - len(flags))
    return sum(bool(f) for f in flags)


def _label_lookup(labels: Iterable[WebsiteLabel]) -> dict[str, WebsiteLabel]:
    lookup: dict[str, WebsiteLabel] = {}
    for label in labels:
        if label.domain in lookup:
            raise DataError(f"duplicate label for domain {label.domain!r}")
        lookup[label.domain] = label
    return lookup


def _shares_frame(shares) -> pd.DataFrame:
    if isinstance(shares, pd.DataFrame):
        required = {"household_id", "domain", "share"}
        missing = required - set(shares.columns)
        if missing:
            raise DataError(f"shares frame missing columns: {sorted(missing)}")
        return shares[["household_id", "domain", "share"]].copy()
    rows = [(s.household_id, s.domain, s.share) for s in shares]
    return pd.DataFrame(rows, columns=["household_id", "domain", "share"])


def household_exposure(shares, labels: Iterable[WebsiteLabel]) -> pd.DataFrame:
    """Per-household exposure instrument and labeled-coverage control.

    Exposure is the browsing-duration share on domains whose exposure count is
    4 or 5; coverage is the share on any labeled domain (the control for
    differential labeling). Unlabeled domains contribute zero to both. Returns
    a frame indexed 0..n-1 with columns household_id, exposure, coverage,
    sorted by household_id.
    """
    frame = _shares_frame(shares)
    bad = frame[(frame["share"] < 0.0) | (frame["share"] > 1.0)]
    if not bad.empty:
        raise DataError(f"shares outside [0, 1] at rows {bad.index.tolist()[:10]}")
    sums = frame.groupby("household_id")["share"].sum()
    off = sums[(sums - 1.0).abs() > _SHARE_SUM_TOL]
    if not off.empty:
        raise DataError(
            f"per-household shares must sum to 1: violated for {off.index.tolist()[:10]}"
        )

    lookup = _label_lookup(labels)
    domains = frame["domain"].map(normalize_domain)
    labeled = domains.map(lambda d: d in lookup)
    high = domains.map(lambda d: d in lookup and lookup[d].high_exposure)

    out = (
        pd.DataFrame(
            {
                "household_id": frame["household_id"],
                "exposure": frame["share"].where(high, 0.0),
                "coverage": frame["share"].where(labeled, 0.0),
            }
        )
        .groupby("household_id", as_index=False)
        .sum()
        .sort_values("household_id", ignore_index=True)
    )
    return out


def purpose_shares(panel, labels: Iterable[WebsiteLabel]) -> pd.DataFrame:
    """Per-household duration shares over the four purpose categories.

    ``panel`` carries domain-grain browsing durations (columns household_id,
    domain, duration_seconds). Unlabeled duration is reported in its own
    column rather than redistributed. Households with zero total duration get
    all-zero shares.
    """
    if isinstance(panel, pd.DataFrame):
        required = {"household_id", "domain", "duration_seconds"}
        missing = required - set(panel.columns)
        if missing:
            raise DataError(f"panel frame missing columns: {sorted(missing)}")
        frame = panel[["household_id", "domain", "duration_seconds"]].copy()
    else:
        rows = [(r.household_id, r.domain, r.duration_seconds) for r in panel]
        frame = pd.DataFrame(rows, columns=["household_id", "domain", "duration_seconds"])
    if (frame["duration_seconds"] < 0).any():
        raise DataError("durations must be nonnegative")

    lookup = _label_lookup(labels)
    frame["purpose"] = (
        frame["domain"].map(normalize_domain).map(lambda d: lookup[d].purpose if d in lookup else "unlabeled")
    )
    wide = (
        frame.pivot_table(
            index="household_id",
            columns="purpose",
            values="duration_seconds",
            aggfunc="sum",
            fill_value=0.0,
        )
        .reindex(columns=[*PURPOSES, "unlabeled"], fill_value=0.0)
    )
    totals = wide.sum(axis=1)
    shares = wide.div(totals.where(totals > 0.0, 1.0), axis=0)
    shares[totals == 0.0] = 0.0
    return shares.reset_index()


def _weather_frame(grid) -> pd.DataFrame:
    if isinstance(grid, pd.DataFrame):
        rename = {"grid_cell": "grid_cell_id", "prec": "precipitation"}
        frame = grid.rename(columns=rename).copy()
        required = {"grid_cell_id", "county_fips", "date", "precipitation"}
        missing = required - set(frame.columns)
        if missing:
            raise DataError(f"weather frame missing columns: {sorted(missing)}")
        return frame[["grid_cell_id", "county_fips", "date", "precipitation"]]
    rows = [(r.grid_cell_id, r.county_fips, r.date, r.precipitation) for r in grid]
    return pd.DataFrame(rows, columns=["grid_cell_id", "county_fips", "date", "precipitation"])


def aggregate_weather(grid, county_to_region) -> WeatherAggregate:
    """Region-month mean daily precipitation from grid-cell daily records.

    Aggregation order: unweighted mean over grid cells within county-day, then
    mean daily rate within county-month, then unweighted mean over counties
    within region-month. Counties absent from the crosswalk are dropped and
    counted. Duplicate (grid_cell, date) rows are a data error.
    """
    frame = _weather_frame(grid)
    if (frame["precipitation"] < 0).any():
        raise DataError("precipitation must be nonnegative")
    dupes = frame.duplicated(subset=["grid_cell_id", "date"])
    if dupes.any():
        pairs = frame.loc[dupes, ["grid_cell_id", "date"]].head(5).values.tolist()
        raise DataError(f"duplicate (grid_cell, date) rows, e.g. {pairs}")

    if isinstance(county_to_region, pd.DataFrame):
        required = {"county_fips", "region_id"}
        missing = required - set(county_to_region.columns)
        if missing:
            raise DataError(f"crosswalk missing columns: {sorted(missing)}")
        crosswalk = county_to_region[["county_fips", "region_id"]].drop_duplicates()
        if crosswalk["county_fips"].duplicated().any():
            raise DataError("crosswalk maps some county to more than one region")
        mapping = dict(zip(crosswalk["county_fips"], crosswalk["region_id"]))
    else:
        mapping = dict(county_to_region)

    if frame.empty:
        empty = pd.DataFrame(columns=["region_id", "month", "prec"])
        return WeatherAggregate(table=empty, dropped_counties=0)

    frame = frame.assign(month=pd.to_datetime(frame["date"]).dt.strftime("%Y-%m"))
    county_day = (
        frame.groupby(["county_fips", "date", "month"], as_index=False)["precipitation"].mean()
    )
    county_month = (
        county_day.groupby(["county_fips", "month"], as_index=False)["precipitation"].mean()
    )
    mapped = county_month["county_fips"].map(mapping)
    dropped = int(county_month.loc[mapped.isna(), "county_fips"].nunique())
    county_month = county_month.assign(region_id=mapped).dropna(subset=["region_id"])
    table = (
        county_month.groupby(["region_id", "month"], as_index=False)["precipitation"]
        .mean()
        .rename(columns={"precipitation": "prec"})
        .sort_values(["region_id", "month"], ignore_index=True)
    )
    return WeatherAggregate(table=table, dropped_counties=dropped)
