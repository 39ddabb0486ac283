"""Post-linkage prediction: who visits where and when.

A fused dataset (records of linked accounts merged) is summarized per
account into geographic regions found by density-peaks clustering over the
account's grid cells, with a visit share per region and a time-period
distribution inside each region. Bayes-style combinations of those pieces
answer three queries: rank accounts for a (location, time), rank regions for
an (account, time), and pick the most likely period for an (account,
location).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .indexing import (
    GridSpec,
    TimeSpec,
    build_specs,
    cell_centers_meters,
    METERS_PER_DEG_LAT,
    METERS_PER_DEG_LNG,
)
from .model import AccountRecordSet, CheckIn, Dataset
from .outliers import DpParams, cluster_cells
from .validation import check_dataset

__all__ = [
    "Region",
    "UserProfile",
    "ProfileSet",
    "build_profiles",
    "predict_user",
    "predict_location",
    "predict_time",
    "fuse_datasets",
    "temporal_train_test_split",
    "ActivityPredictor",
]

_SMOOTHING = 1e-6


@dataclass(frozen=True)
class Region:
    """A cluster of cells where one account's activity concentrates."""

    region_id: int                 # lowest member cell id
    cells: tuple[int, ...]
    share: float                   # fraction of the account's region records
    period_counts: dict[int, int]  # raw record counts per period
    total: int

    def period_probability(self, period: int, smoothing: float = _SMOOTHING) -> float:
        """Additively smoothed share of ``period`` inside this region.

        The support is the occupied periods plus the queried one, so unseen
        (region, period) queries stay strictly positive.
        """
        support = set(self.period_counts)
        support.add(period)
        denom = self.total + smoothing * len(support)
        return (self.period_counts.get(period, 0) + smoothing) / denom

    def mode_period(self) -> int:
        """Most-visited period; ties resolve to the lowest period id."""
        return min(self.period_counts, key=lambda p: (-self.period_counts[p], p))


@dataclass(frozen=True)
class UserProfile:
    account_id: str
    record_share: float            # account's share of all corpus records
    regions: tuple[Region, ...]


@dataclass(frozen=True)
class ProfileSet:
    """All profiles plus the specs needed to resolve queries."""

    grid: GridSpec
    time: TimeSpec
    profiles: dict[str, UserProfile]

    def __len__(self) -> int:
        return len(self.profiles)


def build_profiles(
    ds: Dataset, grid: GridSpec, time: TimeSpec, dp: DpParams
) -> ProfileSet:
    """Cluster every account's cells into regions and extract distributions.

    An account whose cells yield no cluster keeps a single region holding all
    of its cells, so every account stays predictable.
    """
    check_dataset(ds, "dataset")
    total_records = ds.record_count()
    profiles: dict[str, UserProfile] = {}
    for aid, acct in ds.accounts.items():
        cell_counts: dict[int, int] = {}
        cell_period_counts: dict[int, dict[int, int]] = {}
        for r in acct.records:
            cell, period = _locate_clamped(r.lat, r.lng, r.timestamp, grid, time)
            cell_counts[cell] = cell_counts.get(cell, 0) + 1
            per = cell_period_counts.setdefault(cell, {})
            per[period] = per.get(period, 0) + 1

        cell_ids = np.array(sorted(cell_counts), dtype=np.int64)
        _, labels = cluster_cells(cell_ids, grid, dp)
        groups: dict[int, list[int]] = {}
        for cid, label in zip(cell_ids, labels):
            if label >= 0:
                groups.setdefault(int(label), []).append(int(cid))
        if not groups:
            groups = {0: [int(c) for c in cell_ids]}

        regions = []
        assigned_total = sum(
            cell_counts[c] for cells in groups.values() for c in cells
        )
        for cells in sorted(groups.values(), key=min):
            counts: dict[int, int] = {}
            for c in cells:
                for p, k in cell_period_counts[c].items():
                    counts[p] = counts.get(p, 0) + k
            total = sum(counts.values())
            regions.append(
                Region(
                    region_id=min(cells),
                    cells=tuple(sorted(cells)),
                    share=total / assigned_total,
                    period_counts=counts,
                    total=total,
                )
            )
        profiles[aid] = UserProfile(aid, len(acct.records) / total_records, tuple(regions))
    return ProfileSet(grid, time, profiles)


def _cell_clamped(lat: float, lng: float, grid: GridSpec) -> int:
    lat = min(max(lat, grid.min_lat), grid.max_lat)
    lng = min(max(lng, grid.min_lng), grid.max_lng)
    row = min(int((lat - grid.min_lat) / grid.cell_height_deg), grid.d - 1)
    col = min(int((lng - grid.min_lng) / grid.cell_width_deg), grid.d - 1)
    return row * grid.d + col


def _period_clamped(t: float, time: TimeSpec) -> int:
    t = min(max(t, time.t_min), time.t_max)
    return min(int((t - time.t_min) / time.period_width), time.periods - 1)


def _locate_clamped(lat: float, lng: float, t: float, grid: GridSpec, time: TimeSpec):
    """Queries may fall outside the fitted extent; clamp them in."""
    return _cell_clamped(lat, lng, grid), _period_clamped(t, time)


def _resolve_region(profile: UserProfile, lat: float, lng: float, ps: ProfileSet) -> Region:
    """The region containing the query cell, else the nearest region by
    distance from the query point to any member-cell center."""
    cell = _cell_clamped(lat, lng, ps.grid)
    for region in profile.regions:
        if cell in region.cells:
            return region
    qx = lng * math.cos(math.radians(ps.grid.ref_lat)) * METERS_PER_DEG_LNG
    qy = lat * METERS_PER_DEG_LAT
    best = None
    best_dist = math.inf
    for region in profile.regions:
        cx, cy = cell_centers_meters(np.array(region.cells, dtype=np.int64), ps.grid)
        dist = float(np.min(np.hypot(cx - qx, cy - qy)))
        if dist < best_dist or (dist == best_dist and region.region_id < best.region_id):
            best = region
            best_dist = dist
    return best


def predict_user(
    lat: float, lng: float, timestamp: float, profiles: ProfileSet
) -> list[tuple[str, float]]:
    """Accounts ranked by the posterior of visiting (lat, lng) at that time."""
    if len(profiles) == 0:
        raise ValueError("no profiles")
    _, period = _locate_clamped(lat, lng, timestamp, profiles.grid, profiles.time)
    raw: dict[str, float] = {}
    for aid, profile in profiles.profiles.items():
        region = _resolve_region(profile, lat, lng, profiles)
        raw[aid] = (
            profile.record_share * region.share * region.period_probability(period)
        )
    total = sum(raw.values())
    ranked = sorted(raw.items(), key=lambda it: (-it[1], it[0]))
    return [(aid, score / total) for aid, score in ranked]


def predict_location(
    account_id: str, timestamp: float, profiles: ProfileSet
) -> list[tuple[int, float]]:
    """The account's regions ranked by the posterior for the given time."""
    profile = profiles.profiles.get(account_id)
    if profile is None:
        raise ValueError(f"unknown account {account_id!r}")
    period = _period_clamped(timestamp, profiles.time)
    raw = {
        r.region_id: r.share * r.period_probability(period) for r in profile.regions
    }
    total = sum(raw.values())
    ranked = sorted(raw.items(), key=lambda it: (-it[1], it[0]))
    return [(rid, score / total) for rid, score in ranked]


def predict_time(
    account_id: str, lat: float, lng: float, profiles: ProfileSet
) -> int:
    """Most likely period for the account at the location (containing or
    nearest region); ties resolve to the lowest period id."""
    profile = profiles.profiles.get(account_id)
    if profile is None:
        raise ValueError(f"unknown account {account_id!r}")
    region = _resolve_region(profile, lat, lng, profiles)
    return region.mode_period()


def fuse_datasets(ds1: Dataset, ds2: Dataset, pairs) -> Dataset:
    """Merge matched platform-2 accounts into their platform-1 partners.

    ``pairs`` holds (u1, u2[, ...]) tuples; the first match per u2 wins.
    Unmatched accounts are kept, with a ``#2`` suffix when a platform-2 id
    would collide with a platform-1 id.
    """
    to_u1: dict[str, str] = {}
    for p in sorted((p[0], p[1]) for p in pairs):
        to_u1.setdefault(p[1], p[0])
    merged: dict[str, list[CheckIn]] = {
        aid: list(acct.records) for aid, acct in ds1.accounts.items()
    }
    for aid, acct in ds2.accounts.items():
        target = to_u1.get(aid)
        if target is not None and target in merged:
            merged[target].extend(
                CheckIn(target, r.lat, r.lng, r.timestamp) for r in acct.records
            )
        else:
            name = aid if aid not in merged else f"{aid}#2"
            merged[name] = [CheckIn(name, r.lat, r.lng, r.timestamp) for r in acct.records]
    return Dataset(
        f"{ds1.platform_label}+{ds2.platform_label}",
        {aid: AccountRecordSet(aid, tuple(rs)) for aid, rs in merged.items()},
    )


def temporal_train_test_split(ds: Dataset, train_fraction: float = 0.8) -> tuple[Dataset, Dataset]:
    """Per-account split by timestamp order: earlier records train, the rest test."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    train: dict[str, AccountRecordSet] = {}
    test: dict[str, AccountRecordSet] = {}
    for aid, acct in ds.accounts.items():
        ordered = sorted(acct.records, key=lambda r: r.timestamp)
        cut = max(1, int(len(ordered) * train_fraction))
        if cut >= len(ordered):
            cut = len(ordered) - 1
        train[aid] = AccountRecordSet(aid, tuple(ordered[:cut]))
        test[aid] = AccountRecordSet(aid, tuple(ordered[cut:]))
    return Dataset(f"{ds.platform_label}-train", train), Dataset(f"{ds.platform_label}-test", test)


class ActivityPredictor(BaseEstimator):
    """Estimator facade over profile building and the three predictions."""

    def __init__(
        self,
        grid_size: int = 15000,
        periods: int = 2880,
        cutoff: float | None = None,
        center_score: float = 30.0,
    ):
        self.grid_size = grid_size
        self.periods = periods
        self.cutoff = cutoff
        self.center_score = center_score

    def fit(self, X: Dataset, y=None):
        check_dataset(X, "dataset")
        grid, tspec = build_specs(X, X, self.grid_size, self.periods)
        cutoff = self.cutoff if self.cutoff is not None else 1.5 * grid.cell_diagonal_meters()
        dp = DpParams(cutoff, self.center_score, 0.0)
        self.profiles_ = build_profiles(X, grid, tspec, dp)
        return self

    def _check_fitted(self) -> ProfileSet:
        if not hasattr(self, "profiles_"):
            raise ValueError("ActivityPredictor is not fitted yet")
        return self.profiles_

    def predict_user(self, lat: float, lng: float, timestamp: float):
        return predict_user(lat, lng, timestamp, self._check_fitted())

    def predict_location(self, account_id: str, timestamp: float):
        return predict_location(account_id, timestamp, self._check_fitted())

    def predict_time(self, account_id: str, lat: float, lng: float):
        return predict_time(account_id, lat, lng, self._check_fitted())
