"""Seeded synthetic check-in generation, noise injection, and splitting.

The generator follows a centers-plus-Gaussian scheme: an account's records
scatter around a handful of personal centers with fixed spatial spread, and
timestamps scatter around each center's time. The temporal spread unit is
tied to the active period width so that six sigma of the default spread
covers five periods. Everything is deterministic under a seed, with
per-account sub-seeds so generation order does not matter.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .model import AccountRecordSet, CheckIn, Dataset, GroundTruth
from .validation import check_dataset, check_unit_interval

__all__ = [
    "GenParams",
    "make_corpus",
    "generate_scaled",
    "inject_noise",
    "split_dataset",
]

_MAX_RESAMPLE = 100


@dataclass(frozen=True, slots=True)
class GenParams:
    """Generator knobs.

    ``sigma_space`` is the spatial spread in degrees. ``sigma_time`` is in
    generator time units, one unit being period_width/36 of the active
    period partition (so the default 30 spans five periods at six sigma).
    ``periods`` sizes that unit.
    """

    centers_min: int = 2
    centers_max: int = 10
    sigma_space: float = 0.01
    sigma_time: float = 30.0
    periods: int = 2880
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.centers_min <= self.centers_max:
            raise ValueError("need 1 <= centers_min <= centers_max")
        if self.sigma_space < 0 or self.sigma_time < 0:
            raise ValueError("spreads must be >= 0")
        if self.periods < 1:
            raise ValueError("periods must be >= 1")


def _stable_int(text: str) -> int:
    return int.from_bytes(hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "big")


def _account_rng(seed: int, label: str) -> np.random.Generator:
    return np.random.default_rng((seed, _stable_int(label)))


def _data_box(datasets) -> tuple[float, float, float, float, float, float]:
    lats, lngs, ts = [], [], []
    for ds in datasets:
        for r in ds.iter_records():
            lats.append(r.lat)
            lngs.append(r.lng)
            ts.append(r.timestamp)
    if not lats:
        raise ValueError("cannot derive an extent from empty datasets")
    return min(lats), max(lats), min(lngs), max(lngs), min(ts), max(ts)


def _sigma_time_seconds(params: GenParams, t_min: float, t_max: float) -> float:
    width = max(t_max - t_min, 1.0) / params.periods
    return params.sigma_time * width / 36.0


def _sample_around(
    rng: np.random.Generator,
    lat0: np.ndarray,
    lng0: np.ndarray,
    t0: np.ndarray,
    params: GenParams,
    box: tuple[float, float, float, float, float, float],
) -> list[CheckIn]:
    """Gaussian samples around per-record centers, resampled into the box
    (hard-clamped after too many attempts)."""
    lat_min, lat_max, lng_min, lng_max, t_min, t_max = box
    sig_t = _sigma_time_seconds(params, t_min, t_max)
    n = len(lat0)
    lat = rng.normal(lat0, params.sigma_space)
    lng = rng.normal(lng0, params.sigma_space)
    t = rng.normal(t0, sig_t)
    for _ in range(_MAX_RESAMPLE):
        bad = (
            (lat < lat_min) | (lat > lat_max)
            | (lng < lng_min) | (lng > lng_max)
            | (t < t_min) | (t > t_max)
        )
        if not bad.any():
            break
        idx = np.flatnonzero(bad)
        lat[idx] = rng.normal(lat0[idx], params.sigma_space)
        lng[idx] = rng.normal(lng0[idx], params.sigma_space)
        t[idx] = rng.normal(t0[idx], sig_t)
    lat = np.clip(lat, lat_min, lat_max)
    lng = np.clip(lng, lng_min, lng_max)
    t = np.clip(np.rint(t), t_min, t_max).astype(np.int64)
    return [
        CheckIn("", float(a), float(g), int(s)) for a, g, s in zip(lat, lng, t)
    ]


def _generate_account(
    account_id: str,
    source: AccountRecordSet,
    params: GenParams,
    box,
) -> AccountRecordSet:
    """A new account mimicking ``source``: same record count, centers drawn
    from the source's own records (2..10, capped by availability)."""
    rng = _account_rng(params.seed, account_id)
    n = len(source.records)
    n_centers = int(rng.integers(params.centers_min, params.centers_max + 1))
    n_centers = min(n_centers, n)
    center_idx = rng.choice(n, size=n_centers, replace=False)
    which = rng.integers(0, n_centers, size=n)
    lat0 = np.array([source.records[center_idx[w]].lat for w in which])
    lng0 = np.array([source.records[center_idx[w]].lng for w in which])
    t0 = np.array([source.records[center_idx[w]].timestamp for w in which], dtype=np.float64)
    records = _sample_around(rng, lat0, lng0, t0, params, box)
    records = [
        CheckIn(account_id, r.lat, r.lng, r.timestamp) for r in records
    ]
    return AccountRecordSet(account_id, tuple(records))


def generate_scaled(
    base1: Dataset,
    base2: Dataset,
    truth: GroundTruth,
    copies: int,
    params: GenParams | None = None,
) -> tuple[Dataset, Dataset, GroundTruth]:
    """Grow a linked corpus: each copy adds one synthetic account pair per
    ground-truth pair, modeled on a uniformly drawn true pair.

    New records count as many as the modeled account's; new pairs join the
    returned truth. ``copies=0`` returns the inputs unchanged.
    """
    params = params or GenParams()
    if copies < 0:
        raise ValueError("copies must be >= 0")
    if copies == 0:
        return base1, base2, truth
    if len(truth) == 0:
        raise ValueError("cannot scale with an empty ground truth")
    valid_pairs = [
        (a, b)
        for a, b in sorted(truth.pairs)
        if a in base1.accounts and b in base2.accounts
    ]
    if not valid_pairs:
        raise ValueError("no ground-truth pair references existing accounts")
    box = _data_box((base1, base2))

    accounts1 = dict(base1.accounts)
    accounts2 = dict(base2.accounts)
    pairs = set(truth.pairs)
    for c in range(copies):
        for i in range(len(valid_pairs)):
            pick_rng = _account_rng(params.seed, f"pick/{c}/{i}")
            src1_id, src2_id = valid_pairs[int(pick_rng.integers(0, len(valid_pairs)))]
            id1 = f"syn{c}-{i}-a"
            id2 = f"syn{c}-{i}-b"
            accounts1[id1] = _generate_account(id1, base1.accounts[src1_id], params, box)
            accounts2[id2] = _generate_account(id2, base2.accounts[src2_id], params, box)
            pairs.add((id1, id2))
    return (
        Dataset(base1.platform_label, accounts1),
        Dataset(base2.platform_label, accounts2),
        GroundTruth(frozenset(pairs)),
    )


def inject_noise(ds: Dataset, fraction: float, params: GenParams | None = None) -> Dataset:
    """Replace floor(fraction * n) uniformly chosen records per account with
    Gaussian perturbations centered at the originals."""
    params = params or GenParams()
    check_unit_interval(fraction, "fraction")
    check_dataset(ds, "dataset")
    if fraction == 0.0:
        return ds
    box = _data_box((ds,))
    accounts: dict[str, AccountRecordSet] = {}
    for aid, acct in ds.accounts.items():
        n = len(acct.records)
        m = int(math.floor(fraction * n))
        if m == 0:
            accounts[aid] = acct
            continue
        rng = _account_rng(params.seed, f"noise/{aid}")
        idx = rng.choice(n, size=m, replace=False)
        lat0 = np.array([acct.records[i].lat for i in idx])
        lng0 = np.array([acct.records[i].lng for i in idx])
        t0 = np.array([acct.records[i].timestamp for i in idx], dtype=np.float64)
        new = _sample_around(rng, lat0, lng0, t0, params, box)
        records = list(acct.records)
        for slot, r in zip(idx, new):
            records[slot] = CheckIn(aid, r.lat, r.lng, r.timestamp)
        accounts[aid] = AccountRecordSet(aid, tuple(records))
    return Dataset(ds.platform_label, accounts)


def split_dataset(ds: Dataset, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Random per-account split into halves of size ceil(n/2) and floor(n/2).

    Account ids persist on both sides, so the implied ground truth is the
    identity pairing. Raises for any single-record account, naming it.
    """
    check_dataset(ds, "dataset")
    part_a: dict[str, AccountRecordSet] = {}
    part_b: dict[str, AccountRecordSet] = {}
    for aid, acct in ds.accounts.items():
        n = len(acct.records)
        if n < 2:
            raise ValueError(f"account {aid!r} has a single record and cannot be split")
        rng = _account_rng(seed, f"split/{aid}")
        perm = rng.permutation(n)
        take = (n + 1) // 2
        idx_a = np.sort(perm[:take])
        idx_b = np.sort(perm[take:])
        part_a[aid] = AccountRecordSet(aid, tuple(acct.records[i] for i in idx_a))
        part_b[aid] = AccountRecordSet(aid, tuple(acct.records[i] for i in idx_b))
    return (
        Dataset(f"{ds.platform_label}-a", part_a),
        Dataset(f"{ds.platform_label}-b", part_b),
    )


def make_corpus(
    n_accounts: int,
    records_per_account: int,
    params: GenParams | None = None,
    box: tuple[float, float, float, float] = (-60.0, 60.0, -170.0, 170.0),
    t_span: tuple[int, int] = (0, 5_184_000),
    platform_label: str = "synthetic",
    id_prefix: str = "acct",
) -> Dataset:
    """Bootstrap a fresh corpus: per account, 2..10 uniformly placed centers
    (each with its own uniform timestamp) and Gaussian records around them.

    This seeds the benchmark harness when no real base dataset is available;
    scaling and noise protocols then operate on the result.
    """
    params = params or GenParams()
    if n_accounts < 1 or records_per_account < 1:
        raise ValueError("need at least one account and one record")
    lat_min, lat_max, lng_min, lng_max = box
    full_box = (lat_min, lat_max, lng_min, lng_max, float(t_span[0]), float(t_span[1]))
    accounts: dict[str, AccountRecordSet] = {}
    for i in range(n_accounts):
        aid = f"{id_prefix}{i:04d}"
        rng = _account_rng(params.seed, f"corpus/{aid}")
        n_centers = int(rng.integers(params.centers_min, params.centers_max + 1))
        clat = rng.uniform(lat_min, lat_max, n_centers)
        clng = rng.uniform(lng_min, lng_max, n_centers)
        ct = rng.integers(t_span[0], t_span[1], n_centers).astype(np.float64)
        which = rng.integers(0, n_centers, size=records_per_account)
        recs = _sample_around(rng, clat[which], clng[which], ct[which], params, full_box)
        accounts[aid] = AccountRecordSet(
            aid, tuple(CheckIn(aid, r.lat, r.lng, r.timestamp) for r in recs)
        )
    return Dataset(platform_label, accounts)
