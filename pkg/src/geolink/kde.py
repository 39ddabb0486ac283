"""Kernel-density similarity between accounts.

Three levels are provided, from exact to indexed:

- ``naive_similarity`` averages a Gaussian kernel over every pair of raw
  records (spatial distances in projected meters, temporal distances in a
  caller-chosen unit).
- ``indexed_similarity`` replaces records with grid-cell / time-period
  representations and weights each kernel term by the visit probabilities.
- ``joint_weighted_similarity`` scores the joint spatio-temporal form: a
  spatial factor and a per-cell temporal factor are combined geometrically
  with a trade-off exponent, and both are modulated by discriminativeness
  weights.

All bandwidths must carry the units of the distances they smooth: meters for
space, period widths for time (period center distance equals the index gap).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .indexing import (
    GridRepresentation,
    SpatioTemporalRepresentation,
    TimeRepresentation,
    METERS_PER_DEG_LAT,
    METERS_PER_DEG_LNG,
    cell_centers_meters,
)
from .model import AccountRecordSet
from .validation import check_positive, check_unit_interval
from .weights import WeightTable

__all__ = [
    "Bandwidths",
    "KernelCounters",
    "gaussian_kernel",
    "naive_similarity",
    "indexed_similarity",
    "joint_weighted_similarity",
    "JointScoringView",
    "make_scoring_view",
    "score_views",
]


@dataclass(frozen=True, slots=True)
class Bandwidths:
    """Kernel scales: ``spatial`` in meters, ``temporal`` in period widths."""

    spatial: float = 60.0
    temporal: float = 1.0

    def __post_init__(self):
        check_positive(self.spatial, "spatial bandwidth")
        check_positive(self.temporal, "temporal bandwidth")


@dataclass(slots=True)
class KernelCounters:
    """Mutable tally of work done while scoring (for complexity checks)."""

    pairs: int = 0
    spatial_evals: int = 0
    temporal_evals: int = 0

    def merge(self, other: "KernelCounters") -> None:
        self.pairs += other.pairs
        self.spatial_evals += other.spatial_evals
        self.temporal_evals += other.temporal_evals


def gaussian_kernel(distance, h: float):
    """(1/(2*pi*h)) * exp(-distance^2 / (2 h^2)); peaks at 1/(2*pi*h)."""
    check_positive(h, "bandwidth")
    d = np.asarray(distance, dtype=np.float64)
    out = np.exp(-(d * d) / (2.0 * h * h)) / (2.0 * math.pi * h)
    if np.ndim(distance) == 0:
        return float(out)
    return out


def _project(records, ref_lat: float) -> tuple[np.ndarray, np.ndarray]:
    lats = np.array([r.lat for r in records], dtype=np.float64)
    lngs = np.array([r.lng for r in records], dtype=np.float64)
    x = lngs * math.cos(math.radians(ref_lat)) * METERS_PER_DEG_LNG
    y = lats * METERS_PER_DEG_LAT
    return x, y


def naive_similarity(
    r1: AccountRecordSet,
    r2: AccountRecordSet,
    bw: Bandwidths,
    ref_lat: float | None = None,
    time_unit: float = 1.0,
) -> tuple[float, float, float]:
    """Average pairwise kernel over all record pairs of two accounts.

    Returns (spatial, temporal, total) where total is their sum. Spatial
    distances are equirectangular meters at ``ref_lat`` (default: mean
    latitude of both accounts); temporal distances are seconds divided by
    ``time_unit``, so the temporal bandwidth unit is the caller's choice.
    """
    if len(r1.records) == 0 or len(r2.records) == 0:
        raise ValueError("naive similarity requires non-empty record sets")
    check_positive(time_unit, "time_unit")
    if ref_lat is None:
        ref_lat = float(
            np.mean([r.lat for r in r1.records] + [r.lat for r in r2.records])
        )
    x1, y1 = _project(r1.records, ref_lat)
    x2, y2 = _project(r2.records, ref_lat)
    d2 = (x1[:, None] - x2[None, :]) ** 2 + (y1[:, None] - y2[None, :]) ** 2
    cs = 1.0 / (2.0 * math.pi * bw.spatial)
    s_r = float(np.mean(cs * np.exp(-d2 / (2.0 * bw.spatial**2))))

    t1 = np.array([r.timestamp for r in r1.records], dtype=np.float64) / time_unit
    t2 = np.array([r.timestamp for r in r2.records], dtype=np.float64) / time_unit
    dt2 = (t1[:, None] - t2[None, :]) ** 2
    ct = 1.0 / (2.0 * math.pi * bw.temporal)
    s_t = float(np.mean(ct * np.exp(-dt2 / (2.0 * bw.temporal**2))))
    return s_r, s_t, s_r + s_t


def indexed_similarity(
    grid_rep1: GridRepresentation,
    time_rep1: TimeRepresentation,
    grid_rep2: GridRepresentation,
    time_rep2: TimeRepresentation,
    bw: Bandwidths,
) -> tuple[float, float, float]:
    """Kernel similarity over cell/period representations.

    Each term weighs the kernel of the center distance by both visit
    probabilities; sums are normalized by the representation sizes.
    """
    if grid_rep1.grid != grid_rep2.grid:
        raise ValueError("grid representations were built against different grids")
    if time_rep1.time != time_rep2.time:
        raise ValueError("time representations were built against different periods")
    grid = grid_rep1.grid
    x1, y1 = cell_centers_meters(grid_rep1.cell_ids, grid)
    x2, y2 = cell_centers_meters(grid_rep2.cell_ids, grid)
    d2 = (x1[:, None] - x2[None, :]) ** 2 + (y1[:, None] - y2[None, :]) ** 2
    cs = 1.0 / (2.0 * math.pi * bw.spatial)
    k = cs * np.exp(-d2 / (2.0 * bw.spatial**2))
    w = np.outer(grid_rep1.cell_probs, grid_rep2.cell_probs)
    s_r = float((k * w).sum() / (len(grid_rep1) * len(grid_rep2)))

    p1 = time_rep1.period_ids.astype(np.float64)
    p2 = time_rep2.period_ids.astype(np.float64)
    dt2 = (p1[:, None] - p2[None, :]) ** 2
    ct = 1.0 / (2.0 * math.pi * bw.temporal)
    kt = ct * np.exp(-dt2 / (2.0 * bw.temporal**2))
    wt = np.outer(time_rep1.period_probs, time_rep2.period_probs)
    s_t = float((kt * wt).sum() / (len(time_rep1) * len(time_rep2)))
    return s_r, s_t, s_r + s_t


@dataclass(frozen=True)
class JointScoringView:
    """Per-account arrays precomputed for fast joint scoring.

    ``cell_factor`` folds cell probability and cell weight; the flat entry
    arrays hold one row per (cell, period) with the cell index into the
    account's cell list, the period id, and the folded period factor.
    """

    account_id: str
    x: np.ndarray             # (X,) cell center x meters
    y: np.ndarray             # (X,)
    cell_factor: np.ndarray   # (X,) prob * weight
    entry_cell: np.ndarray    # (T,) int index into 0..X-1
    entry_period: np.ndarray  # (T,) float period id
    entry_factor: np.ndarray  # (T,) per-cell prob * period weight


def make_scoring_view(
    rep: SpatioTemporalRepresentation, weights: WeightTable | None
) -> JointScoringView:
    """Fold weights into a representation. ``weights=None`` means unit weights.

    Raises if a referenced cell or period is missing from the table.
    """
    x, y = cell_centers_meters(rep.cell_ids, rep.grid)
    if weights is None:
        cell_w = np.ones(len(rep), dtype=np.float64)
    else:
        try:
            cell_w = np.array(
                [weights.grid_weights[int(c)] for c in rep.cell_ids], dtype=np.float64
            )
        except KeyError as e:
            raise ValueError(f"cell {e.args[0]} missing from weight table") from None
    cell_factor = rep.cell_probs * cell_w

    entry_cell = []
    entry_period = []
    entry_factor = []
    for i, (pids, pprobs) in enumerate(zip(rep.cell_periods, rep.cell_period_probs)):
        for pid, pp in zip(pids, pprobs):
            if weights is None:
                pw = 1.0
            else:
                try:
                    pw = weights.period_weights[int(pid)]
                except KeyError:
                    raise ValueError(f"period {int(pid)} missing from weight table") from None
            entry_cell.append(i)
            entry_period.append(float(pid))
            entry_factor.append(float(pp) * pw)
    return JointScoringView(
        rep.account_id,
        x,
        y,
        cell_factor,
        np.array(entry_cell, dtype=np.int64),
        np.array(entry_period, dtype=np.float64),
        np.array(entry_factor, dtype=np.float64),
    )


def score_views(
    v1: JointScoringView,
    v2: JointScoringView,
    alpha: float,
    bw: Bandwidths,
    counters: KernelCounters | None = None,
) -> float:
    """Joint weighted similarity between two precomputed views.

    S = (1/(X*Y)) sum_xy [spatial_xy]^alpha * [temporal_xy]^(1-alpha), where
    the spatial factor is the kernel of the cell-center distance times both
    cell factors, and the temporal factor sums the period kernel times both
    period factors over the two cells' time distributions. The zero-power
    convention 0^0 = 1 makes alpha = 0 and alpha = 1 degenerate cleanly.
    """
    nx = len(v1.x)
    ny = len(v2.x)
    cs = 1.0 / (2.0 * math.pi * bw.spatial)
    ct = 1.0 / (2.0 * math.pi * bw.temporal)

    d2 = (v1.x[:, None] - v2.x[None, :]) ** 2 + (v1.y[:, None] - v2.y[None, :]) ** 2
    spatial = cs * np.exp(-d2 / (2.0 * bw.spatial**2)) * np.outer(
        v1.cell_factor, v2.cell_factor
    )

    if alpha < 1.0:
        dp = v1.entry_period[:, None] - v2.entry_period[None, :]
        kt = ct * np.exp(-(dp * dp) / (2.0 * bw.temporal**2))
        kt *= np.outer(v1.entry_factor, v2.entry_factor)
        temporal = np.zeros((nx, ny), dtype=np.float64)
        np.add.at(temporal, (v1.entry_cell[:, None], v2.entry_cell[None, :]), kt)
        n_temporal = kt.size
    else:
        temporal = np.ones((nx, ny), dtype=np.float64)
        n_temporal = 0

    if counters is not None:
        counters.pairs += 1
        counters.spatial_evals += nx * ny
        counters.temporal_evals += n_temporal

    if alpha == 1.0:
        total = spatial.sum()
    elif alpha == 0.0:
        total = temporal.sum()
    else:
        total = (spatial**alpha * temporal ** (1.0 - alpha)).sum()
    return float(total / (nx * ny))


def joint_weighted_similarity(
    gt1: SpatioTemporalRepresentation,
    gt2: SpatioTemporalRepresentation,
    weights: WeightTable | None,
    alpha: float,
    bw: Bandwidths,
    counters: KernelCounters | None = None,
) -> float:
    """Final account similarity over joint representations (symmetric, >= 0)."""
    check_unit_interval(alpha, "alpha")
    if gt1.grid != gt2.grid or gt1.time != gt2.time:
        raise ValueError("representations were built against different specs")
    v1 = make_scoring_view(gt1, weights)
    v2 = make_scoring_view(gt2, weights)
    return score_views(v1, v2, alpha, bw, counters)
