"""Density-peaks screening of anomalous grid cells.

Cluster centers are cells that combine a high local density (many occupied
cells nearby) with a large separation from any denser cell. Remaining cells
join the cluster of their nearest denser neighbor when that neighbor is
within the cutoff distance; cells that end up in no cluster are outliers and
are dropped from an account's representation unless their visit probability
clears a floor. Only locations drive the screening; the per-cell time
distributions of surviving cells are untouched and probabilities are not
renormalized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .indexing import GridSpec, SpatioTemporalRepresentation, cell_centers_meters
from .validation import check_positive

__all__ = ["DpParams", "CellScore", "density_peaks", "cluster_cells", "detect_outliers"]


@dataclass(frozen=True, slots=True)
class DpParams:
    """Density-peaks parameters.

    ``cutoff`` is the neighborhood radius in meters (the usual default is
    1.5 cell diagonals, which makes the 8 surrounding cells neighbors).
    ``center_score`` thresholds rho*delta (count * meters) for promoting a
    cell to cluster center. ``keep_probability`` is the visit-probability
    floor below which an unclustered cell is removed.
    """

    cutoff: float
    center_score: float = 30.0
    keep_probability: float = 5e-5

    def __post_init__(self):
        check_positive(self.cutoff, "cutoff distance")


@dataclass(frozen=True, slots=True)
class CellScore:
    """Per-cell density-peaks quantities."""

    cell_id: int
    rho: int        # occupied cells strictly within the cutoff
    delta: float    # meters to the nearest denser cell (max distance at the peak)
    score: float    # rho * delta


def _rank_order(rho: np.ndarray, cell_ids: np.ndarray) -> np.ndarray:
    # Decreasing density; rho ties broken by ascending cell id.
    return np.lexsort((cell_ids, -rho))


def cluster_cells(
    cell_ids: np.ndarray, grid: GridSpec, params: DpParams
) -> tuple[list[CellScore], np.ndarray]:
    """Score one account's cells and assign cluster labels.

    Returns (scores ordered like ``cell_ids``, labels) where label -1 marks a
    cell belonging to no cluster. Deterministic: all ties break by ascending
    cell id.
    """
    n = len(cell_ids)
    if n == 0:
        raise ValueError("cluster_cells requires at least one cell")
    x, y = cell_centers_meters(cell_ids, grid)
    dist = np.hypot(x[:, None] - x[None, :], y[:, None] - y[None, :])
    rho = (dist < params.cutoff).sum(axis=1) - 1  # exclude self

    order = _rank_order(rho, cell_ids)
    delta = np.zeros(n, dtype=np.float64)
    nearest_denser = np.full(n, -1, dtype=np.int64)
    for pos, i in enumerate(order):
        if pos == 0:
            delta[i] = float(dist[i].max()) if n > 1 else 0.0
            continue
        denser = order[:pos]
        dd = dist[i, denser]
        dmin = dd.min()
        delta[i] = float(dmin)
        tied = denser[dd == dmin]
        nearest_denser[i] = tied[np.argmin(cell_ids[tied])]

    scores = [
        CellScore(int(cell_ids[i]), int(rho[i]), float(delta[i]), float(rho[i] * delta[i]))
        for i in range(n)
    ]

    labels = np.full(n, -1, dtype=np.int64)
    next_label = 0
    for i in order:
        if rho[i] * delta[i] >= params.center_score:
            labels[i] = next_label
            next_label += 1
            continue
        j = nearest_denser[i]
        if j >= 0 and dist[i, j] < params.cutoff and labels[j] >= 0:
            labels[i] = labels[j]
    return scores, labels


def density_peaks(
    cell_ids: np.ndarray, grid: GridSpec, params: DpParams
) -> list[CellScore]:
    """Local density and separation scores for one account's cell set."""
    scores, _ = cluster_cells(np.asarray(cell_ids, dtype=np.int64), grid, params)
    return scores


def detect_outliers(
    rep: SpatioTemporalRepresentation, params: DpParams
) -> tuple[SpatioTemporalRepresentation, tuple[int, ...]]:
    """Remove unclustered low-probability cells from a representation.

    A cell with visit probability at or above ``keep_probability`` is never
    removed. If pruning would delete every cell the input is returned
    unchanged: an account must keep at least one cell to be scorable.
    """
    _, labels = cluster_cells(rep.cell_ids, rep.grid, params)
    removable = (labels < 0) & (rep.cell_probs < params.keep_probability)
    if not removable.any() or removable.all():
        return rep, ()
    keep = ~removable
    removed = tuple(int(c) for c in rep.cell_ids[removable])
    pruned = SpatioTemporalRepresentation(
        rep.account_id,
        rep.grid,
        rep.time,
        rep.cell_ids[keep],
        rep.cell_probs[keep],
        tuple(p for p, k in zip(rep.cell_periods, keep) if k),
        tuple(p for p, k in zip(rep.cell_period_probs, keep) if k),
    )
    return pruned, removed
