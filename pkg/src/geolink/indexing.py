"""Grid map and time-period indexes, and per-account probability representations.

The space covered by both datasets is divided into a ``d x d`` grid and the
time span into ``M`` uniform periods. Each account is then summarized by the
cells/periods it visits with the corresponding visit probabilities, and by a
joint form that attaches a per-cell time-period distribution to every cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import AccountRecordSet, CheckIn, Dataset

__all__ = [
    "METERS_PER_DEG_LAT",
    "METERS_PER_DEG_LNG",
    "GridSpec",
    "TimeSpec",
    "GridRepresentation",
    "TimeRepresentation",
    "SpatioTemporalRepresentation",
    "build_specs",
    "locate",
    "cell_center_meters",
    "build_representation",
]

# Equirectangular projection constants (meters per degree at the equator).
METERS_PER_DEG_LAT = 110574.0
METERS_PER_DEG_LNG = 111320.0

# Bounding boxes grow by this much past the data maximum so that
# max-coordinate points land inside the last cell/period.
_EDGE_MARGIN = 1e-9
# Degenerate (single-point) extents widen to these minimums.
_MIN_WIDTH_DEG = 1e-6
_MIN_WIDTH_SEC = 1.0


@dataclass(frozen=True, slots=True)
class GridSpec:
    """A d x d grid over a lat/lng bounding box.

    Cells are numbered row-major from the bottom-left corner: id = row*d + col
    with rows indexing latitude upward and columns longitude rightward.
    ``ref_lat`` is the projection latitude for converting degrees to meters.
    """

    min_lat: float
    min_lng: float
    max_lat: float
    max_lng: float
    d: int
    ref_lat: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("grid size d must be >= 1")
        if not (self.min_lat < self.max_lat and self.min_lng < self.max_lng):
            raise ValueError("grid bounding box is empty")

    @property
    def cell_height_deg(self) -> float:
        return (self.max_lat - self.min_lat) / self.d

    @property
    def cell_width_deg(self) -> float:
        return (self.max_lng - self.min_lng) / self.d

    def cell_size_meters(self) -> tuple[float, float]:
        """(width, height) of one cell in projected meters."""
        w = self.cell_width_deg * math.cos(math.radians(self.ref_lat)) * METERS_PER_DEG_LNG
        h = self.cell_height_deg * METERS_PER_DEG_LAT
        return w, h

    def cell_diagonal_meters(self) -> float:
        w, h = self.cell_size_meters()
        return math.hypot(w, h)


@dataclass(frozen=True, slots=True)
class TimeSpec:
    """M uniform periods over the timestamp span [t_min, t_max]."""

    t_min: float
    t_max: float
    periods: int

    def __post_init__(self):
        if self.periods < 1:
            raise ValueError("period count must be >= 1")
        if not self.t_min < self.t_max:
            raise ValueError("time span is empty")

    @property
    def period_width(self) -> float:
        return (self.t_max - self.t_min) / self.periods


@dataclass(frozen=True)
class GridRepresentation:
    """Cells an account visits with their visit probabilities (sum to 1)."""

    account_id: str
    grid: GridSpec
    cell_ids: np.ndarray    # int64, ascending
    cell_probs: np.ndarray  # float64

    def __len__(self) -> int:
        return len(self.cell_ids)

    def as_dict(self) -> dict[int, float]:
        return {int(c): float(p) for c, p in zip(self.cell_ids, self.cell_probs)}


@dataclass(frozen=True)
class TimeRepresentation:
    """Periods an account visits with their visit probabilities (sum to 1)."""

    account_id: str
    time: TimeSpec
    period_ids: np.ndarray
    period_probs: np.ndarray

    def __len__(self) -> int:
        return len(self.period_ids)

    def as_dict(self) -> dict[int, float]:
        return {int(p): float(q) for p, q in zip(self.period_ids, self.period_probs)}


@dataclass(frozen=True)
class SpatioTemporalRepresentation:
    """Joint form: visited cells, their probabilities, and a per-cell time
    distribution over the periods visited inside that cell (each sums to 1).
    Entries are ordered by ascending cell id; per-cell periods ascend too."""

    account_id: str
    grid: GridSpec
    time: TimeSpec
    cell_ids: np.ndarray                    # int64, ascending
    cell_probs: np.ndarray                  # float64
    cell_periods: tuple[np.ndarray, ...]    # per cell: int64 period ids
    cell_period_probs: tuple[np.ndarray, ...]

    def __len__(self) -> int:
        return len(self.cell_ids)

    def marginal_grid(self) -> GridRepresentation:
        return GridRepresentation(self.account_id, self.grid, self.cell_ids, self.cell_probs)


def _extent(values) -> tuple[float, float]:
    lo = min(values)
    hi = max(values)
    return lo, hi


def build_specs(ds1: Dataset, ds2: Dataset, d: int, periods: int) -> tuple[GridSpec, TimeSpec]:
    """Fit a grid and period partition to the union extent of both datasets.

    The box is the data extent widened by a tiny margin on the max side so
    maximum-coordinate points map into the last cell/period; single-point
    extents widen to a fixed minimum. The projection latitude is the mean
    latitude of all records.
    """
    if d < 1:
        raise ValueError("grid size d must be >= 1")
    if periods < 1:
        raise ValueError("period count must be >= 1")
    records = list(ds1.iter_records()) + list(ds2.iter_records())
    if not records:
        raise ValueError("cannot build specs from empty datasets")
    lats = [r.lat for r in records]
    lngs = [r.lng for r in records]
    ts = [r.timestamp for r in records]
    min_lat, max_lat = _extent(lats)
    min_lng, max_lng = _extent(lngs)
    t_min, t_max = _extent(ts)
    max_lat += _EDGE_MARGIN
    max_lng += _EDGE_MARGIN
    t_max += _EDGE_MARGIN
    if max_lat - min_lat < _MIN_WIDTH_DEG:
        max_lat = min_lat + _MIN_WIDTH_DEG
    if max_lng - min_lng < _MIN_WIDTH_DEG:
        max_lng = min_lng + _MIN_WIDTH_DEG
    if t_max - t_min < _MIN_WIDTH_SEC:
        t_max = t_min + _MIN_WIDTH_SEC
    ref_lat = float(np.mean(lats))
    return (
        GridSpec(min_lat, min_lng, max_lat, max_lng, d, ref_lat),
        TimeSpec(float(t_min), float(t_max), periods),
    )


def locate(record: CheckIn, grid: GridSpec, time: TimeSpec) -> tuple[int, int]:
    """Map a record to (cell_id, period_id). Raises if outside either extent."""
    if not (grid.min_lat <= record.lat <= grid.max_lat and grid.min_lng <= record.lng <= grid.max_lng):
        raise ValueError(
            f"record at ({record.lat}, {record.lng}) outside grid extent"
        )
    if not (time.t_min <= record.timestamp <= time.t_max):
        raise ValueError(f"timestamp {record.timestamp} outside time extent")
    row = min(int((record.lat - grid.min_lat) / grid.cell_height_deg), grid.d - 1)
    col = min(int((record.lng - grid.min_lng) / grid.cell_width_deg), grid.d - 1)
    period = min(int((record.timestamp - time.t_min) / time.period_width), time.periods - 1)
    return row * grid.d + col, period


def cell_center_meters(cell_id: int, grid: GridSpec) -> tuple[float, float]:
    """Projected (x, y) meters of a cell center (equirectangular at ref_lat)."""
    if not 0 <= cell_id < grid.d * grid.d:
        raise ValueError(f"cell id {cell_id} out of range for d={grid.d}")
    row, col = divmod(cell_id, grid.d)
    lat_c = grid.min_lat + (row + 0.5) * grid.cell_height_deg
    lng_c = grid.min_lng + (col + 0.5) * grid.cell_width_deg
    x = lng_c * math.cos(math.radians(grid.ref_lat)) * METERS_PER_DEG_LNG
    y = lat_c * METERS_PER_DEG_LAT
    return x, y


def cell_centers_meters(cell_ids: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized cell_center_meters over an id array."""
    rows, cols = np.divmod(cell_ids, grid.d)
    lat_c = grid.min_lat + (rows + 0.5) * grid.cell_height_deg
    lng_c = grid.min_lng + (cols + 0.5) * grid.cell_width_deg
    x = lng_c * math.cos(math.radians(grid.ref_lat)) * METERS_PER_DEG_LNG
    y = lat_c * METERS_PER_DEG_LAT
    return x, y


def build_representation(
    account: AccountRecordSet, grid: GridSpec, time: TimeSpec
) -> tuple[GridRepresentation, TimeRepresentation, SpatioTemporalRepresentation]:
    """Count an account's records into cell/period probabilities.

    Returns the spatial marginal, the temporal marginal, and the joint
    representation whose per-cell time distributions are normalized by the
    record count inside each cell.
    """
    n = len(account.records)
    cell_counts: dict[int, int] = {}
    period_counts: dict[int, int] = {}
    joint_counts: dict[int, dict[int, int]] = {}
    for r in account.records:
        cell, period = locate(r, grid, time)
        cell_counts[cell] = cell_counts.get(cell, 0) + 1
        period_counts[period] = period_counts.get(period, 0) + 1
        per = joint_counts.setdefault(cell, {})
        per[period] = per.get(period, 0) + 1

    cells = np.array(sorted(cell_counts), dtype=np.int64)
    cell_probs = np.array([cell_counts[int(c)] / n for c in cells], dtype=np.float64)
    periods = np.array(sorted(period_counts), dtype=np.int64)
    period_probs = np.array([period_counts[int(p)] / n for p in periods], dtype=np.float64)

    per_cell_periods = []
    per_cell_probs = []
    for c in cells:
        per = joint_counts[int(c)]
        in_cell = sum(per.values())
        pids = np.array(sorted(per), dtype=np.int64)
        per_cell_periods.append(pids)
        per_cell_probs.append(
            np.array([per[int(p)] / in_cell for p in pids], dtype=np.float64)
        )

    grep = GridRepresentation(account.account_id, grid, cells, cell_probs)
    trep = TimeRepresentation(account.account_id, time, periods, period_probs)
    strep = SpatioTemporalRepresentation(
        account.account_id,
        grid,
        time,
        cells,
        cell_probs,
        tuple(per_cell_periods),
        tuple(per_cell_probs),
    )
    return grep, trep, strep
