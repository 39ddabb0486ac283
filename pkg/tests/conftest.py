import pytest

from geolink.indexing import GridSpec, TimeSpec, build_representation
from geolink.model import AccountRecordSet, CheckIn


def account_in_cells(account_id, cells, grid, t0=0):
    """Records placed at the centers of the given cells, distinct timestamps."""
    records = []
    for i, cell in enumerate(cells):
        row, col = divmod(cell, grid.d)
        lat = grid.min_lat + (row + 0.5) * grid.cell_height_deg
        lng = grid.min_lng + (col + 0.5) * grid.cell_width_deg
        records.append(CheckIn(account_id, lat, lng, t0 + i))
    return AccountRecordSet(account_id, tuple(records))


@pytest.fixture
def ten_grid():
    """10x10 grid of unit-degree cells; time split into 10 periods."""
    return GridSpec(0.0, 0.0, 10.0, 10.0, 10, 5.0), TimeSpec(0.0, 100.0, 10)


@pytest.fixture
def fig_reps(ten_grid):
    """Two accounts occupying the worked-example cell sets:
    u1 -> {2: .2, 73: .2, 88: .4, 38: .2}, u2 -> {24: .2, 73: .2, 78: .4, 38: .2}."""
    grid, tspec = ten_grid
    u1 = account_in_cells("u1", [2, 73, 88, 88, 38], grid)
    u2 = account_in_cells("u2", [24, 73, 78, 78, 38], grid)
    rep1 = build_representation(u1, grid, tspec)
    rep2 = build_representation(u2, grid, tspec)
    return rep1, rep2


def random_accounts(rng, n_accounts, n_records, grid, tspec, prefix="r"):
    out = []
    for i in range(n_accounts):
        lats = rng.uniform(grid.min_lat, grid.max_lat * 0.999, n_records)
        lngs = rng.uniform(grid.min_lng, grid.max_lng * 0.999, n_records)
        ts = rng.integers(int(tspec.t_min), int(tspec.t_max), n_records)
        aid = f"{prefix}{i}"
        out.append(
            AccountRecordSet(
                aid,
                tuple(
                    CheckIn(aid, float(a), float(g), int(t))
                    for a, g, t in zip(lats, lngs, ts)
                ),
            )
        )
    return out
