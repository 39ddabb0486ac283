import math

import numpy as np
import pytest

from geolink.indexing import (
    METERS_PER_DEG_LAT,
    METERS_PER_DEG_LNG,
    GridSpec,
    TimeSpec,
    build_representation,
)
from geolink.kde import (
    Bandwidths,
    KernelCounters,
    gaussian_kernel,
    indexed_similarity,
    joint_weighted_similarity,
    naive_similarity,
)
from geolink.model import AccountRecordSet, CheckIn
from geolink.weights import WeightTable

from conftest import account_in_cells, random_accounts


def naive_oracle(r1, r2, hs, ht, ref_lat, time_unit):
    """Independent plain-Python double sum of the kernel definition."""
    cos = math.cos(math.radians(ref_lat))
    s_r = 0.0
    s_t = 0.0
    for a in r1.records:
        for b in r2.records:
            dx = (a.lng - b.lng) * cos * METERS_PER_DEG_LNG
            dy = (a.lat - b.lat) * METERS_PER_DEG_LAT
            d = math.hypot(dx, dy)
            s_r += math.exp(-(d * d) / (2 * hs * hs)) / (2 * math.pi * hs)
            dt = (a.timestamp - b.timestamp) / time_unit
            s_t += math.exp(-(dt * dt) / (2 * ht * ht)) / (2 * math.pi * ht)
    n = len(r1.records) * len(r2.records)
    return s_r / n, s_t / n


def test_gaussian_kernel_zero_distance_maximum():
    for h in (0.5, 30.0, 60.0):
        assert gaussian_kernel(0.0, h) == pytest.approx(1 / (2 * math.pi * h), rel=1e-15)


def test_gaussian_kernel_substitution_at_h():
    h = 7.0
    assert gaussian_kernel(h, h) == pytest.approx(
        math.exp(-0.5) / (2 * math.pi * h), rel=1e-15
    )


def test_gaussian_kernel_tail_decay():
    h = 3.0
    assert gaussian_kernel(10 * h, h) < 1e-20 / (2 * math.pi * h)


def test_gaussian_kernel_rejects_bad_bandwidth():
    with pytest.raises(ValueError):
        gaussian_kernel(1.0, 0.0)
    with pytest.raises(ValueError):
        gaussian_kernel(1.0, -1.0)


def test_gaussian_kernel_vectorized():
    out = gaussian_kernel(np.array([0.0, 1.0, 2.0]), 1.0)
    assert out.shape == (3,)
    assert out[0] == pytest.approx(1 / (2 * math.pi))


def test_naive_identical_single_record():
    r = AccountRecordSet("u", (CheckIn("u", 1.0, 2.0, 100),))
    bw = Bandwidths(30.0, 2.0)
    s_r, s_t, s = naive_similarity(r, r, bw)
    assert s_r == pytest.approx(1 / (2 * math.pi * 30.0), rel=1e-12)
    assert s_t == pytest.approx(1 / (2 * math.pi * 2.0), rel=1e-12)
    assert s == pytest.approx(s_r + s_t, rel=1e-15)


def test_naive_symmetry(ten_grid):
    grid, tspec = ten_grid
    rng = np.random.default_rng(5)
    a, b = random_accounts(rng, 2, 15, grid, tspec)
    bw = Bandwidths(500.0, 3.0)
    assert naive_similarity(a, b, bw) == pytest.approx(
        naive_similarity(b, a, bw), rel=1e-12
    )


def test_naive_matches_double_sum_oracle_hand_placed():
    a = AccountRecordSet(
        "a", (CheckIn("a", 0.0, 0.0, 0), CheckIn("a", 0.001, 0.001, 60))
    )
    b = AccountRecordSet(
        "b", (CheckIn("b", 0.0005, 0.0, 30), CheckIn("b", 0.002, 0.001, 90))
    )
    bw = Bandwidths(60.0, 50.0)
    s_r, s_t, _ = naive_similarity(a, b, bw, ref_lat=0.0, time_unit=1.0)
    o_r, o_t = naive_oracle(a, b, 60.0, 50.0, 0.0, 1.0)
    assert s_r == pytest.approx(o_r, rel=1e-12)
    assert s_t == pytest.approx(o_t, rel=1e-12)


def test_naive_matches_oracle_random_pairs(ten_grid):
    grid, tspec = ten_grid
    rng = np.random.default_rng(6)
    accounts = random_accounts(rng, 10, 20, grid, tspec)
    bw = Bandwidths(5000.0, 4.0)
    for i in range(0, 10, 2):
        a, b = accounts[i], accounts[i + 1]
        s_r, s_t, _ = naive_similarity(a, b, bw, ref_lat=5.0, time_unit=10.0)
        o_r, o_t = naive_oracle(a, b, 5000.0, 4.0, 5.0, 10.0)
        assert s_r == pytest.approx(o_r, rel=1e-12)
        assert s_t == pytest.approx(o_t, rel=1e-12)


def test_empty_record_sets_are_unconstructible():
    # the type invariant guarantees naive_similarity never sees an empty set
    with pytest.raises(ValueError, match="no records"):
        AccountRecordSet("v", ())


def test_indexed_single_shared_cell_and_period(ten_grid):
    grid, tspec = ten_grid
    acct = account_in_cells("u", [42], grid, t0=5)
    g, t, _ = build_representation(acct, grid, tspec)
    bw = Bandwidths(25.0, 3.0)
    s_r, s_t, s = indexed_similarity(g, t, g, t, bw)
    assert s_r == pytest.approx(1 / (2 * math.pi * 25.0), rel=1e-12)
    assert s_t == pytest.approx(1 / (2 * math.pi * 3.0), rel=1e-12)
    assert s == pytest.approx(s_r + s_t)


def test_indexed_worked_example_matches_cell_pair_oracle(fig_reps, ten_grid):
    grid, _ = ten_grid
    (g1, t1, _), (g2, t2, _) = fig_reps
    bw = Bandwidths(200000.0, 2.0)
    s_r, _, _ = indexed_similarity(g1, t1, g2, t2, bw)

    cos = math.cos(math.radians(grid.ref_lat))
    oracle = 0.0
    for c1, p1 in g1.as_dict().items():
        for c2, p2 in g2.as_dict().items():
            r1, k1 = divmod(c1, 10)
            r2, k2 = divmod(c2, 10)
            dx = (k1 - k2) * 1.0 * cos * METERS_PER_DEG_LNG
            dy = (r1 - r2) * 1.0 * METERS_PER_DEG_LAT
            d2 = dx * dx + dy * dy
            oracle += (
                math.exp(-d2 / (2 * 200000.0**2)) / (2 * math.pi * 200000.0) * p1 * p2
            )
    oracle /= len(g1) * len(g2)
    assert s_r == pytest.approx(oracle, rel=1e-12)


def test_indexed_spec_mismatch_errors(ten_grid):
    grid, tspec = ten_grid
    other_grid = GridSpec(0.0, 0.0, 10.0, 10.0, 20, 5.0)
    acct = account_in_cells("u", [3], grid)
    g, t, _ = build_representation(acct, grid, tspec)
    g2, t2, _ = build_representation(acct, other_grid, tspec)
    with pytest.raises(ValueError, match="different"):
        indexed_similarity(g, t, g2, t2, Bandwidths())
    other_time = TimeSpec(0.0, 100.0, 20)
    g3, t3, _ = build_representation(acct, grid, other_time)
    with pytest.raises(ValueError, match="different"):
        indexed_similarity(g, t, g3, t3, Bandwidths())


def test_indexed_close_to_naive_for_single_records(ten_grid):
    grid, tspec = ten_grid
    a = AccountRecordSet("a", (CheckIn("a", 4.32, 6.01, 37),))
    b = AccountRecordSet("b", (CheckIn("b", 4.35, 6.04, 52),))
    bw = Bandwidths(8000.0, 2.0)
    g1, t1, _ = build_representation(a, grid, tspec)
    g2, t2, _ = build_representation(b, grid, tspec)
    s_r_i, s_t_i, _ = indexed_similarity(g1, t1, g2, t2, bw)
    s_r_n, s_t_n, _ = naive_similarity(
        a, b, bw, ref_lat=grid.ref_lat, time_unit=tspec.period_width
    )
    cs = 1 / (2 * math.pi * bw.spatial)
    lipschitz_s = cs * math.exp(-0.5) / bw.spatial
    assert abs(s_r_i - s_r_n) <= lipschitz_s * grid.cell_diagonal_meters()
    ct = 1 / (2 * math.pi * bw.temporal)
    lipschitz_t = ct * math.exp(-0.5) / bw.temporal
    assert abs(s_t_i - s_t_n) <= lipschitz_t * 1.0


def test_indexed_unit_mass_converges_to_naive_with_grid_growth():
    from geolink.indexing import GridRepresentation, build_specs
    from geolink.model import Dataset

    rng = np.random.default_rng(77)
    accounts = []
    for i in range(4):
        lats = rng.normal(0.0, 0.0006, 40)
        lngs = rng.normal(0.0, 0.0006, 40)
        ts = rng.integers(0, 1000, 40)
        aid = f"u{i}"
        accounts.append(
            AccountRecordSet(aid, tuple(
                CheckIn(aid, float(a), float(g), int(t))
                for a, g, t in zip(lats, lngs, ts)
            ))
        )
    ds = Dataset("p", {a.account_id: a for a in accounts})
    bw = Bandwidths(60.0, 1.0)

    def worst_gap(d):
        grid, tspec = build_specs(ds, ds, d, 10)
        gap = 0.0
        for i in range(4):
            for j in range(i + 1, 4):
                g1, t1, _ = build_representation(accounts[i], grid, tspec)
                g2, t2, _ = build_representation(accounts[j], grid, tspec)
                unit1 = GridRepresentation(g1.account_id, grid, g1.cell_ids, np.ones(len(g1)))
                unit2 = GridRepresentation(g2.account_id, grid, g2.cell_ids, np.ones(len(g2)))
                s_ind, _, _ = indexed_similarity(unit1, t1, unit2, t2, bw)
                s_nai, _, _ = naive_similarity(accounts[i], accounts[j], bw, ref_lat=grid.ref_lat)
                gap = max(gap, abs(s_ind - s_nai) / s_nai)
        return gap

    coarse, fine = worst_gap(50), worst_gap(1500)
    assert fine < coarse
    assert fine < 0.05


def test_indexed_spatial_upper_bound_and_symmetry(ten_grid):
    grid, tspec = ten_grid
    rng = np.random.default_rng(9)
    accounts = random_accounts(rng, 6, 25, grid, tspec)
    bw = Bandwidths(40.0, 1.0)
    reps = [build_representation(a, grid, tspec) for a in accounts]
    for i in range(len(reps)):
        for j in range(i, len(reps)):
            s_r, s_t, _ = indexed_similarity(
                reps[i][0], reps[i][1], reps[j][0], reps[j][1], bw
            )
            assert s_r <= 1 / (2 * math.pi * bw.spatial) + 1e-15
            assert s_t <= 1 / (2 * math.pi * bw.temporal) + 1e-15
            swapped = indexed_similarity(
                reps[j][0], reps[j][1], reps[i][0], reps[i][1], bw
            )
            assert swapped[0] == pytest.approx(s_r, rel=1e-12)
            assert swapped[1] == pytest.approx(s_t, rel=1e-12)


def test_joint_alpha_one_unit_weights_equals_indexed_spatial(fig_reps):
    (g1, t1, j1), (g2, t2, j2) = fig_reps
    bw = Bandwidths(150000.0, 1.0)
    s_r, _, _ = indexed_similarity(g1, t1, g2, t2, bw)
    joint = joint_weighted_similarity(j1, j2, None, 1.0, bw)
    assert joint == pytest.approx(s_r, rel=1e-14)


def test_joint_identical_one_cell_one_period_closed_form(ten_grid):
    grid, tspec = ten_grid
    acct = account_in_cells("u", [7], grid, t0=12)
    _, _, j = build_representation(acct, grid, tspec)
    bw = Bandwidths(45.0, 2.5)
    got = joint_weighted_similarity(j, j, None, 0.5, bw)
    cs = 1 / (2 * math.pi * 45.0)
    ct = 1 / (2 * math.pi * 2.5)
    assert got == pytest.approx(math.sqrt(cs) * math.sqrt(ct), rel=1e-12)


def test_joint_alpha_zero_is_temporal_only(ten_grid):
    grid, tspec = ten_grid
    a = account_in_cells("a", [0], grid, t0=0)
    b = account_in_cells("b", [99], grid, t0=0)  # far apart: spatial factor underflows
    _, _, ja = build_representation(a, grid, tspec)
    _, _, jb = build_representation(b, grid, tspec)
    bw = Bandwidths(10.0, 1.0)
    got = joint_weighted_similarity(ja, jb, None, 0.0, bw)
    assert got == pytest.approx(1 / (2 * math.pi * 1.0), rel=1e-12)


def test_joint_symmetry(ten_grid):
    grid, tspec = ten_grid
    rng = np.random.default_rng(13)
    a, b = random_accounts(rng, 2, 30, grid, tspec)
    ja = build_representation(a, grid, tspec)[2]
    jb = build_representation(b, grid, tspec)[2]
    bw = Bandwidths(300000.0, 5.0)
    assert joint_weighted_similarity(ja, jb, None, 0.5, bw) == pytest.approx(
        joint_weighted_similarity(jb, ja, None, 0.5, bw), rel=1e-12
    )


def test_joint_missing_weight_errors(ten_grid):
    grid, tspec = ten_grid
    acct = account_in_cells("u", [7], grid)
    _, _, j = build_representation(acct, grid, tspec)
    empty = WeightTable({}, {}, 0.4)
    with pytest.raises(ValueError, match="missing"):
        joint_weighted_similarity(j, j, empty, 0.5, Bandwidths())


def test_joint_spec_mismatch_errors(ten_grid):
    grid, tspec = ten_grid
    other = GridSpec(0.0, 0.0, 10.0, 10.0, 12, 5.0)
    acct = account_in_cells("u", [7], grid)
    _, _, j1 = build_representation(acct, grid, tspec)
    _, _, j2 = build_representation(acct, other, tspec)
    with pytest.raises(ValueError, match="different specs"):
        joint_weighted_similarity(j1, j2, None, 0.5, Bandwidths())


def test_joint_counts_kernel_evaluations(ten_grid):
    grid, tspec = ten_grid
    a = account_in_cells("a", [1, 2, 3], grid)
    b = account_in_cells("b", [1, 2], grid)
    ja = build_representation(a, grid, tspec)[2]
    jb = build_representation(b, grid, tspec)[2]
    counters = KernelCounters()
    joint_weighted_similarity(ja, jb, None, 0.5, Bandwidths(), counters)
    assert counters.pairs == 1
    assert counters.spatial_evals == 3 * 2
    assert counters.temporal_evals == 3 * 2  # one period entry per cell here


def test_bandwidths_validate():
    with pytest.raises(ValueError):
        Bandwidths(0.0, 1.0)
    with pytest.raises(ValueError):
        Bandwidths(1.0, -2.0)
