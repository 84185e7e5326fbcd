"""Tracking counters and their exact structural identities."""

import math
from itertools import combinations

import pytest

from sparsesteiner import configs as C
from sparsesteiner import process as P
from sparsesteiner import stats as S
from sparsesteiner.process import threats_of
from sparsesteiner.trajectory import TrajectoryParams


@pytest.fixture(scope="module")
def catalog():
    return C.enumerate_erdos(8)


def mid_run_state(catalog, n=12, k=4, seed=6, steps=6):
    st = P.init(n, k, seed, catalog)
    for _ in range(steps):
        P.step(st)
    return st


def available_sample(st, count):
    return [st.unrank(st.avail_list[i]) for i in range(min(count, st.avail_count))]


# ---------------------------------------------------------------------------
# X_e
# ---------------------------------------------------------------------------


def test_X_e_initial(catalog):
    st = P.init(12, 4, 0, catalog)
    for e in ((0, 1), (3, 11), (7, 8)):
        assert S.count_X_e(st, e) == (10, False)


def test_X_e_covered_flag(catalog):
    st = P.init(12, 4, 0, catalog)
    report = P.step(st)
    e = (report.selected[0], report.selected[1])
    assert S.count_X_e(st, e) == (0, True)


def test_sum_X_e_equals_three_avail(catalog):
    # Every available triple contains three uncovered pairs.
    for seed in (1, 2):
        st = mid_run_state(catalog, seed=seed)
        assert S.sum_X_e(st) == 3 * st.avail_count


def test_X_T40_identity(catalog):
    st = mid_run_state(catalog, k=6, seed=9)
    for t in available_sample(st, 12):
        by_edges = sum(S.count_X_e(st, e).count for e in combinations(t, 2)) - 3
        assert S.count_X_T40(st, t) == by_edges


# ---------------------------------------------------------------------------
# X_{T,j,c}
# ---------------------------------------------------------------------------


def test_X_Tjc_initial(catalog):
    st = P.init(12, 6, 0, catalog)
    counts = catalog.erd_counts()
    for j in (6, 7, 8):
        expected = counts[j] * math.comb(12 - 3, j - 3)
        assert S.count_X_Tjc(st, (0, 1, 2), j, 0) == expected
        for c in range(1, j - 3):
            assert S.count_X_Tjc(st, (0, 1, 2), j, c) == 0


def test_X_Tjc_against_subset_oracle(catalog):
    # k=4 everywhere; k=6 pins the 8-point counts at a step depth where the
    # window populations keep the subset oracle affordable.
    st = mid_run_state(catalog, k=4, seed=0, steps=8)
    for t in available_sample(st, 6):
        for c in range(0, 3):
            assert S.count_X_Tjc(st, t, 6, c) == S.brute_count_X_Tjc(st, t, 6, c)
    st = mid_run_state(catalog, k=6, seed=1, steps=6)
    for t in available_sample(st, 4):
        for j in (6, 7):
            for c in range(0, j - 3):
                assert S.count_X_Tjc(st, t, j, c) == S.brute_count_X_Tjc(st, t, j, c)
    st = mid_run_state(catalog, k=6, seed=1, steps=8)
    for t in available_sample(st, 3):
        for j in (6, 7, 8):
            for c in range(0, j - 3):
                assert S.count_X_Tjc(st, t, j, c) == S.brute_count_X_Tjc(st, t, j, c)


def test_fast_path_matches_dfs_beyond_threshold(catalog):
    st = P.init(40, 4, 3, catalog)
    for _ in range(60):
        P.step(st)
    entry = next(iter(catalog.entries(6)))
    for t in available_sample(st, 8):
        for c in (0, 1, 2):
            assert S._pasch_fast(st, t, c) == S._dfs_count(st, entry, t, c)


def test_X_Tjc_range_checks(catalog):
    st = P.init(12, 4, 0, catalog)
    with pytest.raises(ValueError):
        S.count_X_Tjc(st, (0, 1, 2), 5, 0)
    with pytest.raises(ValueError):
        S.count_X_Tjc(st, (0, 1, 2), 6, 3)


# ---------------------------------------------------------------------------
# Dangerous configurations and threats
# ---------------------------------------------------------------------------


def test_dangerous_matches_threat_sets(catalog):
    # The available blocks of the one-step configurations are exactly the
    # triples whose selection would exclude t.
    st = mid_run_state(catalog, k=6, seed=4, steps=7)
    for t in available_sample(st, 8):
        dang = S.enumerate_dangerous(st, t)
        assert {ab for _, ab in dang} == threats_of(st, t)


def test_danger_sandwich(catalog):
    # Multiply-counted threats are bounded by twice the double count.
    st = mid_run_state(catalog, k=6, seed=4, steps=8)
    for t in available_sample(st, 8):
        dang = S.enumerate_dangerous(st, t)
        groups: dict = {}
        for _, ab in dang:
            groups[ab] = groups.get(ab, 0) + 1
        doubles = sum(z * (z - 1) // 2 for z in groups.values())
        gap = len(dang) - len(threats_of(st, t))
        assert 0 <= gap <= 2 * doubles


def test_dangerous_c_equals_count(catalog):
    st = mid_run_state(catalog, k=4, seed=12, steps=9)
    for t in available_sample(st, 6):
        dang_big = [1 for copy, _ in S.enumerate_dangerous(st, t) if len(copy) > 2]
        assert len(dang_big) == S.count_X_Tjc(st, t, 6, 2)


def test_threat_identity_direct(catalog):
    # th(t, e) counted from its definition equals |threats| - X_e + 1.
    st = mid_run_state(catalog, k=4, seed=2, steps=7)
    for t in available_sample(st, 10):
        nthreats = len(threats_of(st, t))
        for e in combinations(t, 2):
            direct = S.threat_count_direct(st, t, e)
            assert direct == nthreats - S.count_X_e(st, e).count + 1


# ---------------------------------------------------------------------------
# Tracker and snapshots
# ---------------------------------------------------------------------------


def test_checkpoint_initial_on_trajectory(catalog):
    st = P.init(30, 4, 5, catalog)
    params = TrajectoryParams.from_catalog(30, 4, catalog)
    spec = S.default_tracker(30, 4, [0], seed=3, n_pairs=20, n_triples=5)
    snap = S.checkpoint(st, spec, params)
    assert snap.avail_count == snap.avail_traj == math.comb(30, 3)
    for e in snap.edges:
        assert not e.censored and e.x == e.f == 28 and e.in_band
    for t in snap.triples:
        assert not t.censored and t.x == t.f and t.in_band


def test_run_with_tracking_and_censoring(catalog):
    st = P.init(20, 4, 8, catalog)
    params = TrajectoryParams.from_catalog(20, 4, catalog)
    spec = S.TrackerSpec(
        edge_sample=tuple((0, v) for v in range(1, 11)),
        triple_sample=((0, 1, 2), (3, 4, 5)),
        checkpoints=(0, 20, 40),
    )
    snaps = S.run_with_tracking(st, spec, params)
    assert [s.i for s in snaps] == [0, 20, 40]
    late = snaps[-1]
    censored = [e for e in late.edges if e.censored]
    for e in censored:
        assert e.x == 0 and e.in_band is None
    # Monotone band: growing eps0 never shrinks the in-band population.
    wide = TrajectoryParams.from_catalog(20, 4, catalog, eps0=0.2)
    snap_wide = S.checkpoint(st, spec, wide)
    narrow_in = sum(1 for e in late.edges if e.in_band)
    wide_in = sum(1 for e in snap_wide.edges if e.in_band)
    assert wide_in >= narrow_in


def test_csv_roundtrip_and_schema(catalog):
    st = P.init(20, 4, 8, catalog)
    params = TrajectoryParams.from_catalog(20, 4, catalog)
    spec = S.TrackerSpec(
        edge_sample=((0, 1), (2, 3), (4, 5)),
        triple_sample=((0, 1, 2),),
        checkpoints=(0, 10),
    )
    snaps = S.run_with_tracking(st, spec, params)
    text = S.export_series(snaps)
    lines = text.splitlines()
    assert lines[0] == "# stats-csv v1"
    ncols = len(lines[1].split(","))
    jc = spec.jc_pairs(4, 20)
    assert ncols == 4 + 4 * 3 + 4 * len(jc) * 1
    assert len(lines) == 2 + 2  # version + header + one row per checkpoint
    assert S.parse_series(text) == snaps


def test_parse_rejects_unknown_schema():
    with pytest.raises(ValueError):
        S.parse_series("# stats-csv v9\ni,avail\n")


def test_default_tracker_small_n_tracks_all_pairs(catalog):
    spec = S.default_tracker(8, 4, [0], seed=0, n_pairs=200, n_triples=5)
    assert len(spec.edge_sample) == math.comb(8, 2)


def test_record_extensions_diagnostic(catalog):
    st = P.init(24, 4, 2, catalog)
    for _ in range(30):
        P.step(st)
    params = TrajectoryParams.from_catalog(24, 4, catalog)
    spec = S.TrackerSpec(
        edge_sample=((0, 1),), triple_sample=(), checkpoints=(30,),
        record_extensions=True,
    )
    snap = S.checkpoint(st, spec, params)
    assert snap.extensions  # one track per catalog entry in range
    for ext in snap.extensions:
        assert ext.max_count >= 0 and ext.bound > 0
        assert 0 <= ext.kappa <= ext.ell
    off = S.checkpoint(st, S.TrackerSpec(((0, 1),), (), (30,)), params)
    assert off.extensions == ()
