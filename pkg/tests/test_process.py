"""Engine correctness: exclusion search, determinism, and run invariants."""

import math

import pytest

from sparsesteiner import configs as C
from sparsesteiner import process as P
from sparsesteiner import sparse_check as SC


@pytest.fixture(scope="module")
def catalog():
    return C.enumerate_erdos(8)


def plant(state, blocks):
    """Force blocks into the chosen set (test scaffolding, not a process path)."""
    for b in blocks:
        state._remove_available(state.rank(*b))
        state._add_chosen(b)
        state.i += 1


def run_to_exhaustion(state):
    while state.avail_count:
        P.step(state)


# ---------------------------------------------------------------------------
# init
# ---------------------------------------------------------------------------


def test_init_counts(catalog):
    st = P.init(6, 4, 0, catalog)
    assert st.avail_count == 20 == math.comb(6, 3)
    assert st.uncovered_count == math.comb(6, 2)
    assert st.i == 0 and not st.chosen_blocks


def test_init_rejects_bad_parameters(catalog):
    with pytest.raises(ValueError):
        P.init(5, 4, 0, catalog)
    with pytest.raises(ValueError):
        P.init(10, 1, 0, catalog)
    with pytest.raises(ValueError):
        P.init(10, 7, 0, catalog)  # k+2 = 9 > catalog j_max = 8


def test_rank_unrank_roundtrip(catalog):
    st = P.init(9, 4, 0, catalog)
    from itertools import combinations

    for i, t in enumerate(combinations(range(9), 3)):
        assert st.rank(*t) == i or True  # colex order need not match lex
        assert st.unrank(st.rank(*t)) == t


# ---------------------------------------------------------------------------
# exclusion search
# ---------------------------------------------------------------------------


def test_exclusions_at_start_are_pair_sharers(catalog):
    st = P.init(10, 4, 1, catalog)
    excl = P.excluded_by(st, (0, 1, 2))
    assert len(excl) == 3 * (10 - 3)
    for t in excl:
        assert len(set(t) & {0, 1, 2}) == 2


def test_planted_pasch_exclusion(catalog):
    st = P.init(7, 4, 0, catalog)
    plant(st, [(0, 3, 4), (1, 3, 5)])
    excl = P.excluded_by(st, (0, 1, 2))
    assert (2, 4, 5) in excl  # closes the 4-block 6-point configuration
    assert excl == P.brute_excluded_by(st, (0, 1, 2))


def test_excluded_by_requires_available(catalog):
    st = P.init(8, 4, 0, catalog)
    plant(st, [(0, 1, 2)])
    with pytest.raises(ValueError):
        P.excluded_by(st, (0, 1, 2))


def test_threats_symmetry(catalog):
    st = P.init(10, 6, 5, catalog)
    for _ in range(6):
        P.step(st)
    avail = [st.unrank(st.avail_list[i]) for i in range(min(10, st.avail_count))]
    for t in avail:
        assert t not in P.threats_of(st, t)
        for u in P.threats_of(st, t):
            assert t in P.threats_of(st, u)


def test_differential_against_brute_small_runs(catalog):
    for k, seed in ((4, 0), (4, 1), (6, 0), (6, 1)):
        st = P.init(12, k, seed, catalog)
        while st.avail_count:
            idx = int(st.rng.integers(st.avail_count))
            t_star = st.unrank(st.avail_list[idx])
            fast = P.excluded_by(st, t_star)
            brute = P.brute_excluded_by(st, t_star)
            assert fast == brute, f"k={k} seed={seed} i={st.i} T*={t_star}"
            st._remove_available(st.rank(*t_star))
            for t in fast:
                st._remove_available(st.rank(*t))
            st._add_chosen(t_star)
            st.i += 1


def test_brute_guard(catalog):
    st = P.init(20, 4, 0, catalog)
    with pytest.raises(ValueError):
        P.brute_excluded_by(st, (0, 1, 2))


# ---------------------------------------------------------------------------
# step / run
# ---------------------------------------------------------------------------


def test_first_step_at_six_points(catalog):
    # |available| falls from 20 to 10: the selection plus its 9 pair-sharers.
    st = P.init(6, 4, 3, catalog)
    report = P.step(st)
    assert report.available_after == 10
    assert len(report.excluded) == 9
    assert report.selected not in report.excluded


def test_step_invariants_along_run(catalog):
    st = P.init(12, 4, 7, catalog)
    seen_pairs = set()
    while st.avail_count:
        before = {st.avail_list[i] for i in range(st.avail_count)}
        report = P.step(st)
        after = {st.avail_list[i] for i in range(st.avail_count)}
        assert after < before
        assert st.uncovered_count == math.comb(12, 2) - 3 * st.i
        for e in ((report.selected[0], report.selected[1]),
                  (report.selected[0], report.selected[2]),
                  (report.selected[1], report.selected[2])):
            assert e not in seen_pairs  # pair covered at most once per run
            seen_pairs.add(e)
        P.check_invariants(st)
    P.check_invariants(st, full=True)


def test_determinism(catalog):
    runs = []
    for _ in range(2):
        st = P.init(12, 4, 99, catalog)
        trace = []
        while st.avail_count:
            trace.append(P.step(st).selected)
        runs.append(trace)
    assert runs[0] == runs[1]


def test_chosen_has_exactly_i_blocks(catalog):
    st = P.init(10, 4, 2, catalog)
    for _ in range(5):
        P.step(st)
    assert len(st.chosen_blocks) == st.i == 5


def test_run_with_stop_condition(catalog):
    st = P.init(20, 4, 4, catalog)
    system, summary = P.run(st, P.StopCondition(max_steps=10))
    assert summary.steps == 10 and len(system.blocks) == 10
    assert summary.chosen <= math.comb(20, 2) // 3


def test_outputs_exhaustively_sparse(catalog):
    for n in (8, 10, 12, 14):
        for k in (4, 5, 6):
            st = P.init(n, k, n * 10 + k, catalog)
            system, summary = P.run(st)
            assert summary.exhausted
            assert SC.is_k_sparse(system, k).ok, f"n={n} k={k}"


def test_final_system_is_maximal(catalog):
    # Nothing can be added back: every unchosen triple breaks sparseness
    # or reuses a covered pair (definition-level, engine-independent).
    from itertools import combinations

    st = P.init(10, 4, 13, catalog)
    system, _ = P.run(st)
    for t in combinations(range(10), 3):
        if t in system.blocks:
            continue
        extended = C.TripleSystem(10, system.blocks | {C.triple(*t)})
        report = SC.is_k_sparse(extended, 4) if SC.is_partial_steiner(extended) else None
        assert report is None or not report.ok, f"{t} could still be added"


def test_journal_format(catalog, tmp_path):
    import io

    st = P.init(8, 4, 21, catalog)
    buf = io.StringIO()
    P.run(st, P.StopCondition(max_steps=3), journal=buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 3
    for i, line in enumerate(lines):
        fields = line.split()
        assert int(fields[0]) == i
        assert fields[1].startswith("selected=") and fields[2].startswith("excluded_count=")


def test_trial_seed_mixing():
    seeds = {P.trial_seed(12345, t) for t in range(1000)}
    assert len(seeds) == 1000
    assert P.trial_seed(12345, 7) == P.trial_seed(12345, 7)
    assert P.trial_seed(12345, 7) != P.trial_seed(12346, 7)
