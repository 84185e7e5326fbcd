"""The constrained random removal process producing k-sparse partial systems.

Starting from all C(n,3) triples available, each step selects an available
triple uniformly at random, adds it to the chosen set, and discards every
available triple that would complete a minimal forbidden configuration on at
most k+2 points together with the selection and previously chosen triples.
The chosen set is therefore a k-sparse partial Steiner triple system at every
step, and the engine's whole job is to compute those discard sets exactly and
fast: catalog configurations are matched by rooted backtracking through
pair/vertex indices of the chosen set, while the two-triples-sharing-a-pair
case is a direct scan over third vertices.

A brute-force discard oracle (`brute_excluded_by`) re-derives the same sets
from the definition alone on small instances; the engine is differential
tested against it.

One ProcessState is mutated by exactly one logical thread.  Independent runs
may execute concurrently and share the immutable catalog.
"""

from __future__ import annotations

import time
from array import array
from bisect import bisect_right
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable, Optional, TextIO

import numpy as np

from .configs import ErdosCatalog, Triple, TripleSystem, is_erdos_block_set

BRUTE_N_LIMIT = 14

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One step of the splitmix64 sequence; fixed cross-platform mixer."""
    z = (x + GOLDEN64) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def trial_seed(master_seed: int, index: int) -> int:
    """Derived seed for parallel trials: master XOR golden-ratio-mixed index."""
    return (master_seed ^ splitmix64(index)) & MASK64


@dataclass
class StepReport:
    i: int
    selected: Triple
    excluded: tuple[Triple, ...]
    available_after: int


@dataclass
class RunSummary:
    n: int
    k: int
    seed: int
    steps: int
    chosen: int
    available_left: int
    uncovered_left: int
    exhausted: bool
    duration_s: float


@dataclass
class StopCondition:
    """Optional run limits; the process always stops when nothing is available."""

    max_steps: Optional[int] = None
    target_chosen: Optional[int] = None
    wall_clock_s: Optional[float] = None

    def reached(self, state: "ProcessState", started: float) -> bool:
        if self.max_steps is not None and state.i >= self.max_steps:
            return True
        if self.target_chosen is not None and state.i >= self.target_chosen:
            return True
        if self.wall_clock_s is not None and time.monotonic() - started >= self.wall_clock_s:
            return True
        return False


class ProcessState:
    """Mutable state of one removal-process run.

    The available set is a dense swap-remove array with a rank->position map,
    so uniform sampling, membership and deletion are O(1).  Chosen triples
    carry two secondary indices: pair -> covering block (unique, since the
    chosen set stays linear) and vertex -> incident blocks, which drive the
    rooted configuration search.
    """

    def __init__(self, n: int, k: int, seed: int, catalog: ErdosCatalog) -> None:
        if n < 6:
            raise ValueError("n must be at least 6")
        if k < 2:
            raise ValueError("k must be at least 2")
        if k + 2 > catalog.j_max:
            raise ValueError(
                f"catalog only covers configurations up to {catalog.j_max} points; "
                f"k={k} needs {k + 2}"
            )
        self.n = n
        self.k = k
        self.j_max = k + 2
        self.seed = seed
        self.catalog = catalog
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self.i = 0

        # Rank tables for the colex bijection {a<b<c} -> C(c,3)+C(b,2)+a.
        self.C2 = [v * (v - 1) // 2 for v in range(n + 1)]
        self.C3 = [v * (v - 1) * (v - 2) // 6 for v in range(n + 1)]
        self.total_triples = self.C3[n]

        m = self.total_triples
        self.avail_count = m
        self.avail_list = array("i")
        self.avail_list.frombytes(np.arange(m, dtype=np.int32).tobytes())
        self.avail_pos = array("i")
        self.avail_pos.frombytes(np.arange(m, dtype=np.int32).tobytes())
        self._stamp = array("i", bytes(4 * m))
        self._stamp_counter = 0

        self.chosen_blocks: list[Triple] = []
        self.pair_block = array("i", bytes(0))
        self.pair_block.frombytes(np.full(n * n, -1, dtype=np.int32).tobytes())
        self.vert_blocks: list[list[int]] = [[] for _ in range(n)]
        self.uncovered_count = n * (n - 1) // 2

        # Per-entry compiled plans: (root_maps, steps, target_slot) with plain
        # tuples for speed; only entries on >= 6 points are matched by plans,
        # the 4-point case is the shared-pair scan.
        self._plans: list[tuple[tuple, ...]] = []
        for entry in catalog.entries():
            if entry.j < 6 or entry.j > self.j_max:
                continue
            for plan in entry.pair_plans:
                steps = tuple((s.slot, s.mapped, s.free) for s in plan.steps)
                self._plans.append((entry.j, plan.root_maps, steps, plan.target_slot))

    # -- rank helpers -----------------------------------------------------

    def rank(self, a: int, b: int, c: int) -> int:
        return self.C3[c] + self.C2[b] + a

    def unrank(self, r: int) -> Triple:
        c = bisect_right(self.C3, r) - 1
        r -= self.C3[c]
        b = bisect_right(self.C2, r) - 1
        a = r - self.C2[b]
        return (a, b, c)

    def is_available(self, t: Triple) -> bool:
        return self.avail_pos[self.rank(*t)] >= 0

    def is_chosen(self, t: Triple) -> bool:
        bid = self.pair_block[t[0] * self.n + t[1]]
        return bid >= 0 and self.chosen_blocks[bid] == t

    def pair_covered(self, u: int, v: int) -> bool:
        if u > v:
            u, v = v, u
        return self.pair_block[u * self.n + v] >= 0

    def chosen_system(self) -> TripleSystem:
        return TripleSystem(self.n, frozenset(self.chosen_blocks))

    def available_triples(self) -> Iterable[Triple]:
        for idx in range(self.avail_count):
            yield self.unrank(self.avail_list[idx])

    # -- exclusion search --------------------------------------------------

    def _exclusion_ranks(self, t: Triple) -> list[int]:
        """Ranks of available triples mutually excluded with t (t not listed).

        A triple is excluded exactly when together with t and some chosen
        triples it forms a catalog configuration on at most k+2 points: the
        4-point case is every available triple sharing a pair with t, and
        each larger configuration is found by rooted embedding, mapping one
        slot onto t, the other free slot onto the result, and all remaining
        slots onto chosen blocks through the pair/vertex indices.
        """
        n = self.n
        avail_pos = self.avail_pos
        C2 = self.C2
        C3 = self.C3
        self._stamp_counter += 1
        counter = self._stamp_counter
        stamp = self._stamp
        out: list[int] = []
        ta, tb, tc = t
        t_rank = C3[tc] + C2[tb] + ta

        for x, y in ((ta, tb), (ta, tc), (tb, tc)):
            for z in range(n):
                if z == x or z == y:
                    continue
                if z < x:
                    r = C3[y] + C2[x] + z
                elif z < y:
                    r = C3[y] + C2[z] + x
                else:
                    r = C3[z] + C2[y] + x
                if r != t_rank and avail_pos[r] >= 0 and stamp[r] != counter:
                    stamp[r] = counter
                    out.append(r)

        if not self.chosen_blocks:
            return out

        pair_block = self.pair_block
        vert_blocks = self.vert_blocks
        chosen_blocks = self.chosen_blocks

        for j, root_maps, steps, target in self._plans:
            img = [-1] * j
            nsteps = len(steps)

            def dfs(si: int, used: frozenset[int] | set[int]) -> None:
                if si == nsteps:
                    x = img[target[0]]
                    y = img[target[1]]
                    z = img[target[2]]
                    if x > y:
                        x, y = y, x
                    if y > z:
                        y, z = z, y
                        if x > y:
                            x, y = y, x
                    r = C3[z] + C2[y] + x
                    if r != t_rank and avail_pos[r] >= 0 and stamp[r] != counter:
                        stamp[r] = counter
                        out.append(r)
                    return
                slot, mapped, free = steps[si]
                nm = len(mapped)
                if nm >= 2:
                    u = img[mapped[0]]
                    v = img[mapped[1]]
                    if u > v:
                        u, v = v, u
                    bid = pair_block[u * n + v]
                    if bid < 0:
                        return
                    block = chosen_blocks[bid]
                    if nm == 3:
                        if img[mapped[2]] in block:
                            dfs(si + 1, used)
                        return
                    p, q, rr = block
                    w = p if p != u and p != v else (q if q != u and q != v else rr)
                    if w in used:
                        return
                    img[free[0]] = w
                    dfs(si + 1, used | {w})
                    img[free[0]] = -1
                    return
                u = img[mapped[0]]
                f0, f1 = free
                for bid in vert_blocks[u]:
                    p, q, rr = chosen_blocks[bid]
                    if p == u:
                        o0, o1 = q, rr
                    elif q == u:
                        o0, o1 = p, rr
                    else:
                        o0, o1 = p, q
                    if o0 not in used and o1 not in used:
                        img[f0] = o0
                        img[f1] = o1
                        dfs(si + 1, used | {o0, o1})
                        img[f0] = o1
                        img[f1] = o0
                        dfs(si + 1, used | {o0, o1})
                        img[f0] = -1
                        img[f1] = -1

            for rm in root_maps:
                img[rm[0]] = ta
                img[rm[1]] = tb
                img[rm[2]] = tc
                dfs(0, {ta, tb, tc})
                img[rm[0]] = -1
                img[rm[1]] = -1
                img[rm[2]] = -1
        return out

    # -- mutation ----------------------------------------------------------

    def _remove_available(self, r: int) -> None:
        pos = self.avail_pos[r]
        last = self.avail_count - 1
        lr = self.avail_list[last]
        self.avail_list[pos] = lr
        self.avail_pos[lr] = pos
        self.avail_pos[r] = -1
        self.avail_count = last

    def _add_chosen(self, t: Triple) -> None:
        bid = len(self.chosen_blocks)
        self.chosen_blocks.append(t)
        a, b, c = t
        n = self.n
        for u, v in ((a, b), (a, c), (b, c)):
            idx = u * n + v
            assert self.pair_block[idx] < 0, "pair covered twice"
            self.pair_block[idx] = bid
        for v in t:
            self.vert_blocks[v].append(bid)
        self.uncovered_count -= 3


def init(n: int, k: int, seed: int, catalog: ErdosCatalog) -> ProcessState:
    """Fresh state: all triples available, nothing chosen, all pairs uncovered."""
    return ProcessState(n, k, seed, catalog)


def excluded_by(state: ProcessState, t_star: Triple) -> frozenset[Triple]:
    """Available triples T != t_star excluded when t_star is selected."""
    if not state.is_available(t_star):
        raise ValueError(f"{t_star} is not available")
    return frozenset(state.unrank(r) for r in state._exclusion_ranks(t_star))


def threats_of(state: ProcessState, t: Triple) -> frozenset[Triple]:
    """Available triples whose selection would make t unavailable.

    Mutual exclusion is symmetric, so this is the same search as excluded_by
    with the root and target slot roles swapped; t itself is never listed.
    """
    if not state.is_available(t):
        raise ValueError(f"{t} is not available")
    return frozenset(state.unrank(r) for r in state._exclusion_ranks(t))


def brute_excluded_by(state: ProcessState, t_star: Triple) -> frozenset[Triple]:
    """Reference exclusion set from the definition alone (n <= 14).

    For every vertex set W containing t_star with |W| <= k+2, every available
    T inside W and every subset C' of chosen blocks inside W is tested for
    whether {T, t_star} plus C' is a minimal forbidden configuration.  No
    catalog, no embedding plans.
    """
    if state.n > BRUTE_N_LIMIT:
        raise ValueError(f"brute oracle limited to n <= {BRUTE_N_LIMIT}")
    if not state.is_available(t_star):
        raise ValueError(f"{t_star} is not available")
    n = state.n
    j_max = state.j_max
    others = [v for v in range(n) if v not in t_star]
    ts_mask = (1 << t_star[0]) | (1 << t_star[1]) | (1 << t_star[2])
    found: set[Triple] = set()
    for extra in range(1, j_max - 2):
        for add in combinations(others, extra):
            w = list(t_star) + list(add)
            wm = ts_mask
            for v in add:
                wm |= 1 << v
            chosen_in = [
                b
                for b in state.chosen_blocks
                if wm >> b[0] & 1 and wm >> b[1] & 1 and wm >> b[2] & 1
            ]
            chosen_masks = [(1 << a | 1 << b | 1 << c) for a, b, c in chosen_in]
            avail_in = [
                tt
                for tt in combinations(sorted(w), 3)
                if tt != t_star and state.is_available(tt)
            ]
            for tt in avail_in:
                if tt in found:
                    continue
                tm = (1 << tt[0]) | (1 << tt[1]) | (1 << tt[2]) | ts_mask
                mc = len(chosen_in)
                for sub in range(1 << mc):
                    um = tm
                    size = 2
                    s = sub
                    while s:
                        low = s & -s
                        um |= chosen_masks[low.bit_length() - 1]
                        size += 1
                        s ^= low
                    if um.bit_count() != size + 2:
                        continue
                    cand = [tt, t_star] + [
                        chosen_in[ii] for ii in range(mc) if sub >> ii & 1
                    ]
                    if is_erdos_block_set(cand):
                        found.add(tt)
                        break
    return frozenset(found)


def step(state: ProcessState) -> StepReport:
    """One step: uniform selection, exclusion, index updates.

    Covering the selection's three pairs needs no separate cleanup: every
    available triple through a newly covered pair is a shared-pair exclusion,
    which the search already emits (verified against the brute oracle).
    """
    if state.avail_count == 0:
        raise RuntimeError("process terminated: no available triples")
    idx = int(state.rng.integers(state.avail_count))
    r_star = state.avail_list[idx]
    t_star = state.unrank(r_star)
    excl = state._exclusion_ranks(t_star)
    state._remove_available(r_star)
    for r in excl:
        state._remove_available(r)
    state._add_chosen(t_star)
    report = StepReport(
        i=state.i,
        selected=t_star,
        excluded=tuple(state.unrank(r) for r in excl),
        available_after=state.avail_count,
    )
    state.i += 1
    return report


def run(
    state: ProcessState,
    stop: Optional[StopCondition] = None,
    journal: Optional[TextIO] = None,
    on_step: Optional[Callable[[ProcessState], None]] = None,
) -> tuple[TripleSystem, RunSummary]:
    """Iterate steps until exhaustion or the stop condition fires."""
    stop = stop or StopCondition()
    started = time.monotonic()
    while state.avail_count > 0 and not stop.reached(state, started):
        idx = int(state.rng.integers(state.avail_count))
        r_star = state.avail_list[idx]
        t_star = state.unrank(r_star)
        excl = state._exclusion_ranks(t_star)
        state._remove_available(r_star)
        for r in excl:
            state._remove_available(r)
        state._add_chosen(t_star)
        if journal is not None:
            a, b, c = t_star
            journal.write(f"{state.i} selected={a},{b},{c} excluded_count={len(excl)}\n")
        state.i += 1
        if on_step is not None:
            on_step(state)
    summary = RunSummary(
        n=state.n,
        k=state.k,
        seed=state.seed,
        steps=state.i,
        chosen=len(state.chosen_blocks),
        available_left=state.avail_count,
        uncovered_left=state.uncovered_count,
        exhausted=state.avail_count == 0,
        duration_s=time.monotonic() - started,
    )
    return state.chosen_system(), summary


def check_invariants(state: ProcessState, full: bool = False) -> None:
    """Assert the structural state invariants; full mode scans everything."""
    n = state.n
    assert state.i == len(state.chosen_blocks)
    assert state.uncovered_count == n * (n - 1) // 2 - 3 * state.i
    for b in state.chosen_blocks:
        assert state.avail_pos[state.rank(*b)] < 0, "available and chosen overlap"
    count = state.avail_count
    idxs: Iterable[int] = range(count) if full else []
    if not full and count:
        # Local RNG: sampling here must not perturb the run's random stream.
        sample = np.random.default_rng(0).integers(count, size=min(100, count))
        idxs = [int(s) for s in sample]
    for pos in idxs:
        a, b, c = state.unrank(state.avail_list[pos])
        for u, v in ((a, b), (a, c), (b, c)):
            assert state.pair_block[u * n + v] < 0, "available triple on covered pair"
