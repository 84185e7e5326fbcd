"""Empirical tracking of the process's random variables against trajectories.

Tracks, at configured checkpoint steps: the number of available triples, the
per-pair availability counts X_e for a sample of pairs, and the per-triple
configuration counts X_{T,j,c} (copies of a j-point catalog configuration
through an available triple T whose other blocks split into c chosen and
j-3-c available) for a sample of triples.  Each tracked quantity is compared
against its trajectory with the error envelope eps(i) scaled by the
quantity's magnitude; a quantity is in-band exactly when |X - f| <= band.

Counting operations read a ProcessState between steps only; snapshots are
immutable afterwards.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .configs import CatalogEntry, Triple, TripleSystem, triple
from .process import ProcessState, StopCondition
from .trajectory import TrajectoryParams

Pair = tuple[int, int]

# Above this vertex count, per-triple counts with two or more free available
# blocks on >= 7 points are skipped by the default tracker (cost grows like
# n^2 per tracked triple and they are not trajectory-critical); 6-point
# counts stay exact at any n via a vectorized kernel.
FULL_JC_N_LIMIT = 30


class EdgeCount(NamedTuple):
    count: int
    covered: bool


def count_X_e(state: ProcessState, e: Pair) -> EdgeCount:
    """Available triples containing the pair e; (0, covered) for covered pairs."""
    u, v = e
    if u > v:
        u, v = v, u
    if state.pair_covered(u, v):
        return EdgeCount(0, True)
    C2, C3 = state.C2, state.C3
    avail_pos = state.avail_pos
    count = 0
    for z in range(state.n):
        if z == u or z == v:
            continue
        if z < u:
            r = C3[v] + C2[u] + z
        elif z < v:
            r = C3[v] + C2[z] + u
        else:
            r = C3[z] + C2[v] + u
        if avail_pos[r] >= 0:
            count += 1
    return EdgeCount(count, False)


def sum_X_e(state: ProcessState) -> int:
    """Sum of X_e over uncovered pairs (equals 3 * available count)."""
    total = 0
    for u in range(state.n):
        for v in range(u + 1, state.n):
            if not state.pair_covered(u, v):
                total += count_X_e(state, (u, v)).count
    return total


def count_X_T40(state: ProcessState, t: Triple) -> int:
    """Available triples sharing a pair with t (the 4-point configuration count)."""
    total = 0
    for e in combinations(t, 2):
        cnt, covered = count_X_e(state, e)  # pairs of an available t are uncovered
        if covered:
            raise ValueError(f"pair {e} of available triple {t} is covered")
        total += cnt - 1  # exclude t itself
    return total


# ---------------------------------------------------------------------------
# Rooted configuration counting at a triple
# ---------------------------------------------------------------------------


def _dfs_count(
    state: ProcessState,
    entry: CatalogEntry,
    t: Triple,
    c: int,
) -> int:
    """Status-constrained embeddings of an entry with one slot pinned to t.

    Sums, over all slots and root assignments and over all ways to designate
    c of the remaining slots as chosen, the number of complete embeddings
    whose designated slots land on chosen blocks and the rest on available
    triples.  Each copy is hit once per automorphism, so the caller divides.
    """
    n = state.n
    j = entry.j
    pattern = entry.system.sorted_blocks()
    C2, C3 = state.C2, state.C3
    avail_pos = state.avail_pos
    pair_block = state.pair_block
    chosen_blocks = state.chosen_blocks
    vert_blocks = state.vert_blocks

    def avail_rank(x: int, y: int, z: int) -> bool:
        if x > y:
            x, y = y, x
        if y > z:
            y, z = z, y
            if x > y:
                x, y = y, x
        return avail_pos[C3[z] + C2[y] + x] >= 0

    total = 0
    others = [b for b in pattern]

    for s0 in pattern:
        rest = [b for b in others if b != s0]
        for designate in combinations(range(len(rest)), c):
            chosen_flag = [idx in designate for idx in range(len(rest))]

            for rm in permutations(s0):
                img = {rm[0]: t[0], rm[1]: t[1], rm[2]: t[2]}
                used = set(t)

                def dfs(remaining: list[int]) -> int:
                    if not remaining:
                        return 1
                    # Most-constrained slot first; chosen slots break ties
                    # (their candidates come from indices, not vertex scans).
                    def key(idx: int) -> tuple[int, int]:
                        m = sum(1 for v in rest[idx] if v in img)
                        return (m, 1 if chosen_flag[idx] else 0)

                    best = max(remaining, key=key)
                    m = sum(1 for v in rest[best] if v in img)
                    if m == 0:
                        return 0  # disconnected scheduling cannot happen for valid entries
                    nxt = [x for x in remaining if x != best]
                    slot = rest[best]
                    mapped = [v for v in slot if v in img]
                    free = [v for v in slot if v not in img]
                    subtotal = 0
                    if chosen_flag[best]:
                        if m >= 2:
                            u, v = img[mapped[0]], img[mapped[1]]
                            if u > v:
                                u, v = v, u
                            bid = pair_block[u * n + v]
                            if bid < 0:
                                return 0
                            block = chosen_blocks[bid]
                            if m == 3:
                                return dfs(nxt) if img[mapped[2]] in block else 0
                            w = next(x for x in block if x != u and x != v)
                            if w in used:
                                return 0
                            img[free[0]] = w
                            used.add(w)
                            subtotal += dfs(nxt)
                            used.discard(w)
                            del img[free[0]]
                            return subtotal
                        u = img[mapped[0]]
                        f0, f1 = free
                        for bid in vert_blocks[u]:
                            block = chosen_blocks[bid]
                            os_ = [x for x in block if x != u]
                            for o0, o1 in ((os_[0], os_[1]), (os_[1], os_[0])):
                                if o0 in used or o1 in used:
                                    continue
                                img[f0], img[f1] = o0, o1
                                used.add(o0)
                                used.add(o1)
                                subtotal += dfs(nxt)
                                used.discard(o0)
                                used.discard(o1)
                                del img[f0], img[f1]
                        return subtotal
                    # available-designated slot
                    if m == 3:
                        return dfs(nxt) if avail_rank(img[slot[0]], img[slot[1]], img[slot[2]]) else 0
                    if m == 2:
                        u, v = img[mapped[0]], img[mapped[1]]
                        f0 = free[0]
                        for z in range(n):
                            if z in used or z == u or z == v:
                                continue
                            if avail_rank(u, v, z):
                                img[f0] = z
                                used.add(z)
                                subtotal += dfs(nxt)
                                used.discard(z)
                                del img[f0]
                        return subtotal
                    # m == 1: scan one free vertex, the slot then has two mapped
                    u = img[mapped[0]]
                    f0, f1 = free
                    for z in range(n):
                        if z in used or z == u:
                            continue
                        img[f0] = z
                        used.add(z)
                        for w in range(n):
                            if w in used or w == u:
                                continue
                            if avail_rank(u, z, w):
                                img[f1] = w
                                used.add(w)
                                subtotal += dfs(nxt)
                                used.discard(w)
                                del img[f1]
                        used.discard(z)
                        del img[f0]
                    return subtotal

                total += dfs(list(range(len(rest))))
    assert total % entry.aut_size == 0
    return total // entry.aut_size


def _avail_vec(state: ProcessState, p: int, q: int) -> np.ndarray:
    """Availability of {p, q, z} over all z as a boolean vector (False at p, q)."""
    n = state.n
    pos = np.frombuffer(state.avail_pos, dtype=np.int32)
    c2 = np.array(state.C2, dtype=np.int64)
    c3 = np.array(state.C3, dtype=np.int64)
    z = np.arange(n, dtype=np.int64)
    tri = np.sort(np.stack([np.full(n, p, dtype=np.int64), np.full(n, q, dtype=np.int64), z], axis=1), axis=1)
    ranks = c3[tri[:, 2]] + c2[tri[:, 1]] + tri[:, 0]
    ranks[p] = 0  # degenerate rows (z == p or q) are masked out below
    ranks[q] = 0
    ok = pos[ranks] >= 0
    ok[p] = False
    ok[q] = False
    return ok


def _pasch_fast(state: ProcessState, t: Triple, c: int) -> int:
    """Vectorized 6-point copy counts through t with a (c chosen) split.

    A copy through t = (a,b,c) is parametrized by one ordered vertex triple
    (x,y,z): its other blocks are A = {a,x,y}, B = {b,x,z}, C = {c,y,z}, and
    the parametrization hits each copy exactly once, so no automorphism
    division is needed.  Chosen roles are walked through the chosen-block
    indices; the last free vertex is resolved by vectorized availability.
    """
    n = state.n
    va, vb, vc = t
    tset = set(t)

    if c == 0:
        pos = np.frombuffer(state.avail_pos, dtype=np.int32)
        c2 = np.array(state.C2, dtype=np.int64)
        c3 = np.array(state.C3, dtype=np.int64)
        iu, ju = np.triu_indices(n, 1)

        def avail_matrix(v: int) -> np.ndarray:
            valid = (iu != v) & (ju != v)
            vi, vj = iu[valid], ju[valid]
            tri = np.sort(np.stack([np.full_like(vi, v), vi, vj], axis=1), axis=1)
            ranks = c3[tri[:, 2]] + c2[tri[:, 1]] + tri[:, 0]
            ok = pos[ranks] >= 0
            m = np.zeros((n, n), dtype=np.float64)
            m[vi, vj] = ok
            m[vj, vi] = ok
            for w in t:
                m[w, :] = 0.0
                m[:, w] = 0.0
            return m

        ma, mb, mc = avail_matrix(va), avail_matrix(vb), avail_matrix(vc)
        total = 0.0
        for x in range(n):
            if x in tset:
                continue
            row = ma[x]
            if row.any():
                total += row @ (mc @ mb[x])
        return int(round(total))

    chosen_blocks = state.chosen_blocks
    vert_blocks = state.vert_blocks

    def chosen_pairs(v: int):
        """(u, w) in both orders over chosen blocks {v, u, w}, u, w outside t."""
        for bid in vert_blocks[v]:
            blk = chosen_blocks[bid]
            others = [x for x in blk if x != v]
            if others[0] in tset or others[1] in tset:
                continue
            yield others[0], others[1]
            yield others[1], others[0]

    def chosen_third(p: int, q: int) -> Optional[int]:
        if p > q:
            p, q = q, p
        bid = state.pair_block[p * n + q]
        if bid < 0:
            return None
        blk = chosen_blocks[bid]
        return next(x for x in blk if x != p and x != q)

    total = 0
    if c == 1:
        for x, y in chosen_pairs(va):  # A chosen, z free
            mask = _avail_vec(state, vb, x) & _avail_vec(state, vc, y)
            for w in (va, vb, vc, x, y):
                mask[w] = False
            total += int(mask.sum())
        for x, z in chosen_pairs(vb):  # B chosen, y free
            mask = _avail_vec(state, va, x) & _avail_vec(state, vc, z)
            for w in (va, vb, vc, x, z):
                mask[w] = False
            total += int(mask.sum())
        for y, z in chosen_pairs(vc):  # C chosen, x free
            mask = _avail_vec(state, va, y) & _avail_vec(state, vb, z)
            for w in (va, vb, vc, y, z):
                mask[w] = False
            total += int(mask.sum())
        return total

    assert c == 2
    avail_rank = state.is_available
    for x, y in chosen_pairs(va):  # A and B chosen, C available
        z = chosen_third(vb, x)
        if z is not None and z not in (va, vb, vc, x, y):
            if avail_rank(triple(vc, y, z)):
                total += 1
    for x, y in chosen_pairs(va):  # A and C chosen, B available
        z = chosen_third(vc, y)
        if z is not None and z not in (va, vb, vc, x, y):
            if avail_rank(triple(vb, x, z)):
                total += 1
    for x, z in chosen_pairs(vb):  # B and C chosen, A available
        y = chosen_third(vc, z)
        if y is not None and y not in (va, vb, vc, x, z):
            if avail_rank(triple(va, x, y)):
                total += 1
    return total


def count_X_Tjc(state: ProcessState, t: Triple, j: int, c: int) -> int:
    """Copies of j-point configurations through t with a (c chosen, rest available) split."""
    if not state.is_available(t):
        raise ValueError(f"{t} is not available")
    if not 6 <= j <= state.j_max:
        raise ValueError(f"j must lie in [6, {state.j_max}]")
    if not 0 <= c <= j - 4:
        raise ValueError(f"c must lie in [0, {j - 4}]")
    total = 0
    for entry in state.catalog.entries(j):
        if j == 6 and state.n > FULL_JC_N_LIMIT:
            total += _pasch_fast(state, t, c)
        else:
            total += _dfs_count(state, entry, t, c)
    return total


def brute_count_X_Tjc(state: ProcessState, t: Triple, j: int, c: int) -> int:
    """Subset-scan oracle for count_X_Tjc (small n): enumerate all j-sets through t,
    and inside each window all (c chosen, j-3-c available) block combinations."""
    from .configs import is_erdos_block_set

    if state.n > 14:
        raise ValueError("brute counting limited to n <= 14")
    n = state.n
    others = [v for v in range(n) if v not in t]
    t_mask = (1 << t[0]) | (1 << t[1]) | (1 << t[2])
    count = 0
    for extra in combinations(others, j - 3):
        w = sorted(list(t) + list(extra))
        chosen_in = []
        avail_in = []
        for blk in combinations(w, 3):
            if blk == t:
                continue
            if state.is_chosen(blk):
                chosen_in.append(blk)
            elif state.is_available(blk):
                avail_in.append(blk)
        # A candidate spanning exactly the window appears in no other window,
        # so counts over windows add up without duplication.
        for csub in combinations(chosen_in, c):
            for asub in combinations(avail_in, j - 3 - c):
                blocks = [t] + list(csub) + list(asub)
                mask = t_mask
                for b in blocks[1:]:
                    mask |= (1 << b[0]) | (1 << b[1]) | (1 << b[2])
                if mask.bit_count() != j:
                    continue
                if is_erdos_block_set(blocks):
                    count += 1
    return count


def enumerate_dangerous(state: ProcessState, t: Triple) -> list[tuple[frozenset[Triple], Triple]]:
    """All configurations through t one block away from excluding it.

    Returns (copy, available block) pairs, where the copy's non-t blocks are
    chosen except the single available one; includes the 4-point case, whose
    available block is the pair-sharing triple itself.
    """
    if not state.is_available(t):
        raise ValueError(f"{t} is not available")
    out: list[tuple[frozenset[Triple], Triple]] = []
    for e in combinations(t, 2):
        u, v = e
        for z in range(state.n):
            if z in t:
                continue
            cand = triple(u, v, z)
            if state.is_available(cand):
                out.append((frozenset((t, cand)), cand))
    seen: set[frozenset[Triple]] = set()
    for j in range(6, state.j_max + 1):
        for entry in state.catalog.entries(j):
            for copy in _dfs_copies_dangerous(state, entry, t):
                if copy not in seen:
                    seen.add(copy)
                    avail_blocks = [b for b in copy if b != t and state.is_available(b)]
                    assert len(avail_blocks) == 1
                    out.append((copy, avail_blocks[0]))
    return out


def _dfs_copies_dangerous(
    state: ProcessState, entry: CatalogEntry, t: Triple
) -> set[frozenset[Triple]]:
    """Copies through t with exactly one available non-t block (c = j-4)."""
    n = state.n
    pattern = entry.system.sorted_blocks()
    copies: set[frozenset[Triple]] = set()
    pair_block = state.pair_block
    chosen_blocks = state.chosen_blocks
    vert_blocks = state.vert_blocks

    for s0 in pattern:
        rest = [b for b in pattern if b != s0]
        for avail_idx in range(len(rest)):
            for rm in permutations(s0):
                img = {rm[0]: t[0], rm[1]: t[1], rm[2]: t[2]}
                used = set(t)
                placed: list[Triple] = []

                def dfs(remaining: list[int]) -> None:
                    if not remaining:
                        copies.add(frozenset([t] + placed))
                        return
                    def key(idx: int) -> tuple[int, int]:
                        m = sum(1 for v in rest[idx] if v in img)
                        return (m, 0 if idx == avail_idx else 1)

                    best = max(remaining, key=key)
                    mapped = [v for v in rest[best] if v in img]
                    free = [v for v in rest[best] if v not in img]
                    if not mapped:
                        return
                    nxt = [x for x in remaining if x != best]
                    if best == avail_idx:
                        # Dangerous copies have every vertex of the available
                        # block inside other blocks, so it is fully mapped
                        # when scheduled last; accept partial maps via scans.
                        if len(mapped) == 3:
                            cand = triple(img[rest[best][0]], img[rest[best][1]], img[rest[best][2]])
                            if state.is_available(cand):
                                placed.append(cand)
                                dfs(nxt)
                                placed.pop()
                            return
                        if len(mapped) == 2:
                            u, v = img[mapped[0]], img[mapped[1]]
                            for z in range(n):
                                if z in used or z == u or z == v:
                                    continue
                                cand = triple(u, v, z)
                                if state.is_available(cand):
                                    img[free[0]] = z
                                    used.add(z)
                                    placed.append(cand)
                                    dfs(nxt)
                                    placed.pop()
                                    used.discard(z)
                                    del img[free[0]]
                            return
                        return
                    if len(mapped) >= 2:
                        u, v = img[mapped[0]], img[mapped[1]]
                        if u > v:
                            u, v = v, u
                        bid = pair_block[u * n + v]
                        if bid < 0:
                            return
                        block = chosen_blocks[bid]
                        if len(mapped) == 3:
                            if img[mapped[2]] in block:
                                placed.append(block)
                                dfs(nxt)
                                placed.pop()
                            return
                        w = next(x for x in block if x != u and x != v)
                        if w in used:
                            return
                        img[free[0]] = w
                        used.add(w)
                        placed.append(block)
                        dfs(nxt)
                        placed.pop()
                        used.discard(w)
                        del img[free[0]]
                        return
                    u = img[mapped[0]]
                    f0, f1 = free
                    for bid in vert_blocks[u]:
                        block = chosen_blocks[bid]
                        os_ = [x for x in block if x != u]
                        for o0, o1 in ((os_[0], os_[1]), (os_[1], os_[0])):
                            if o0 in used or o1 in used:
                                continue
                            img[f0], img[f1] = o0, o1
                            used.add(o0)
                            used.add(o1)
                            placed.append(block)
                            dfs(nxt)
                            placed.pop()
                            used.discard(o0)
                            used.discard(o1)
                            del img[f0], img[f1]

                dfs(list(range(len(rest))))
    return copies


def threat_count_direct(state: ProcessState, t: Triple, e: Pair) -> int:
    """Threats to (t, e): available excluders of t not containing e."""
    from .process import threats_of

    eset = set(e)
    return sum(1 for ts in threats_of(state, t) if not eset.issubset(ts))


def config_threat_count_direct(state: ProcessState, copy: frozenset[Triple], t: Triple) -> int:
    """Selections that destroy the copy's status split while keeping t available."""
    from .process import threats_of

    t_threats = threats_of(state, t)
    avail_members = [b for b in copy if b != t and state.is_available(b)]
    destroyers: set[Triple] = set()
    for b in avail_members:
        destroyers.add(b)
        destroyers.update(threats_of(state, b))
    destroyers.discard(t)
    destroyers -= t_threats
    return len(destroyers)


# ---------------------------------------------------------------------------
# Trackers, snapshots, checkpoints
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrackerSpec:
    edge_sample: tuple[Pair, ...]
    triple_sample: tuple[Triple, ...]
    checkpoints: tuple[int, ...]
    record_extensions: bool = False
    jc_list: Optional[tuple[tuple[int, int], ...]] = None  # None: per-n default

    def jc_pairs(self, k: int, n: int) -> tuple[tuple[int, int], ...]:
        if self.jc_list is not None:
            return self.jc_list
        out = []
        for j in range(6, k + 3):
            for c in range(0, j - 3):
                if n > FULL_JC_N_LIMIT and j >= 7 and c < j - 5:
                    continue
                out.append((j, c))
        return tuple(out)


def default_tracker(
    n: int,
    k: int,
    checkpoints: Sequence[int],
    seed: int,
    n_pairs: int = 200,
    n_triples: int = 50,
) -> TrackerSpec:
    """Uniform pair/triple samples; small n tracks every pair."""
    rng = np.random.Generator(np.random.PCG64(seed))
    all_pairs = list(combinations(range(n), 2))
    if len(all_pairs) <= n_pairs:
        pairs = tuple(all_pairs)
    else:
        idx = rng.choice(len(all_pairs), size=n_pairs, replace=False)
        pairs = tuple(all_pairs[int(i)] for i in sorted(idx))
    total_triples = n * (n - 1) * (n - 2) // 6
    picks = rng.choice(total_triples, size=min(n_triples, total_triples), replace=False)
    c2 = [v * (v - 1) // 2 for v in range(n + 1)]
    c3 = [v * (v - 1) * (v - 2) // 6 for v in range(n + 1)]

    def unrank(r: int) -> Triple:
        from bisect import bisect_right

        c = bisect_right(c3, r) - 1
        r -= c3[c]
        b = bisect_right(c2, r) - 1
        return (r - c2[b], b, c)

    triples = tuple(sorted(unrank(int(r)) for r in sorted(picks)))
    return TrackerSpec(pairs, triples, tuple(sorted(checkpoints)))


@dataclass(frozen=True)
class EdgeTrack:
    pair: Pair
    censored: bool
    x: int
    f: float
    band: float

    @property
    def in_band(self) -> Optional[bool]:
        if self.censored:
            return None
        return abs(self.x - self.f) <= self.band


@dataclass(frozen=True)
class TripleTrack:
    t: Triple
    j: int
    c: int
    censored: bool
    x: int
    f: float
    band: float

    @property
    def in_band(self) -> Optional[bool]:
        if self.censored:
            return None
        return abs(self.x - self.f) <= self.band


@dataclass(frozen=True)
class ExtensionTrack:
    """Worst observed rooted-pattern count against its growth envelope."""

    kappa: int
    ell: int
    roots_sampled: int
    max_count: int
    bound: float

    @property
    def within(self) -> bool:
        return self.max_count <= self.bound


@dataclass(frozen=True)
class Snapshot:
    i: int
    avail_count: int
    avail_traj: float
    avail_band: float
    edges: tuple[EdgeTrack, ...]
    triples: tuple[TripleTrack, ...]
    extensions: tuple[ExtensionTrack, ...] = ()

    @property
    def avail_in_band(self) -> bool:
        return abs(self.avail_count - self.avail_traj) <= self.avail_band

    def edge_in_band_fraction(self) -> Optional[float]:
        live = [e for e in self.edges if not e.censored]
        if not live:
            return None
        return sum(1 for e in live if e.in_band) / len(live)


def checkpoint(state: ProcessState, spec: TrackerSpec, params: TrajectoryParams) -> Snapshot:
    """Measure every tracked quantity at the current step against its band."""
    i = state.i
    eps_i = params.eps(i)
    edges = []
    for pair in spec.edge_sample:
        x, covered = count_X_e(state, pair)
        edges.append(
            EdgeTrack(pair, covered, x, params.f_edge(i), eps_i * state.n)
        )
    triples = []
    jc = spec.jc_pairs(state.k, state.n)
    for t in spec.triple_sample:
        alive = state.is_available(t)
        for j, c in jc:
            x = count_X_Tjc(state, t, j, c) if alive else 0
            triples.append(
                TripleTrack(
                    t, j, c, not alive, x, params.f_jc(i, j, c),
                    eps_i * state.n ** (j - 3 - c),
                )
            )
    extensions = _extension_tracks(state, params) if spec.record_extensions else ()
    return Snapshot(
        i=i,
        avail_count=state.avail_count,
        avail_traj=params.A_traj(i),
        avail_band=eps_i * state.n**3,
        edges=tuple(edges),
        triples=tuple(triples),
        extensions=extensions,
    )


def _extension_tracks(
    state: ProcessState, params: TrajectoryParams, roots_per_type: int = 10
) -> tuple[ExtensionTrack, ...]:
    """Rooted-pattern counts in the chosen set vs their growth envelopes.

    One pattern per catalog entry: the entry with one block emptied into the
    root set.  Diagnostic only: the envelope n^{kappa + ell/(m+kappa)} is an
    asymptotic device and sits below even constant counts at desk-scale n,
    so `within` is informative, never asserted.  Counts use the generic
    embedding backtracker on the chosen set.
    """
    from .extensions import ExtensionType, count_extensions

    host = state.chosen_system()
    rng = np.random.Generator(np.random.PCG64(state.i * 2 + 1))
    out: list[ExtensionTrack] = []
    for entry in state.catalog.entries():
        if entry.j > state.j_max:
            continue
        root_block = entry.system.sorted_blocks()[0]
        h_blocks = frozenset(b for b in entry.system.blocks if b != root_block)
        ext = ExtensionType(
            TripleSystem(entry.j, h_blocks), frozenset(root_block)
        )
        if ext.ell < 1 or ext.ell > params.m:
            continue
        worst = 0
        for _ in range(roots_per_type):
            r = sorted(int(v) for v in rng.choice(state.n, size=3, replace=False))
            worst = max(worst, count_extensions(host, r, ext))
        out.append(
            ExtensionTrack(
                kappa=ext.kappa,
                ell=ext.ell,
                roots_sampled=roots_per_type,
                max_count=worst,
                bound=params.eps_kl(state.i, ext.kappa, ext.ell),
            )
        )
    return tuple(out)


def run_with_tracking(
    state: ProcessState, spec: TrackerSpec, params: TrajectoryParams
) -> list[Snapshot]:
    """Advance the process through the checkpoint list, snapshotting at each."""
    from .process import run as _run

    snapshots: list[Snapshot] = []
    for cp in spec.checkpoints:
        if cp < state.i:
            raise ValueError("checkpoints must be ahead of the current step")
        if cp > state.i:
            _run(state, StopCondition(max_steps=cp))
        if state.i == cp:
            snapshots.append(checkpoint(state, spec, params))
        else:  # process exhausted before the checkpoint
            break
    return snapshots


# ---------------------------------------------------------------------------
# CSV export (schema v1)
# ---------------------------------------------------------------------------

_SCHEMA = "stats-csv v1"


def export_series(snapshots: Sequence[Snapshot]) -> str:
    """Deterministic CSV: version comment, header, one row per checkpoint."""
    if not snapshots:
        raise ValueError("no snapshots to export")
    first = snapshots[0]
    cols = ["i", "avail", "avail_traj", "avail_band"]
    for e in first.edges:
        tag = f"e{e.pair[0]}-{e.pair[1]}"
        cols += [f"{tag}:X", f"{tag}:f", f"{tag}:band", f"{tag}:in"]
    for t in first.triples:
        tag = f"t{t.t[0]}-{t.t[1]}-{t.t[2]}:j{t.j}c{t.c}"
        cols += [f"{tag}:X", f"{tag}:f", f"{tag}:band", f"{tag}:in"]
    out = io.StringIO()
    out.write(f"# {_SCHEMA}\n")
    out.write(",".join(cols) + "\n")
    for s in snapshots:
        row: list[str] = [str(s.i), str(s.avail_count), repr(s.avail_traj), repr(s.avail_band)]
        for e in s.edges:
            row += [str(e.x), repr(e.f), repr(e.band), _in_cell(e.censored, e.in_band)]
        for t in s.triples:
            row += [str(t.x), repr(t.f), repr(t.band), _in_cell(t.censored, t.in_band)]
        out.write(",".join(row) + "\n")
    return out.getvalue()


def _in_cell(censored: bool, in_band: Optional[bool]) -> str:
    if censored:
        return "censored"
    return "1" if in_band else "0"


def parse_series(text: str) -> list[Snapshot]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != f"# {_SCHEMA}":
        raise ValueError(f"unrecognized stats schema: {lines[:1]}")
    header = lines[1].split(",")
    snapshots = []
    for ln in lines[2:]:
        cells = ln.split(",")
        vals = dict(zip(header, cells))
        edges: list[EdgeTrack] = []
        triples: list[TripleTrack] = []
        idx = 4
        while idx < len(header):
            name = header[idx]
            tag = name.rsplit(":", 1)[0]
            block = cells[idx : idx + 4]
            censored = block[3] == "censored"
            if tag.startswith("e"):
                u, v = map(int, tag[1:].split("-"))
                edges.append(EdgeTrack((u, v), censored, int(block[0]), float(block[1]), float(block[2])))
            else:
                tpart, jcpart = tag[1:].split(":")
                a, b, c = map(int, tpart.split("-"))
                j, cc = jcpart[1:].split("c")
                triples.append(
                    TripleTrack((a, b, c), int(j), int(cc), censored, int(block[0]), float(block[1]), float(block[2]))
                )
            idx += 4
        snapshots.append(
            Snapshot(
                i=int(vals["i"]),
                avail_count=int(vals["avail"]),
                avail_traj=float(vals["avail_traj"]),
                avail_band=float(vals["avail_band"]),
                edges=tuple(edges),
                triples=tuple(triples),
            )
        )
    return snapshots
