"""Rooted extension types: balancedness, counting, and double-configuration checks.

An extension type is a 3-graph pattern H with a root set U spanning no block;
it is kappa-balanced when every intermediate root set U' between U and V(H)
leaves at least |V(H) \\ U'| - kappa blocks not inside U'.  Balanced types
bound how many embeddings of H, rooted at a fixed vertex set, a sparse host
can contain; the structural facts about how minimal configurations overlap
reduce to balancedness statements, which this module verifies exhaustively
over all gluings of catalog configurations.

Also computed here: the double-configuration counters (pairs of one-step
threats sharing their available block), built from the dangerous-configuration
lists of the tracker.

Pure functions over immutable snapshots; concurrently callable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Iterable, Optional, Sequence

import numpy as np

from .configs import CatalogEntry, ErdosCatalog, Triple, TripleSystem, triple
from .process import ProcessState
from .stats import enumerate_dangerous

KAPPA_FREE_LIMIT = 20

_POP16 = np.array([bin(x).count("1") for x in range(1 << 16)], dtype=np.uint8)


def compute_kappa(h: TripleSystem, root: Iterable[int]) -> int:
    """Exact balancedness parameter by scanning all root supersets.

    kappa(H, U) is the least kappa >= 0 such that for every U <= U' <= V(H),
    at least |V(H) \\ U'| - kappa blocks are not inside U'.
    """
    u = frozenset(root)
    if any(u.issuperset(b) for b in h.blocks):
        raise ValueError("root set must span no block")
    if not u.issubset(range(h.n)):
        raise ValueError("root set must be contained in the vertex set")
    free = [v for v in range(h.n) if v not in u]
    if len(free) > KAPPA_FREE_LIMIT:
        raise ValueError(f"pattern too large: {len(free)} free vertices")
    masks = [1 << a | 1 << b | 1 << c for a, b, c in h.blocks]
    u_mask = 0
    for v in u:
        u_mask |= 1 << v
    worst = 0
    for bits in range(1 << len(free)):
        um = u_mask
        s = bits
        while s:
            low = s & -s
            um |= 1 << free[low.bit_length() - 1]
            s ^= low
        outside = sum(1 for m in masks if m & ~um)
        deficit = (len(free) - bits.bit_count()) - outside
        if deficit > worst:
            worst = deficit
    return worst


@dataclass(frozen=True)
class ExtensionType:
    """A rooted pattern with its computed balancedness parameter."""

    h: TripleSystem
    root: frozenset[int]
    kappa: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kappa", compute_kappa(self.h, self.root))

    @property
    def ell(self) -> int:
        return self.h.n - len(self.root)


def count_extensions(
    g: TripleSystem,
    r: Iterable[int],
    ext: ExtensionType,
    ordered_roots: Optional[Sequence[int]] = None,
) -> int:
    """Injective embeddings of the pattern into g with root image exactly r.

    All |U|! root assignments are counted unless ordered_roots pins one
    (ordered_roots[i] is then the image of the i-th sorted root vertex).
    Pattern vertices in no block contribute a falling factorial over the
    unused host vertices.
    """
    root = sorted(ext.root)
    r = sorted(r)
    if len(r) != len(root):
        raise ValueError("root image size mismatch")
    pattern = ext.h.sorted_blocks()
    in_blocks = {v for b in pattern for v in b}
    isolated_free = [v for v in range(ext.h.n) if v not in in_blocks and v not in ext.root]
    host_blocks = g.sorted_blocks()
    by_vertex: dict[int, list[Triple]] = {}
    for b in host_blocks:
        for v in b:
            by_vertex.setdefault(v, []).append(b)

    if ordered_roots is not None:
        assignments = [tuple(ordered_roots)]
    else:
        assignments = list(permutations(r))

    total = 0
    for assign in assignments:
        img: dict[int, int] = dict(zip(root, assign))
        used: set[int] = set(assign)

        def dfs(remaining: list[Triple]) -> int:
            if not remaining:
                return 1
            best = max(remaining, key=lambda b: sum(1 for v in b if v in img))
            nxt = [b for b in remaining if b != best]
            mapped = [v for v in best if v in img]
            free = [v for v in best if v not in img]
            if mapped:
                candidates = [
                    hb
                    for hb in by_vertex.get(img[mapped[0]], [])
                    if all(img[v] in hb for v in mapped)
                ]
            else:
                candidates = host_blocks
            subtotal = 0
            for hb in candidates:
                rest = [x for x in hb if x not in {img[v] for v in mapped}]
                if len(rest) != len(free):
                    continue
                for perm in permutations(rest):
                    if any(x in used for x in perm):
                        continue
                    for v, x in zip(free, perm):
                        img[v] = x
                        used.add(x)
                    subtotal += dfs(nxt)
                    for v in free:
                        used.discard(img[v])
                        del img[v]
            return subtotal

        block_part = dfs(pattern)
        if isolated_free:
            # Every completed block embedding occupies exactly the images of
            # roots and in-block vertices; isolated free vertices then take
            # any leftover host vertices injectively (falling factorial).
            used_hosts = len(set(root) | in_blocks)
            iso_part = 1
            for t in range(len(isolated_free)):
                iso_part *= max(g.n - used_hosts - t, 0)
            total += block_part * iso_part
        else:
            total += block_part
    return total


def count_double(state: ProcessState, t: Triple) -> int:
    """Unordered pairs of dangerous configurations at t sharing their available block."""
    groups: dict[Triple, int] = {}
    for _, avail_block in enumerate_dangerous(state, t):
        groups[avail_block] = groups.get(avail_block, 0) + 1
    return sum(z * (z - 1) // 2 for z in groups.values())


def count_pair(state: ProcessState, t1: Triple, t2: Triple) -> int:
    """Pairs of dangerous configurations at t1 and t2, not both 4-point,
    sharing their unique available block."""
    if t1 == t2:
        raise ValueError("t1 and t2 must differ")
    d1 = enumerate_dangerous(state, t1)
    d2 = enumerate_dangerous(state, t2)
    by1: dict[Triple, list[int]] = {}
    for copy, ab in d1:
        by1.setdefault(ab, []).append(len(copy))
    total = 0
    for copy2, ab in d2:
        for size1 in by1.get(ab, ()):
            if size1 == 2 and len(copy2) == 2:
                continue  # both 4-point configurations
            total += 1
    return total


def config_threat_slack(
    state: ProcessState, copy: frozenset[Triple], t: Triple
) -> tuple[int, int]:
    """Deviation of the config-threat count from the sum of member threats.

    Returns (deviation, pair_term): |th - sum over available members of their
    threat counts| and the sum of count_pair over available member pairs; the
    deviation exceeds the pair term by at most an instance-size constant.
    """
    from .process import threats_of
    from .stats import config_threat_count_direct

    members = [b for b in copy if b != t and state.is_available(b)]
    th = config_threat_count_direct(state, copy, t)
    approx = sum(len(threats_of(state, b)) for b in members)
    pair_term = 0
    for b1, b2 in combinations(members, 2):
        pair_term += count_pair(state, b1, b2)
    return abs(th - approx), pair_term


# ---------------------------------------------------------------------------
# Exhaustive verification of the overlap/balancedness facts
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    instances: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass
class BalancednessReport:
    checks: list[CheckResult]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def __str__(self) -> str:
        lines = []
        for c in self.checks:
            status = "PASS" if c.ok else "FAIL"
            lines.append(f"{status} {c.name} instances={c.instances} violations={len(c.violations)}")
            for v in c.violations[:5]:
                lines.append(f"    {v}")
        return "\n".join(lines)


def _mask(b: Triple) -> int:
    return 1 << b[0] | 1 << b[1] | 1 << b[2]


def _subset_or_table(free_bits: list[int]) -> np.ndarray:
    """All OR-combinations of the given single-bit values, index = subset."""
    f = len(free_bits)
    out = np.zeros(1 << f, dtype=np.int64)
    for i, bit in enumerate(free_bits):
        step = 1 << i
        out[step : 2 * step] = out[:step] | bit
    return out


def _balanced_at_most(h_masks: Sequence[int], v_mask: int, u_mask: int, kappa: int) -> bool:
    """Whether (H, U) is kappa-balanced, scanning all root supersets (numpy)."""
    free_bits = [1 << v for v in range(v_mask.bit_length()) if v_mask >> v & 1 and not u_mask >> v & 1]
    u_primes = _subset_or_table(free_bits) | u_mask
    h = np.array(h_masks, dtype=np.int64)
    outside = ((h[None, :] & ~u_primes[:, None]) != 0).sum(axis=1)
    added = _POP16[u_primes & ~u_mask].astype(np.int64)
    free_left = len(free_bits) - added
    return bool(np.all(outside >= free_left - kappa))


def _anchored_gluings(e1: CatalogEntry, e2: CatalogEntry):
    """All gluings of copies of e1 and e2 sharing a designated block.

    Yields (s1, s2, shared, total_vertices): block frozensets on host labels,
    where s1 uses labels 0..j1-1 and s2 is an embedded copy of e2 sharing the
    block `shared` with s1.  Anchor blocks of e1 range over automorphism
    orbit representatives only; fresh vertices are introduced in first-use
    order, so each labeled identification pattern appears once.
    """
    j1, j2 = e1.j, e2.j
    blocks1 = e1.system.sorted_blocks()
    blocks2 = e2.system.sorted_blocks()
    s1 = frozenset(blocks1)

    # Orbit reps of anchor blocks in e1.
    index1 = {b: i for i, b in enumerate(blocks1)}
    seen_idx: set[int] = set()
    anchors1 = []
    for b in blocks1:
        if index1[b] in seen_idx:
            continue
        anchors1.append(b)
        for p in e1.aut:
            seen_idx.add(index1[triple(p[b[0]], p[b[1]], p[b[2]])])

    for b1 in anchors1:
        for b2 in blocks2:
            rest2 = [v for v in range(j2) if v not in b2]
            for beta in permutations(b1):
                base_map = dict(zip(b2, beta))

                def extend(idx: int, mapping: dict[int, int], next_fresh: int):
                    if idx == len(rest2):
                        s2 = frozenset(
                            triple(mapping[a], mapping[b], mapping[c]) for a, b, c in blocks2
                        )
                        yield s2, next_fresh
                        return
                    v = rest2[idx]
                    used = set(mapping.values())
                    for host in range(j1):
                        if host not in used:
                            mapping[v] = host
                            yield from extend(idx + 1, mapping, next_fresh)
                            del mapping[v]
                    mapping[v] = next_fresh
                    yield from extend(idx + 1, mapping, next_fresh + 1)
                    del mapping[v]

                for s2, nverts in extend(0, dict(base_map), j1):
                    yield s1, s2, b1, nverts


def _overlap_gluings_check(entries: Sequence[CatalogEntry], result: CheckResult) -> None:
    """Union edge count of two distinct overlapping configurations (vectorized).

    For every identification of the vertex sets with overlap o >= 3:
    |S1 u S2| >= |V1 u V2| - 1 when o >= 4, and >= |V1 u V2| - 2 when o == 3.
    """
    for a in range(len(entries)):
        for b in range(a, len(entries)):
            e1, e2 = entries[a], entries[b]
            j1, j2 = e1.j, e2.j
            blocks1 = [_mask(t) for t in e1.system.sorted_blocks()]
            blocks2 = np.array(e2.system.sorted_blocks(), dtype=np.int64)
            for o in range(3, min(j1, j2) + 1):
                # phi: injective map of an o-subset of V(e2) into V(e1); the
                # rest of V(e2) takes fresh labels j1, j1+1, ... in order.
                for dom in combinations(range(j2), o):
                    rest = [v for v in range(j2) if v not in dom]
                    base = np.full(j2, -1, dtype=np.int64)
                    for t, v in enumerate(rest):
                        base[v] = j1 + t
                    for img in permutations(range(j1), o):
                        phi = base.copy()
                        phi[list(dom)] = img
                        im = phi[blocks2]
                        masks2 = (
                            (1 << im[:, 0]) | (1 << im[:, 1]) | (1 << im[:, 2])
                        )
                        s2 = set(int(x) for x in masks2)
                        s1set = set(blocks1)
                        if s1set == s2:
                            continue  # identical configurations
                        union_blocks = len(s1set | s2)
                        union_verts = j1 + j2 - o
                        result.instances += 1
                        need = union_verts - (1 if o >= 4 else 2)
                        if union_blocks < need:
                            result.violations.append(
                                f"{e1.name or e1.j}/{e2.name or e2.j} o={o}: "
                                f"{union_blocks} blocks on {union_verts} vertices"
                            )


def verify_balancedness_props(catalog: ErdosCatalog, j_cap: Optional[int] = None) -> BalancednessReport:
    """Exhaustively instantiate the overlap and balancedness facts.

    Every hypothesis is enumerated over catalog entries and all vertex
    identifications (gluings) within the vertex cap m = 2 * j_cap; a
    counterexample would be a failing check, and there must be none.
    """
    j_cap = j_cap or catalog.j_max
    entries = [e for e in catalog.entries() if e.j <= j_cap]

    spread = CheckResult("block_removal_spread")  # one block removed, root >= 4
    partial = CheckResult("partial_config_balancedness")
    overlap = CheckResult("overlap_union_edge_bound")
    shared_spread = CheckResult("shared_block_union_spread")
    double_root = CheckResult("double_config_root_balance")
    butterfly = CheckResult("butterfly_root_balance")
    removal = CheckResult("edge_removal_raises_kappa")

    # -- single-entry facts -------------------------------------------------
    for e in entries:
        j = e.j
        blocks = e.system.sorted_blocks()
        masks = [_mask(t) for t in blocks]
        for t_idx, tp in enumerate(blocks):
            rest = [m for i, m in enumerate(masks) if i != t_idx]
            for size in range(4, j + 1):
                for u in combinations(range(j), size):
                    um = 0
                    for v in u:
                        um |= 1 << v
                    outside = sum(1 for m in rest if m & ~um)
                    spread.instances += 1
                    if outside < j - size:
                        spread.violations.append(f"j={j} id={e.entry_id} T'={tp} U={u}")

        # partial subconfigurations: S' spanning all j points
        for csize in range(0, j - 1):
            for sub in combinations(range(len(blocks)), csize):
                sm = 0
                for i in sub:
                    sm |= masks[i]
                if sm.bit_count() != j:
                    continue
                sprime = [masks[i] for i in sub]
                complement = [masks[i] for i in range(len(blocks)) if i not in sub]
                for size in range(4, j + 1):
                    for u in combinations(range(j), size):
                        um = 0
                        for v in u:
                            um |= 1 << v
                        a_cnt = sum(1 for m in complement if not (m & ~um))
                        kappa = max(j - 3 - csize - a_cnt, 0)
                        h_masks = [m for m in sprime if m & ~um]
                        partial.instances += 1
                        if not _balanced_at_most(h_masks, (1 << j) - 1, um, kappa):
                            partial.violations.append(
                                f"j={j} id={e.entry_id} |S'|={csize} U={u} kappa={kappa}"
                            )

    # -- pairwise overlap fact ------------------------------------------------
    _overlap_gluings_check(entries, overlap)

    # -- shared-block gluings: spread, double-roots, butterflies -------------
    balance_memo: dict[tuple, bool] = {}
    for a in range(len(entries)):
        for b in range(a, len(entries)):
            e1, e2 = entries[a], entries[b]
            both_diamond = e1.j == 4 and e2.j == 4
            for s1, s2, shared, nverts in _anchored_gluings(e1, e2):
                if s1 == s2:
                    continue
                union = s1 | s2
                union_masks = {t: _mask(t) for t in union}
                v_mask = 0
                for m in union_masks.values():
                    v_mask |= m
                v1_mask = 0
                for t in s1:
                    v1_mask |= union_masks[t]
                v2_mask = 0
                for t in s2:
                    v2_mask |= union_masks[t]

                # shared-block union spread over all constrained U'
                h_masks_ds = [m for t, m in union_masks.items() if t != shared]
                shared_spread.instances += 1
                if not _shared_spread_ok(h_masks_ds, v_mask, v1_mask, v2_mask):
                    shared_spread.violations.append(
                        f"{e1.j}:{e1.entry_id}+{e2.j}:{e2.entry_id} shared={shared}"
                    )

                # butterflies: t in s1 \ {shared}, overlap >= 4
                if (v1_mask & v2_mask).bit_count() >= 4:
                    for t in s1:
                        if t == shared:
                            continue
                        h_masks = [m for tt, m in union_masks.items() if tt != t and tt != shared]
                        um = union_masks[t]
                        key = (v_mask, um, tuple(sorted(h_masks)))
                        okv = balance_memo.get(key)
                        if okv is None:
                            okv = _balanced_at_most(h_masks, v_mask, um, 0)
                            balance_memo[key] = okv
                        butterfly.instances += 1
                        if not okv:
                            butterfly.violations.append(
                                f"{e1.j}:{e1.entry_id}+{e2.j}:{e2.entry_id} T={t} T'={shared}"
                            )

                # double-config roots: unordered {t1, t2}, valid orientation
                if not both_diamond:
                    cands1 = [t for t in s1 if t != shared]
                    cands2 = [t for t in s2 if t != shared]
                    seen_pairs: set[frozenset[Triple]] = set()
                    for t1 in cands1:
                        for t2 in cands2:
                            if t1 == t2:
                                continue
                            pk = frozenset((t1, t2))
                            if pk in seen_pairs:
                                continue
                            seen_pairs.add(pk)
                            um = union_masks[t1] | union_masks[t2]
                            h_masks = [
                                m
                                for tt, m in union_masks.items()
                                if tt not in (t1, t2, shared)
                            ]
                            if any(not (m & ~um) for m in h_masks):
                                continue  # H[U] non-empty: hypothesis fails
                            key = (v_mask, um, tuple(sorted(h_masks)))
                            okv = balance_memo.get(key)
                            if okv is None:
                                okv = _balanced_at_most(h_masks, v_mask, um, 0)
                                balance_memo[key] = okv
                            double_root.instances += 1
                            if not okv:
                                double_root.violations.append(
                                    f"{e1.j}:{e1.entry_id}+{e2.j}:{e2.entry_id} "
                                    f"T1={t1} T2={t2} T'={shared}"
                                )

    # -- edge removal raises kappa by at most one ----------------------------
    for e in entries:
        j = e.j
        blocks = e.system.sorted_blocks()
        for t_idx in range(len(blocks)):
            h_blocks = [b for i, b in enumerate(blocks) if i != t_idx]
            for size in (4, min(5, j)):
                for u in combinations(range(j), size):
                    uset = frozenset(u)
                    if any(uset.issuperset(b) for b in h_blocks):
                        continue
                    h = TripleSystem(j, frozenset(h_blocks))
                    k0 = compute_kappa(h, uset)
                    for drop in h_blocks:
                        h2 = TripleSystem(j, frozenset(b for b in h_blocks if b != drop))
                        removal.instances += 1
                        if compute_kappa(h2, uset) > k0 + 1:
                            removal.violations.append(
                                f"j={j} id={e.entry_id} U={u} drop={drop}"
                            )

    return BalancednessReport(
        [spread, partial, overlap, shared_spread, double_root, butterfly, removal]
    )


def _shared_spread_ok(h_masks: Sequence[int], v_mask: int, v1_mask: int, v2_mask: int) -> bool:
    """For all U' with |U' & V1| >= 4 and |(U' | V1) & V2| >= 4:
    blocks outside U' >= free vertices outside U'."""
    bits = [1 << v for v in range(v_mask.bit_length()) if v_mask >> v & 1]
    u_primes = _subset_or_table(bits)
    h = np.array(h_masks, dtype=np.int64) if h_masks else np.zeros(0, dtype=np.int64)
    cond1 = _POP16[u_primes & v1_mask] >= 4
    cond2 = _POP16[(u_primes | v1_mask) & v2_mask] >= 4
    sel = u_primes[cond1 & cond2]
    if sel.size == 0:
        return True
    outside = ((h[None, :] & ~sel[:, None]) != 0).sum(axis=1) if h.size else np.zeros(len(sel))
    free_left = _POP16[v_mask & ~sel & (v_mask | 0)]
    return bool(np.all(outside >= free_left))
