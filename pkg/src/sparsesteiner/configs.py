"""Forbidden and minimal (Erdos) configurations in 3-uniform hypergraphs.

A forbidden configuration is a 3-graph with j points (all non-isolated) and
exactly j-2 triples, for some j >= 4.  An Erdos configuration is a forbidden
configuration that contains no forbidden configuration as a proper subgraph;
the diamond (two triples on four points) is the smallest one, and there are
none on five points.  A partial Steiner triple system is k-sparse (has high
girth) exactly when it contains no Erdos configuration on at most k+2 points.

This module enumerates the Erdos configurations up to a point bound,
canonicalizes small 3-graphs under vertex relabeling, and computes the
combinatorial constants (labeled counts through a fixed triple, and the
per-triple copy counts J_j on n vertices) that drive the analytic
trajectories of the removal process.

Catalog construction is single-threaded; finished catalogs are immutable
and safely shareable across concurrent process runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Iterable, Iterator, Mapping, NamedTuple, Optional, Sequence

Triple = tuple[int, int, int]

CANONICAL_POINT_LIMIT = 12
ENUMERATION_JMAX = 10

# The named small configurations, in their traditional labelings.
DIAMOND_BLOCKS = ((0, 1, 2), (0, 1, 3))
PASCH_BLOCKS = ((0, 1, 2), (0, 3, 4), (1, 3, 5), (2, 4, 5))
MITRE_BLOCKS = ((0, 1, 2), (0, 3, 4), (1, 3, 5), (2, 3, 6), (4, 5, 6))
MIA_BLOCKS = ((0, 1, 2), (0, 3, 4), (1, 3, 5), (2, 4, 5), (0, 5, 6))
SIX_CYCLE_BLOCKS = ((0, 1, 2), (0, 3, 4), (1, 3, 5), (2, 4, 6), (2, 5, 7), (3, 6, 7))
CROWN_BLOCKS = ((0, 1, 2), (0, 3, 4), (1, 3, 5), (2, 3, 6), (1, 4, 7), (5, 6, 7))


class TooManyPointsError(ValueError):
    """Canonicalization refused: point count exceeds the exhaustive limit."""


def triple(a: int, b: int, c: int) -> Triple:
    """Return the canonical (strictly increasing) form of a 3-set."""
    t = (a, b, c)
    s = tuple(sorted(t))
    if s[0] < 0 or s[0] == s[1] or s[1] == s[2]:
        raise ValueError(f"not a 3-set of non-negative integers: {t}")
    return s  # type: ignore[return-value]


def span(blocks: Iterable[Triple]) -> frozenset[int]:
    """Vertices touched by at least one block."""
    out: set[int] = set()
    for b in blocks:
        out.update(b)
    return frozenset(out)


@dataclass(frozen=True)
class TripleSystem:
    """A 3-graph on vertex set {0, ..., n-1} given by its set of triples."""

    n: int
    blocks: frozenset[Triple]

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("vertex count must be non-negative")
        for b in self.blocks:
            if len(b) != 3 or not (0 <= b[0] < b[1] < b[2] < self.n):
                raise ValueError(f"malformed block {b} for n={self.n}")

    @staticmethod
    def from_blocks(blocks: Iterable[Sequence[int]], n: Optional[int] = None) -> "TripleSystem":
        bl = frozenset(triple(*b) for b in blocks)
        if n is None:
            n = 1 + max((b[2] for b in bl), default=-1)
        return TripleSystem(n, bl)

    def support(self) -> frozenset[int]:
        return span(self.blocks)

    def degrees(self) -> dict[int, int]:
        deg = {v: 0 for v in range(self.n)}
        for b in self.blocks:
            for v in b:
                deg[v] += 1
        return deg

    def sorted_blocks(self) -> list[Triple]:
        return sorted(self.blocks)

    def induced_blocks(self, vertices: Iterable[int]) -> frozenset[Triple]:
        w = set(vertices)
        return frozenset(b for b in self.blocks if w.issuperset(b))

    def relabeled(self, mapping: Mapping[int, int], n: Optional[int] = None) -> "TripleSystem":
        bl = frozenset(triple(mapping[a], mapping[b], mapping[c]) for a, b, c in self.blocks)
        return TripleSystem(self.n if n is None else n, bl)

    def on_support(self) -> tuple["TripleSystem", dict[int, int]]:
        """Relabel the support to 0..s-1 (order-preserving), dropping isolated vertices."""
        supp = sorted(self.support())
        mapping = {v: i for i, v in enumerate(supp)}
        return self.relabeled(mapping, n=len(supp)), mapping


# ---------------------------------------------------------------------------
# Forbidden / Erdos predicates
# ---------------------------------------------------------------------------


class ErdosResult(NamedTuple):
    ok: bool
    witness: Optional[frozenset[Triple]]  # a proper forbidden subconfiguration


def is_forbidden(system: TripleSystem) -> bool:
    """Whether the system itself is a forbidden configuration.

    The system's points are read as its non-isolated vertices, so every
    vertex < n must be covered; j >= 4 points and exactly j-2 triples.
    """
    j = system.n
    if j < 4 or len(system.blocks) != j - 2:
        return False
    return len(system.support()) == j


def find_forbidden_subset(blocks: Iterable[Triple]) -> Optional[frozenset[Triple]]:
    """A proper subset of blocks spanning at most (size + 2) points, if any.

    Such a subset, padded with isolated vertices, is a forbidden subgraph.
    Smaller subsets are scanned first so the returned witness is minimal in
    block count (a diamond wins over any larger certificate).
    """
    bl = sorted(set(blocks))
    total = len(bl)
    for size in range(2, total):
        for sub in combinations(bl, size):
            if len(span(sub)) <= size + 2:
                return frozenset(sub)
    return None


def erdos_check(system: TripleSystem) -> ErdosResult:
    """Decide Erdos-minimality; on failure by a subconfiguration, return it.

    Returns (False, None) when the system is not even forbidden, and
    (False, witness) when a proper subset of blocks, on its own point set
    plus padding, forms a forbidden configuration.
    """
    if not is_forbidden(system):
        return ErdosResult(False, None)
    witness = find_forbidden_subset(system.blocks)
    if witness is not None:
        return ErdosResult(False, witness)
    return ErdosResult(True, None)


def is_erdos(system: TripleSystem) -> bool:
    return erdos_check(system).ok


def is_erdos_block_set(blocks: Sequence[Triple]) -> bool:
    """Erdos test for a bare block collection judged on its own support."""
    bl = list(set(blocks))
    j = len(span(bl))
    if j < 4 or len(bl) != j - 2:
        return False
    return find_forbidden_subset(bl) is None


# ---------------------------------------------------------------------------
# Canonical labeling (exhaustive with pruning, <= 12 points)
# ---------------------------------------------------------------------------


def _refined_classes(verts: list[int], blocks: list[Triple]) -> dict[int, tuple]:
    """Iterated neighborhood-profile invariants; pure search-order heuristic."""
    color: dict[int, tuple] = {}
    deg = {v: 0 for v in verts}
    for b in blocks:
        for v in b:
            deg[v] += 1
    for v in verts:
        color[v] = (deg[v],)
    for _ in range(3):
        nxt: dict[int, tuple] = {}
        for v in verts:
            prof = sorted(
                tuple(sorted(color[u] for u in b if u != v)) for b in blocks if v in b
            )
            nxt[v] = (color[v], tuple(prof))
        if len(set(nxt.values())) == len(set(color.values())):
            color = nxt
            break
        color = nxt
    return color


def _min_encoding(verts: list[int], blocks: list[Triple]) -> tuple[list[tuple], list[int]]:
    """Lexicographically smallest block encoding over all labelings of verts.

    A block is encoded by its label triple sorted as (max, mid, min); the
    encoding of a labeling is the ascending list of these keys, which grows
    append-only as labels are assigned, enabling exact prefix pruning.
    """
    j = len(verts)
    nblocks = len(blocks)
    color = _refined_classes(verts, blocks)
    incident = {v: [frozenset(b) for b in blocks if v in b] for v in verts}

    best_enc: list[tuple] | None = None
    best_order: list[int] | None = None
    label: dict[int, int] = {}
    order: list[int] = []

    def new_keys(v: int, t: int) -> list[tuple]:
        keys = []
        for b in incident[v]:
            rest = [label[u] for u in b if u != v and u in label]
            if len(rest) == 2:
                keys.append((t, max(rest), min(rest)))
        keys.sort()
        return keys

    def dominated(enc: list[tuple], t: int) -> bool:
        # True when best_enc is already guaranteed <= any completion of enc.
        assert best_enc is not None
        m = len(enc)
        for i in range(m):
            if enc[i] < best_enc[i]:
                return False
            if enc[i] > best_enc[i]:
                return True
        if m < nblocks:
            # Future keys all have first coordinate > t.
            return best_enc[m] < (t + 1, 0, 0)
        return True  # complete and equal: not an improvement

    def extend(t: int, enc: list[tuple]) -> None:
        nonlocal best_enc, best_order
        if t == j:
            if best_enc is None or enc < best_enc:
                best_enc = list(enc)
                best_order = order.copy()
            return
        candidates = [v for v in verts if v not in label]
        scored = []
        for v in candidates:
            label[v] = t
            keys = new_keys(v, t)
            del label[v]
            scored.append((keys, color[v], v))
        scored.sort(key=lambda s: (s[0], s[1]))
        for keys, _, v in scored:
            cand_enc = enc + keys
            if best_enc is not None and dominated(cand_enc, t):
                continue
            label[v] = t
            order.append(v)
            extend(t + 1, cand_enc)
            order.pop()
            del label[v]

    extend(0, [])
    assert best_enc is not None and best_order is not None
    return best_enc, best_order


def canonical_form(system: TripleSystem) -> tuple[TripleSystem, dict[int, int]]:
    """A canonical representative under vertex relabeling, plus a relabeling.

    The support is relabeled to 0..s-1 minimizing a fixed block encoding;
    isolated vertices keep their relative order on labels s..n-1.  Two
    systems have equal canonical forms iff they are isomorphic (same n).
    Raises TooManyPointsError beyond CANONICAL_POINT_LIMIT support points.
    """
    supp = sorted(system.support())
    if len(supp) > CANONICAL_POINT_LIMIT:
        raise TooManyPointsError(
            f"{len(supp)} points exceed the exhaustive canonicalization limit "
            f"({CANONICAL_POINT_LIMIT}); use a hashing fallback"
        )
    blocks = system.sorted_blocks()
    mapping: dict[int, int] = {}
    if supp:
        _, order = _min_encoding(supp, blocks)
        mapping.update({v: t for t, v in enumerate(order)})
    nxt = len(supp)
    for v in range(system.n):
        if v not in mapping:
            mapping[v] = nxt
            nxt += 1
    return system.relabeled(mapping), mapping


def are_isomorphic(a: TripleSystem, b: TripleSystem) -> bool:
    if a.n != b.n or len(a.blocks) != len(b.blocks):
        return False
    return canonical_form(a)[0].blocks == canonical_form(b)[0].blocks


def automorphisms(system: TripleSystem) -> list[tuple[int, ...]]:
    """All support permutations preserving the block set (as vertex maps).

    Returned permutations are tuples p with p[v] the image of v, acting on
    0..s-1 for a system whose support is exactly 0..s-1.
    """
    supp = sorted(system.support())
    if supp != list(range(len(supp))):
        raise ValueError("automorphisms expects a system on exact support 0..s-1")
    j = len(supp)
    blocks = set(system.blocks)
    incident = {v: sorted(b for b in blocks if v in b) for v in supp}
    deg = {v: len(incident[v]) for v in supp}
    out: list[tuple[int, ...]] = []
    image: dict[int, int] = {}
    used: set[int] = set()

    def consistent(v: int, w: int) -> bool:
        # Every fully-mapped block through v must land on a block.
        for b in incident[v]:
            imgs = [image[u] if u in image else (w if u == v else None) for u in b]
            if None not in imgs:
                if tuple(sorted(imgs)) not in blocks:  # type: ignore[arg-type]
                    return False
        return True

    def extend(v: int) -> None:
        if v == j:
            out.append(tuple(image[u] for u in range(j)))
            return
        for w in range(j):
            if w in used or deg[w] != deg[v]:
                continue
            if consistent(v, w):
                image[v] = w
                used.add(w)
                extend(v + 1)
                used.discard(w)
                del image[v]

    extend(0)
    return out


# ---------------------------------------------------------------------------
# Rooted embedding plans (precompiled per catalog entry)
# ---------------------------------------------------------------------------


class PlanStep(NamedTuple):
    """One slot of a rooted embedding: which of its vertices are mapped.

    slot            the block of the pattern being matched next
    mapped          slot vertices already holding images when this step runs
    free            slot vertices still unmapped (to be read off a candidate)
    """

    slot: Triple
    mapped: tuple[int, ...]
    free: tuple[int, ...]


class PairPlan(NamedTuple):
    """Search schedule for one orbit of ordered (root-slot, target-slot) pairs.

    The root slot is matched onto a concrete triple first, every step's slot
    onto blocks of the host 3-graph, and the target slot's image is then fully
    determined (every pattern vertex lies in at least two blocks).
    """

    root_slot: Triple
    target_slot: Triple
    root_maps: tuple[tuple[int, int, int], ...]  # orderings of root_slot vertices
    steps: tuple[PlanStep, ...]


def _schedule_steps(blocks: Sequence[Triple], root: Triple, target: Triple) -> tuple[PlanStep, ...]:
    mapped: set[int] = set(root)
    remaining = [b for b in blocks if b != root and b != target]
    steps: list[PlanStep] = []
    while remaining:
        best_i = max(range(len(remaining)), key=lambda i: len(mapped.intersection(remaining[i])))
        slot = remaining.pop(best_i)
        m = tuple(v for v in slot if v in mapped)
        f = tuple(v for v in slot if v not in mapped)
        if not m:
            raise AssertionError("pattern disconnected around root; cannot schedule")
        steps.append(PlanStep(slot, m, f))
        mapped.update(slot)
    if not mapped.issuperset(target):
        raise AssertionError("target slot not determined by other slots")
    return tuple(steps)


def _pair_plans(system: TripleSystem, auts: Sequence[tuple[int, ...]]) -> tuple[PairPlan, ...]:
    """One plan per Aut-orbit of ordered block pairs, with reduced root maps."""
    blocks = system.sorted_blocks()
    index = {b: i for i, b in enumerate(blocks)}

    def apply(p: tuple[int, ...], b: Triple) -> Triple:
        return triple(p[b[0]], p[b[1]], p[b[2]])

    seen: set[tuple[int, int]] = set()
    plans: list[PairPlan] = []
    for s1 in blocks:
        for s2 in blocks:
            if s1 == s2:
                continue
            key = (index[s1], index[s2])
            if key in seen:
                continue
            stab: list[tuple[int, ...]] = []
            for p in auts:
                pk = (index[apply(p, s1)], index[apply(p, s2)])
                seen.add(pk)
                if pk == key:
                    stab.append(p)
            # Root maps up to the stabilizer's action on the root slot.
            rm_seen: set[tuple[int, int, int]] = set()
            root_maps: list[tuple[int, int, int]] = []
            for perm in permutations(s1):
                if perm in rm_seen:
                    continue
                root_maps.append(perm)  # type: ignore[arg-type]
                for p in stab:
                    img = tuple(p[v] for v in perm)
                    rm_seen.add(img)  # type: ignore[arg-type]
            plans.append(
                PairPlan(s1, s2, tuple(root_maps), _schedule_steps(blocks, s1, s2))
            )
    return tuple(plans)


def _anchor_plans(system: TripleSystem, auts: Sequence[tuple[int, ...]]) -> tuple[PairPlan, ...]:
    """Plans rooted at a single slot (target unused), one per block orbit."""
    blocks = system.sorted_blocks()
    index = {b: i for i, b in enumerate(blocks)}

    def apply(p: tuple[int, ...], b: Triple) -> Triple:
        return triple(p[b[0]], p[b[1]], p[b[2]])

    seen: set[int] = set()
    plans: list[PairPlan] = []
    for s1 in blocks:
        if index[s1] in seen:
            continue
        orbit = {index[apply(p, s1)] for p in auts}
        seen.update(orbit)
        mapped: set[int] = set(s1)
        remaining = [b for b in blocks if b != s1]
        steps: list[PlanStep] = []
        while remaining:
            best_i = max(
                range(len(remaining)), key=lambda i: len(mapped.intersection(remaining[i]))
            )
            slot = remaining.pop(best_i)
            m = tuple(v for v in slot if v in mapped)
            f = tuple(v for v in slot if v not in mapped)
            steps.append(PlanStep(slot, m, f))
            mapped.update(slot)
        plans.append(
            PairPlan(s1, s1, tuple(permutations(s1)), tuple(steps))  # type: ignore[arg-type]
        )
    return tuple(plans)


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------

_KNOWN_NAMES = (
    ("diamond", DIAMOND_BLOCKS),
    ("pasch", PASCH_BLOCKS),
    ("mitre", MITRE_BLOCKS),
    ("6-cycle", SIX_CYCLE_BLOCKS),
    ("crown", CROWN_BLOCKS),
)


@dataclass(frozen=True)
class CatalogEntry:
    j: int
    entry_id: int
    system: TripleSystem  # canonical labels 0..j-1, exact support
    name: Optional[str]
    aut: tuple[tuple[int, ...], ...] = field(repr=False)
    pair_plans: tuple[PairPlan, ...] = field(repr=False)
    anchor_plans: tuple[PairPlan, ...] = field(repr=False)

    @property
    def aut_size(self) -> int:
        return len(self.aut)

    def labeled_count_through_fixed_block(self) -> int:
        """Labeled copies on exactly [j] whose block set contains a fixed triple."""
        j = self.j
        total = len(self.system.blocks) * 6 * math.factorial(j - 3)
        assert total % self.aut_size == 0
        return total // self.aut_size


@dataclass(frozen=True)
class ErdosCatalog:
    """Canonical Erdos configurations for 4 <= j <= j_max, with search plans."""

    j_max: int
    entries_by_j: Mapping[int, tuple[CatalogEntry, ...]]

    def entries(self, j: Optional[int] = None) -> Iterator[CatalogEntry]:
        js = [j] if j is not None else sorted(self.entries_by_j)
        for jj in js:
            yield from self.entries_by_j.get(jj, ())

    def counts(self) -> dict[int, int]:
        return {j: len(self.entries_by_j.get(j, ())) for j in range(4, self.j_max + 1)}

    def erd_counts(self) -> dict[int, int]:
        """j -> labeled Erdos configurations on [j] through a fixed triple."""
        return {
            j: sum(e.labeled_count_through_fixed_block() for e in self.entries_by_j.get(j, ()))
            for j in range(4, self.j_max + 1)
        }

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"erdos-catalog v1 jmax={self.j_max}\n")
            for entry in self.entries():
                blocks = ";".join(",".join(map(str, b)) for b in entry.system.sorted_blocks())
                fh.write(f"j={entry.j} id={entry.entry_id} blocks={blocks}\n")

    @staticmethod
    def load(path: str) -> "ErdosCatalog":
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            parts = header.split()
            if len(parts) != 3 or parts[0] != "erdos-catalog" or parts[1] != "v1":
                raise ValueError(f"unrecognized catalog header: {header!r}")
            j_max = int(parts[2].removeprefix("jmax="))
            per_j: dict[int, list[TripleSystem]] = {}
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                fields = dict(kv.split("=", 1) for kv in line.split(" "))
                j = int(fields["j"])
                blocks = [tuple(map(int, b.split(","))) for b in fields["blocks"].split(";")]
                per_j.setdefault(j, []).append(TripleSystem.from_blocks(blocks, n=j))
        entries = {
            j: tuple(_make_entry(j, i, s) for i, s in enumerate(systems))
            for j, systems in per_j.items()
        }
        catalog = ErdosCatalog(j_max, entries)
        _validate_catalog(catalog)
        return catalog


def _make_entry(j: int, entry_id: int, system: TripleSystem) -> CatalogEntry:
    name = None
    for nm, raw in _KNOWN_NAMES:
        known = TripleSystem.from_blocks(raw)
        if known.n == j and are_isomorphic(system, known):
            name = nm
            break
    auts = tuple(automorphisms(system))
    pair_plans = _pair_plans(system, auts) if j >= 6 else ()
    anchor_plans = _anchor_plans(system, auts)
    return CatalogEntry(j, entry_id, system, name, auts, pair_plans, anchor_plans)


def _validate_catalog(catalog: ErdosCatalog) -> None:
    for entry in catalog.entries():
        if not is_erdos(entry.system):
            raise ValueError(f"catalog entry j={entry.j} id={entry.entry_id} is not Erdos-minimal")
        if entry.system.n != entry.j:
            raise ValueError("catalog entry point count mismatch")


def _enumerate_labeled(j: int, fix_first_block: bool) -> Iterator[frozenset[Triple]]:
    """DFS over lex-increasing block lists on [j] forming Erdos configurations.

    With fix_first_block, only sets containing {0,1,2} are produced (that
    triple is lexicographically least, so it is always the first block);
    otherwise a first-use labeling constraint is added, which keeps at least
    one representative per isomorphism class while pruning relabelings.

    Prune: every sub-collection of size >= 2 that stays proper in a completed
    configuration must span at least (size + 3) points; only the full final
    block set is allowed to span exactly (size + 2) = j.
    """
    target = j - 2
    all_triples = list(combinations(range(j), 3))
    masks = [1 << a | 1 << b | 1 << c for a, b, c in all_triples]
    linear = j >= 6  # any diamond inside would be a proper forbidden subgraph

    blocks: list[Triple] = [(0, 1, 2)]
    block_masks: list[int] = [0b111]
    subs_or: list[int] = [0, 0b111]  # OR over every subset of block_masks

    def extend(start: int, used: int) -> Iterator[frozenset[Triple]]:
        m = len(blocks)
        last = m + 1 == target
        full_mask = (1 << m) - 1
        for idx in range(start, len(all_triples)):
            b = all_triples[idx]
            bm = masks[idx]
            if not fix_first_block:
                new = [v for v in b if v >= used]
                if new and (new[0] != used or new != list(range(used, used + len(new)))):
                    continue  # enforce first-use labeling order
            if linear and any((bm & ob).bit_count() >= 2 for ob in block_masks):
                continue
            ok = True
            for sub in range(1, 1 << m):
                if last and sub == full_mask:
                    continue  # the completed configuration spans exactly j
                if (subs_or[sub] | bm).bit_count() <= sub.bit_count() + 3:
                    ok = False
                    break
            if not ok:
                continue
            blocks.append(b)
            block_masks.append(bm)
            base = len(subs_or)
            for s in range(base):
                subs_or.append(subs_or[s] | bm)
            nu = used + len([v for v in b if v >= used])
            if len(blocks) == target:
                if (subs_or[-1]).bit_count() == j:
                    cand = frozenset(blocks)
                    if is_erdos_block_set(list(cand)):
                        yield cand
            else:
                yield from extend(idx + 1, nu)
            del subs_or[base:]
            block_masks.pop()
            blocks.pop()

    yield from extend(all_triples.index((0, 1, 2)) + 1, 3)


def enumerate_erdos(j_max: int) -> ErdosCatalog:
    """Build the complete catalog of Erdos configurations for 4 <= j <= j_max."""
    if not 4 <= j_max <= ENUMERATION_JMAX:
        raise ValueError(f"j_max must be within [4, {ENUMERATION_JMAX}], got {j_max}")
    entries_by_j: dict[int, tuple[CatalogEntry, ...]] = {}
    for j in range(4, j_max + 1):
        canon: dict[frozenset[Triple], TripleSystem] = {}
        for block_set in _enumerate_labeled(j, fix_first_block=False):
            system = TripleSystem(j, block_set)
            cform, _ = canonical_form(system)
            canon.setdefault(cform.blocks, cform)
        ordered = sorted(canon.values(), key=lambda s: s.sorted_blocks())
        entries_by_j[j] = tuple(_make_entry(j, i, s) for i, s in enumerate(ordered))
    catalog = ErdosCatalog(j_max, entries_by_j)
    _validate_catalog(catalog)
    return catalog


# ---------------------------------------------------------------------------
# Counting constants
# ---------------------------------------------------------------------------


def erd_count(j: int) -> int:
    """Labeled Erdos configurations on vertex set [j] containing a fixed triple.

    Exhaustive enumeration over block sets through {0,1,2} with exact support
    [j]; independent of the catalog (used to cross-check it).
    """
    if not 4 <= j <= 9:
        raise ValueError(f"erd_count supports 4 <= j <= 9, got {j}")
    return sum(1 for _ in _enumerate_labeled(j, fix_first_block=True))


def build_family(j: int) -> TripleSystem:
    """The explicit Erdos configuration on j >= 6 points.

    Vertices are e=0, o=1 and x_1..x_{j-2} as 2..j-1; consecutive x pairs are
    joined alternately through o and e, with one closing triple whose shape
    depends on the parity of j.
    """
    if j < 6:
        raise ValueError("the explicit family needs j >= 6")
    e, o = 0, 1
    x = {i: 1 + i for i in range(1, j - 1)}  # x_i for 1 <= i <= j-2
    blocks = []
    for ell in range(1, j - 2):  # ell <= j-3
        anchor = o if ell % 2 == 1 else e
        blocks.append(triple(anchor, x[ell], x[ell + 1]))
    if j % 2 == 0:
        blocks.append(triple(e, x[j - 2], x[1]))
    else:
        blocks.append(triple(x[j - 4], x[j - 2], x[1]))
    return TripleSystem.from_blocks(blocks, n=j)


def _binom(n: int, k: int) -> float:
    if n < k:
        return 0.0
    if n <= 10_000:
        return float(math.comb(n, k))
    return math.exp(
        math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
    )


def count_J(n: int, j: int, catalog_or_counts) -> float:
    """Copies of Erdos configurations on j points through a fixed triple, on n vertices.

    J_j = erd_j * C(n-3, j-3); zero when there are no configurations at j.
    Accepts an ErdosCatalog or a mapping j -> erd_j.
    """
    if j < 4 or n < j:
        return 0.0
    if isinstance(catalog_or_counts, ErdosCatalog):
        counts = catalog_or_counts.erd_counts()
    else:
        counts = catalog_or_counts
    erd = counts.get(j, 0)
    return erd * _binom(n - 3, j - 3)
