"""Definition-level sparseness verification for triple systems.

These checks are the independent oracle for the removal-process engine: they
work straight from the defining inequality (every vertex subset W with
4 <= |W| <= k+2 spans at most |W| - 3 blocks) and never consult the
configuration catalog or the engine's exclusion search.

Pure functions over immutable inputs; safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .configs import ErdosCatalog, Triple, TripleSystem

EXHAUSTIVE_SUBSET_BUDGET = 5_000_000


class SubsetBudgetError(ValueError):
    """Exhaustive mode refused: too many vertex subsets for the budget."""


@dataclass(frozen=True)
class SparsenessReport:
    k_checked: int
    ok: bool
    witness: Optional[tuple[frozenset[int], frozenset[Triple]]] = None  # (W, blocks in W)
    exhaustive: bool = True

    def __post_init__(self) -> None:
        if not self.ok:
            assert self.witness is not None
            w, blocks = self.witness
            assert len(blocks) >= len(w) - 2 and 4 <= len(w) <= self.k_checked + 2


def is_linear(system: TripleSystem) -> bool:
    """Every two distinct blocks share at most one vertex."""
    blocks = system.sorted_blocks()
    for i, a in enumerate(blocks):
        sa = set(a)
        for b in blocks[i + 1 :]:
            if len(sa.intersection(b)) >= 2:
                return False
    return True


def is_partial_steiner(system: TripleSystem) -> bool:
    """Every pair of vertices is covered by at most one block."""
    seen: set[tuple[int, int]] = set()
    for a, b, c in system.blocks:
        for pair in ((a, b), (a, c), (b, c)):
            if pair in seen:
                return False
            seen.add(pair)
    return True


def _vertex_masks(system: TripleSystem) -> list[int]:
    return [1 << a | 1 << b | 1 << c for a, b, c in system.sorted_blocks()]


def is_k_sparse(
    system: TripleSystem, k: int, budget: int = EXHAUSTIVE_SUBSET_BUDGET
) -> SparsenessReport:
    """Exhaustively check that every j points span at most j-3 blocks, 4 <= j <= k+2.

    This is the definition of avoiding all (j+2, j)-configurations for
    2 <= j <= k, applied to the vertices actually touched by blocks (subsets
    of untouched vertices cannot add blocks).  Returns the first violation,
    scanning smaller subsets first so witnesses are minimal in point count.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    verts = sorted(system.support())
    total = sum(math.comb(len(verts), j) for j in range(4, k + 3))
    if total > budget:
        raise SubsetBudgetError(
            f"{total} subsets exceed budget {budget}; use sampled_sparseness"
        )
    blocks = system.sorted_blocks()
    masks = _vertex_masks(system)
    for j in range(4, k + 3):
        limit = j - 3
        for w in combinations(verts, j):
            wm = 0
            for v in w:
                wm |= 1 << v
            count = 0
            for m in masks:
                if m & wm == m:
                    count += 1
            if count > limit:
                inside = frozenset(b for b, m in zip(blocks, masks) if m & wm == m)
                return SparsenessReport(k, False, (frozenset(w), inside))
    return SparsenessReport(k, True)


def contains_erdos_embedding(
    system: TripleSystem, catalog: ErdosCatalog, j_max: int
) -> Optional[frozenset[Triple]]:
    """Find a copy of a catalog configuration on at most j_max points, if any.

    Independent formulation of the same sparseness notion (k-sparse iff no
    minimal configuration on <= k+2 points embeds); used to cross-validate
    is_k_sparse on small systems.
    """
    blocks = system.sorted_blocks()
    by_vertex: dict[int, list[Triple]] = {}
    for b in blocks:
        for v in b:
            by_vertex.setdefault(v, []).append(b)

    for entry in catalog.entries():
        if entry.j > j_max:
            continue
        pattern = entry.system.sorted_blocks()
        image: dict[int, int] = {}
        used: set[int] = set()
        chosen: list[Triple] = []

        def extend(slot_idx: int) -> Optional[frozenset[Triple]]:
            if slot_idx == len(pattern):
                return frozenset(chosen)
            slot = pattern[slot_idx]
            mapped = [v for v in slot if v in image]
            if mapped:
                candidates = [b for b in by_vertex.get(image[mapped[0]], []) if b not in chosen]
            else:
                candidates = [b for b in blocks if b not in chosen]
            for cand in candidates:
                cs = set(cand)
                if any(image[v] not in cs for v in mapped):
                    continue
                free = [v for v in slot if v not in image]
                rest = [x for x in cand if x not in {image[v] for v in mapped}]
                if len(rest) != len(free):
                    continue
                from itertools import permutations as _perms

                for assign in _perms(rest):
                    if any(x in used for x in assign):
                        continue
                    for v, x in zip(free, assign):
                        image[v] = x
                        used.add(x)
                    chosen.append(cand)
                    hit = extend(slot_idx + 1)
                    chosen.pop()
                    for v in free:
                        used.discard(image[v])
                        del image[v]
                    if hit is not None:
                        return hit
            return None

        hit = extend(0)
        if hit is not None:
            return hit
    return None


def _check_window(
    masks_in_window: list[tuple[int, Triple]], k: int
) -> Optional[tuple[frozenset[int], frozenset[Triple]]]:
    """Search block subsets of a small window for a forbidden pattern."""
    m = len(masks_in_window)
    for size in range(2, min(m, k) + 1):
        for sub in combinations(masks_in_window, size):
            um = 0
            for bm, _ in sub:
                um |= bm
            j = um.bit_count()
            if 4 <= j <= k + 2 and size >= j - 2:
                w = frozenset(v for v in range(um.bit_length()) if um >> v & 1)
                return w, frozenset(b for _, b in sub)
    return None


def sampled_sparseness(
    system: TripleSystem, k: int, samples: int, seed: int
) -> SparsenessReport:
    """Statistical stand-in for the exhaustive scan at large n.

    Checks `samples` random (k+2)-subsets, plus every vertex window grown
    from a pair of intersecting blocks by repeatedly adding blocks with at
    least two vertices inside (anchored local search: every forbidden
    configuration on >= 6 points contains intersecting block pairs, and
    uniform subset sampling alone has vanishing hit probability).
    ok=True is evidence, not proof.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    if k < 2:
        raise ValueError("k must be at least 2")
    rng = np.random.Generator(np.random.PCG64(seed))
    blocks = system.sorted_blocks()
    masks = _vertex_masks(system)
    by_vertex: dict[int, list[int]] = {}
    for i, b in enumerate(blocks):
        for v in b:
            by_vertex.setdefault(v, []).append(i)
    jmax_pts = k + 2

    def grown_window(i: int, nb: int) -> list[tuple[int, Triple]]:
        window = masks[i] | masks[nb]
        members = [(masks[i], blocks[i]), (masks[nb], blocks[nb])]
        member_masks = {masks[i], masks[nb]}
        frontier = True
        while frontier:
            frontier = False
            cand_ids = {
                idx
                for v in range(window.bit_length())
                if window >> v & 1
                for idx in by_vertex.get(v, [])
            }
            for idx in sorted(cand_ids):
                m = masks[idx]
                if m in member_masks:
                    continue
                if (m & window).bit_count() >= 2 and (window | m).bit_count() <= jmax_pts:
                    window |= m
                    members.append((m, blocks[idx]))
                    member_masks.add(m)
                    frontier = True
        return members

    # Anchored windows grown from intersecting block pairs: exhaustive over
    # all pairs when cheap enough, otherwise `samples` random anchors.
    if blocks:
        total_pairs = sum(
            len(by_vertex[v]) * (len(by_vertex[v]) - 1) // 2 for v in by_vertex
        )
        if total_pairs <= samples:
            anchors = [
                (i, nb)
                for i, b in enumerate(blocks)
                for v in b
                for nb in by_vertex[v]
                if nb > i
            ]
        else:
            anchors = []
            for _ in range(samples):
                i = int(rng.integers(len(blocks)))
                v = blocks[i][int(rng.integers(3))]
                incident = by_vertex[v]
                nb = incident[int(rng.integers(len(incident)))]
                if nb != i:
                    anchors.append((i, nb))
        for i, nb in anchors:
            hit = _check_window(grown_window(i, nb), k)
            if hit is not None:
                return SparsenessReport(k, False, hit, exhaustive=False)

    # Uniform random (k+2)-subsets of the support.
    verts = sorted(system.support())
    if len(verts) >= jmax_pts:
        varr = np.array(verts)
        for _ in range(samples):
            w = [int(v) for v in rng.choice(varr, size=jmax_pts, replace=False)]
            wm = 0
            for v in w:
                wm |= 1 << v
            cand_ids = {idx for v in w for idx in by_vertex.get(v, [])}
            inside = [
                (masks[i], blocks[i]) for i in sorted(cand_ids) if masks[i] & wm == masks[i]
            ]
            hit = _check_window(inside, k)
            if hit is not None:
                return SparsenessReport(k, False, hit, exhaustive=False)
    return SparsenessReport(k, True, exhaustive=False)
