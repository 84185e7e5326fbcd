"""Weakly sparse partial Steiner systems with general block parameters.

A partial (n,q,r)-Steiner system is a family of q-subsets of an n-set in
which every r-subset lies in at most one block.  On j points, any complete
system is forced to contain kappa_{q,r}(j) = floor((j-r-1)/(q-r)) blocks, so
the best one can forbid is one block more; a system is weakly k-sparse when
no j points carry kappa_{q,r}(j) + 2 blocks, for every j with that target at
most k.

The constructive pipeline: sample each q-set independently with probability
n^{-(q-r)+theta}, resample until no sampled j-set is too crowded (and no two
r-sets have large codegree), then greedily match the auxiliary hypergraph
whose vertices are r-sets and whose hyperedges are the sampled blocks'
r-subsets.  The matching is a partial Steiner system and inherits weak
sparseness from the sampled graph; coverage is measured, not proven.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .process import trial_seed

QBlock = tuple[int, ...]

SPARSIFY_RETRY_BUDGET = 1000


class RetryBudgetError(RuntimeError):
    """Resampling failed to clear the bad events within the attempt budget."""


class ThetaInfeasibleError(ValueError):
    """The exponent theta violates the crowding-probability constraint."""


@dataclass(frozen=True)
class QSystem:
    """A partial (n,q,r)-Steiner system: pairwise r-intersections below r."""

    n: int
    q: int
    r: int
    blocks: frozenset[QBlock]

    def __post_init__(self) -> None:
        if not (self.n >= self.q > self.r >= 2):
            raise ValueError("need n >= q > r >= 2")
        for b in self.blocks:
            if len(b) != self.q or list(b) != sorted(set(b)) or b[-1] >= self.n:
                raise ValueError(f"malformed block {b}")
        bl = sorted(self.blocks)
        for i, x in enumerate(bl):
            sx = set(x)
            for y in bl[i + 1 :]:
                if len(sx.intersection(y)) >= self.r:
                    raise ValueError(f"blocks {x} and {y} share an {self.r}-set")

    @staticmethod
    def from_blocks(n: int, q: int, r: int, blocks) -> "QSystem":
        return QSystem(n, q, r, frozenset(tuple(sorted(b)) for b in blocks))

    def is_complete(self) -> bool:
        return len(self.blocks) * math.comb(self.q, self.r) == math.comb(self.n, self.r)


def kappa_qr(q: int, r: int, j: int) -> int:
    """Unavoidable block count on j points: floor((j-r-1)/(q-r))."""
    if not q > r >= 2:
        raise ValueError("need q > r >= 2")
    if j < r + 1:
        raise ValueError("need j >= r + 1")
    return (j - r - 1) // (q - r)


def admissible(n: int, q: int, r: int) -> bool:
    """Divisibility conditions necessary for a complete (n,q,r)-Steiner system."""
    if not n >= q > r >= 2:
        raise ValueError("need n >= q > r >= 2")
    return all(
        math.comb(n - i, r - i) % math.comb(q - i, r - i) == 0 for i in range(r)
    )


# ---------------------------------------------------------------------------
# Constructive configuration extraction from a complete system
# ---------------------------------------------------------------------------


class IncompleteSystemError(ValueError):
    """An r-set needed by the induction is not covered: system not complete."""


@dataclass(frozen=True)
class ExtractedConfiguration:
    blocks: tuple[QBlock, ...]
    points: frozenset[int]
    padding: int  # isolated points needed to reach exactly j


def extract_configuration(system: QSystem, j: int) -> ExtractedConfiguration:
    """A set of kappa_{q,r}(j) blocks of a complete system on at most j points.

    Follows the inductive construction: start from one block plus one extra
    point; while below the target, pick an uncovered r-set inside the current
    point set (counting guarantees one exists) and add the unique block
    covering it, padding with fresh points to keep the count on schedule.
    Deterministic: lexicographically least choices throughout.
    """
    q, r, n = system.q, system.r, system.n
    if not n >= j > q:
        raise ValueError("need n >= j > q")
    target_blocks = kappa_qr(q, r, j)
    cover: dict[tuple[int, ...], QBlock] = {}
    for b in system.blocks:
        for e in combinations(b, r):
            cover[e] = b

    blocks: list[QBlock] = [min(system.blocks)]
    points: list[int] = sorted(blocks[0])

    def pad_to(size: int) -> None:
        present = set(points)
        for v in range(n):
            if len(points) >= size:
                return
            if v not in present:
                points.append(v)
                present.add(v)
        raise ValueError("not enough vertices to pad")

    pad_to(q + 1)
    while len(blocks) < target_blocks:
        covered = {e for b in blocks for e in combinations(b, r)}
        uncovered = None
        for e in combinations(sorted(points), r):
            if e not in covered:
                uncovered = e
                break
        if uncovered is None:
            raise IncompleteSystemError("no uncovered r-set inside the point set")
        blk = cover.get(uncovered)
        if blk is None:
            raise IncompleteSystemError(f"r-set {uncovered} not covered by any block")
        blocks.append(blk)
        present = set(points)
        points.extend(v for v in blk if v not in present)
        # Point budget after x inductive steps is q + 1 + x(q - r).
        pad_to(min(n, q + 1 + (len(blocks) - 1) * (q - r)))
    span = {v for b in blocks for v in b}
    if len(span) > j:
        raise AssertionError("extraction exceeded the point budget")
    return ExtractedConfiguration(tuple(blocks), frozenset(span), j - len(span))


# ---------------------------------------------------------------------------
# Weak sparseness verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeakSparsenessReport:
    k: int
    ok: bool
    witness: Optional[tuple[frozenset[int], tuple[QBlock, ...]]] = None


def weak_sparseness_levels(q: int, r: int, k: int) -> list[tuple[int, int]]:
    """(j, forbidden block count) pairs relevant below level k."""
    out = []
    j = q + 1
    while True:
        t = kappa_qr(q, r, j) + 2
        if t > k:
            break
        out.append((j, t))
        j += 1
    return out


def is_weakly_k_sparse(
    system: QSystem, k: int, node_budget: int = 20_000_000
) -> WeakSparsenessReport:
    """Exhaustive check that no j points carry kappa_{q,r}(j)+2 blocks.

    Equivalent to the vertex-subset scan, but searched over block subsets
    with a span bound (t blocks spanning at most j points exist iff some
    j-set contains t blocks), which stays exact at any n since blocks of a
    partial system rarely overlap.  The budget guards pathological inputs.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    levels = weak_sparseness_levels(system.q, system.r, k)
    if not levels:
        return WeakSparsenessReport(k, True)
    blocks = sorted(system.blocks)
    masks = [_qmask(b) for b in blocks]
    by_vertex: dict[int, list[int]] = {}
    for i, b in enumerate(blocks):
        for v in b:
            by_vertex.setdefault(v, []).append(i)
    nodes = 0
    for j, t in levels:
        # DFS over block subsets with union span <= j; blocks added in
        # increasing index, each sharing a vertex with the current union
        # (a crowded j-set always contains a connected crowded core... not
        # necessarily: use full index ordering instead, pruning on span).
        def dfs(start: int, chosen_ids: list[int], union: int) -> Optional[list[int]]:
            nonlocal nodes
            if len(chosen_ids) == t:
                return chosen_ids.copy()
            for idx in range(start, len(blocks)):
                nodes_limit_check(nodes)
                nu = union | masks[idx]
                nodes += 1
                if nu.bit_count() > j - 0:
                    continue
                # Remaining blocks must fit in the j-point budget too.
                chosen_ids.append(idx)
                hit = dfs(idx + 1, chosen_ids, nu)
                chosen_ids.pop()
                if hit is not None:
                    return hit
            return None

        def nodes_limit_check(x: int) -> None:
            if x > node_budget:
                raise ValueError("weak sparseness search exceeded its node budget")

        hit = dfs(0, [], 0)
        if hit is not None:
            sel = [blocks[i] for i in hit]
            span = frozenset(v for b in sel for v in b)
            return WeakSparsenessReport(k, False, (span, tuple(sel)))
    return WeakSparsenessReport(k, True)


def _qmask(b: QBlock) -> int:
    m = 0
    for v in b:
        m |= 1 << v
    return m


# ---------------------------------------------------------------------------
# Random sparsification with local resampling
# ---------------------------------------------------------------------------


def max_feasible_theta(q: int, r: int, k: int) -> float:
    """Largest theta satisfying (q-r-theta)(kappa+2) >= j-r+theta at all levels."""
    levels = weak_sparseness_levels(q, r, k)
    if not levels:
        return float(q - r) / 2  # unconstrained; stay well below q-r
    return min(((q - r) * (t) - (j - r)) / (t + 1) for j, t in levels)


def check_theta(q: int, r: int, k: int, theta: float) -> None:
    if theta <= 0:
        raise ThetaInfeasibleError("theta must be positive")
    for j, t in weak_sparseness_levels(q, r, k):
        if (q - r - theta) * t < j - r + theta:
            raise ThetaInfeasibleError(
                f"theta={theta} violates the crowding constraint at j={j} "
                f"(needs theta <= {((q - r) * t - (j - r)) / (t + 1):.4f})"
            )


@dataclass
class SparsifyResult:
    blocks: list[QBlock]
    attempts: int
    p: float
    degree_target: float
    degree_ok_fraction: float  # r-set degrees within (1 +- eps) of target
    zero_degree_fraction: float
    max_codegree: int
    codegree_cap: float


def sparsify(
    n: int,
    q: int,
    r: int,
    k: int,
    theta: float,
    seed: int,
    eps: float = 0.5,
    enforce_degrees: bool = False,
    enforce_codegrees: bool = False,
    budget: int = SPARSIFY_RETRY_BUDGET,
) -> SparsifyResult:
    """Sample q-sets with probability n^{-(q-r)+theta}; resample until clean.

    The enforced bad event is crowding: some j-set carrying a (j, kappa+2)
    configuration of sampled blocks, the one event that would break weak
    sparseness downstream.  The degree event (r-set degrees outside
    (1 +- eps) of n^theta/(q-r)!) and the codegree event (two r-sets in
    >= n^{theta/10} common blocks) only affect matching quality, which is
    measured anyway; at desk scale both are unavoidable (zero-degree r-sets,
    and block pairs sharing r+1 points, appear in essentially every sample),
    so they are measured and reported, and abort the attempt only when their
    enforce flags are set.
    """
    check_theta(q, r, k, theta)
    p = float(n) ** (-(q - r) + theta)
    rng = np.random.Generator(np.random.PCG64(seed))
    all_blocks = list(combinations(range(n), q))
    levels = weak_sparseness_levels(q, r, k)
    deg_target = float(n) ** theta / math.factorial(q - r)
    codeg_cap = float(n) ** (theta / 10)

    for attempt in range(1, budget + 1):
        keep = rng.random(len(all_blocks)) < p
        blocks = [b for b, kf in zip(all_blocks, keep) if kf]
        if not blocks:
            continue
        if _has_crowded_configuration(blocks, levels, q, r):
            continue
        max_codeg = _max_codegree(blocks, q, r)
        if enforce_codegrees and max_codeg >= codeg_cap:
            continue
        degs = _r_degrees(blocks, q, r)
        total_rsets = math.comb(n, r)
        within = sum(
            1 for d in degs.values() if (1 - eps) * deg_target <= d <= (1 + eps) * deg_target
        )
        zero = total_rsets - len(degs)
        if (1 - eps) * deg_target <= 0:
            within += zero
        ok_fraction = within / total_rsets
        if enforce_degrees and ok_fraction < 1.0:
            continue
        return SparsifyResult(
            blocks=blocks,
            attempts=attempt,
            p=p,
            degree_target=deg_target,
            degree_ok_fraction=ok_fraction,
            zero_degree_fraction=zero / total_rsets,
            max_codegree=max_codeg,
            codegree_cap=codeg_cap,
        )
    raise RetryBudgetError(
        f"no clean sample within {budget} attempts; theta={theta} likely out of "
        f"the feasible regime for n={n}"
    )


def _r_degrees(blocks: Sequence[QBlock], q: int, r: int) -> dict[tuple[int, ...], int]:
    degs: dict[tuple[int, ...], int] = {}
    for b in blocks:
        for e in combinations(b, r):
            degs[e] = degs.get(e, 0) + 1
    return degs


def _max_codegree(blocks: Sequence[QBlock], q: int, r: int) -> int:
    """Largest number of blocks containing the union of two distinct r-sets.

    Distinct r-sets inside one block have union size r+1..2r, so it is enough
    to bound d(S) over vertex sets S of those sizes that appear in blocks.
    """
    best = 0
    counts: dict[tuple[int, ...], int] = {}
    for b in blocks:
        for size in range(r + 1, min(2 * r, q) + 1):
            for s in combinations(b, size):
                c = counts.get(s, 0) + 1
                counts[s] = c
                best = max(best, c)
    return best


def _has_crowded_configuration(
    blocks: Sequence[QBlock], levels: Sequence[tuple[int, int]], q: int, r: int
) -> bool:
    """Whether t sampled blocks, pairwise sharing < r points, span <= j points.

    Only configurations (pairwise compatible block sets) are counted: they
    are what weak sparseness forbids, and any matching-derived subsystem can
    only contain those.  Raw crowded multisets with incompatible pairs cannot
    survive the matching, and forbidding them as well would make desk-scale
    resampling infeasible.
    """
    if not levels:
        return False
    masks = [_qmask(b) for b in blocks]
    order = sorted(range(len(blocks)), key=lambda i: blocks[i])
    for j, t in levels:
        def dfs(pos: int, members: list[int], union: int) -> bool:
            if len(members) == t:
                return True
            for ii in range(pos, len(order)):
                idx = order[ii]
                m = masks[idx]
                if (union | m).bit_count() > j:
                    continue
                if any(
                    (m & masks[other]).bit_count() >= r for other in members
                ):
                    continue
                members.append(idx)
                if dfs(ii + 1, members, union | m):
                    return True
                members.pop()
            return False

        if dfs(0, [], 0):
            return True
    return False


# ---------------------------------------------------------------------------
# Auxiliary hypergraph and greedy matching
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AuxHypergraph:
    """Vertices are all r-subsets of the ground set; one hyperedge per block."""

    n: int
    q: int
    r: int
    blocks: tuple[QBlock, ...]
    edges: tuple[tuple[int, ...], ...]  # r-set ranks per block

    @staticmethod
    def build(n: int, q: int, r: int, blocks: Sequence[QBlock]) -> "AuxHypergraph":
        rank = {e: i for i, e in enumerate(combinations(range(n), r))}
        edges = tuple(
            tuple(sorted(rank[e] for e in combinations(b, r))) for b in blocks
        )
        return AuxHypergraph(n, q, r, tuple(blocks), edges)

    @property
    def vertex_count(self) -> int:
        return math.comb(self.n, self.r)


@dataclass
class MatchingResult:
    chosen_ids: list[int]
    covered: int
    coverage: float
    passes_run: int


def greedy_matching(
    aux: AuxHypergraph,
    gamma: float,
    seed: int,
    restarts: int = 20,
    improve_passes: int = 20,
) -> MatchingResult:
    """Randomized greedy matching of the auxiliary hypergraph, best of restarts.

    Each restart scans the hyperedges in a fresh random order taking any edge
    disjoint from the matching (the result is maximal).  Improvement passes
    then try 1-for-2 exchanges: removing one matched edge and greedily
    refilling; a pass that gains nothing ends the loop.  Coverage is the
    fraction of all C(n,r) r-sets matched; gamma is only the reporting
    target, never a stopping rule.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    m = len(aux.edges)
    nv = aux.vertex_count
    best: Optional[MatchingResult] = None
    for _ in range(max(restarts, 1)):
        order = rng.permutation(m)
        used = np.zeros(nv, dtype=bool)
        chosen: list[int] = []
        for idx in order:
            e = aux.edges[idx]
            ok = True
            for v in e:
                if used[v]:
                    ok = False
                    break
            if ok:
                for v in e:
                    used[v] = True
                chosen.append(int(idx))
        chosen, used, passes = _improve(aux, chosen, used, rng, improve_passes)
        covered = int(used.sum())
        if best is None or covered > best.covered:
            best = MatchingResult(chosen, covered, covered / nv, passes)
    assert best is not None
    return best


def _improve(
    aux: AuxHypergraph,
    chosen: list[int],
    used: np.ndarray,
    rng: np.random.Generator,
    passes: int,
) -> tuple[list[int], np.ndarray, int]:
    """1-for-2 exchange passes; keeps only strictly improving swaps."""
    m = len(aux.edges)
    edges = aux.edges
    owner = np.full(len(used), -1, dtype=np.int64)
    for c in chosen:
        for v in edges[c]:
            owner[v] = c
    by_vertex: dict[int, list[int]] = {}
    for i, e in enumerate(edges):
        for v in e:
            by_vertex.setdefault(v, []).append(i)
    in_matching = set(chosen)
    ran = 0
    stall = 0
    for p in range(passes):
        ran = p + 1
        improved = False
        for idx in rng.permutation(m):
            idx = int(idx)
            if idx in in_matching:
                continue
            e = edges[idx]
            blockers = {int(owner[v]) for v in e if owner[v] >= 0}
            if not blockers:
                in_matching.add(idx)
                for v in e:
                    owner[v] = idx
                improved = True
                continue
            if len(blockers) != 1:
                continue
            b = blockers.pop()
            for v in edges[b]:
                owner[v] = -1
            for v in e:
                owner[v] = idx
            in_matching.discard(b)
            in_matching.add(idx)
            # Coverage-neutral swaps are kept: the plateau walk reshuffles the
            # matching so later augmentations can land.
            cands = {c for v in edges[b] if owner[v] < 0 for c in by_vertex[v]}
            for cand in sorted(cands):
                if cand in in_matching:
                    continue
                ce = edges[cand]
                if all(owner[v] < 0 for v in ce):
                    for v in ce:
                        owner[v] = cand
                    in_matching.add(cand)
                    improved = True
        stall = 0 if improved else stall + 1
        if stall >= 10:
            break
    return sorted(in_matching), owner >= 0, ran


# ---------------------------------------------------------------------------
# Full pipeline
# ---------------------------------------------------------------------------


@dataclass
class BuildReport:
    n: int
    q: int
    r: int
    k: int
    gamma: float
    theta: float
    seed: int
    sparsify_attempts: int
    sampled_blocks: int
    matched_blocks: int
    coverage: float
    target_blocks: float
    degree_ok_fraction: float
    zero_degree_fraction: float


def build_weak_sparse(
    n: int,
    q: int,
    r: int,
    k: int,
    gamma: float,
    theta: float,
    seed: int,
    restarts: int = 20,
    improve_passes: int = 20,
) -> tuple[QSystem, BuildReport]:
    """sparsify -> auxiliary hypergraph -> greedy matching -> QSystem.

    Every output block is a sampled block, so the crowding guarantee of the
    sparsifier makes the result weakly k-sparse; matched hyperedges are
    pairwise disjoint, so no r-set is covered twice.
    """
    sp = sparsify(n, q, r, k, theta, trial_seed(seed, 0))
    aux = AuxHypergraph.build(n, q, r, sp.blocks)
    match = greedy_matching(
        aux, gamma, trial_seed(seed, 1), restarts=restarts, improve_passes=improve_passes
    )
    blocks = [aux.blocks[i] for i in match.chosen_ids]
    system = QSystem.from_blocks(n, q, r, blocks)
    report = BuildReport(
        n=n,
        q=q,
        r=r,
        k=k,
        gamma=gamma,
        theta=theta,
        seed=seed,
        sparsify_attempts=sp.attempts,
        sampled_blocks=len(sp.blocks),
        matched_blocks=len(blocks),
        coverage=match.coverage,
        target_blocks=(1 - gamma) * math.comb(n, r) / math.comb(q, r),
        degree_ok_fraction=sp.degree_ok_fraction,
        zero_degree_fraction=sp.zero_degree_fraction,
    )
    return system, report
