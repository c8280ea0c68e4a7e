"""Geodesic geometry on trees and its pullback to ultrametric matrices.

Internal-edge coordinates carry the stratified geodesic metric: within one
topology the metric is Euclidean, and across topologies the geodesic is
found by partitioning the uncommon splits into support pairs ``(A_i, B_i)``
with non-decreasing norm ratios, each pair collapsing and regrowing through
a shared boundary.  The full tree distance adds the Euclidean distance
between the ``(root, leaf)`` length vectors:

    tree_distance = internal_geodesic_length + ||leaf_root_1 - leaf_root_2||.

The support is refined from the single cone pair by repeatedly solving a
minimum-weight vertex cover on the bipartite incompatibility graph of each
pair (squared-length vertex weights, normalized per side); a cover of weight
strictly below one yields a strictly shorter path.  Cover problems are
solved exactly by max-flow over rational capacities so that the
combinatorial decisions are immune to float noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DimensionError, InvalidArgumentError
from .rng import RngStream
from .treespace import Split, Topology, Tree, _masks_compatible
from .ultrametric import as_matrix, matrix_to_tree, DEFAULT_TOL

_RATIONAL_GRID = 10 ** 12


# ---------------------------------------------------------------------------
# minimum-weight vertex cover via max-flow (exact rational arithmetic)
# ---------------------------------------------------------------------------

def _min_weight_cover(wa: Sequence[Fraction], wb: Sequence[Fraction],
                      edges: Sequence[tuple[int, int]]):
    """Minimum-weight vertex cover of a bipartite graph.

    Vertices on side A have weights ``wa``, side B ``wb``; ``edges`` are
    (i, j) index pairs that must be covered.  Returns ``(cover_a, cover_b,
    weight)`` with index sets per side.  Solved as a source/sink min cut.
    """
    na, nb = len(wa), len(wb)
    source, sink = na + nb, na + nb + 1
    inf = sum(wa, Fraction(0)) + sum(wb, Fraction(0)) + 1
    cap: dict[tuple[int, int], Fraction] = {}
    adj: dict[int, list[int]] = {v: [] for v in range(na + nb + 2)}

    def add_edge(u, v, c):
        if (u, v) not in cap:
            cap[(u, v)] = Fraction(0)
            cap[(v, u)] = Fraction(0)
            adj[u].append(v)
            adj[v].append(u)
        cap[(u, v)] += c

    for i, w in enumerate(wa):
        add_edge(source, i, w)
    for j, w in enumerate(wb):
        add_edge(na + j, sink, w)
    for i, j in edges:
        add_edge(i, na + j, inf)

    # Edmonds-Karp: BFS augmenting paths until none remain
    while True:
        parent = {source: source}
        queue = [source]
        while queue and sink not in parent:
            u = queue.pop(0)
            for v in adj[u]:
                if v not in parent and cap[(u, v)] > 0:
                    parent[v] = u
                    queue.append(v)
        if sink not in parent:
            break
        # bottleneck along the path
        bottleneck = inf
        v = sink
        while v != source:
            u = parent[v]
            bottleneck = min(bottleneck, cap[(u, v)])
            v = u
        v = sink
        while v != source:
            u = parent[v]
            cap[(u, v)] -= bottleneck
            cap[(v, u)] += bottleneck
            v = u

    reached = {source}
    queue = [source]
    while queue:
        u = queue.pop(0)
        for v in adj[u]:
            if v not in reached and cap[(u, v)] > 0:
                reached.add(v)
                queue.append(v)
    cover_a = {i for i in range(na) if i not in reached}
    cover_b = {j for j in range(nb) if na + j in reached}
    weight = sum((wa[i] for i in cover_a), Fraction(0)) + \
        sum((wb[j] for j in cover_b), Fraction(0))
    return cover_a, cover_b, weight


def _rationalize(x: float) -> Fraction:
    return Fraction(round(x * _RATIONAL_GRID), _RATIONAL_GRID)


# ---------------------------------------------------------------------------
# geodesic support
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SupportPair:
    """One collapse/regrow stage of a geodesic: source splits out, target in."""

    source: tuple[tuple[Split, float], ...]
    target: tuple[tuple[Split, float], ...]

    @property
    def source_norm(self) -> float:
        return math.sqrt(math.fsum(l * l for _, l in self.source))

    @property
    def target_norm(self) -> float:
        return math.sqrt(math.fsum(l * l for _, l in self.target))

    @property
    def breakpoint(self) -> float:
        """Path fraction at which this pair crosses its boundary."""
        a, b = self.source_norm, self.target_norm
        if a == 0.0:
            return 0.0
        if b == 0.0:
            return 1.0
        return a / (a + b)


@dataclass(frozen=True)
class GeodesicSupport:
    """Common splits (with both lengths) plus the ordered support pairs."""

    common: tuple[tuple[Split, float, float], ...]
    pairs: tuple[SupportPair, ...]

    def internal_length(self) -> float:
        sq = math.fsum((l1 - l2) ** 2 for _, l1, l2 in self.common)
        sq += math.fsum((pr.source_norm + pr.target_norm) ** 2 for pr in self.pairs)
        return math.sqrt(sq)

    def to_dict(self) -> dict:
        return {
            "common": [
                {"split": s.key(), "length_a": l1, "length_b": l2}
                for s, l1, l2 in self.common
            ],
            "pairs": [
                {
                    "source": [{"split": s.key(), "length": l} for s, l in pr.source],
                    "target": [{"split": s.key(), "length": l} for s, l in pr.target],
                    "ratio_breakpoint": pr.breakpoint,
                }
                for pr in self.pairs
            ],
        }


def _refine_pairs(a_items: list[tuple[int, float]], b_items: list[tuple[int, float]]):
    """Split support pairs until no pair admits a cover of weight < 1."""
    pairs = [(a_items, b_items)]
    while True:
        changed = False
        new_pairs: list[tuple[list, list]] = []
        for A, B in pairs:
            if not A or not B:
                new_pairs.append((A, B))
                continue
            edges = [
                (i, j)
                for i, (ma, _) in enumerate(A)
                for j, (mb, _) in enumerate(B)
                if not _masks_compatible(ma, mb)
            ]
            a_sq = math.fsum(l * l for _, l in A)
            b_sq = math.fsum(l * l for _, l in B)
            if a_sq <= 0.0 or b_sq <= 0.0:
                new_pairs.append((A, B))
                continue
            # normalize squared lengths, snap to a rational grid, then
            # renormalize exactly so a whole side always weighs exactly 1
            # and can never pass the strict cover test through rounding
            wa = [_rationalize(l * l / a_sq) for _, l in A]
            wb = [_rationalize(l * l / b_sq) for _, l in B]
            ta, tb = sum(wa), sum(wb)
            wa = [w / ta for w in wa]
            wb = [w / tb for w in wb]
            cover_a, cover_b, weight = _min_weight_cover(wa, wb, edges)
            if weight < 1:
                c1 = [A[i] for i in range(len(A)) if i in cover_a]
                c2 = [A[i] for i in range(len(A)) if i not in cover_a]
                d2 = [B[j] for j in range(len(B)) if j in cover_b]
                d1 = [B[j] for j in range(len(B)) if j not in cover_b]
                new_pairs.append((c1, d1))
                new_pairs.append((c2, d2))
                changed = True
            else:
                new_pairs.append((A, B))
        pairs = new_pairs
        if not changed:
            return [pr for pr in pairs if pr[0] or pr[1]]


def _compute_support(t1: Tree, t2: Tree) -> GeodesicSupport:
    if t1.p != t2.p:
        raise DimensionError(f"trees have different leaf counts: {t1.p} != {t2.p}")
    s1, s2 = t1.internal_lengths, t2.internal_lengths
    common = tuple(
        (s, s1[s], s2[s]) for s in sorted(set(s1) & set(s2), key=lambda x: x.mask)
    )
    a_items = [(s.mask, l) for s, l in sorted(s1.items(), key=lambda kv: kv[0].mask)
               if s not in s2]
    b_items = [(s.mask, l) for s, l in sorted(s2.items(), key=lambda kv: kv[0].mask)
               if s not in s1]
    raw = _refine_pairs(a_items, b_items)
    p = t1.p
    pairs = tuple(
        SupportPair(
            tuple((Split(p, m), l) for m, l in A),
            tuple((Split(p, m), l) for m, l in B),
        )
        for A, B in raw
    )
    # ratio sequence must be non-decreasing; tolerate exact ties only
    bps = [pr.breakpoint for pr in pairs]
    for x, y in zip(bps, bps[1:]):
        if x > y + 1e-9:
            raise RuntimeError(f"support refinement produced unsorted ratios: {bps}")
    return GeodesicSupport(common, pairs)


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------

def bhv_distance(t1: Tree, t2: Tree) -> tuple[float, GeodesicSupport]:
    """Geodesic length over internal-edge coordinates, with its support."""
    support = _compute_support(t1, t2)
    return support.internal_length(), support


def _leaf_root_norm(t1: Tree, t2: Tree) -> float:
    v1, v2 = t1.leaf_root_vector(), t2.leaf_root_vector()
    return math.sqrt(math.fsum((a - b) ** 2 for a, b in zip(v1, v2)))


def tree_distance(t1: Tree, t2: Tree, combine: str = "sum") -> float:
    """Full tree metric: internal geodesic plus leaf/root Euclidean term.

    ``combine="sum"`` adds the two components (the default metric);
    ``combine="l2"`` combines them in quadrature for sensitivity checks.
    """
    internal, _ = bhv_distance(t1, t2)
    leaf = _leaf_root_norm(t1, t2)
    if combine == "sum":
        return internal + leaf
    if combine == "l2":
        return math.hypot(internal, leaf)
    raise InvalidArgumentError(f"unknown combine rule {combine!r}")


def matrix_distance(m1, m2, tol: float = DEFAULT_TOL, combine: str = "sum") -> float:
    """Geodesic distance between two ultrametric matrices (via their trees)."""
    a = as_matrix(m1)
    b = as_matrix(m2)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return tree_distance(matrix_to_tree(a, tol), matrix_to_tree(b, tol), combine)


# ---------------------------------------------------------------------------
# geodesic evaluation and Frechet mean
# ---------------------------------------------------------------------------

def _point_from_support(t1: Tree, t2: Tree, support: GeodesicSupport,
                        s: float) -> Tree:
    p = t1.p
    internal: dict[Split, float] = {}
    for sp, l1, l2 in support.common:
        internal[sp] = (1.0 - s) * l1 + s * l2
    for pr in support.pairs:
        a, b = pr.source_norm, pr.target_norm
        bp = pr.breakpoint
        if s < bp:
            scale = ((1.0 - s) * a - s * b) / a
            for sp, l in pr.source:
                v = scale * l
                if v > 0.0:
                    internal[sp] = v
        elif s > bp:
            scale = (s * b - (1.0 - s) * a) / b
            for sp, l in pr.target:
                v = scale * l
                if v > 0.0:
                    internal[sp] = v
    leaf = tuple(
        (1.0 - s) * x + s * y
        for x, y in zip(t1.leaf_lengths, t2.leaf_lengths)
    )
    root = (1.0 - s) * t1.root_length + s * t2.root_length
    return Tree(Topology(p, frozenset(internal)), internal, leaf, root)


def geodesic_point(t1: Tree, t2: Tree, s: float) -> Tree:
    """The point a fraction ``s`` of the way along the unique geodesic."""
    if not 0.0 <= s <= 1.0:
        raise InvalidArgumentError(f"s={s} outside [0, 1]")
    if s == 0.0:
        return t1
    if s == 1.0:
        return t2
    support = _compute_support(t1, t2)
    return _point_from_support(t1, t2, support, s)


@dataclass
class MeanConfig:
    """Controls for iterative mean computation.

    ``max_iterations`` defaults to ``5000 * len(trees)`` when left ``None``;
    the tolerance stops the iteration once successive iterates are closer
    than ``tolerance`` under the tree metric.
    """

    max_iterations: int | None = None
    pass_order: str = "cyclic"
    tolerance: float = 1e-8
    rng: RngStream | None = None

    def __post_init__(self):
        if self.max_iterations is not None and self.max_iterations < 1:
            raise InvalidArgumentError("max_iterations must be >= 1")
        if self.pass_order not in ("cyclic", "random"):
            raise InvalidArgumentError(f"unknown pass_order {self.pass_order!r}")
        if self.tolerance <= 0:
            raise InvalidArgumentError("tolerance must be positive")


def frechet_mean(trees: Sequence[Tree], cfg: MeanConfig | None = None) -> Tree:
    """Iterative mean: step toward each tree in turn with shrinking weights.

    From iterate ``x_k``, move to the point at fraction ``1/(k+1)`` along the
    geodesic from ``x_k`` to the next selected tree.  On a space of
    non-positive curvature this converges to the unique minimizer of the sum
    of squared distances.
    """
    if not trees:
        raise InvalidArgumentError("frechet_mean needs at least one tree")
    ps = {t.p for t in trees}
    if len(ps) > 1:
        raise DimensionError(f"trees have mixed leaf counts: {sorted(ps)}")
    if cfg is None:
        cfg = MeanConfig()
    n = len(trees)
    max_iter = cfg.max_iterations if cfg.max_iterations is not None else 5000 * n
    rng = cfg.rng if cfg.rng is not None else RngStream(0)
    x = trees[0]
    small_steps = 0
    for k in range(1, max_iter + 1):
        if cfg.pass_order == "cyclic":
            y = trees[k % n]
        else:
            y = trees[rng.integers(n)]
        support = _compute_support(x, y)
        dist = support.internal_length() + _leaf_root_norm(x, y)
        step = dist / (k + 1)
        # stop only once a whole pass moves less than the tolerance;
        # a single tiny step may just mean the target equals the iterate
        if step < cfg.tolerance:
            small_steps += 1
            if small_steps >= n:
                break
        else:
            small_steps = 0
        if step > 0.0:
            x = _point_from_support(x, y, support, 1.0 / (k + 1))
    return x
