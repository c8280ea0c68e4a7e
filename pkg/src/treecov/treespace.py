"""Rooted leaf-labeled trees as compatible split sets with edge lengths.

Leaves are labeled ``0..p`` where label 0 is the leaf attached to the root
end of the tree.  A split is the set of labels in ``{1..p}`` on the far side
of an edge, stored as a bitmask with leaf ``i`` at bit ``i-1``; label 0 is
never a member, so complements implicitly contain it.  Singleton splits are
leaf edges, the full set ``{1..p}`` is the root edge, and everything of size
``2..p-1`` is an internal edge that carries topology.

The canonical ordering of splits, used everywhere iteration order matters,
is ascending unsigned bitmask value.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from . import _betasplit
from .errors import DimensionError, InvalidArgumentError, InvalidTreeError
from .rng import RngStream

MAX_LEAVES = 64


@dataclass(frozen=True)
class Split:
    """A nonempty subset of ``{1..p}``, the atomic unit of tree structure."""

    p: int
    mask: int

    def __post_init__(self):
        if not (1 <= self.p <= MAX_LEAVES):
            raise InvalidArgumentError(f"leaf count {self.p} outside 1..{MAX_LEAVES}")
        if self.mask <= 0 or self.mask >= (1 << self.p):
            raise InvalidArgumentError(
                f"mask {self.mask:#x} is not a nonempty subset of 1..{self.p}"
            )

    @classmethod
    def from_leaves(cls, p: int, leaves: Iterable[int]) -> "Split":
        mask = 0
        for leaf in leaves:
            if not 1 <= leaf <= p:
                raise InvalidArgumentError(f"leaf {leaf} outside 1..{p}")
            mask |= 1 << (leaf - 1)
        return cls(p, mask)

    @classmethod
    def root(cls, p: int) -> "Split":
        return cls(p, (1 << p) - 1)

    @classmethod
    def leaf(cls, p: int, i: int) -> "Split":
        return cls.from_leaves(p, (i,))

    def leaves(self) -> tuple[int, ...]:
        return tuple(i + 1 for i in range(self.p) if self.mask >> i & 1)

    @property
    def size(self) -> int:
        return self.mask.bit_count()

    @property
    def is_leaf_edge(self) -> bool:
        return self.size == 1

    @property
    def is_root_edge(self) -> bool:
        return self.mask == (1 << self.p) - 1

    @property
    def is_internal(self) -> bool:
        return 2 <= self.size <= self.p - 1

    def key(self) -> str:
        """Canonical string form, e.g. ``"1,2,5"``."""
        return ",".join(str(i) for i in self.leaves())

    def __repr__(self):
        return f"Split({{{self.key()}}}/{self.p})"


def split_compatible(a: Split, b: Split) -> bool:
    """Whether two splits can coexist in one rooted tree.

    True iff the splits are identical or exactly one of the intersections
    ``a&b``, ``a&~b``, ``~a&b`` is empty (complements taken inside
    ``{1..p}``; label 0 lies in both complements, so ``~a&~b`` is never
    empty).  Equivalently, the leaf sets are nested or disjoint.
    """
    if a.p != b.p:
        raise DimensionError(f"splits have different leaf counts: {a.p} != {b.p}")
    if a.mask == b.mask:
        return True
    both = a.mask & b.mask
    a_only = a.mask & ~b.mask
    b_only = b.mask & ~a.mask
    return (both == 0) + (a_only == 0) + (b_only == 0) == 1


def _masks_compatible(a: int, b: int) -> bool:
    """Compatibility on raw bitmasks (hot-path variant of split_compatible)."""
    return a == b or (a & b) == 0 or (a & ~b) == 0 or (b & ~a) == 0


def set_compatible(splits: Iterable[Split]) -> bool:
    """Whether every unordered pair in a collection is compatible."""
    items = list(splits)
    ps = {s.p for s in items}
    if len(ps) > 1:
        raise DimensionError(f"splits have mixed leaf counts: {sorted(ps)}")
    for a, b in itertools.combinations(items, 2):
        if not split_compatible(a, b):
            return False
    return True


@dataclass(frozen=True)
class Topology:
    """A compatible set of internal splits; the shape of a rooted tree."""

    p: int
    splits: frozenset[Split] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "splits", frozenset(self.splits))
        for s in self.splits:
            if s.p != self.p:
                raise DimensionError(f"split {s} does not match p={self.p}")
            if not s.is_internal:
                raise InvalidTreeError(f"{s} is not internal (size 2..{self.p - 1})")
        if len(self.splits) > max(self.p - 2, 0):
            raise InvalidTreeError(
                f"{len(self.splits)} internal splits exceeds p-2={self.p - 2}"
            )
        masks = self.sorted_masks()
        for i, a in enumerate(masks):
            for b in masks[i + 1:]:
                if not _masks_compatible(a, b):
                    raise InvalidTreeError(
                        f"incompatible splits {Split(self.p, a)} and {Split(self.p, b)}"
                    )

    @classmethod
    def from_leaf_sets(cls, p: int, leaf_sets: Iterable[Iterable[int]]) -> "Topology":
        return cls(p, frozenset(Split.from_leaves(p, ls) for ls in leaf_sets))

    @property
    def is_resolved(self) -> bool:
        return len(self.splits) == self.p - 2

    def sorted_splits(self) -> list[Split]:
        return sorted(self.splits, key=lambda s: s.mask)

    def sorted_masks(self) -> list[int]:
        return sorted(s.mask for s in self.splits)

    def __repr__(self):
        inner = ";".join(s.key() for s in self.sorted_splits())
        return f"Topology(p={self.p}, [{inner}])"


def laminar_children(p: int, masks: Iterable[int]) -> dict[int, list[int]]:
    """Containment tree of ``{full} | masks | {singletons}``.

    Returns, for every node mask, the list of its children masks (the
    maximal proper subsets among the other nodes), sorted ascending.  The
    children of each node partition it; this is the node structure of the
    rooted tree with the given internal splits.
    """
    full = (1 << p) - 1
    nodes = {full} | set(masks) | {1 << i for i in range(p)}
    by_size = sorted(nodes, key=lambda m: (m.bit_count(), m))
    children: dict[int, list[int]] = {m: [] for m in nodes}
    for i, m in enumerate(by_size):
        if m == full:
            continue
        # parent: smallest node strictly containing m
        for cand in by_size[i + 1:]:
            if cand != m and (m & ~cand) == 0:
                children[cand].append(m)
                break
    for m in children:
        children[m].sort()
    return children


def fragmentation_events(topology: Topology) -> list[tuple[int, list[int]]]:
    """The recursive block fragmentations encoded by a topology.

    Each event is ``(block_mask, children_masks)`` for a node with two or
    more children, starting from the full leaf set.  Singleton children are
    leaves; larger children are internal splits of the topology.
    """
    kids = laminar_children(topology.p, topology.sorted_masks())
    return [(m, ch) for m, ch in sorted(kids.items()) if len(ch) >= 2]


def resolution_candidates(topology: Topology, removed: Split) -> list[Split]:
    """Every internal split that can replace ``removed`` in a topology.

    With ``removed`` deleted, returns in canonical (ascending bitmask) order
    all internal splits compatible with the remaining set and not already in
    it.  The list always contains ``removed`` itself; callers exclude it
    when proposing a strict topology change.  For a resolved topology the
    list has exactly three entries.
    """
    if removed not in topology.splits:
        raise InvalidArgumentError(f"{removed} is not a split of {topology}")
    remainder = [m for m in topology.sorted_masks() if m != removed.mask]
    return _growth_candidates(topology.p, remainder)


def _growth_candidates(p: int, masks: list[int]) -> list[Split]:
    """All internal splits compatible with (and absent from) a split set.

    A compatible new split is exactly a union of 2..(c-1) children of some
    node with c >= 3 children in the containment tree; unions from distinct
    nodes are distinct, so no deduplication is needed.
    """
    kids = laminar_children(p, masks)
    out: list[int] = []
    for _node, ch in kids.items():
        c = len(ch)
        if c < 3:
            continue
        for r in range(2, c):
            for combo in itertools.combinations(ch, r):
                m = 0
                for x in combo:
                    m |= x
                out.append(m)
    out.sort()
    return [Split(p, m) for m in out]


@dataclass(frozen=True)
class Tree:
    """A topology plus strictly positive edge lengths.

    ``internal_lengths`` maps each internal split to its length (> 0),
    ``leaf_lengths[i-1]`` is the length of leaf edge ``i`` (> 0), and
    ``root_length`` is the length of the root edge (>= 0).
    """

    topology: Topology
    internal_lengths: Mapping[Split, float]
    leaf_lengths: tuple[float, ...]
    root_length: float

    def __post_init__(self):
        object.__setattr__(
            self,
            "internal_lengths",
            {s: float(v) for s, v in sorted(self.internal_lengths.items(),
                                            key=lambda kv: kv[0].mask)},
        )
        object.__setattr__(self, "leaf_lengths",
                           tuple(float(x) for x in self.leaf_lengths))
        object.__setattr__(self, "root_length", float(self.root_length))
        if set(self.internal_lengths) != set(self.topology.splits):
            raise InvalidTreeError("internal_lengths keys must equal topology splits")
        if any(v <= 0 for v in self.internal_lengths.values()):
            raise InvalidTreeError("internal edge lengths must be positive")
        if len(self.leaf_lengths) != self.p:
            raise InvalidTreeError(
                f"expected {self.p} leaf lengths, got {len(self.leaf_lengths)}"
            )
        if any(v <= 0 for v in self.leaf_lengths):
            raise InvalidTreeError("leaf edge lengths must be positive")
        if self.root_length < 0:
            raise InvalidTreeError("root edge length must be non-negative")

    @property
    def p(self) -> int:
        return self.topology.p

    @property
    def num_lengths(self) -> int:
        """Stored coordinates: root + p leaves + internal splits."""
        return 1 + self.p + len(self.internal_lengths)

    def coordinates(self) -> Iterator[tuple[Split, float]]:
        """All stored (split, length) pairs in canonical ascending-mask order."""
        items = [(Split.leaf(self.p, i + 1), self.leaf_lengths[i]) for i in range(self.p)]
        items += list(self.internal_lengths.items())
        items.append((Split.root(self.p), self.root_length))
        items.sort(key=lambda kv: kv[0].mask)
        return iter(items)

    def length_of(self, split: Split) -> float:
        if split.is_root_edge:
            return self.root_length
        if split.is_leaf_edge:
            return self.leaf_lengths[split.leaves()[0] - 1]
        return self.internal_lengths[split]

    def leaf_root_vector(self) -> tuple[float, ...]:
        """The ``(root, leaf_1, ..., leaf_p)`` coordinate vector."""
        return (self.root_length,) + self.leaf_lengths

    def root_to_leaf_depth(self, leaf: int) -> float:
        """Sum of edge lengths on the path from the root down to a leaf."""
        bit = 1 << (leaf - 1)
        total = self.root_length + self.leaf_lengths[leaf - 1]
        for s, v in self.internal_lengths.items():
            if s.mask & bit:
                total += v
        return total

    def __repr__(self):
        return (f"Tree(p={self.p}, splits={len(self.internal_lengths)}, "
                f"root={self.root_length:.4g})")


def star_tree(leaf_lengths: Iterable[float], root_length: float = 0.0) -> Tree:
    """The tree with no internal structure."""
    ll = tuple(float(x) for x in leaf_lengths)
    return Tree(Topology(len(ll)), {}, ll, root_length)


def _sample_resolved_splits(p: int, beta: float, rng: RngStream) -> frozenset[Split]:
    """Recursive binary fragmentation of ``{1..p}`` under the beta-splitting law."""
    splits: list[Split] = []

    def rec(labels: tuple[int, ...]):
        n = len(labels)
        if n < 2:
            return
        if n > 2:
            k = _betasplit.sample_first_block_size(n, beta, rng)
            rest = list(labels[1:])
            picked = set()
            for _ in range(k - 1):
                j = rng.integers(len(rest))
                picked.add(rest.pop(j))
            left = tuple(sorted({labels[0]} | picked))
            right = tuple(l for l in labels if l not in set(left))
        else:
            left, right = (labels[0],), (labels[1],)
        for block in (left, right):
            if 2 <= len(block) <= p - 1:
                splits.append(Split.from_leaves(p, block))
            rec(block)

    rec(tuple(range(1, p + 1)))
    return frozenset(splits)


def _coalescent_tree(p: int, length_mean: float, rng: RngStream) -> Tree:
    """Merge lineages pairwise at increasing heights; every leaf ends equidistant."""
    heights = {i: 0.0 for i in range(1, p + 1)}
    groups: list[tuple[int, ...]] = [(i,) for i in range(1, p + 1)]
    height = 0.0
    internal: dict[Split, float] = {}
    parent_height: dict[tuple[int, ...], float] = {}
    while len(groups) > 1:
        height += rng.exponential(length_mean)
        i = rng.integers(len(groups))
        a = groups.pop(i)
        j = rng.integers(len(groups))
        b = groups.pop(j)
        merged = tuple(sorted(a + b))
        for block in (a, b):
            parent_height[block] = height
        groups.append(merged)
        if 2 <= len(merged) <= p - 1:
            internal[Split.from_leaves(p, merged)] = height
    # convert node heights to edge lengths (parent height minus own height)
    top = height
    lengths = {}
    for s, h in internal.items():
        ph = parent_height.get(s.leaves(), top)
        lengths[s] = ph - h
    leaf_lengths = tuple(parent_height[(i,)] for i in range(1, p + 1))
    root_length = rng.exponential(length_mean)
    return Tree(Topology(p, frozenset(lengths)), lengths, leaf_lengths, root_length)


def random_tree(p: int, mode: str = "uniform-binary", length_mean: float = 1.0,
                rng: RngStream | None = None) -> Tree:
    """Draw a random resolved tree.

    ``uniform-binary`` draws the topology uniformly over all ``(2p-3)!!``
    resolved shapes and all lengths i.i.d. exponential with the given mean.
    ``equidistant`` draws a coalescent-style shape whose root-to-leaf path
    sums are all equal.
    """
    if p < 2:
        raise InvalidArgumentError(f"random_tree requires p >= 2, got {p}")
    if rng is None:
        rng = RngStream(0)
    if mode == "uniform-binary":
        splits = _sample_resolved_splits(p, -1.5, rng)
        internal = {s: rng.exponential(length_mean) for s in
                    sorted(splits, key=lambda s: s.mask)}
        leaf_lengths = tuple(rng.exponential(length_mean) for _ in range(p))
        root_length = rng.exponential(length_mean)
        return Tree(Topology(p, splits), internal, leaf_lengths, root_length)
    if mode == "equidistant":
        return _coalescent_tree(p, length_mean, rng)
    raise InvalidArgumentError(f"unknown mode {mode!r}")


def double_factorial(n: int) -> int:
    """``n!! = n * (n-2) * ...`` with the usual convention ``(-1)!! = 1``."""
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def enumerate_topologies(p: int) -> list[Topology]:
    """All resolved topologies on leaves ``1..p`` in canonical order.

    Exhaustive oracle for small p; there are ``(2p-3)!!`` of them.
    """
    if not 2 <= p <= 7:
        raise InvalidArgumentError(f"enumerate_topologies supports 2 <= p <= 7, got {p}")

    def rec(mask: int) -> list[frozenset[int]]:
        n = mask.bit_count()
        if n <= 1:
            return [frozenset()]
        bits = [1 << i for i in range(p) if mask >> i & 1]
        low, rest = bits[0], bits[1:]
        out = []
        for r in range(0, len(rest)):
            for combo in itertools.combinations(rest, r):
                left = low
                for b in combo:
                    left |= b
                right = mask ^ left
                if right == 0:
                    continue
                extra = frozenset(
                    m for m in (left, right) if 2 <= m.bit_count() <= p - 1
                )
                for sl in rec(left):
                    for sr in rec(right):
                        out.append(sl | sr | extra)
        return out

    full = (1 << p) - 1
    seen = sorted({tuple(sorted(s)) for s in rec(full)})
    return [
        Topology(p, frozenset(Split(p, m) for m in masks)) for masks in seen
    ]
