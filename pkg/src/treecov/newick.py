"""Canonical Newick text form for rooted trees on leaves ``0..p``.

Grammar: leaf labels are the integers ``0..p``; label 0 (the root-side
leaf) appears as a direct child of the top-level node and its branch length
is the root edge length.  Children are ordered by their smallest descendant
leaf, lengths print with 17 significant digits so reparsing is exact, and
zero-length internal edges are never emitted (multifurcation is
structural).  Example star tree on three leaves::

    (0:1,1:1,2:1,3:1);
"""

from __future__ import annotations

from .errors import InvalidArgumentError, InvalidTreeError
from .treespace import Split, Topology, Tree, laminar_children


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def tree_to_newick(t: Tree) -> str:
    """Serialize a tree in the canonical grammar above."""
    p = t.p
    children = laminar_children(p, [s.mask for s in t.topology.splits])
    full = (1 << p) - 1

    def render(mask: int) -> str:
        if mask.bit_count() == 1:
            leaf = mask.bit_length()
            return f"{leaf}:{_fmt(t.leaf_lengths[leaf - 1])}"
        parts = [render(c) for c in sorted(children[mask])]
        length = t.internal_lengths[Split(p, mask)]
        return f"({','.join(parts)}):{_fmt(length)}"

    tops = [f"0:{_fmt(t.root_length)}"] + [render(c) for c in sorted(children[full])]
    return f"({','.join(tops)});"


class _Parser:
    def __init__(self, text: str):
        self.text = text.strip()
        self.pos = 0

    def error(self, msg: str):
        raise InvalidArgumentError(f"newick parse error at {self.pos}: {msg}")

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}, found {self.peek()!r}")
        self.pos += 1

    def parse_label(self) -> int:
        start = self.pos
        while self.peek().isdigit():
            self.pos += 1
        if start == self.pos:
            self.error("expected an integer leaf label")
        return int(self.text[start:self.pos])

    def parse_length(self) -> float:
        self.expect(":")
        start = self.pos
        while self.peek() and self.peek() in "+-0123456789.eE":
            self.pos += 1
        if start == self.pos:
            self.error("expected a branch length")
        try:
            return float(self.text[start:self.pos])
        except ValueError:
            self.error(f"bad length {self.text[start:self.pos]!r}")

    def parse_node(self) -> tuple[frozenset[int], float, list]:
        """Returns (leaf set, branch length, list of internal (leafset, length))."""
        if self.peek() == "(":
            self.pos += 1
            leaves: set[int] = set()
            inner: list = []
            while True:
                ls, length, sub = self.parse_node()
                leaves |= ls
                inner.extend(sub)
                inner.append((frozenset(ls), length))
                if self.peek() == ",":
                    self.pos += 1
                    continue
                break
            self.expect(")")
            length = self.parse_length()
            return frozenset(leaves), length, inner
        label = self.parse_label()
        length = self.parse_length()
        return frozenset([label]), length, []


def newick_to_tree(text: str) -> Tree:
    """Parse the canonical grammar back into a tree.

    Validates that labels are exactly ``0..p`` with 0 a direct child of the
    top-level node, that all non-root lengths are positive, and that no
    zero-length internal edge is present.
    """
    parser = _Parser(text)
    if parser.peek() != "(":
        parser.error("tree must start with '('")
    parser.pos += 1
    entries: list[tuple[frozenset[int], float, list]] = []
    while True:
        entries.append(parser.parse_node())
        if parser.peek() == ",":
            parser.pos += 1
            continue
        break
    parser.expect(")")
    if parser.peek() == ";":
        parser.pos += 1
    if parser.pos != len(parser.text):
        parser.error("trailing characters after ';'")

    all_leaves: set[int] = set()
    for ls, _, _ in entries:
        if all_leaves & ls:
            raise InvalidTreeError("duplicate leaf labels")
        all_leaves |= ls
    if 0 not in all_leaves:
        raise InvalidTreeError("leaf 0 must be present")
    p = max(all_leaves)
    if all_leaves != set(range(p + 1)):
        raise InvalidTreeError(f"labels must be exactly 0..{p}")

    root_length = None
    leaf_lengths = [0.0] * p
    internal: dict[Split, float] = {}

    def record(leafset: frozenset[int], length: float):
        nonlocal root_length
        if leafset == frozenset([0]):
            if length < 0:
                raise InvalidTreeError("root edge length must be non-negative")
            root_length = length
            return
        if 0 in leafset:
            raise InvalidTreeError("leaf 0 must be a direct child of the top node")
        if length <= 0:
            raise InvalidTreeError(
                f"zero or negative length on edge {sorted(leafset)}"
            )
        if len(leafset) == 1:
            leaf_lengths[next(iter(leafset)) - 1] = length
        elif len(leafset) <= p - 1:
            internal[Split.from_leaves(p, leafset)] = length
        else:
            raise InvalidTreeError("an internal edge cannot contain all leaves")

    for ls, length, sub in entries:
        for inner_ls, inner_len in sub:
            record(inner_ls, inner_len)
        record(ls, length)

    if root_length is None:
        raise InvalidTreeError("leaf 0 must be a direct child of the top node")
    return Tree(Topology(p, frozenset(internal)), internal,
                tuple(leaf_lengths), root_length)
