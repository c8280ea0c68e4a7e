import pytest

from treecov.rng import RngStream
from treecov.treespace import Split, Topology, Tree


@pytest.fixture
def rng():
    return RngStream(20240817)


def make_tree(p, internal, leaf_lengths=None, root_length=0.5):
    """Build a tree from {leafset tuple: length} in one line."""
    lengths = {Split.from_leaves(p, ls): v for ls, v in internal.items()}
    leaves = tuple(leaf_lengths if leaf_lengths is not None else [1.0] * p)
    return Tree(Topology(p, frozenset(lengths)), lengths, leaves, root_length)


@pytest.fixture
def tree_factory():
    return make_tree
