"""Walk through the matrix <-> tree correspondence on small examples.

Run:  python3 demos/01_matrix_tree_bijection.py
"""

import numpy as np

from treecov import (
    RngStream,
    decompose_step,
    matrix_to_tree,
    random_tree,
    star_tree,
    tree_to_matrix,
    tree_to_newick,
    validate_ultrametric,
)

np.set_printoptions(precision=3, suppress=True)

# A star tree: one root edge, three leaf edges, no internal structure.
star = star_tree((1.0, 1.0, 1.0), root_length=1.0)
m = tree_to_matrix(star)
print("star tree:", tree_to_newick(star))
print("its covariance matrix:\n", m.values)
print("validation:", validate_ultrametric(m).summary())

# Every strictly ultrametric matrix encodes exactly one tree.  Peeling off
# the smallest entry exposes the block structure of the root's subtrees.
level = decompose_step(m)
print("\npeeled the smallest entry:", level.alpha)
print("subtree leaf blocks:", level.blocks)

# Round trip on a richer example: buckets of nested structure.
rng = RngStream(7)
tree = random_tree(6, "uniform-binary", 1.0, rng)
sigma = tree_to_matrix(tree)
back = matrix_to_tree(sigma)
print("\nrandom 6-leaf tree:", tree_to_newick(tree))
print("matrix entry (1,2) = root-to-ancestor path:", sigma.values[0, 1])
len_err = max(abs(back.length_of(s) - v) for s, v in tree.coordinates())
print("round trip: same splits =", back.topology == tree.topology,
      "| length error =", len_err)

# The matrix entries are monotone in every edge length: shrinking an edge
# can only pull entries down (never up).
short = dict(tree.internal_lengths)
first = next(iter(short))
short[first] = short[first] / 2
from treecov import Topology, Tree, vech_leq  # noqa: E402

shrunk = Tree(Topology(6, frozenset(short)), short, tree.leaf_lengths,
              tree.root_length)
print("shrinking one edge dominates entrywise:",
      vech_leq(tree_to_matrix(shrunk), sigma))
