"""Topology and edge-length priors built from recursive fragmentations.

A topology prior assigns each tree shape the product, over its internal
nodes, of the probability that the node's leaf block fragments into its
children blocks.  Two exchangeable families are provided:

* binary beta-splitting, where a block of size ``n`` splits into an
  unordered pair with sizes ``(k, n-k)`` with weight
  ``Gamma(k+b+1) Gamma(n-k+b+1) / Gamma(n+2b+2)``; ``b = -1.5`` makes all
  resolved shapes equally likely and ``b = 0`` is the Yule model;
* a Poisson-Dirichlet partition law for multifurcating shapes, using the
  exchangeable partition probability of PD(alpha, theta) conditioned on
  producing at least two blocks at every fragmentation event.

Edge lengths are i.i.d. exponential with a common mean across all stored
coordinates (root, leaves, internal).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from . import _betasplit
from .errors import InvalidArgumentError
from .rng import RngStream
from .treespace import (
    Split,
    Topology,
    Tree,
    fragmentation_events,
)

BETA_UNIFORM = -1.5


@dataclass(frozen=True)
class PriorSpec:
    """Hyperparameters of the tree prior.

    ``kind`` selects the topology family; ``beta`` is the beta-splitting
    parameter in ``(-2, inf)``, ``theta``/``alpha_pd`` the Poisson-Dirichlet
    pair with ``0 <= alpha_pd < 1`` and ``theta > -2 * alpha_pd``, and
    ``edge_mean`` the common exponential mean of all edge lengths.
    """

    kind: str = "beta-splitting"
    beta: float = BETA_UNIFORM
    theta: float = 1.0
    alpha_pd: float = 0.0
    edge_mean: float = 1.0

    def __post_init__(self):
        if self.kind not in ("beta-splitting", "poisson-dirichlet"):
            raise InvalidArgumentError(f"unknown prior kind {self.kind!r}")
        if not math.isfinite(self.beta) or self.beta <= -2.0:
            raise InvalidArgumentError(
                f"beta must be finite and > -2, got {self.beta}"
            )
        if not 0.0 <= self.alpha_pd < 1.0:
            raise InvalidArgumentError(f"alpha_pd must be in [0, 1), got {self.alpha_pd}")
        if self.theta <= -2.0 * self.alpha_pd:
            raise InvalidArgumentError(
                f"theta must exceed -2*alpha_pd, got theta={self.theta}"
            )
        if self.edge_mean <= 0:
            raise InvalidArgumentError("edge_mean must be positive")

    def topology_log_prior(self, topology: Topology) -> float:
        if self.kind == "beta-splitting":
            return beta_split_log_prior(topology, self.beta)
        return pd_log_prior(topology, self.theta, self.alpha_pd)


def beta_split_log_prior(topology: Topology, beta: float) -> float:
    """Log probability of a resolved topology under beta-splitting.

    The weight of each binary fragmentation is normalized by summing over
    all ``2**(n-1) - 1`` unordered pairs of the block.  With ``beta = -1.5``
    every resolved topology on p leaves has probability ``1/(2p-3)!!``.
    """
    if not math.isfinite(beta) or beta <= -2.0:
        raise InvalidArgumentError(f"beta must be finite and > -2, got {beta}")
    if not topology.is_resolved:
        raise InvalidArgumentError(
            "beta-splitting is defined on resolved (binary) topologies only"
        )
    total = 0.0
    for _block, children in fragmentation_events(topology):
        sizes = [c.bit_count() for c in children]
        n = sum(sizes)
        total += _betasplit.log_split_prob(sizes[0], n, beta)
    return total


def _check_pd_params(theta: float, alpha_pd: float):
    if not 0.0 <= alpha_pd < 1.0:
        raise InvalidArgumentError(f"alpha_pd must be in [0, 1), got {alpha_pd}")
    if theta <= -2.0 * alpha_pd:
        raise InvalidArgumentError(f"theta must exceed -2*alpha_pd, got {theta}")
    if theta + alpha_pd <= 0.0:
        raise InvalidArgumentError(
            "theta + alpha_pd must be positive for partitions into >= 2 blocks"
        )


def _log_rising(x: float, m: int) -> float:
    """log of x (x+1) ... (x+m-1), the rising factorial, for x > 0."""
    if m == 0:
        return 0.0
    return math.lgamma(x + m) - math.lgamma(x)


@lru_cache(maxsize=65536)
def _pd_event_log_prob(sizes: tuple[int, ...], theta: float, alpha_pd: float) -> float:
    """Log conditional probability of one fragmentation into given block sizes.

    Exchangeable partition probability of PD(alpha, theta) for a specific
    set partition with these block sizes, divided by the probability of
    producing at least two blocks.
    """
    k = len(sizes)
    n = sum(sizes)
    log_p = -_log_rising(theta + 1.0, n - 1)
    for i in range(1, k):
        log_p += math.log(theta + i * alpha_pd)
    for nj in sizes:
        log_p += _log_rising(1.0 - alpha_pd, nj - 1)
    log_single = _log_rising(1.0 - alpha_pd, n - 1) - _log_rising(theta + 1.0, n - 1)
    return log_p - math.log1p(-math.exp(log_single))


def pd_log_prior(topology: Topology, theta: float = 1.0,
                 alpha_pd: float = 0.0) -> float:
    """Log probability of a (possibly multifurcating) topology under PD."""
    _check_pd_params(theta, alpha_pd)
    total = 0.0
    for _block, children in fragmentation_events(topology):
        sizes = tuple(sorted(c.bit_count() for c in children))
        total += _pd_event_log_prob(sizes, theta, alpha_pd)
    return total


def edge_length_log_prior(t: Tree, a: float = 1.0) -> float:
    """Sum of exponential(mean ``a``) log densities over all stored lengths."""
    if a <= 0:
        raise InvalidArgumentError("edge mean must be positive")
    log_a = math.log(a)
    total = -(t.root_length / a + log_a)
    for x in t.leaf_lengths:
        total -= x / a + log_a
    for x in t.internal_lengths.values():
        total -= x / a + log_a
    return total


def tree_log_prior(t: Tree, spec: PriorSpec) -> float:
    """Joint log prior: topology term plus edge-length term."""
    return spec.topology_log_prior(t.topology) + edge_length_log_prior(t, spec.edge_mean)


def _sample_pd_partition(n: int, theta: float, alpha_pd: float,
                         rng: RngStream) -> list[list[int]]:
    """A set partition of range(n) from PD(alpha, theta), conditioned on >= 2 blocks.

    Sequential seating: item m joins an existing block of size ``nj`` with
    weight ``nj - alpha`` and opens a new block with weight
    ``theta + (#blocks) * alpha``.  Single-block outcomes are rejected.
    """
    while True:
        blocks: list[list[int]] = [[0]]
        for m in range(1, n):
            weights = [len(b) - alpha_pd for b in blocks]
            weights.append(theta + len(blocks) * alpha_pd)
            total = math.fsum(weights)
            u = rng.uniform(0.0, total)
            acc = 0.0
            chosen = len(weights) - 1
            for i, w in enumerate(weights):
                acc += w
                if u <= acc:
                    chosen = i
                    break
            if chosen == len(blocks):
                blocks.append([m])
            else:
                blocks[chosen].append(m)
        if len(blocks) >= 2:
            return blocks


def sample_topology_prior(p: int, spec: PriorSpec, rng: RngStream) -> Topology:
    """Draw a topology by recursive fragmentation from the root block."""
    if p < 2:
        raise InvalidArgumentError(f"need p >= 2, got {p}")
    splits: list[Split] = []

    def rec_binary(labels: tuple[int, ...]):
        n = len(labels)
        if n < 2:
            return
        if n == 2:
            return
        k = _betasplit.sample_first_block_size(n, spec.beta, rng)
        rest = list(labels[1:])
        picked = set()
        for _ in range(k - 1):
            j = rng.integers(len(rest))
            picked.add(rest.pop(j))
        left = tuple(sorted({labels[0]} | picked))
        right = tuple(l for l in labels if l not in set(left))
        for block in (left, right):
            if 2 <= len(block) <= p - 1:
                splits.append(Split.from_leaves(p, block))
            rec_binary(block)

    def rec_pd(labels: tuple[int, ...]):
        n = len(labels)
        if n < 2:
            return
        parts = _sample_pd_partition(n, spec.theta, spec.alpha_pd, rng)
        for part in parts:
            block = tuple(sorted(labels[i] for i in part))
            if 2 <= len(block) <= p - 1:
                splits.append(Split.from_leaves(p, block))
            rec_pd(block)

    labels = tuple(range(1, p + 1))
    if spec.kind == "beta-splitting":
        rec_binary(labels)
    else:
        _check_pd_params(spec.theta, spec.alpha_pd)
        rec_pd(labels)
    return Topology(p, frozenset(splits))
