"""Size distribution of binary block fragmentations (beta-splitting family).

A block of ``n`` labels fragments into an unordered pair of nonempty
complementary sub-blocks.  The weight of a pair with sizes ``(k, n-k)`` is

    w(k) = Gamma(k + beta + 1) * Gamma(n - k + beta + 1) / Gamma(n + 2*beta + 2)

up to the normalization over all ``2**(n-1) - 1`` unordered pairs.  Shared by
the topology prior density and the random-topology samplers.
"""

from __future__ import annotations

import math
from functools import lru_cache


def log_pair_weight(k: int, n: int, beta: float) -> float:
    """Unnormalized log weight of a sub-block pair with sizes ``(k, n-k)``."""
    return (
        math.lgamma(k + beta + 1.0)
        + math.lgamma(n - k + beta + 1.0)
        - math.lgamma(n + 2.0 * beta + 2.0)
    )


@lru_cache(maxsize=4096)
def log_norm(n: int, beta: float) -> float:
    """Log of the total weight over all unordered binary pairs of a block.

    Counting pairs by the sub-block that contains the smallest label: there
    are C(n-1, k-1) pairs whose min-containing block has size k, and k runs
    over 1..n-1, which covers each unordered pair exactly once.
    """
    terms = [
        math.lgamma(n) - math.lgamma(k) - math.lgamma(n - k + 1)
        + log_pair_weight(k, n, beta)
        for k in range(1, n)
    ]
    m = max(terms)
    return m + math.log(math.fsum(math.exp(t - m) for t in terms))


def log_split_prob(k: int, n: int, beta: float) -> float:
    """Normalized log probability of one specific unordered pair with sizes (k, n-k)."""
    return log_pair_weight(k, n, beta) - log_norm(n, beta)


@lru_cache(maxsize=4096)
def _size_probabilities(n: int, beta: float) -> tuple:
    """P(size of the block containing the smallest label = k), k = 1..n-1."""
    ln = log_norm(n, beta)
    probs = [
        math.exp(
            math.lgamma(n) - math.lgamma(k) - math.lgamma(n - k + 1)
            + log_pair_weight(k, n, beta) - ln
        )
        for k in range(1, n)
    ]
    total = math.fsum(probs)
    return tuple(p / total for p in probs)


def sample_first_block_size(n: int, beta: float, rng) -> int:
    """Draw the size of the sub-block containing the smallest label."""
    probs = _size_probabilities(n, beta)
    u = rng.uniform()
    acc = 0.0
    for k, p in enumerate(probs, start=1):
        acc += p
        if u <= acc:
            return k
    return n - 1
