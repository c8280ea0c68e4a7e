"""Topology priors, edge-length priors, and the Gaussian likelihood.

Run:  python3 demos/03_priors_and_likelihood.py
"""

import math
from collections import Counter

from treecov import (
    PriorSpec,
    RngStream,
    beta_split_log_prior,
    enumerate_topologies,
    gaussian_loglik,
    loglik_gradient,
    pd_log_prior,
    random_tree,
    sample_gaussian,
    sample_topology_prior,
    suff_stats,
    tree_to_matrix,
)

rng = RngStream(3)

# With the balanced-splitting parameter at -1.5, all resolved shapes are
# equally likely: each of the 15 four-leaf topologies has mass 1/15.
probs = [math.exp(beta_split_log_prior(t, -1.5)) for t in enumerate_topologies(4)]
print("four-leaf shape probabilities:", sorted(set(round(x, 6) for x in probs)))

# The multifurcating prior spreads mass over unresolved shapes too.
spec = PriorSpec(kind="poisson-dirichlet", theta=1.0, alpha_pd=0.0)
counts = Counter()
for _ in range(20000):
    t = sample_topology_prior(4, spec, rng)
    counts[len(t.splits)] += 1
print("internal-split-count frequencies under the multifurcating prior:",
      dict(sorted(counts.items())))

# The exact densities agree with the sampler; for instance the fully
# unresolved (star) shape:
from treecov import Topology  # noqa: E402

star_mass = math.exp(pd_log_prior(Topology(4), 1.0, 0.0))
print("star-shape mass:", round(star_mass, 4),
      "empirical:", round(counts[0] / 20000, 4))

# Gaussian likelihood and its gradient in every edge-length coordinate.
truth = random_tree(5, "uniform-binary", 1.0, rng)
data = sample_gaussian(tree_to_matrix(truth), 100, rng)
stats = suff_stats(data)
print("\nlog likelihood at the truth:",
      round(gaussian_loglik(stats, tree_to_matrix(truth)), 2))
grad = loglik_gradient(stats, truth)
print("gradient (top three coordinates by magnitude):")
for s, g in sorted(grad.items(), key=lambda kv: -abs(kv[1]))[:3]:
    print(f"  d loglik / d |e_{{{s.key()}}}| = {g:8.3f}")
