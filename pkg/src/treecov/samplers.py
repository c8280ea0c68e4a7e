"""Posterior samplers over tree-structured covariance matrices.

Two kernels target the same posterior (Gaussian likelihood times the
fragmentation/edge-length prior), both moving along geodesics of the
stratified geometry:

* a Metropolis-Hastings sweep that first proposes a topology change by
  shrinking one internal edge to zero and regrowing one of the compatible
  alternatives (copying the length, a symmetric move), then updates every
  stored length with a truncated-normal random walk;
* a Hamiltonian kernel whose leapfrog drift crosses orthant boundaries:
  when an internal coordinate reaches zero its momentum flips sign and is
  reassigned to a uniformly chosen compatible split (the current one
  excluded), while leaf and root coordinates simply reflect.  Gradients are
  taken through a smooth surrogate of the lengths near zero; acceptance
  always uses the true Hamiltonian, so the stationary law is exact.

The multifurcating MH variant adds dimension moves: the shrink branch's
"stay at the boundary" option drops the shrunk edge, and a complementary
grow branch regrows a compatible split with a prior-distributed length, so
unresolved topologies carry exactly their posterior mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .archive import ArchiveRecord, PosteriorArchive, config_digest
from .errors import InvalidArgumentError, InvalidTreeError
from .model import DataSet, SufficientStats, suff_stats
from .priors import PriorSpec, beta_split_log_prior, pd_log_prior
from .rng import RngStream
from .treespace import Split, Topology, Tree, _growth_candidates
from .ultrametric import tree_to_matrix

LOG_2PI = math.log(2.0 * math.pi)


def _norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@dataclass(frozen=True)
class MhConfig:
    """Metropolis-Hastings run settings."""

    iterations: int = 10000
    burn_in: int = 9000
    sigma_L: float = 0.1
    mode: str = "binary"
    prior: PriorSpec = field(default_factory=PriorSpec)
    seed: int = 0
    thin: int = 1

    def __post_init__(self):
        if not 0 <= self.burn_in < self.iterations:
            raise InvalidArgumentError("need 0 <= burn_in < iterations")
        if self.sigma_L <= 0:
            raise InvalidArgumentError("sigma_L must be positive")
        if self.mode not in ("binary", "multifurcating"):
            raise InvalidArgumentError(f"unknown mode {self.mode!r}")
        if self.thin < 1:
            raise InvalidArgumentError("thin must be >= 1")

    def to_dict(self) -> dict:
        return {
            "algo": "mh", "iterations": self.iterations, "burn_in": self.burn_in,
            "sigma_L": self.sigma_L, "mode": self.mode, "seed": self.seed,
            "thin": self.thin, "prior": vars(self.prior),
        }


@dataclass(frozen=True)
class HmcConfig:
    """Hamiltonian run settings; ``lam`` is the edge-length prior rate."""

    iterations: int = 300
    burn_in: int = 225
    step_size: float = 0.0015
    leapfrog_steps: int = 200
    delta: float = 0.003
    mass: float = 1.0
    lam: float = 1.0
    seed: int = 0
    thin: int = 1

    def __post_init__(self):
        if not 0 <= self.burn_in < self.iterations:
            raise InvalidArgumentError("need 0 <= burn_in < iterations")
        if self.step_size <= 0:
            raise InvalidArgumentError("step_size must be positive")
        if self.leapfrog_steps < 1:
            raise InvalidArgumentError("leapfrog_steps must be >= 1")
        if self.delta < 0:
            raise InvalidArgumentError("delta must be non-negative")
        if self.mass <= 0:
            raise InvalidArgumentError("mass entries must be positive")
        if self.lam < 0:
            raise InvalidArgumentError(
                "lam must be non-negative (zero means a flat length prior)"
            )
        if self.thin < 1:
            raise InvalidArgumentError("thin must be >= 1")

    def to_dict(self) -> dict:
        return {
            "algo": "hmc", "iterations": self.iterations, "burn_in": self.burn_in,
            "step_size": self.step_size, "leapfrog_steps": self.leapfrog_steps,
            "delta": self.delta, "mass": self.mass, "lam": self.lam,
            "seed": self.seed, "thin": self.thin,
        }


# ---------------------------------------------------------------------------
# shared low-level state
# ---------------------------------------------------------------------------

def _mask_indices(p: int, mask: int) -> np.ndarray:
    return np.array([i for i in range(p) if mask >> i & 1])


def _loglik(sigma: np.ndarray | None, stats: SufficientStats) -> float:
    if stats.n == 0:
        return 0.0
    cf = cho_factor(sigma, lower=True, check_finite=False)
    logdet = 2.0 * float(np.sum(np.log(np.diag(cf[0]))))
    quad = float(np.trace(cho_solve(cf, stats.S, check_finite=False)))
    return -0.5 * (stats.n * stats.p * LOG_2PI + stats.n * logdet + quad)


def _topology_log_prior(p: int, masks, prior: PriorSpec) -> float:
    topo = Topology(p, frozenset(Split(p, m) for m in masks))
    if prior.kind == "beta-splitting":
        return beta_split_log_prior(topo, prior.beta)
    return pd_log_prior(topo, prior.theta, prior.alpha_pd)


class ChainState:
    """Mutable working state of one MH chain.

    Caches the covariance matrix, log likelihood and the two log-prior
    pieces; every update keeps the caches consistent, and
    :meth:`check_consistency` recomputes them from scratch for tests.
    """

    def __init__(self, tree: Tree, stats: SufficientStats, prior: PriorSpec):
        if tree.p != stats.p and stats.n > 0:
            raise InvalidArgumentError(
                f"tree has p={tree.p} but data are {stats.p}-variate"
            )
        self.p = tree.p
        self.internal: dict[int, float] = {
            s.mask: v for s, v in tree.internal_lengths.items()
        }
        self.leaf = np.asarray(tree.leaf_lengths, dtype=float).copy()
        self.root = float(tree.root_length)
        self.sigma = tree_to_matrix(tree).values.copy() if stats.n else None
        self.log_lik = _loglik(self.sigma, stats)
        self.log_prior_topo = _topology_log_prior(self.p, self.internal, prior)
        self.log_prior_len = self._length_log_prior(prior.edge_mean)
        self.iteration = 0
        self.accepted_topology = 0
        self.proposed_topology = 0
        self.accepted_lengths = 0
        self.proposed_lengths = 0

    def _length_log_prior(self, a: float) -> float:
        log_a = math.log(a)
        total = -(self.root / a + log_a)
        total -= float(np.sum(self.leaf)) / a + self.p * log_a
        for v in self.internal.values():
            total -= v / a + log_a
        return total

    @property
    def log_prior(self) -> float:
        return self.log_prior_topo + self.log_prior_len

    def tree(self) -> Tree:
        splits = {Split(self.p, m): v for m, v in self.internal.items()}
        return Tree(Topology(self.p, frozenset(splits)), splits,
                    tuple(self.leaf), self.root)

    def check_consistency(self, stats: SufficientStats, prior: PriorSpec,
                          tol: float = 1e-9):
        t = self.tree()
        ll = _loglik(tree_to_matrix(t).values if stats.n else None, stats)
        if abs(ll - self.log_lik) > tol:
            raise AssertionError(f"stale log_lik: {self.log_lik} vs {ll}")
        lp = _topology_log_prior(self.p, self.internal, prior) \
            + self._length_log_prior(prior.edge_mean)
        if abs(lp - self.log_prior) > tol:
            raise AssertionError(f"stale log_prior: {self.log_prior} vs {lp}")


# ---------------------------------------------------------------------------
# Metropolis-Hastings updates
# ---------------------------------------------------------------------------

def _log_shrink_prob(m: int, p: int) -> float:
    """Log probability of entering the shrink branch at a state with m splits."""
    if m == 0:
        return -math.inf
    if m == p - 2:
        return 0.0
    return -math.log(2.0)


def _log_grow_prob(m: int, p: int) -> float:
    """Log probability of entering the grow branch at a state with m splits."""
    if m == p - 2:
        return -math.inf
    if m == 0:
        return 0.0
    return -math.log(2.0)


def mh_topology_update(state: ChainState, stats: SufficientStats,
                       cfg: MhConfig, rng: RngStream) -> ChainState:
    """One topology proposal.

    Binary mode shrinks a uniformly chosen internal edge to zero and regrows
    one of the two strict alternatives with the same length; the kernel is
    symmetric, so acceptance compares topology prior times likelihood only.

    Multifurcating mode wraps dimension moves around that replacement.  Its
    shrink branch offers every compatible replacement split plus "stay at
    the boundary" (dropping the edge and its length) with equal probability;
    the complementary grow branch regrows a uniformly chosen compatible
    split with a fresh prior-distributed length, so unresolved shapes are
    both reachable and leavable.  Replacements remain symmetric; the
    drop/grow acceptances carry the exact proposal-count correction, while
    the proposal density of the created or destroyed length cancels against
    the edge-length prior.
    """
    masks = sorted(state.internal)
    m = len(masks)
    p = state.p
    a = cfg.prior.edge_mean

    if cfg.mode == "binary":
        if not masks:
            return state
        mask_a = masks[rng.integers(m)]
        d = state.internal[mask_a]
        remainder = [x for x in masks if x != mask_a]
        cands = [s.mask for s in _growth_candidates(p, remainder)
                 if s.mask != mask_a]
        mask_b = cands[rng.integers(len(cands))]
        state.proposed_topology += 1
        new_topo_lp = _topology_log_prior(p, remainder + [mask_b], cfg.prior)
        new_sigma = None
        new_ll = state.log_lik
        if stats.n:
            new_sigma = state.sigma.copy()
            idx = _mask_indices(p, mask_a)
            new_sigma[np.ix_(idx, idx)] -= d
            idx_b = _mask_indices(p, mask_b)
            new_sigma[np.ix_(idx_b, idx_b)] += d
            new_ll = _loglik(new_sigma, stats)
        log_alpha = (new_topo_lp - state.log_prior_topo) \
            + (new_ll - state.log_lik)
        if math.log(rng.uniform()) < log_alpha:
            state.accepted_topology += 1
            del state.internal[mask_a]
            state.internal[mask_b] = d
            state.sigma = new_sigma
            state.log_lik = new_ll
            state.log_prior_topo = new_topo_lp
        return state

    # multifurcating mode: choose between the shrink and grow branches
    grow = m == 0 or (m < p - 2 and rng.uniform() < 0.5)
    state.proposed_topology += 1

    if grow:
        grow_cands = [s.mask for s in _growth_candidates(p, masks)]
        mask_b = grow_cands[rng.integers(len(grow_cands))]
        d_new = rng.exponential(a)
        new_topo_lp = _topology_log_prior(p, masks + [mask_b], cfg.prior)
        new_sigma = None
        new_ll = state.log_lik
        if stats.n:
            new_sigma = state.sigma.copy()
            idx_b = _mask_indices(p, mask_b)
            new_sigma[np.ix_(idx_b, idx_b)] += d_new
            new_ll = _loglik(new_sigma, stats)
        # reverse move: the shrink branch picks this split and stays
        log_alpha = (new_topo_lp - state.log_prior_topo) \
            + (new_ll - state.log_lik) \
            + _log_shrink_prob(m + 1, p) - math.log(m + 1) \
            - _log_grow_prob(m, p)
        if math.log(rng.uniform()) < log_alpha:
            state.accepted_topology += 1
            state.internal[mask_b] = d_new
            state.sigma = new_sigma
            state.log_lik = new_ll
            state.log_prior_topo = new_topo_lp
            state.log_prior_len -= d_new / a + math.log(a)
        return state

    mask_a = masks[rng.integers(m)]
    d = state.internal[mask_a]
    remainder = [x for x in masks if x != mask_a]
    cands = [s.mask for s in _growth_candidates(p, remainder)
             if s.mask != mask_a]
    j = rng.integers(len(cands) + 1)
    stay = j == len(cands)
    mask_b = None if stay else cands[j]

    new_masks = remainder if stay else remainder + [mask_b]
    new_topo_lp = _topology_log_prior(p, new_masks, cfg.prior)
    new_sigma = None
    new_ll = state.log_lik
    if stats.n:
        new_sigma = state.sigma.copy()
        idx = _mask_indices(p, mask_a)
        new_sigma[np.ix_(idx, idx)] -= d
        if not stay:
            idx_b = _mask_indices(p, mask_b)
            new_sigma[np.ix_(idx_b, idx_b)] += d
        new_ll = _loglik(new_sigma, stats)

    log_alpha = (new_topo_lp - state.log_prior_topo) + (new_ll - state.log_lik)
    if stay:
        # reverse move: the grow branch at the boundary regrows this split;
        # the Exp density of the dropped length cancels against the prior
        log_alpha += _log_grow_prob(m - 1, p) + math.log(m) \
            - _log_shrink_prob(m, p)
    if math.log(rng.uniform()) < log_alpha:
        state.accepted_topology += 1
        del state.internal[mask_a]
        if not stay:
            state.internal[mask_b] = d
        else:
            state.log_prior_len += d / a + math.log(a)
        state.sigma = new_sigma
        state.log_lik = new_ll
        state.log_prior_topo = new_topo_lp
    return state


def _sample_truncnorm(mean: float, sd: float, rng: RngStream) -> float:
    while True:
        x = rng.normal(mean, sd)
        if x > 0.0:
            return x


def mh_length_log_ratio(cur: float, prop: float, delta_loglik: float,
                        edge_mean: float, sd: float) -> float:
    """Log acceptance ratio of one truncated-normal length move.

    Combines the likelihood change, the exponential prior change, and the
    normalization asymmetry of the positive-truncated normal proposal
    (the Gaussian kernels themselves cancel).  Antisymmetric under swapping
    ``cur`` and ``prop`` with the likelihood change negated.
    """
    return (delta_loglik - (prop - cur) / edge_mean
            + math.log(_norm_cdf(cur / sd)) - math.log(_norm_cdf(prop / sd)))


def mh_length_update(state: ChainState, stats: SufficientStats,
                     cfg: MhConfig, rng: RngStream) -> ChainState:
    """Truncated-normal random-walk sweep over every stored coordinate.

    Coordinates are visited in ascending bitmask order (leaves, internal
    splits and the root edge interleaved canonically).  The acceptance
    ratio carries the exponential prior, the likelihood, and the
    truncated-normal normalization asymmetry.
    """
    p = state.p
    full = (1 << p) - 1
    coords: list[int] = [1 << i for i in range(p)] + sorted(state.internal) + [full]
    coords.sort()
    a = cfg.prior.edge_mean
    sd = cfg.sigma_L
    for mask in coords:
        if mask == full:
            cur = state.root
        elif mask.bit_count() == 1:
            cur = float(state.leaf[mask.bit_length() - 1])
        else:
            cur = state.internal[mask]
        prop = _sample_truncnorm(cur, sd, rng)
        state.proposed_lengths += 1

        new_sigma = None
        new_ll = state.log_lik
        if stats.n:
            new_sigma = state.sigma.copy()
            delta = prop - cur
            if mask == full:
                new_sigma += delta
            elif mask.bit_count() == 1:
                i = mask.bit_length() - 1
                new_sigma[i, i] += delta
            else:
                idx = _mask_indices(p, mask)
                new_sigma[np.ix_(idx, idx)] += delta
            new_ll = _loglik(new_sigma, stats)

        log_alpha = mh_length_log_ratio(cur, prop, new_ll - state.log_lik, a, sd)
        if math.log(rng.uniform()) < log_alpha:
            state.accepted_lengths += 1
            if mask == full:
                state.root = prop
            elif mask.bit_count() == 1:
                state.leaf[mask.bit_length() - 1] = prop
            else:
                state.internal[mask] = prop
            state.sigma = new_sigma
            state.log_lik = new_ll
            state.log_prior_len -= (prop - cur) / a
    return state


# ---------------------------------------------------------------------------
# Hamiltonian kernel
# ---------------------------------------------------------------------------

class HmcState:
    """Mutable working state of one Hamiltonian chain.

    Coordinate slots hold ``(mask, length, momentum)`` triples; slots keep
    their mass when a boundary crossing reassigns an internal coordinate to
    a different split.
    """

    def __init__(self, tree: Tree, cfg: HmcConfig):
        self.p = tree.p
        items = list(tree.coordinates())
        self.masks = [s.mask for s, _ in items]
        self.d = np.array([v for _, v in items], dtype=float)
        self.a = np.zeros(len(items))
        self.mass = np.full(len(items), float(cfg.mass))
        self.potential = math.nan
        self.kinetic = math.nan
        self.accepted = 0
        self.proposed = 0

    def copy_coords(self):
        return list(self.masks), self.d.copy(), self.a.copy()

    def restore_coords(self, saved):
        self.masks, self.d, self.a = list(saved[0]), saved[1].copy(), saved[2].copy()

    def momentum(self) -> dict[Split, float]:
        return {Split(self.p, m): float(v) for m, v in zip(self.masks, self.a)}

    def tree(self) -> Tree:
        p = self.p
        full = (1 << p) - 1
        leaf = [0.0] * p
        internal: dict[Split, float] = {}
        root = 0.0
        for m, v in zip(self.masks, self.d):
            if m == full:
                root = float(v)
            elif m.bit_count() == 1:
                leaf[m.bit_length() - 1] = float(v)
            elif v > 0.0:
                internal[Split(p, m)] = float(v)
        return Tree(Topology(p, frozenset(internal)), internal, tuple(leaf), root)


def _surrogate(d: np.ndarray, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Smooth positive stand-in for lengths near zero, with its derivative."""
    if delta == 0.0:
        return d.copy(), np.ones_like(d)
    g = d.copy()
    dg = np.ones_like(d)
    low = d < delta
    g[low] = (d[low] ** 2 + delta ** 2) / (2.0 * delta)
    dg[low] = d[low] / delta
    return g, dg


def _sigma_from(masks, vals, p: int) -> np.ndarray:
    sigma = np.zeros((p, p))
    for m, v in zip(masks, vals):
        if m == (1 << p) - 1:
            sigma += v
        elif m.bit_count() == 1:
            i = m.bit_length() - 1
            sigma[i, i] += v
        else:
            idx = _mask_indices(p, m)
            sigma[np.ix_(idx, idx)] += v
    return sigma


def _grad_potential(state: HmcState, stats: SufficientStats,
                    cfg: HmcConfig) -> np.ndarray | None:
    """Gradient of the surrogate potential; ``None`` if factorization fails."""
    g, dg = _surrogate(state.d, cfg.delta)
    grad = np.full(len(state.masks), cfg.lam)
    if stats.n:
        sigma = _sigma_from(state.masks, g, state.p)
        try:
            cf = cho_factor(sigma, lower=True, check_finite=False)
        except LinAlgError:
            return None
        W = cho_solve(cf, np.eye(state.p), check_finite=False)
        G = W @ stats.S @ W
        for j, m in enumerate(state.masks):
            idx = _mask_indices(state.p, m)
            w_quad = float(W[np.ix_(idx, idx)].sum())
            g_quad = float(G[np.ix_(idx, idx)].sum())
            grad[j] -= -0.5 * stats.n * w_quad + 0.5 * g_quad
    return grad * dg


def _true_potential(state: HmcState, stats: SufficientStats,
                    cfg: HmcConfig) -> float:
    """Negative log posterior at the actual (unsmoothed) coordinates."""
    q = len(state.masks)
    prior = 0.0
    if cfg.lam > 0.0:
        prior = cfg.lam * float(np.sum(state.d)) - q * math.log(cfg.lam)
    if stats.n == 0:
        return prior
    sigma = _sigma_from(state.masks, state.d, state.p)
    try:
        cf = cho_factor(sigma, lower=True, check_finite=False)
    except LinAlgError:
        return math.inf
    logdet = 2.0 * float(np.sum(np.log(np.diag(cf[0]))))
    quad = float(np.trace(cho_solve(cf, stats.S, check_finite=False)))
    ll = -0.5 * (stats.n * stats.p * LOG_2PI + stats.n * logdet + quad)
    return -ll + prior


def _kinetic(state: HmcState) -> float:
    return 0.5 * float(np.sum(state.a ** 2 / state.mass))


def _drift(state: HmcState, eps: float, rng: RngStream, chooser=None):
    """Advance positions by ``eps`` along momenta, crossing boundaries.

    Each coordinate headed below zero is processed at its own fractured
    step, earliest first (ties broken by ascending mask): the momentum
    flips sign, and an internal coordinate is reassigned to a compatible
    split chosen uniformly with the current split excluded.  ``chooser``
    overrides the uniform choice (used by deterministic replays).
    """
    remaining = eps
    while remaining > 0.0:
        vel = state.a / state.mass
        t_hit = None
        j_hit = None
        for j, v in enumerate(vel):
            if v < 0.0:
                t = state.d[j] / -v
                if t <= remaining:
                    key = (t, state.masks[j])
                    if t_hit is None or key < (t_hit, state.masks[j_hit]):
                        t_hit, j_hit = t, j
        if j_hit is None:
            state.d += remaining * vel
            return
        state.d += t_hit * vel
        state.d[j_hit] = 0.0
        remaining -= t_hit
        state.a[j_hit] = -state.a[j_hit]
        mask = state.masks[j_hit]
        if 2 <= mask.bit_count() <= state.p - 1:
            others = [m for m in state.masks
                      if m != mask and 2 <= m.bit_count() <= state.p - 1]
            cands = [s.mask for s in _growth_candidates(state.p, others)
                     if s.mask != mask]
            if cands:
                if chooser is not None:
                    new_mask = chooser([Split(state.p, c) for c in cands]).mask
                else:
                    new_mask = cands[rng.integers(len(cands))]
                state.masks[j_hit] = new_mask


def hmc_leapfrog(state: HmcState, stats: SufficientStats, cfg: HmcConfig,
                 rng: RngStream, chooser=None) -> HmcState:
    """One leapfrog step: half kick, boundary-crossing drift, half kick.

    Returns the state unchanged (apart from a momentum flip bookkeeping)
    when a gradient evaluation fails; the enclosing step then rejects.
    """
    grad = _grad_potential(state, stats, cfg)
    if grad is None:
        state.potential = math.inf
        return state
    state.a -= 0.5 * cfg.step_size * grad
    _drift(state, cfg.step_size, rng, chooser)
    grad = _grad_potential(state, stats, cfg)
    if grad is None:
        state.potential = math.inf
        return state
    state.a -= 0.5 * cfg.step_size * grad
    return state


def hmc_step(state: HmcState, stats: SufficientStats, cfg: HmcConfig,
             rng: RngStream, chooser=None) -> HmcState:
    """One full Hamiltonian proposal with fresh momenta.

    Runs ``leapfrog_steps`` surrogate-driven leapfrog steps and accepts with
    the true-Hamiltonian ratio; a non-finite Hamiltonian rejects outright.
    """
    state.a = rng.generator.normal(size=len(state.masks)) * np.sqrt(state.mass)
    u_cur = _true_potential(state, stats, cfg)
    h_cur = u_cur + _kinetic(state)
    saved = state.copy_coords()

    state.proposed += 1
    failed = False
    for _ in range(cfg.leapfrog_steps):
        hmc_leapfrog(state, stats, cfg, rng, chooser)
        if state.potential == math.inf:
            failed = True
            break
    if failed:
        u_prop, h_prop = math.inf, math.inf
    else:
        u_prop = _true_potential(state, stats, cfg)
        h_prop = u_prop + _kinetic(state)

    accept = False
    if math.isfinite(h_prop):
        accept = math.log(rng.uniform()) < h_cur - h_prop
    if accept:
        state.accepted += 1
        state.potential = u_prop
    else:
        state.restore_coords(saved)
        state.potential = u_cur
    state.kinetic = _kinetic(state)
    return state


# ---------------------------------------------------------------------------
# chain driver
# ---------------------------------------------------------------------------

def run_chain(data: DataSet | None, init: Tree, algo: str,
              cfg: MhConfig | HmcConfig) -> PosteriorArchive:
    """Run one chain and collect every retained state plus the full trace.

    ``data=None`` (or an empty-statistics dataset) samples the prior.  The
    output is byte-identical across reruns with the same inputs and seed.
    """
    if data is None:
        stats = SufficientStats.empty(init.p)
    elif isinstance(data, SufficientStats):
        stats = data
    else:
        if data.p != init.p:
            raise InvalidArgumentError(
                f"data have p={data.p} but init tree has p={init.p}"
            )
        stats = suff_stats(data)

    rng = RngStream(cfg.seed, stream_id=0)
    archive = PosteriorArchive(
        p=init.p,
        provenance={"algo": algo, "config": config_digest(cfg.to_dict()),
                    "seed": cfg.seed},
    )

    if algo == "mh":
        if not isinstance(cfg, MhConfig):
            raise InvalidArgumentError("algo 'mh' requires an MhConfig")
        if cfg.mode == "binary" and not init.topology.is_resolved:
            raise InvalidTreeError("binary mode requires a resolved initial tree")
        state = ChainState(init, stats, cfg.prior)
        for it in range(1, cfg.iterations + 1):
            state.iteration = it
            mh_topology_update(state, stats, cfg, rng)
            mh_length_update(state, stats, cfg, rng)
            archive.trace.append((it, state.log_lik))
            if it > cfg.burn_in and (it - cfg.burn_in - 1) % cfg.thin == 0:
                t = state.tree()
                archive.records.append(ArchiveRecord(
                    iteration=it,
                    log_prior=state.log_prior,
                    log_lik=state.log_lik,
                    splits=tuple(sorted(t.internal_lengths, key=lambda s: s.mask)),
                    lengths=dict(t.internal_lengths),
                    leaf_lengths=t.leaf_lengths,
                    root_length=t.root_length,
                ))
        archive.provenance["accept_topology"] = state.accepted_topology
        archive.provenance["accept_lengths"] = state.accepted_lengths
        archive.provenance["proposed_topology"] = state.proposed_topology
        archive.provenance["proposed_lengths"] = state.proposed_lengths
        return archive

    if algo == "hmc":
        if not isinstance(cfg, HmcConfig):
            raise InvalidArgumentError("algo 'hmc' requires an HmcConfig")
        if not init.topology.is_resolved:
            raise InvalidTreeError("the Hamiltonian kernel requires a resolved tree")
        state = HmcState(init, cfg)
        topo_lp = beta_split_log_prior(init.topology, -1.5)
        for it in range(1, cfg.iterations + 1):
            hmc_step(state, stats, cfg, rng)
            t = state.tree()
            ll = _loglik(tree_to_matrix(t).values if stats.n else None, stats)
            archive.trace.append((it, ll))
            if it > cfg.burn_in and (it - cfg.burn_in - 1) % cfg.thin == 0:
                q = len(state.masks)
                log_prior = topo_lp
                if cfg.lam > 0.0:
                    log_prior += q * math.log(cfg.lam) \
                        - cfg.lam * float(np.sum(state.d))
                archive.records.append(ArchiveRecord(
                    iteration=it,
                    log_prior=log_prior,
                    log_lik=ll,
                    splits=tuple(sorted(t.internal_lengths, key=lambda s: s.mask)),
                    lengths=dict(t.internal_lengths),
                    leaf_lengths=t.leaf_lengths,
                    root_length=t.root_length,
                ))
        archive.provenance["accept_hmc"] = state.accepted
        archive.provenance["proposed_hmc"] = state.proposed
        return archive

    raise InvalidArgumentError(f"unknown algo {algo!r}")
