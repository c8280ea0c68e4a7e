"""Replicated simulation scenarios: truth, data, chain, scores.

A scenario fixes the dimension, the sample sizes (as multiples of the
dimension), the generating distribution (exact Gaussian or heavy-tailed t),
the truth mode, and the sampler; each replicate draws a truth (or shares a
fixed one), generates data, runs the chain, and scores split recovery,
interval coverage, and the distances of the point estimates to the truth.
Everything is a pure function of the master seed.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidArgumentError
from .geometry import MeanConfig, matrix_distance
from .model import DataSet, sample_gaussian, sample_t
from .posterior import (
    credible_intervals,
    coverage,
    map_sample,
    posterior_mean,
    split_frequencies,
)
from .rng import RngStream
from .samplers import HmcConfig, MhConfig, run_chain
from .treespace import Split, Tree, Topology, random_tree
from .ultrametric import as_matrix, tree_to_matrix

_STREAM_TRUTH = 0
_STREAM_DATA = 1
_STREAM_INIT = 2
_CELL_STRIDE = 1 << 20
_REP_STRIDE = 8


@dataclass(frozen=True)
class Scenario:
    """One simulation design; see module docstring."""

    p: int = 10
    multipliers: tuple[int, ...] = (3, 5, 10, 25, 50)
    distributions: tuple[str, ...] = ("normal",)
    truth_mode: str = "resolved"
    drop_count: int = 3
    drop_rule: str = "uniform"
    replicates: int = 50
    algo: str = "mh"
    mh: MhConfig = field(default_factory=MhConfig)
    hmc: HmcConfig = field(default_factory=HmcConfig)
    fixed_truth: bool = False
    length_mean: float = 1.0
    interval_level: float = 0.95
    mean_passes: int = 3
    master_seed: int = 0

    def __post_init__(self):
        if self.replicates < 1:
            raise InvalidArgumentError("replicates must be >= 1")
        if any(m < 1 for m in self.multipliers):
            raise InvalidArgumentError("sample-size multipliers must be positive")
        for d in self.distributions:
            if d not in ("normal", "t3", "t4"):
                raise InvalidArgumentError(f"unknown distribution {d!r}")
        if self.truth_mode not in ("resolved", "unresolved", "equidistant"):
            raise InvalidArgumentError(f"unknown truth mode {self.truth_mode!r}")
        if self.drop_rule not in ("uniform", "shortest"):
            raise InvalidArgumentError(f"unknown drop rule {self.drop_rule!r}")
        if self.algo not in ("mh", "hmc"):
            raise InvalidArgumentError(f"unknown algo {self.algo!r}")

    def iterations(self) -> int:
        return self.mh.iterations if self.algo == "mh" else \
            self.hmc.iterations * self.hmc.leapfrog_steps


def _drop_splits(tree: Tree, count: int, rule: str, rng: RngStream) -> Tree:
    """Remove internal splits from a resolved truth to create multifurcations."""
    splits = sorted(tree.internal_lengths, key=lambda s: s.mask)
    count = min(count, len(splits))
    if rule == "shortest":
        drop = set(sorted(splits, key=lambda s: tree.internal_lengths[s])[:count])
    else:
        pool = list(splits)
        drop = set()
        for _ in range(count):
            drop.add(pool.pop(rng.integers(len(pool))))
    keep = {s: v for s, v in tree.internal_lengths.items() if s not in drop}
    return Tree(Topology(tree.p, frozenset(keep)), keep,
                tree.leaf_lengths, tree.root_length)


def _draw_truth(s: Scenario, rng: RngStream) -> Tree:
    mode = "equidistant" if s.truth_mode == "equidistant" else "uniform-binary"
    tree = random_tree(s.p, mode, s.length_mean, rng)
    if s.truth_mode == "unresolved":
        tree = _drop_splits(tree, s.drop_count, s.drop_rule, rng)
    return tree


def _draw_data(s: Scenario, dist: str, truth_matrix, n: int,
               rng: RngStream) -> DataSet:
    if dist == "normal":
        return sample_gaussian(truth_matrix, n, rng)
    return sample_t(truth_matrix, int(dist[1]), n, rng)


def score_point_estimate(est, truth) -> tuple[float, float]:
    """Geodesic matrix distance and Frobenius norm of the difference."""
    e, t = as_matrix(est), as_matrix(truth)
    if e.shape != t.shape:
        raise InvalidArgumentError(f"shape mismatch: {e.shape} vs {t.shape}")
    return matrix_distance(e, t), float(np.linalg.norm(e - t))


@dataclass
class ReplicateResult:
    distribution: str
    n: int
    replicate: int
    recovery: dict[Split, float]
    coverage_rate: float
    mean_d: float
    mean_frob: float
    map_d: float
    map_frob: float
    mean_num_splits: float
    final_window_mean_loglik: float


@dataclass
class ScenarioReport:
    scenario: Scenario
    truths: dict[tuple[str, int], list[str]]
    results: list[ReplicateResult]
    elapsed_seconds: float

    def cell(self, dist: str, n: int) -> list[ReplicateResult]:
        return [r for r in self.results if r.distribution == dist and r.n == n]

    def aggregate(self) -> dict:
        """Medians and spreads per (distribution, sample size) cell."""
        out = {}
        for dist in self.scenario.distributions:
            for mult in self.scenario.multipliers:
                n = mult * self.scenario.p
                rows = self.cell(dist, n)
                if not rows:
                    continue
                rec_by_split: dict[str, list[float]] = {}
                for r in rows:
                    for s, f in r.recovery.items():
                        rec_by_split.setdefault(s.key(), []).append(f)
                out[f"{dist}/n={n}"] = {
                    "replicates": len(rows),
                    "median_coverage": float(np.median([r.coverage_rate for r in rows])),
                    "median_mean_d": float(np.median([r.mean_d for r in rows])),
                    "median_mean_frob": float(np.median([r.mean_frob for r in rows])),
                    "median_map_d": float(np.median([r.map_d for r in rows])),
                    "median_map_frob": float(np.median([r.map_frob for r in rows])),
                    "median_num_splits": float(np.median([r.mean_num_splits for r in rows])),
                    "split_recovery_median": {
                        k: float(np.median(v)) for k, v in sorted(rec_by_split.items())
                    },
                    "split_recovery_sd": {
                        k: float(np.std(v, ddof=1)) if len(v) > 1 else 0.0
                        for k, v in sorted(rec_by_split.items())
                    },
                }
        return out

    def to_json_dict(self) -> dict:
        return {
            "p": self.scenario.p,
            "algo": self.scenario.algo,
            "replicates": self.scenario.replicates,
            "master_seed": self.scenario.master_seed,
            "elapsed_seconds": self.elapsed_seconds,
            "cells": self.aggregate(),
        }

    def recovery_table(self) -> list[dict]:
        """Rows (sample size x distribution), columns true splits."""
        rows = []
        agg = self.aggregate()
        for key, cell in agg.items():
            dist, n_part = key.split("/")
            row = {"n": int(n_part.split("=")[1]), "distribution": dist}
            for k, v in cell["split_recovery_median"].items():
                row[k] = v
            rows.append(row)
        return rows


def estimate_cost_seconds(s: Scenario) -> float:
    """Crude wall-clock estimate used by the runtime guard."""
    per_update = 2.5e-5 * max(1.0, (s.p / 10.0) ** 2)
    cells = len(s.distributions) * len(s.multipliers)
    updates = s.iterations() * (2 * s.p + 2)
    return s.replicates * cells * updates * per_update


def _run_replicate(s: Scenario, dist: str, mult: int, rep: int,
                   cell_idx: int) -> tuple[ReplicateResult, str]:
    n = mult * s.p
    base = cell_idx * _CELL_STRIDE + (rep + 1) * _REP_STRIDE
    # a fixed truth is shared by every cell and replicate; otherwise each
    # replicate draws its own
    truth_offset = 0 if s.fixed_truth else base
    truth_stream = RngStream(s.master_seed, truth_offset + _STREAM_TRUTH)
    truth = _draw_truth(s, truth_stream)
    truth_matrix = tree_to_matrix(truth)
    data = _draw_data(s, dist, truth_matrix, n, RngStream(s.master_seed,
                                                          base + _STREAM_DATA))
    init = random_tree(s.p, "uniform-binary", s.length_mean,
                       RngStream(s.master_seed, base + _STREAM_INIT))
    if s.algo == "mh":
        cfg = replace(s.mh, seed=s.master_seed + base)
    else:
        cfg = replace(s.hmc, seed=s.master_seed + base)
    archive = run_chain(data, init, s.algo, cfg)

    freqs = split_frequencies(archive)
    recovery = {sp: freqs.get(sp, 0.0) for sp in truth.topology.sorted_splits()}
    lo, hi = credible_intervals(archive, s.interval_level)
    _, cov_rate = coverage(lo, hi, truth_matrix)
    mean_cfg = MeanConfig(max_iterations=max(1, s.mean_passes * len(archive)))
    mean_mat = posterior_mean(archive, mean_cfg)
    map_mat = tree_to_matrix(map_sample(archive))
    mean_d, mean_frob = score_point_estimate(mean_mat, truth_matrix)
    map_d, map_frob = score_point_estimate(map_mat, truth_matrix)
    num_splits = float(np.mean([len(r.splits) for r in archive.records]))
    window = [v for _, v in archive.trace[-max(1, len(archive.trace) // 10):]]

    from .newick import tree_to_newick

    return (
        ReplicateResult(
            distribution=dist, n=n, replicate=rep,
            recovery=recovery, coverage_rate=cov_rate,
            mean_d=mean_d, mean_frob=mean_frob,
            map_d=map_d, map_frob=map_frob,
            mean_num_splits=num_splits,
            final_window_mean_loglik=float(np.mean(window)),
        ),
        tree_to_newick(truth),
    )


def run_scenario(s: Scenario, threads: int = 1, force: bool = False,
                 cost_cap_seconds: float = 3600.0) -> ScenarioReport:
    """Execute every (distribution, sample size, replicate) cell and score it.

    Refuses scenarios whose estimated cost exceeds the cap unless forced.
    Replicates run on independent streams, so thread-level fan-out does not
    change any result.
    """
    est = estimate_cost_seconds(s)
    if est > cost_cap_seconds and not force:
        raise InvalidArgumentError(
            f"estimated cost {est:.0f}s exceeds cap {cost_cap_seconds:.0f}s; "
            "pass force=True to run anyway"
        )
    jobs = []
    cell_idx = 0
    for dist in s.distributions:
        for mult in s.multipliers:
            for rep in range(s.replicates):
                jobs.append((dist, mult, rep, cell_idx))
            cell_idx += 1

    t0 = time.time()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outputs = list(pool.map(lambda j: _run_replicate(s, *j), jobs))
    else:
        outputs = [_run_replicate(s, *j) for j in jobs]
    elapsed = time.time() - t0

    results = [o[0] for o in outputs]
    truths: dict[tuple[str, int], list[str]] = {}
    for (dist, mult, _rep, _ci), (_res, nwk) in zip(jobs, outputs):
        truths.setdefault((dist, mult * s.p), []).append(nwk)
    return ScenarioReport(scenario=s, truths=truths, results=results,
                          elapsed_seconds=elapsed)


def write_report(report: ScenarioReport, json_path, csv_path=None):
    """Emit the aggregate JSON and, optionally, the recovery CSV table."""
    with open(json_path, "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=2)
    if csv_path is not None:
        import csv as _csv

        rows = report.recovery_table()
        cols: list[str] = ["n", "distribution"]
        for row in rows:
            for k in row:
                if k not in cols:
                    cols.append(k)
        with open(csv_path, "w", newline="") as fh:
            writer = _csv.DictWriter(fh, fieldnames=cols)
            writer.writeheader()
            writer.writerows(rows)
