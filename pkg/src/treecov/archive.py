"""Persisted MCMC output: one record per retained iteration.

On disk an archive is JSON-lines, one object per record with keys
``iter``, ``log_prior``, ``log_lik``, ``splits`` (lists of sorted leaf
labels), ``lengths`` (internal lengths keyed by canonical split string),
``leaf_lengths`` and ``root_length``.  The likelihood trace (including
burn-in) is a two-column CSV ``iter,log_lik``.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field

from .errors import InvalidArgumentError
from .treespace import Split, Topology, Tree


@dataclass(frozen=True)
class ArchiveRecord:
    iteration: int
    log_prior: float
    log_lik: float
    splits: tuple[Split, ...]
    lengths: dict[Split, float]
    leaf_lengths: tuple[float, ...]
    root_length: float

    @property
    def log_posterior(self) -> float:
        return self.log_prior + self.log_lik

    def tree(self) -> Tree:
        p = len(self.leaf_lengths)
        return Tree(Topology(p, frozenset(self.splits)), dict(self.lengths),
                    self.leaf_lengths, self.root_length)

    def to_json_dict(self) -> dict:
        return {
            "iter": self.iteration,
            "log_prior": self.log_prior,
            "log_lik": self.log_lik,
            "splits": [list(s.leaves()) for s in self.splits],
            "lengths": {s.key(): v for s, v in self.lengths.items()},
            "leaf_lengths": list(self.leaf_lengths),
            "root_length": self.root_length,
        }

    @classmethod
    def from_json_dict(cls, d: dict, p: int) -> "ArchiveRecord":
        splits = tuple(
            sorted((Split.from_leaves(p, ls) for ls in d["splits"]),
                   key=lambda s: s.mask)
        )
        lengths = {
            Split.from_leaves(p, (int(x) for x in k.split(","))): float(v)
            for k, v in d["lengths"].items()
        }
        return cls(
            iteration=int(d["iter"]),
            log_prior=float(d["log_prior"]),
            log_lik=float(d["log_lik"]),
            splits=splits,
            lengths=lengths,
            leaf_lengths=tuple(float(x) for x in d["leaf_lengths"]),
            root_length=float(d["root_length"]),
        )


@dataclass
class PosteriorArchive:
    """Ordered retained samples plus the full likelihood trace."""

    p: int
    records: list[ArchiveRecord] = field(default_factory=list)
    trace: list[tuple[int, float]] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    def trees(self) -> list[Tree]:
        return [r.tree() for r in self.records]

    def validate(self):
        last = None
        for r in self.records:
            if last is not None and r.iteration <= last:
                raise InvalidArgumentError(
                    f"iteration indices not strictly increasing at {r.iteration}"
                )
            last = r.iteration
            r.tree()

    def save_jsonl(self, path):
        with open(path, "w") as fh:
            for r in self.records:
                fh.write(json.dumps(r.to_json_dict()) + "\n")

    @classmethod
    def load_jsonl(cls, path, provenance: dict | None = None) -> "PosteriorArchive":
        records = []
        p = None
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                d = json.loads(line)
                if p is None:
                    p = len(d["leaf_lengths"])
                records.append(ArchiveRecord.from_json_dict(d, p))
        if p is None:
            raise InvalidArgumentError(f"archive {path} contains no records")
        out = cls(p=p, records=records, provenance=provenance or {})
        out.validate()
        return out

    def save_trace_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iter", "log_lik"])
            writer.writerows(self.trace)

    @staticmethod
    def load_trace_csv(path) -> list[tuple[int, float]]:
        out = []
        with open(path) as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["iter", "log_lik"]:
                raise InvalidArgumentError(f"unexpected trace header {header}")
            for row in reader:
                out.append((int(row[0]), float(row[1])))
        return out


def config_digest(obj) -> str:
    """Stable short hash of a config-like object for provenance records."""
    text = json.dumps(obj, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]
