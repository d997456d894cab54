"""Labeled training data: persistence, fold assignment, text provenance.

One JSONL record per candidate.  Labels come from verifier outcomes
(pos/neg for verified/rejected); solver timeouts and unknowns are kept
as `unknown` and never become training pairs.  Folds are assigned by a
stable hash of the problem id, so the split is reproducible without a
split file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyId, SchemaError
from .hashing import fnv1a64
from .sygus import SOURCES
from .verifier import Outcome

SCHEMA_VERSION = 1
N_FOLDS = 5
LABELS = ("pos", "neg", "unknown")


def assign_fold(problem_id: str) -> int:
    """Stable fold in 0..4; deterministic across runs and platforms."""
    if not problem_id:
        raise EmptyId("problem id must be nonempty")
    return fnv1a64(problem_id.encode("utf-8")) % N_FOLDS


def label_from_outcome(outcome: Outcome) -> str:
    if outcome is Outcome.VERIFIED:
        return "pos"
    if outcome is Outcome.REJECTED:
        return "neg"
    return "unknown"


@dataclass(frozen=True)
class LabeledCandidate:
    cand_id: str
    source: str
    generation_index: int
    label: str
    text: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise SchemaError(f"unknown label {self.label!r}")
        if self.source not in SOURCES:
            raise SchemaError(f"unknown source {self.source!r}")


@dataclass(frozen=True)
class ProblemRecord:
    problem_id: str
    candidates: tuple[LabeledCandidate, ...]


@dataclass(frozen=True)
class LabeledDataset:
    records: tuple[ProblemRecord, ...]
    fold_of: dict[str, int]
    problem_texts: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        seen = set()
        for record in self.records:
            if record.problem_id not in self.fold_of:
                raise SchemaError(f"problem {record.problem_id!r} has no fold")
            for cand in record.candidates:
                key = (record.problem_id, cand.source, cand.generation_index)
                if key in seen:
                    raise SchemaError(f"duplicate candidate {key}")
                seen.add(key)

    @classmethod
    def build(cls, records, problem_texts=None) -> "LabeledDataset":
        records = tuple(records)
        folds = {r.problem_id: assign_fold(r.problem_id) for r in records}
        return cls(records=records, fold_of=folds, problem_texts=dict(problem_texts or {}))


def save(ds: LabeledDataset, path):
    """Write one JSON line per candidate, in dataset order (byte-stable)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for record in ds.records:
            for cand in record.candidates:
                fh.write(
                    json.dumps(
                        {
                            "schema_version": SCHEMA_VERSION,
                            "problem": record.problem_id,
                            "cand": cand.cand_id,
                            "source": cand.source,
                            "gen_index": cand.generation_index,
                            "label": cand.label,
                            "text": cand.text,
                        },
                        sort_keys=True,
                    )
                )
                fh.write("\n")


def load(path, problem_texts=None) -> LabeledDataset:
    """Load and validate a JSONL dataset; rejects duplicates with line numbers."""
    grouped: dict[str, list[LabeledCandidate]] = {}
    seen: set[tuple] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc}", line=lineno) from None
            try:
                problem = doc["problem"]
                cand = LabeledCandidate(
                    cand_id=doc["cand"],
                    source=doc["source"],
                    generation_index=int(doc["gen_index"]),
                    label=doc["label"],
                    text=doc["text"],
                )
            except KeyError as exc:
                raise SchemaError(f"missing field {exc.args[0]!r}", line=lineno) from None
            except SchemaError as exc:
                raise SchemaError(str(exc), line=lineno) from None
            key = (problem, cand.source, cand.generation_index)
            if key in seen:
                raise SchemaError(f"duplicate candidate {key}", line=lineno)
            seen.add(key)
            grouped.setdefault(problem, []).append(cand)
    records = [ProblemRecord(pid, tuple(cands)) for pid, cands in grouped.items()]
    return LabeledDataset.build(records, problem_texts=problem_texts)
