"""Separable synthetic ranking data shared by ranker tests and acceptance.

Geometry: a unit signal vector in a 6-dim subspace, a near-zero pad, and
one nuisance coordinate.  Problems carry a large nuisance coefficient, so
raw cosine is dominated by nuisance products and ranks poorly; the
trained transform learns to suppress that coordinate, after which the
positive (whose signal is near-parallel to the problem's) wins.
"""

from __future__ import annotations

import numpy as np

from invrank.dataset import LabeledCandidate, LabeledDataset, ProblemRecord
from invrank.embeddings import EmbeddingVector
from invrank.ranker import Hyperparams
from invrank.sygus import InvariantCandidate
from invrank.terms import BoolConst

DIM = 16
SIGNAL_DIMS = 6
N_PROBLEMS = 50
N_NEGATIVES = 10
DATA_SEED = 7

HARNESS_HP = Hyperparams(
    epochs=50, learning_rate=5e-3, warmup_steps=100, batch_size=8, seed=0
)


class SyntheticProblem:
    """Duck-typed stand-in for sygus.Problem: rank() only needs id and raw_text."""

    def __init__(self, pid: str, text: str):
        self.id = pid
        self.raw_text = text


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def build_synthetic(seed: int = DATA_SEED):
    rng = np.random.default_rng(seed)
    pad = DIM - SIGNAL_DIMS - 1
    texts: dict[str, str] = {}
    vectors: dict[str, EmbeddingVector] = {}
    records = []

    def emb(signal: np.ndarray, coef: float) -> EmbeddingVector:
        full = np.concatenate([signal, 0.01 * rng.normal(size=pad), [coef]])
        return EmbeddingVector(_unit(full), DIM, "synthetic")

    for i in range(N_PROBLEMS):
        pid = f"syn{i:03d}"
        latent = _unit(rng.normal(size=SIGNAL_DIMS))
        texts[pid] = f"problem::{pid}"
        vectors[texts[pid]] = emb(latent, rng.choice([-1.0, 1.0]) * rng.uniform(1.8, 2.4))
        cands = [
            LabeledCandidate(f"{pid}-pos", "other", 0, "pos", f"pos::{pid}")
        ]
        vectors[f"pos::{pid}"] = emb(
            _unit(latent + 0.02 * rng.normal(size=SIGNAL_DIMS)), rng.normal()
        )
        for j in range(N_NEGATIVES):
            ortho = rng.normal(size=SIGNAL_DIMS)
            ortho -= (ortho @ latent) * latent
            vectors[f"neg::{pid}::{j}"] = emb(_unit(ortho), rng.normal())
            cands.append(
                LabeledCandidate(f"{pid}-neg{j}", "other", j + 1, "neg", f"neg::{pid}::{j}")
            )
        records.append(ProblemRecord(pid, tuple(cands)))

    data = LabeledDataset.build(records, problem_texts=texts)
    return data, vectors


def candidates_for(record: ProblemRecord) -> list[InvariantCandidate]:
    return [
        InvariantCandidate(
            id=c.cand_id,
            problem_id=record.problem_id,
            body=BoolConst(True),
            source=c.source,
            generation_index=c.generation_index,
            raw_text=c.text,
        )
        for c in record.candidates
    ]


def positive_rank(ranked) -> int:
    return next(
        pos for pos, e in enumerate(ranked.entries, start=1) if e.candidate_id.endswith("-pos")
    )
