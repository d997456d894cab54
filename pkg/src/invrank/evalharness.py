"""Ranking metrics, the random-permutation baseline, and report emission.

Mean/median ranks are computed over solved problems only (a rank exists
only when some candidate verifies).  The permutation baseline uses a
counter-based generator (splitmix64) with Fisher-Yates shuffles so that
estimates and report bytes are reproducible everywhere.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MissingVerdict
from .ranker import RankedList, make_ranked_list
from .verifier import Outcome, SolverConfig, VerifyResult, verify

_MASK = 0xFFFFFFFFFFFFFFFF

STRATEGIES = ("llm_order", "expected", "tfidf", "raw_embedding", "irank")
TIME_BUCKETS = ("embed_s", "rank_s", "verify_s")


class SplitMix64:
    """Deterministic 64-bit counter-based generator."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        # rejection sampling keeps the draw exactly uniform
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % bound


def fisher_yates(n: int, rng: SplitMix64) -> list[int]:
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        order[i], order[j] = order[j], order[i]
    return order


def _is_verified(value) -> bool:
    if isinstance(value, VerifyResult):
        return value.verified
    if isinstance(value, Outcome):
        return value is Outcome.VERIFIED
    return bool(value)


def first_verified_rank(rl: RankedList, verdicts: dict) -> int | None:
    """1-based position of the first verified entry; None when absent."""
    for pos, entry in enumerate(rl.entries, start=1):
        if entry.candidate_id not in verdicts:
            raise MissingVerdict(f"no verdict for candidate {entry.candidate_id!r}")
        if _is_verified(verdicts[entry.candidate_id]):
            return pos
    return None


def v_at_k(ranks: list[int | None], k: int) -> float:
    """Percentage of problems whose first verified rank is within the top k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not ranks:
        return 0.0
    hits = sum(1 for r in ranks if r is not None and r <= k)
    return 100.0 * hits / len(ranks)


@dataclass(frozen=True)
class SequentialResult:
    rank: int | None
    calls: int
    outcomes: dict[str, VerifyResult] = field(default_factory=dict)


def sequential_solver_calls(
    rl: RankedList, problem, cands, cfg: SolverConfig
) -> SequentialResult:
    """Verify candidates in list order until one passes; count solver calls."""
    by_id = {c.id: c for c in cands}
    outcomes: dict[str, VerifyResult] = {}
    calls = 0
    for pos, entry in enumerate(rl.entries, start=1):
        result = verify(problem, by_id[entry.candidate_id], cfg)
        outcomes[entry.candidate_id] = result
        calls += result.calls
        if result.verified:
            return SequentialResult(rank=pos, calls=calls, outcomes=outcomes)
    return SequentialResult(rank=None, calls=calls, outcomes=outcomes)


def sequential_from_outcomes(rl: RankedList, outcomes: dict[str, VerifyResult]) -> SequentialResult:
    """Replay sequential checking against already-computed verdicts."""
    calls = 0
    for pos, entry in enumerate(rl.entries, start=1):
        if entry.candidate_id not in outcomes:
            raise MissingVerdict(f"no outcome for candidate {entry.candidate_id!r}")
        out = outcomes[entry.candidate_id]
        calls += out.calls
        if out.verified:
            return SequentialResult(rank=pos, calls=calls, outcomes=outcomes)
    return SequentialResult(rank=None, calls=calls, outcomes=outcomes)


@dataclass(frozen=True)
class ExpectedEstimate:
    mean_rank: float | None
    mean_calls: float
    permutations: int
    v_at_k: dict[int, float] = field(default_factory=dict)
    mean_elapsed: float = 0.0


def expected_metrics(
    cands,
    outcomes: dict[str, VerifyResult],
    permutations: int = 100,
    seed: int = 0,
    exact: bool = False,
    ks=(1, 5, 10),
) -> ExpectedEstimate:
    """Average first-verified rank and solver calls over random permutations.

    `exact=True` enumerates every permutation instead of sampling (n <= 8).
    """
    ids = [c.id for c in cands]
    for cid in ids:
        if cid not in outcomes:
            raise MissingVerdict(f"no outcome for candidate {cid!r}")
    if exact:
        if len(ids) > 8:
            raise ValueError("exact enumeration is limited to 8 candidates")
        orders = list(itertools.permutations(range(len(ids))))
    else:
        if permutations < 1:
            raise ValueError("permutations must be >= 1")
        rng = SplitMix64(seed)
        orders = [fisher_yates(len(ids), rng) for _ in range(permutations)]

    ranks: list[int] = []
    calls_total = 0.0
    elapsed_total = 0.0
    for order in orders:
        calls = 0
        elapsed = 0.0
        rank = None
        for pos, idx in enumerate(order, start=1):
            out = outcomes[ids[idx]]
            calls += out.calls
            elapsed += out.elapsed
            if out.verified:
                rank = pos
                break
        if rank is not None:
            ranks.append(rank)
        calls_total += calls
        elapsed_total += elapsed
    mean_rank = sum(ranks) / len(ranks) if ranks else None
    vk = {
        k: 100.0 * sum(1 for r in ranks if r <= k) / len(orders) for k in ks
    }
    return ExpectedEstimate(
        mean_rank=mean_rank,
        mean_calls=calls_total / len(orders),
        permutations=len(orders),
        v_at_k=vk,
        mean_elapsed=elapsed_total / len(orders),
    )


def generation_order(problem, cands) -> RankedList:
    """The generator's own ordering, as a RankedList with flat scores."""
    return make_ranked_list(problem.id, [(c.id, 0.0, c.generation_index) for c in cands])


# --- aggregation and reports ----------------------------------------------------


@dataclass(frozen=True)
class ProblemMetrics:
    problem_id: str
    first_verified_rank: int | None
    solver_calls: int
    times: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class EvalMetrics:
    per_problem: tuple[ProblemMetrics, ...]
    aggregate: dict


def compute_metrics(per_problem, ks=(1, 5, 10)) -> EvalMetrics:
    per_problem = tuple(per_problem)
    ranks = [p.first_verified_rank for p in per_problem]
    solved = [r for r in ranks if r is not None]
    aggregate = {
        "problems": len(per_problem),
        "solved": len(solved),
        "mean_rank": sum(solved) / len(solved) if solved else None,
        "median_rank": float(statistics.median(solved)) if solved else None,
        "v_at_k": {k: v_at_k(ranks, k) for k in ks},
        "total_calls": sum(p.solver_calls for p in per_problem),
        "times": {
            bucket: {
                "mean": _mean_time(per_problem, bucket),
                "median": _median_time(per_problem, bucket),
            }
            for bucket in TIME_BUCKETS
        },
    }
    return EvalMetrics(per_problem=per_problem, aggregate=aggregate)


def _mean_time(per_problem, bucket):
    values = [p.times.get(bucket, 0.0) for p in per_problem]
    return sum(values) / len(values) if values else 0.0


def _median_time(per_problem, bucket):
    values = [p.times.get(bucket, 0.0) for p in per_problem]
    return float(statistics.median(values)) if values else 0.0


def _fmt(value) -> str:
    if value is None:
        return ""
    return f"{value:.6f}"


def _round(value):
    return None if value is None else round(value, 6)


def _columns(ks) -> list[str]:
    cols = ["strategy", "mean_rank", "median_rank"]
    cols += [f"v_at_{k}" for k in ks]
    cols += ["total_calls"]
    for bucket in TIME_BUCKETS:
        cols += [f"{bucket}_mean", f"{bucket}_median"]
    return cols


def _row(strategy: str, metrics: EvalMetrics, ks) -> list:
    agg = metrics.aggregate
    row = [strategy, _round(agg["mean_rank"]), _round(agg["median_rank"])]
    row += [_round(agg["v_at_k"][k]) for k in ks]
    row += [agg["total_calls"]]
    for bucket in TIME_BUCKETS:
        row += [_round(agg["times"][bucket]["mean"]), _round(agg["times"][bucket]["median"])]
    return row


def report(metrics_by_strategy: dict[str, EvalMetrics], path, fmt: str = "json", ks=(1, 5, 10)):
    """Emit the aggregate comparison table; same inputs give identical bytes."""
    if fmt not in ("json", "csv", "markdown"):
        raise ValueError(f"unknown report format {fmt!r}")
    names = [s for s in STRATEGIES if s in metrics_by_strategy]
    names += sorted(set(metrics_by_strategy) - set(STRATEGIES))
    cols = _columns(ks)

    if fmt == "json":
        doc = {
            "columns": cols,
            "strategies": {
                name: dict(zip(cols, _row(name, metrics_by_strategy[name], ks)))
                for name in names
            },
        }
        text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    elif fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for name in names:
            writer.writerow(
                [v if isinstance(v, str) else _fmt(v) for v in _row(name, metrics_by_strategy[name], ks)]
            )
        text = buf.getvalue()
    else:
        lines = ["| " + " | ".join(cols) + " |", "|" + "|".join(["---"] * len(cols)) + "|"]
        for name in names:
            cells = [
                v if isinstance(v, str) else _fmt(v)
                for v in _row(name, metrics_by_strategy[name], ks)
            ]
            lines.append("| " + " | ".join(cells) + " |")
        text = "\n".join(lines) + "\n"

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path
