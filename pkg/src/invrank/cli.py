"""Command-line pipeline: parse, verify, dedup, embed, train, rank, eval, generate.

Corpus conventions: problems under `problems/*.sl`, candidates under
`candidates/<problem>/<source>-<k>.inv`, canned generations under
`responses/<problem>/<k>.txt`.  Exit codes: 0 success, 2 success with
solver Unknown verdicts, 1 failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import dataset as ds
from . import evalharness as ev
from . import llm_client, ranker
from .config import PROVIDER_ALIASES, PipelineConfig, load_config
from .embeddings import embed, tfidf_rank
from .errors import InvrankError
from .sygus import (
    SOURCES,
    InvariantCandidate,
    Problem,
    parse_candidate,
    parse_loopspec,
    parse_problem,
)
from .verifier import Outcome, dedup, verify

log = logging.getLogger(__name__)

STRATEGY_ALIASES = {
    "llm": "llm_order",
    "llm_order": "llm_order",
    "expected": "expected",
    "tfidf": "tfidf",
    "raw": "raw_embedding",
    "raw_embedding": "raw_embedding",
    "irank": "irank",
}


def load_problems(cfg: PipelineConfig) -> dict[str, Problem]:
    folder = Path(cfg.problems_dir)
    if not folder.is_dir():
        raise InvrankError(f"problems directory {folder} does not exist")
    problems = {}
    for path in sorted(folder.glob("*.sl")):
        problems[path.stem] = parse_problem(path.read_text(encoding="utf-8"), path.stem)
    if not problems:
        raise InvrankError(f"no .sl files under {folder}")
    return problems


def load_candidates(
    cfg: PipelineConfig, problems: dict[str, Problem]
) -> dict[str, list[InvariantCandidate]]:
    root = Path(cfg.candidates_dir)
    out: dict[str, list[InvariantCandidate]] = {pid: [] for pid in problems}
    if not root.is_dir():
        return out
    for pid, problem in problems.items():
        folder = root / pid
        if not folder.is_dir():
            continue
        entries = []
        for path in folder.glob("*.inv"):
            source, _, index = path.stem.rpartition("-")
            if source not in SOURCES or not index.isdigit():
                log.warning("skipping candidate file with unrecognized name: %s", path)
                continue
            entries.append((source, int(index), path))
        entries.sort(key=lambda e: (e[0], e[1]))
        for source, index, path in entries:
            out[pid].append(
                parse_candidate(
                    path.read_text(encoding="utf-8"),
                    problem,
                    cand_id=f"{source}-{index}",
                    source=source,
                    generation_index=index,
                )
            )
    return out


def _pool_map(jobs: int, fn, items):
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# --- subcommands ---------------------------------------------------------------


def cmd_parse(cfg: PipelineConfig, args) -> int:
    problems = load_problems(cfg)
    cands = load_candidates(cfg, problems)
    loops = 0
    for path in sorted(Path(cfg.problems_dir).glob("*.loop")):
        parse_loopspec(path.read_text(encoding="utf-8"))
        loops += 1
    total = sum(len(v) for v in cands.values())
    suffix = f", {loops} loop specs" if loops else ""
    print(f"parsed {len(problems)} problems, {total} candidates{suffix}")
    return 0


def cmd_verify(cfg: PipelineConfig, args) -> int:
    problems = load_problems(cfg)
    cands = load_candidates(cfg, problems)
    solver = cfg.solver()

    def label_problem(pid):
        labeled = []
        for cand in cands[pid]:
            result = verify(problems[pid], cand, solver)
            labeled.append(
                ds.LabeledCandidate(
                    cand_id=cand.id,
                    source=cand.source,
                    generation_index=cand.generation_index,
                    label=ds.label_from_outcome(result.outcome),
                    text=cand.raw_text,
                )
            )
        return ds.ProblemRecord(pid, tuple(labeled))

    records = _pool_map(cfg.jobs, label_problem, sorted(problems))
    texts = {pid: problems[pid].raw_text for pid in problems}
    data = ds.LabeledDataset.build(records, problem_texts=texts)
    ds.save(data, cfg.dataset_path)
    counts = {"pos": 0, "neg": 0, "unknown": 0}
    for record in records:
        for cand in record.candidates:
            counts[cand.label] += 1
    print(f"labeled dataset written to {cfg.dataset_path}: {counts}")
    return 2 if counts["unknown"] else 0


def cmd_dedup(cfg: PipelineConfig, args) -> int:
    problems = load_problems(cfg)
    cands = load_candidates(cfg, problems)
    solver = cfg.solver()
    doc = {"problems": {}, "total_calls": 0}
    for pid in sorted(problems):
        if not cands[pid]:
            continue
        result = dedup(cands[pid], solver)
        doc["problems"][pid] = {"kept": [c.id for c in result.kept], "calls": result.calls}
        doc["total_calls"] += result.calls
    out = Path(cfg.reports_dir) / "dedup.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    print(f"dedup report written to {out} ({doc['total_calls']} solver calls)")
    return 0


def _all_texts(problems, cands) -> list[str]:
    texts = [problems[pid].raw_text for pid in sorted(problems)]
    for pid in sorted(cands):
        texts.extend(c.raw_text for c in cands[pid])
    return list(dict.fromkeys(texts))


def cmd_embed(cfg: PipelineConfig, args) -> int:
    problems = load_problems(cfg)
    cands = load_candidates(cfg, problems)
    provider = cfg.provider()
    if provider.kind == "tfidf":
        raise InvrankError("the tfidf provider has no embedding cache to warm")
    texts = _all_texts(problems, cands)
    vectors = embed(texts, provider)
    print(f"embedded {len(vectors)} texts with {provider.tag}")
    return 0


def _load_dataset(cfg: PipelineConfig, problems) -> ds.LabeledDataset:
    texts = {pid: p.raw_text for pid, p in problems.items()}
    return ds.load(cfg.dataset_path, problem_texts=texts)


def cmd_train(cfg: PipelineConfig, args) -> int:
    problems = load_problems(cfg)
    data = _load_dataset(cfg, problems)
    provider = cfg.provider()
    hp = cfg.hyperparams()
    models_dir = Path(cfg.models_dir)
    trained = 0
    for fold in range(ds.N_FOLDS):
        try:
            result = ranker.train(data, fold, hp, provider)
        except InvrankError as exc:
            log.warning("fold %d not trained: %s", fold, exc)
            continue
        model_path = models_dir / f"model-fold{fold}.json"
        ranker.save_model(result.net, model_path, fold=fold)
        log_path = models_dir / f"train-fold{fold}.csv"
        with open(log_path, "w", encoding="utf-8") as fh:
            fh.write("epoch,mean_loss\n")
            for epoch, value in enumerate(result.epoch_losses, start=1):
                fh.write(f"{epoch},{value:.8f}\n")
        print(f"fold {fold}: model -> {model_path} (final loss {result.epoch_losses[-1]:.5f})"
              if result.epoch_losses else f"fold {fold}: model -> {model_path}")
        trained += 1
    return 0 if trained else 1


def _model_for(cfg: PipelineConfig, pid: str):
    fold = ds.assign_fold(pid)
    path = Path(cfg.models_dir) / f"model-fold{fold}.json"
    if not path.is_file():
        raise InvrankError(f"no trained model for fold {fold} at {path}")
    net, meta = ranker.load_model(path)
    if meta.get("fold") != fold:
        raise InvrankError(f"model {path} was trained for fold {meta.get('fold')}, not {fold}")
    return net


def _ranked_list(cfg, strategy, problem, cand_list, provider):
    if strategy == "llm_order" or strategy == "expected":
        return ev.generation_order(problem, cand_list)
    if strategy == "tfidf":
        return tfidf_rank(problem, cand_list)
    if strategy == "raw_embedding":
        return ranker.rank(None, problem, cand_list, provider)
    if strategy == "irank":
        net = _model_for(cfg, problem.id)
        return ranker.rank(net, problem, cand_list, provider)
    raise InvrankError(f"unknown strategy {strategy!r}")


def cmd_rank(cfg: PipelineConfig, args) -> int:
    problems = load_problems(cfg)
    cands = load_candidates(cfg, problems)
    provider = cfg.provider()
    strategy = STRATEGY_ALIASES[args.strategy or "irank"]
    targets = [args.problem] if args.problem else sorted(problems)
    reports_dir = Path(cfg.reports_dir)
    reports_dir.mkdir(parents=True, exist_ok=True)
    for pid in targets:
        if pid not in problems:
            raise InvrankError(f"unknown problem {pid!r}")
        if not cands[pid]:
            log.warning("problem %s has no candidates", pid)
            continue
        rl = _ranked_list(cfg, strategy, problems[pid], cands[pid], provider)
        out = reports_dir / f"rank-{pid}-{strategy}.json"
        doc = {
            "problem": pid,
            "strategy": strategy,
            "entries": [
                {"candidate": e.candidate_id, "score": round(e.score, 6), "gen_index": e.generation_index}
                for e in rl.entries
            ],
        }
        out.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")
        print(out)
    return 0


def cmd_eval(cfg: PipelineConfig, args) -> int:
    problems = load_problems(cfg)
    cands = load_candidates(cfg, problems)
    provider = cfg.provider()
    solver = cfg.solver()
    if args.strategy:
        strategies = [STRATEGY_ALIASES[args.strategy]]
    else:
        strategies = list(ev.STRATEGIES)

    any_unknown = False
    outcomes_by_problem: dict[str, dict] = {}
    verify_elapsed: dict[str, dict[str, float]] = {}

    def verify_all(pid):
        outcomes = {}
        for cand in cands[pid]:
            outcomes[cand.id] = verify(problems[pid], cand, solver)
        return pid, outcomes

    for pid, outcomes in _pool_map(cfg.jobs, verify_all, sorted(problems)):
        outcomes_by_problem[pid] = outcomes
        if any(r.outcome is Outcome.UNKNOWN for r in outcomes.values()):
            any_unknown = True

    # wall-clock buckets are opt-in: they make report bytes run-dependent
    record_times = bool(getattr(args, "times", False))
    zero = {"embed_s": 0.0, "rank_s": 0.0, "verify_s": 0.0}

    metrics_by_strategy: dict[str, ev.EvalMetrics] = {}
    for strategy in strategies:
        per_problem = []
        for pid in sorted(problems):
            if not cands[pid]:
                continue
            outcomes = outcomes_by_problem[pid]
            times = dict(zero)
            if strategy == "expected":
                est = ev.expected_metrics(
                    cands[pid], outcomes, permutations=100, seed=cfg.seed, ks=cfg.ks
                )
                if record_times:
                    times["verify_s"] = est.mean_elapsed
                per_problem.append(
                    ev.ProblemMetrics(
                        problem_id=pid,
                        first_verified_rank=est.mean_rank,
                        solver_calls=est.mean_calls,
                        times=times,
                    )
                )
                continue
            t0 = time.monotonic()
            rl = _ranked_list(cfg, strategy, problems[pid], cands[pid], provider)
            rank_elapsed = time.monotonic() - t0
            seq = ev.sequential_from_outcomes(rl, outcomes)
            if record_times:
                if strategy in ("raw_embedding", "irank"):
                    times["embed_s"] = rank_elapsed  # embedding dominates scoring here
                else:
                    times["rank_s"] = rank_elapsed
                prefix_elapsed = 0.0
                for pos, entry in enumerate(rl.entries, start=1):
                    prefix_elapsed += outcomes[entry.candidate_id].elapsed
                    if seq.rank is not None and pos == seq.rank:
                        break
                times["verify_s"] = prefix_elapsed
            per_problem.append(
                ev.ProblemMetrics(
                    problem_id=pid,
                    first_verified_rank=seq.rank,
                    solver_calls=seq.calls,
                    times=times,
                )
            )
        metrics_by_strategy[strategy] = ev.compute_metrics(per_problem, ks=cfg.ks)

    reports_dir = Path(cfg.reports_dir)
    for fmt, suffix in (("json", "json"), ("csv", "csv"), ("markdown", "md")):
        path = ev.report(metrics_by_strategy, reports_dir / f"report.{suffix}", fmt, ks=cfg.ks)
        print(path)
    return 2 if any_unknown else 0


def cmd_generate(cfg: PipelineConfig, args) -> int:
    problems = load_problems(cfg)
    solver = cfg.solver()
    budget = cfg.budget()
    chat = cfg.chat()
    canned = llm_client.CannedResponses(cfg.responses_dir)
    source = args.source or "other"
    targets = [args.problem] if args.problem else sorted(problems)
    out_root = Path(cfg.candidates_dir)
    total = 0
    for pid in targets:
        generator = chat if (chat and not args.offline) else canned
        produced = llm_client.generate_until(problems[pid], budget, generator, solver, source)
        folder = out_root / pid
        folder.mkdir(parents=True, exist_ok=True)
        for item in produced:
            path = folder / f"{source}-{item.candidate.generation_index}.inv"
            path.write_text(item.candidate.raw_text + "\n", encoding="utf-8")
        total += len(produced)
        print(f"{pid}: {len(produced)} candidates")
    print(f"generated {total} candidates under {out_root}")
    return 0


# --- entry point ----------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="invrank",
        description="Verify and rerank candidate loop invariants.",
    )
    parser.add_argument("--config", help="path to a key = value config file")
    parser.add_argument("--jobs", type=int, help="parallel workers across problems")
    parser.add_argument("--seed", type=int, help="seed for folds, training, permutations")
    parser.add_argument("--solver", help="SMT solver binary (overrides config)")
    parser.add_argument(
        "--provider", choices=sorted(PROVIDER_ALIASES), help="embedding provider kind"
    )
    parser.add_argument("--k", help="comma-separated V@K cutoffs, e.g. 1,5,10")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("parse", help="validate the problem/candidate corpus")
    sub.add_parser("verify", help="label all candidates into the dataset JSONL")
    sub.add_parser("dedup", help="semantic deduplication report")
    sub.add_parser("embed", help="warm the embedding cache")
    sub.add_parser("train", help="train the five fold models")

    p_rank = sub.add_parser("rank", help="rank candidates for problems")
    p_rank.add_argument("--problem", help="problem id (default: all)")
    p_rank.add_argument("--strategy", choices=sorted(STRATEGY_ALIASES))

    p_eval = sub.add_parser("eval", help="evaluate ranking strategies and write reports")
    p_eval.add_argument("--strategy", choices=sorted(STRATEGY_ALIASES))
    p_eval.add_argument(
        "--times",
        action="store_true",
        help="record wall-clock buckets (makes report bytes run-dependent)",
    )

    p_gen = sub.add_parser("generate", help="generate candidates via chat or canned responses")
    p_gen.add_argument("--problem", help="problem id (default: all)")
    p_gen.add_argument("--source", choices=sorted(SOURCES))
    p_gen.add_argument("--offline", action="store_true", help="force canned responses")
    return parser


_COMMANDS = {
    "parse": cmd_parse,
    "verify": cmd_verify,
    "dedup": cmd_dedup,
    "embed": cmd_embed,
    "train": cmd_train,
    "rank": cmd_rank,
    "eval": cmd_eval,
    "generate": cmd_generate,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    overrides = {
        "jobs": args.jobs,
        "seed": args.seed,
        "solver_path": args.solver,
        "provider_kind": args.provider,
        "ks": tuple(int(x) for x in args.k.replace(",", " ").split()) if args.k else None,
    }
    try:
        cfg = load_config(args.config, overrides)
        return _COMMANDS[args.command](cfg, args)
    except InvrankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
