"""Verification conditions, solver driving, and semantic deduplication.

Three conditions establish an invariant: it holds on entry, it is
preserved by one iteration, and it implies the postcondition on exit.
Each condition becomes an implication whose validity is checked by
asserting its negation to an external SMT solver and expecting `unsat`.
"""

from __future__ import annotations

import os
import shutil
import subprocess
import sys
import time
from dataclasses import dataclass
from enum import Enum

from .errors import SortError, UnknownVariable
from .sygus import InvariantCandidate, Problem
from .terms import (
    And,
    Assign,
    If,
    Implies,
    LoopSpec,
    Not,
    Seq,
    Skip,
    Sort,
    Stmt,
    Term,
    Var,
    free_vars,
    render_smtlib,
    sort_of,
    substitute,
    substitute_parallel,
)


class VCKind(Enum):
    ENTRY = "entry"
    PRESERVATION = "preservation"
    EXIT = "exit"


class Status(Enum):
    VALID = "valid"
    INVALID = "invalid"
    UNKNOWN = "unknown"
    TIMEOUT = "timeout"
    SOLVER_ERROR = "solver_error"


class Outcome(Enum):
    VERIFIED = "verified"
    REJECTED = "rejected"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class VerificationCondition:
    kind: VCKind
    formula: Term
    decls: tuple[tuple[str, Sort], ...]

    def __post_init__(self):
        extra = free_vars(self.formula) - set(self.decls)
        if extra:
            raise SortError(f"VC formula uses undeclared variables {sorted(extra)}")


@dataclass(frozen=True)
class SolverVerdict:
    status: Status
    model: str | None = None
    elapsed: float = 0.0

    def __post_init__(self):
        if self.model is not None and self.status is not Status.INVALID:
            raise ValueError("model is only attached to Invalid verdicts")


@dataclass(frozen=True)
class SolverConfig:
    solver_path: str
    timeout: float = 10.0
    args: tuple[str, ...] = ("-in", "-smt2")

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    @classmethod
    def default(cls, timeout: float = 10.0) -> "SolverConfig":
        """Resolve a solver: $INVRANK_SOLVER, then z3, then bundled backends."""
        env = os.environ.get("INVRANK_SOLVER")
        if env:
            return cls(solver_path=env, timeout=timeout)
        if shutil.which("z3"):
            return cls(solver_path="z3", timeout=timeout)
        from . import z3js

        if z3js.available():
            return cls(solver_path=sys.executable, timeout=timeout, args=("-m", "invrank.z3js"))
        return cls(solver_path=sys.executable, timeout=timeout, args=("-m", "invrank.minismt"))


@dataclass(frozen=True)
class VerifyResult:
    outcome: Outcome
    calls: int
    failed: VCKind | None = None
    model: str | None = None
    elapsed: float = 0.0

    @property
    def verified(self) -> bool:
        return self.outcome is Outcome.VERIFIED


def wp(s: Stmt, phi: Term) -> Term:
    """Weakest precondition of a loop-free statement, built structurally."""
    if isinstance(s, Skip):
        return phi
    if isinstance(s, Assign):
        return substitute(phi, s.var, s.rhs)
    if isinstance(s, Seq):
        return wp(s.first, wp(s.second, phi))
    if isinstance(s, If):
        return And((Implies(s.cond, wp(s.then, phi)), Implies(Not(s.cond), wp(s.other, phi))))
    raise SortError(f"unknown statement {type(s).__name__}")


def hoare_vcs(spec: LoopSpec, inv: Term) -> list[VerificationCondition]:
    """Entry / preservation / exit conditions for a toy-language loop."""
    if sort_of(inv) is not Sort.BOOL:
        raise SortError("invariant must be Bool-sorted")
    extra = free_vars(inv) - set(spec.vars)
    if extra:
        raise UnknownVariable(f"invariant uses undeclared variables {sorted(extra)}")
    decls = tuple(spec.vars)
    return [
        VerificationCondition(VCKind.ENTRY, Implies(spec.pre, inv), decls),
        VerificationCondition(
            VCKind.PRESERVATION, Implies(And((inv, spec.guard)), wp(spec.body, inv)), decls
        ),
        VerificationCondition(
            VCKind.EXIT, Implies(And((inv, Not(spec.guard))), spec.post), decls
        ),
    ]


def inv_vcs(p: Problem, c: InvariantCandidate) -> list[VerificationCondition]:
    """Entry / preservation / exit conditions in the primed-variable encoding."""
    if c.problem_id != p.id:
        raise ValueError(f"candidate {c.id} belongs to problem {c.problem_id}, not {p.id}")
    if sort_of(c.body) is not Sort.BOOL:
        raise SortError("candidate must be Bool-sorted")
    extra = free_vars(c.body) - set(p.vars)
    if extra:
        raise UnknownVariable(f"candidate uses variables outside the problem's: {sorted(extra)}")
    prime = {name: Var(pname, sort) for (name, sort), (pname, _) in zip(p.vars, p.primed_vars)}
    inv_primed = substitute_parallel(c.body, prime)
    state = tuple(p.vars)
    both = tuple(p.vars) + tuple(p.primed_vars)
    return [
        VerificationCondition(VCKind.ENTRY, Implies(p.pre, c.body), state),
        VerificationCondition(
            VCKind.PRESERVATION, Implies(And((c.body, p.trans)), inv_primed), both
        ),
        VerificationCondition(VCKind.EXIT, Implies(c.body, p.post), state),
    ]


def emit_script(vc: VerificationCondition) -> str:
    """SMT-LIB2 script proving the VC: assert the negation, expect unsat."""
    lines = ["(set-logic ALL)"]
    for name, sort in vc.decls:
        lines.append(f"(declare-const {name} {sort.smtlib})")
    lines.append(f"(assert (not {render_smtlib(vc.formula)}))")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


def _run_solver(script: str, cfg: SolverConfig) -> SolverVerdict:
    argv = [cfg.solver_path, *cfg.args]
    start = time.monotonic()
    try:
        proc = subprocess.run(
            argv,
            input=script.encode(),
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            timeout=cfg.timeout,
        )
    except subprocess.TimeoutExpired:
        return SolverVerdict(Status.TIMEOUT, elapsed=time.monotonic() - start)
    except (FileNotFoundError, PermissionError, OSError):
        return SolverVerdict(Status.SOLVER_ERROR, elapsed=time.monotonic() - start)
    elapsed = time.monotonic() - start
    out = proc.stdout.decode(errors="replace")
    tokens = out.split(None, 1)
    first = tokens[0] if tokens else ""
    # a parseable verdict wins even on a nonzero exit (solvers complain on
    # stdout about (get-model) after unsat but still print the verdict)
    if first == "unsat":
        return SolverVerdict(Status.VALID, elapsed=elapsed)
    if first == "sat":
        model = tokens[1].strip() if len(tokens) > 1 else None
        return SolverVerdict(Status.INVALID, model=model or None, elapsed=elapsed)
    if first == "unknown":
        return SolverVerdict(Status.UNKNOWN, elapsed=elapsed)
    return SolverVerdict(Status.SOLVER_ERROR, elapsed=elapsed)


def check_vc(vc: VerificationCondition, cfg: SolverConfig) -> SolverVerdict:
    """One solver call deciding one verification condition."""
    return _run_solver(emit_script(vc), cfg)


def verify(problem, candidate, cfg: SolverConfig) -> VerifyResult:
    """Check entry, preservation, exit in order, short-circuiting on failure.

    `problem` is a Problem or LoopSpec; `candidate` an InvariantCandidate
    or a bare Bool term (for LoopSpecs).  Any Timeout/Unknown/SolverError
    makes the overall outcome Unknown rather than Rejected.
    """
    if isinstance(problem, LoopSpec):
        inv = candidate.body if isinstance(candidate, InvariantCandidate) else candidate
        vcs = hoare_vcs(problem, inv)
    else:
        vcs = inv_vcs(problem, candidate)
    calls = 0
    elapsed = 0.0
    for vc in vcs:
        verdict = check_vc(vc, cfg)
        calls += 1
        elapsed += verdict.elapsed
        if verdict.status is Status.VALID:
            continue
        if verdict.status is Status.INVALID:
            return VerifyResult(
                Outcome.REJECTED, calls, failed=vc.kind, model=verdict.model, elapsed=elapsed
            )
        return VerifyResult(Outcome.UNKNOWN, calls, failed=vc.kind, elapsed=elapsed)
    return VerifyResult(Outcome.VERIFIED, calls, elapsed=elapsed)


def equivalent(
    a: InvariantCandidate, b: InvariantCandidate, cfg: SolverConfig
) -> tuple[bool | None, int]:
    """Semantic equivalence via one solver call; None means the solver punted."""
    if a.problem_id != b.problem_id:
        raise ValueError("candidates come from different problems")
    decls = tuple(sorted(free_vars(a.body) | free_vars(b.body)))
    lines = ["(set-logic ALL)"]
    for name, sort in decls:
        lines.append(f"(declare-const {name} {sort.smtlib})")
    lines.append(f"(assert (not (= {render_smtlib(a.body)} {render_smtlib(b.body)})))")
    lines.append("(check-sat)")
    verdict = _run_solver("\n".join(lines) + "\n", cfg)
    if verdict.status is Status.VALID:
        return True, 1
    if verdict.status is Status.INVALID:
        return False, 1
    return None, 1


@dataclass(frozen=True)
class DedupResult:
    kept: tuple[InvariantCandidate, ...]
    calls: int


def dedup(cands: list[InvariantCandidate], cfg: SolverConfig) -> DedupResult:
    """Drop candidates equivalent to an earlier one, left to right.

    Each new candidate is compared against all previous candidates in
    order (stopping at the first equivalent), so a fully distinct list
    costs a quadratic number of solver calls.  An Unknown comparison
    counts as not-equivalent: a potentially distinct invariant is never
    dropped.
    """
    kept: list[InvariantCandidate] = []
    seen: list[InvariantCandidate] = []
    calls = 0
    for cand in cands:
        duplicate = False
        for prev in seen:
            same, used = equivalent(cand, prev, cfg)
            calls += used
            if same is True:
                duplicate = True
                break
        seen.append(cand)
        if not duplicate:
            kept.append(cand)
    return DedupResult(tuple(kept), calls)
