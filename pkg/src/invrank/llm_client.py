"""Zero-shot invariant generation: prompting, extraction, budgeted loop.

The generation loop samples a completion, extracts the `<code>` block,
parses it as a candidate, verifies it, and repeats until the time budget
runs out or a verified invariant appears.  A canned-response directory
replaces the chat endpoint for offline runs and tests.
"""

from __future__ import annotations

import logging
import math
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import AuthError, InvrankError, NetworkError, PromptTooLong
from .sygus import InvariantCandidate, Problem, parse_candidate
from .verifier import SolverConfig, VerifyResult, verify

log = logging.getLogger(__name__)

PROMPT_TEMPLATE = """Here is a loop invariant synthesis problem in SyGus format.

{problem}

Synthesize a necessary and sufficient invariant.

Start the invariant with "{header}" and end with ")".

Surround only the invariant with <code> and </code>. You don't need to explain the invariant, just synthesize it.
"""


@dataclass(frozen=True)
class GenBudget:
    max_seconds: float = 600.0
    stop_on_first_verified: bool = True
    max_prompt_tokens: int = 3584
    max_gen_tokens: int = 512

    def __post_init__(self):
        if min(self.max_seconds, self.max_prompt_tokens, self.max_gen_tokens) <= 0:
            raise ValueError("budget values must be positive")
        if self.max_prompt_tokens + self.max_gen_tokens > 4096:
            raise ValueError("prompt + generation tokens must fit the 4096 context")


@dataclass(frozen=True)
class ChatConfig:
    endpoint_url: str
    model_name: str
    api_key_env: str = "INVRANK_API_KEY"
    temperature: float = 1.0
    retries: int = 3


# problems may generate concurrently; chat requests share one global bound
MAX_CONCURRENT_REQUESTS = 4
_request_gate = threading.BoundedSemaphore(MAX_CONCURRENT_REQUESTS)


def inv_header(problem: Problem) -> str:
    params = " ".join(f"({name} {sort.smtlib})" for name, sort in problem.vars)
    return f"(define-fun inv_fun ({params}) Bool ("


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text.encode("utf-8")) / 4)


def build_prompt(problem: Problem, budget: GenBudget | None = None) -> str:
    """Fill the zero-shot template with the problem text and its inv header."""
    prompt = PROMPT_TEMPLATE.format(problem=problem.raw_text.strip(), header=inv_header(problem))
    budget = budget or GenBudget()
    tokens = estimate_tokens(prompt)
    if tokens > budget.max_prompt_tokens:
        raise PromptTooLong(f"prompt is ~{tokens} tokens, budget {budget.max_prompt_tokens}")
    return prompt


def extract_invariant(response: str) -> str | None:
    """Innermost content of the first <code>...</code> pair, or None."""
    start = response.find("<code>")
    if start < 0:
        return None
    end = response.find("</code>", start + 6)
    if end < 0:
        return None
    content = response[start + 6 : end]
    if "<code>" in content:
        content = content.rsplit("<code>", 1)[1]
    content = content.strip()
    return content or None


@dataclass(frozen=True)
class GeneratedCandidate:
    candidate: InvariantCandidate
    result: VerifyResult


class CannedResponses:
    """Reads responses/<problem>/<k>.txt in numeric order; offline generator."""

    def __init__(self, root):
        self.root = Path(root)

    def responses(self, problem_id: str) -> list[str]:
        folder = self.root / problem_id
        if not folder.is_dir():
            return []
        files = [p for p in folder.glob("*.txt") if p.stem.isdigit()]
        return [p.read_text(encoding="utf-8") for p in sorted(files, key=lambda p: int(p.stem))]


def _chat_complete(prompt: str, chat: ChatConfig, budget: GenBudget) -> str:
    import os

    key = os.environ.get(chat.api_key_env)
    if not key:
        raise AuthError(f"environment variable {chat.api_key_env} is not set")
    headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}
    payload = {
        "model": chat.model_name,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": chat.temperature,
        "max_tokens": budget.max_gen_tokens,
    }
    last = None
    for attempt in range(chat.retries):
        try:
            with _request_gate:
                resp = requests.post(
                    chat.endpoint_url, json=payload, headers=headers, timeout=120
                )
            if resp.status_code in (401, 403):
                raise AuthError(f"chat service rejected credentials ({resp.status_code})")
            resp.raise_for_status()
            return resp.json()["choices"][0]["message"]["content"]
        except AuthError:
            raise
        except (requests.RequestException, KeyError, ValueError) as exc:
            last = exc
            time.sleep(0.2 * 2**attempt)
    raise NetworkError(f"chat request failed after {chat.retries} attempts: {last}")


def generate_until(
    problem: Problem,
    budget: GenBudget,
    generator,
    solver_cfg: SolverConfig,
    source: str = "other",
) -> list[GeneratedCandidate]:
    """Sample/extract/parse/verify until the budget is spent or one verifies.

    `generator` is a ChatConfig or a CannedResponses directory.  Every
    syntactically valid candidate is kept, with gapless generation
    indices; network errors are logged and skipped until budget expiry.
    """
    prompt = build_prompt(problem, budget)
    deadline = time.monotonic() + budget.max_seconds
    out: list[GeneratedCandidate] = []
    next_index = 0

    if isinstance(generator, CannedResponses):
        samples = iter(generator.responses(problem.id))

        def sample():
            return next(samples, None)

    elif isinstance(generator, ChatConfig):

        def sample():
            try:
                return _chat_complete(prompt, generator, budget)
            except NetworkError as exc:  # includes AuthError
                log.warning("generation attempt failed for %s: %s", problem.id, exc)
                time.sleep(0.5)  # pace the loop; only budget expiry ends it
                return ""

    else:
        raise TypeError("generator must be a ChatConfig or CannedResponses")

    while time.monotonic() < deadline:
        response = sample()
        if response is None:
            break  # canned responses exhausted
        text = extract_invariant(response)
        if text is None:
            continue
        try:
            cand = parse_candidate(
                text, problem, source=source, generation_index=next_index
            )
        except InvrankError:
            continue
        result = verify(problem, cand, solver_cfg)
        out.append(GeneratedCandidate(candidate=cand, result=result))
        next_index += 1
        if result.verified and budget.stop_on_first_verified:
            break
    return out
