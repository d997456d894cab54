import pytest

from invrank.errors import PromptTooLong
from invrank.llm_client import (
    CannedResponses,
    GenBudget,
    build_prompt,
    extract_invariant,
    generate_until,
    inv_header,
)
from invrank.terms import Sort


def test_prompt_contains_header_and_instructions(counter_problem):
    prompt = build_prompt(counter_problem)
    assert "(define-fun inv_fun ((x Int)) Bool (" in prompt
    assert "Surround only the invariant with <code> and" in prompt
    assert "(inv-constraint inv_fun pre_fun trans_fun post_fun)" in prompt
    assert prompt.rstrip().endswith("just synthesize it.")


def test_inv_header_multiple_vars():
    class P:
        vars = (("i", Sort.INT), ("n", Sort.INT))

    assert inv_header(P()) == "(define-fun inv_fun ((i Int) (n Int)) Bool ("


def test_prompt_too_long(counter_problem):
    budget = GenBudget(max_prompt_tokens=10, max_gen_tokens=64)
    with pytest.raises(PromptTooLong):
        build_prompt(counter_problem, budget)


def test_budget_must_fit_context():
    with pytest.raises(ValueError):
        GenBudget(max_prompt_tokens=4000, max_gen_tokens=512)


def test_extract_simple():
    assert extract_invariant("ok <code>(define-fun f)</code> done") == "(define-fun f)"


def test_extract_absent_or_unbalanced():
    assert extract_invariant("no tags here") is None
    assert extract_invariant("<code> unclosed") is None
    assert extract_invariant("</code> only close <code>") is None


def test_extract_first_block_innermost():
    text = "a <code> outer <code> inner </code> rest"
    assert extract_invariant(text) == "inner"
    multi = "<code>first</code> and <code>second</code>"
    assert extract_invariant(multi) == "first"


def _canned(tmp_path, pid, responses):
    folder = tmp_path / "responses" / pid
    folder.mkdir(parents=True)
    for k, text in enumerate(responses):
        (folder / f"{k}.txt").write_text(text)
    return CannedResponses(tmp_path / "responses")


def test_generate_stops_at_first_verified(tmp_path, mini_cfg, counter_problem):
    canned = _canned(
        tmp_path,
        "counter",
        [
            "try <code>(<= x 6)</code>",
            "try <code>(and (>= x 0) (<= x 5))</code>",
            "try <code>(>= x 0)</code>",
        ],
    )
    budget = GenBudget(max_seconds=120)
    out = generate_until(counter_problem, budget, canned, mini_cfg)
    assert len(out) == 2
    assert [g.candidate.generation_index for g in out] == [0, 1]
    assert not out[0].result.verified
    assert out[1].result.verified


def test_generate_unparseable_responses_yield_nothing(tmp_path, mini_cfg, counter_problem):
    canned = _canned(tmp_path, "counter", ["nothing here", "<code>(((</code>", "<code>(frob x)</code>"])
    out = generate_until(counter_problem, GenBudget(max_seconds=60), canned, mini_cfg)
    assert out == []


def test_generate_consumes_all_without_stop(tmp_path, mini_cfg, counter_problem):
    canned = _canned(
        tmp_path,
        "counter",
        [
            "a <code>(and (>= x 0) (<= x 5))</code>",
            "b <code>(<= x 5)</code>",
            "c <code>garbage(</code>",
            "d <code>(>= x 0)</code>",
        ],
    )
    budget = GenBudget(max_seconds=120, stop_on_first_verified=False)
    out = generate_until(counter_problem, budget, canned, mini_cfg)
    assert [g.candidate.generation_index for g in out] == [0, 1, 2]
    assert out[0].result.verified


def test_generate_offline_is_deterministic(tmp_path, mini_cfg, counter_problem):
    canned = _canned(tmp_path, "counter", ["x <code>(<= x 6)</code>", "y <code>(>= x 0)</code>"])
    budget = GenBudget(max_seconds=60)
    a = generate_until(counter_problem, budget, canned, mini_cfg)
    b = generate_until(counter_problem, budget, canned, mini_cfg)
    assert [(g.candidate.id, g.result.outcome) for g in a] == [
        (g.candidate.id, g.result.outcome) for g in b
    ]


def test_generate_respects_time_budget(tmp_path, mini_cfg, counter_problem):
    canned = _canned(tmp_path, "counter", ["<code>(<= x 6)</code>"] * 3)
    out = generate_until(counter_problem, GenBudget(max_seconds=1e-6), canned, mini_cfg)
    assert out == []


class FakeChatResponse:
    def __init__(self, content, status=200):
        self._content = content
        self.status_code = status

    def raise_for_status(self):
        pass

    def json(self):
        return {"choices": [{"message": {"content": self._content}}]}


def test_generate_via_chat_endpoint(monkeypatch, mini_cfg, counter_problem):
    from invrank.llm_client import ChatConfig

    replies = iter(
        [
            "thinking... <code>(<= x 6)</code>",
            "got it <code>(and (>= x 0) (<= x 5))</code>",
        ]
    )
    calls = []

    def fake_post(url, json=None, headers=None, timeout=None):
        calls.append(json["model"])
        assert headers["Authorization"] == "Bearer sk-chat"
        assert json["messages"][0]["role"] == "user"
        return FakeChatResponse(next(replies))

    monkeypatch.setenv("INVRANK_API_KEY", "sk-chat")
    monkeypatch.setattr("invrank.llm_client.requests.post", fake_post)
    chat = ChatConfig(endpoint_url="https://chat.example/v1", model_name="test-model")
    out = generate_until(counter_problem, GenBudget(max_seconds=60), chat, mini_cfg)
    assert len(out) == 2 and out[1].result.verified
    assert calls == ["test-model", "test-model"]


def test_generate_chat_failures_do_not_abort(monkeypatch, mini_cfg, counter_problem):
    from invrank.llm_client import ChatConfig

    state = {"n": 0}

    def flaky_post(url, **kw):
        state["n"] += 1
        if state["n"] < 4:
            raise __import__("requests").ConnectionError("flaky")
        return FakeChatResponse("<code>(and (>= x 0) (<= x 5))</code>")

    monkeypatch.setenv("INVRANK_API_KEY", "sk-chat")
    monkeypatch.setattr("invrank.llm_client.requests.post", flaky_post)
    monkeypatch.setattr("invrank.llm_client.time.sleep", lambda s: None)
    chat = ChatConfig(endpoint_url="https://chat.example/v1", model_name="m", retries=2)
    out = generate_until(counter_problem, GenBudget(max_seconds=30), chat, mini_cfg)
    assert len(out) == 1 and out[0].result.verified
