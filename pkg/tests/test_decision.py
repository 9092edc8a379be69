from __future__ import annotations

import json
import threading

import httpx
import pytest

from legalsim.decision import (
    BackendConfig,
    DecisionRequest,
    PolicyTable,
    RemoteChatBackend,
    ScriptedBackend,
    builtin_policy,
    builtin_policy_names,
    complete_with_retry,
    decide_batch,
    make_macro_backend,
    parse_choice,
    scripted_choice,
)
from legalsim.errors import BackendError, ConfigError, OutOfRangeLetter, RateLimited, UnparseableResponse
from legalsim.population import SamplingConfig, generate_population, load_country
from legalsim.scenario import get_scene


def _remote(handler, **over) -> RemoteChatBackend:
    cfg = BackendConfig(kind="remote_chat", endpoint_url="http://llm.test/v1/chat/completions", model_name="m", backoff_base=0.001, backoff_max=0.01, **over)
    return RemoteChatBackend(cfg, transport=httpx.MockTransport(handler))


def _ok(text: str) -> httpx.Response:
    return httpx.Response(200, json={"choices": [{"message": {"content": text}}]})


# --- parse_choice -------------------------------------------------------------


@pytest.mark.parametrize(
    "raw, n, expected",
    [
        ("B", 3, 1),
        ("b.", 3, 1),
        ("Answer: C", 3, 2),
        ("answer:  **A**", 3, 0),
        ("Answer: (b)", 3, 1),
        ("I would choose C because it is safest.", 3, 2),
        ("  A  ", 2, 0),
        ("Option B", 4, 1),
    ],
)
def test_parse_choice_accepts(raw, n, expected):
    assert parse_choice(raw, n) == expected


@pytest.mark.parametrize("raw", ["", "I think a person would walk away", "none of these", "12"])
def test_parse_choice_unparseable(raw):
    with pytest.raises(UnparseableResponse):
        parse_choice(raw, 3)


@pytest.mark.parametrize("raw", ["D", "Answer: E"])
def test_parse_choice_out_of_range(raw):
    with pytest.raises(OutOfRangeLetter):
        parse_choice(raw, 3)


def test_parse_choice_bounds():
    with pytest.raises(ValueError):
        parse_choice("A", 1)


# --- remote backend ------------------------------------------------------------


def test_remote_payload_and_auth(monkeypatch):
    monkeypatch.setenv("TEST_KEY", "sekret")
    seen = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return _ok("Answer: A")

    b = _remote(handler, api_key_env_var="TEST_KEY", system_prompt="be brief")
    assert b.complete("hello", temperature=0.3, max_tokens=5) == "Answer: A"
    assert seen["auth"] == "Bearer sekret"
    assert seen["body"]["messages"] == [{"role": "system", "content": "be brief"}, {"role": "user", "content": "hello"}]
    assert seen["body"]["temperature"] == 0.3 and seen["body"]["max_tokens"] == 5


def test_retry_after_rate_limits():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(429, text="slow down") if len(calls) < 3 else _ok("B")

    text, attempts = complete_with_retry(_remote(handler, retry_limit=3), "p")
    assert (text, attempts) == ("B", 3)


def test_retry_gives_up():
    b = _remote(lambda r: httpx.Response(429), retry_limit=1)
    with pytest.raises(RateLimited):
        complete_with_retry(b, "p")


def test_client_errors_are_not_retried():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(400, text="bad request")

    with pytest.raises(BackendError):
        complete_with_retry(_remote(handler, retry_limit=3), "p")
    assert len(calls) == 1


def test_malformed_body_raises():
    with pytest.raises(BackendError):
        _remote(lambda r: httpx.Response(200, json={"oops": 1})).complete("p")


def test_decide_batch_keeps_order_and_reports_failures():
    lock = threading.Lock()
    active = [0, 0]

    def handler(request):
        prompt = json.loads(request.content)["messages"][-1]["content"]
        with lock:
            active[0] += 1
            active[1] = max(active[1], active[0])
        try:
            if prompt == "p3":
                return httpx.Response(503)
            return _ok(prompt.upper())
        finally:
            with lock:
                active[0] -= 1

    b = _remote(handler, retry_limit=1, max_concurrency=4)
    reqs = [DecisionRequest(f"r{i}", f"p{i}", 3) for i in range(10)]
    out = decide_batch(reqs, b)
    assert [r.request_id for r in out] == [f"r{i}" for i in range(10)]
    assert out[0].text == "P0" and out[0].ok
    assert not out[3].ok and out[3].text is None and "BackendUnavailable" in out[3].error
    assert active[1] <= 4


def test_backend_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        BackendConfig(kind="carrier_pigeon")
    with pytest.raises(ConfigError):
        BackendConfig(kind="remote_chat")
    path = tmp_path / "b.json"
    path.write_text(json.dumps({"kind": "remote_chat", "endpoint_url": "http://x", "api_key": "leak"}))
    with pytest.raises(ConfigError):
        BackendConfig.from_file(path)


def test_decision_request_validation():
    with pytest.raises(ValueError):
        DecisionRequest("r", "p", 1)
    with pytest.raises(ValueError):
        DecisionRequest("r", "p", 3, temperature=-1)


# --- scripted policies ----------------------------------------------------------


def test_builtin_policies_exist():
    names = builtin_policy_names()
    for name in ("always_illegal", "always_legal", "coin_flip", "deterrence", "drug_illegal", "gang_illegal"):
        assert name in names
    with pytest.raises(ConfigError):
        builtin_policy("nope")


def test_policy_needs_default_rule():
    with pytest.raises(ConfigError):
        PolicyTable.from_json([{"option": "illegal", "drug_use": True}])
    with pytest.raises(ConfigError):
        PolicyTable.from_json([{"option": "legal", "colour": "red"}])


def test_policy_predicates():
    table = PolicyTable.from_json(
        [
            {"option": "illegal", "drug_use": True, "level_absent": True},
            {"option": 2, "age_max": 30},
            {"option": "legal"},
        ]
    )
    theft = get_scene("theft")
    pop = generate_population(load_country("A"), SamplingConfig(seed=4, population_size=300))
    for p in pop:
        got = scripted_choice(p, theft, None, table)
        if p.drug_use:
            assert got == 1
        elif p.age <= 30:
            assert got == 2
        else:
            assert got == 0
        assert scripted_choice(p, theft, 3, table) == (2 if p.age <= 30 else 0)


def test_deterrence_nested_sets():
    # falling probabilities select nested agent sets, so rates cannot rise
    table = builtin_policy("deterrence", seed=1)
    theft = get_scene("theft")
    pop = generate_population(load_country("A"), SamplingConfig(seed=1, population_size=2000))
    prev = None
    for level in range(6):
        crimes = {p.agent_id for p in pop if theft.is_crime(scripted_choice(p, theft, level, table))}
        if prev is not None:
            assert crimes <= prev
        prev = crimes


def test_scripted_backend_via_decide_batch():
    b = make_macro_backend("scripted:always_illegal")
    theft = get_scene("theft")
    p = generate_population(load_country("A"), SamplingConfig(population_size=1))[0]
    out = decide_batch([DecisionRequest("r", "prompt", 3, context={"profile": p, "scene": theft, "level": None})], b)
    assert out[0].text == "Answer: B"
    assert b.backend_id == "scripted:always_illegal"


def test_policy_file_backend(tmp_path):
    path = tmp_path / "mine.json"
    path.write_text(json.dumps({"rules": [{"option": "illegal"}]}))
    b = make_macro_backend(f"scripted:{path}")
    assert b.backend_id == "scripted:mine"
    with pytest.raises(ConfigError):
        make_macro_backend("telepathy:x")


def test_scripted_backend_passes_context():
    b = ScriptedBackend(lambda prompt, ctx: f"{prompt}|{ctx.get('k')}")
    assert b.complete("x", context={"k": 1}) == "x|1"
    assert b.complete("x") == "x|None"
