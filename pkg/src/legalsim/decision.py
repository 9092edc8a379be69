"""Decision backends, batched dispatch, and answer parsing.

A backend is anything with a ``complete(prompt, *, temperature,
max_tokens, context)`` method returning raw text.  Two kinds ship here: a
remote chat-completion endpoint and a scripted policy that answers from
structured context without reading the prompt.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Mapping, Protocol, Sequence

import httpx

from .errors import (
    BackendError,
    BackendTimeout,
    BackendUnavailable,
    ConfigError,
    OutOfRangeLetter,
    RateLimited,
    UnparseableResponse,
)
from .population import AgentProfile
from .scenario import LETTERS, Scene

log = logging.getLogger(__name__)

DEFAULT_MAX_TOKENS = 16
DEFAULT_TEMPERATURE = 1.0


@dataclass(frozen=True)
class DecisionRequest:
    request_id: str
    prompt: str
    num_options: int
    temperature: float = DEFAULT_TEMPERATURE
    max_output_tokens: int = DEFAULT_MAX_TOKENS
    # structured inputs for scripted backends; remote backends ignore it
    context: Mapping[str, Any] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.num_options < 2:
            raise ValueError("num_options must be >= 2")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class DecisionResponse:
    request_id: str
    text: str | None
    error: str | None = None
    attempts: int = 1

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class DecisionRecord:
    request_id: str
    agent_id: int
    scene_id: str
    chosen_option: int | None
    raw_text: str | None
    backend_id: str
    is_crime: bool
    punishment_level: int | None = None
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "request_id": self.request_id,
            "agent_id": self.agent_id,
            "scene_id": self.scene_id,
            "punishment_level": self.punishment_level,
            "chosen_option": self.chosen_option,
            "is_crime": self.is_crime,
            "raw_text": self.raw_text,
            "backend_id": self.backend_id,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "DecisionRecord":
        return cls(**{k: d.get(k) for k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "scripted"  # "remote_chat" | "scripted"
    endpoint_url: str = ""
    model_name: str = ""
    api_key_env_var: str = "OPENAI_API_KEY"
    max_concurrency: int = 8
    retry_limit: int = 3
    timeout: float = 60.0
    backoff_base: float = 0.5
    backoff_max: float = 30.0
    system_prompt: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("remote_chat", "scripted"):
            raise ConfigError(f"unknown backend kind {self.kind!r}")
        if self.max_concurrency < 1:
            raise ConfigError("max_concurrency must be >= 1")
        if self.retry_limit < 0:
            raise ConfigError("retry_limit must be >= 0")
        if self.kind == "remote_chat" and not self.endpoint_url:
            raise ConfigError("remote_chat backend needs endpoint_url")

    @classmethod
    def from_file(cls, path: str | Path) -> "BackendConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if "api_key" in doc:
            raise ConfigError("API keys are read from the environment; use api_key_env_var")
        known = {k: v for k, v in doc.items() if k in cls.__dataclass_fields__}
        return cls(**known)


class Backend(Protocol):
    backend_id: str
    config: BackendConfig

    def complete(
        self,
        prompt: str,
        *,
        temperature: float = DEFAULT_TEMPERATURE,
        max_tokens: int = DEFAULT_MAX_TOKENS,
        context: Mapping[str, Any] | None = None,
    ) -> str: ...


class RemoteChatBackend:
    """Chat-completion endpoint speaking the common OpenAI-style JSON shape."""

    def __init__(self, config: BackendConfig, transport: httpx.BaseTransport | None = None):
        if config.kind != "remote_chat":
            raise ConfigError("RemoteChatBackend needs a remote_chat config")
        self.config = config
        self.backend_id = f"remote:{config.model_name or config.endpoint_url}"
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(config.api_key_env_var) if config.api_key_env_var else None
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._client = httpx.Client(
            timeout=config.timeout,
            headers=headers,
            transport=transport,
            limits=httpx.Limits(max_connections=config.max_concurrency),
        )

    def close(self) -> None:
        self._client.close()

    def payload(self, prompt: str, temperature: float, max_tokens: int) -> dict[str, Any]:
        messages = []
        if self.config.system_prompt:
            messages.append({"role": "system", "content": self.config.system_prompt})
        messages.append({"role": "user", "content": prompt})
        return {
            "model": self.config.model_name,
            "messages": messages,
            "temperature": temperature,
            "max_tokens": max_tokens,
        }

    def complete(
        self,
        prompt: str,
        *,
        temperature: float = DEFAULT_TEMPERATURE,
        max_tokens: int = DEFAULT_MAX_TOKENS,
        context: Mapping[str, Any] | None = None,
    ) -> str:
        body = self.payload(prompt, temperature, max_tokens)
        try:
            resp = self._client.post(self.config.endpoint_url, json=body)
        except httpx.TimeoutException as exc:
            raise BackendTimeout(None, str(exc) or "request timed out") from exc
        except httpx.TransportError as exc:
            raise BackendUnavailable(str(exc)) from exc
        if resp.status_code == 429:
            raise RateLimited(f"HTTP 429: {resp.text[:200]}")
        if resp.status_code >= 500:
            raise BackendUnavailable(f"HTTP {resp.status_code}: {resp.text[:200]}")
        if resp.status_code >= 400:
            raise BackendError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion response: {exc}") from exc


class ScriptedBackend:
    """Wraps a ``responder(prompt, context) -> text`` callable."""

    def __init__(self, responder: Callable[[str, Mapping[str, Any]], str], backend_id: str = "scripted"):
        self._responder = responder
        self.backend_id = backend_id
        self.config = BackendConfig(kind="scripted", max_concurrency=1, retry_limit=0)

    def complete(
        self,
        prompt: str,
        *,
        temperature: float = DEFAULT_TEMPERATURE,
        max_tokens: int = DEFAULT_MAX_TOKENS,
        context: Mapping[str, Any] | None = None,
    ) -> str:
        return self._responder(prompt, context or {})


_RETRYABLE = (RateLimited, BackendTimeout, BackendUnavailable)


def complete_with_retry(
    backend: Backend,
    prompt: str,
    *,
    request_id: str = "",
    temperature: float = DEFAULT_TEMPERATURE,
    max_tokens: int = DEFAULT_MAX_TOKENS,
    context: Mapping[str, Any] | None = None,
) -> tuple[str, int]:
    """Call the backend, retrying transient failures with exponential backoff.

    Returns ``(text, attempts)``; raises the last error once retries run out.
    """
    cfg = backend.config
    attempt = 0
    while True:
        attempt += 1
        try:
            return (
                backend.complete(prompt, temperature=temperature, max_tokens=max_tokens, context=context),
                attempt,
            )
        except _RETRYABLE as exc:
            if attempt > cfg.retry_limit:
                if isinstance(exc, BackendTimeout):
                    raise BackendTimeout(request_id) from exc
                raise
            delay = min(cfg.backoff_max, cfg.backoff_base * 2 ** (attempt - 1))
            log.info("request %s attempt %d failed (%s); retrying in %.2fs", request_id, attempt, exc, delay)
            time.sleep(delay)


def decide_batch(requests: Sequence[DecisionRequest], backend: Backend) -> list[DecisionResponse]:
    """Answer every request; output order matches input order.

    Requests run on a pool bounded by ``backend.config.max_concurrency``.
    A request that still fails after retries yields a response with
    ``error`` set rather than being dropped.
    """
    if not requests:
        return []

    def one(req: DecisionRequest) -> DecisionResponse:
        try:
            text, attempts = complete_with_retry(
                backend,
                req.prompt,
                request_id=req.request_id,
                temperature=req.temperature,
                max_tokens=req.max_output_tokens,
                context=req.context,
            )
        except BackendError as exc:
            log.warning("request %s failed: %s", req.request_id, exc)
            return DecisionResponse(req.request_id, None, f"{type(exc).__name__}: {exc}", backend.config.retry_limit + 1)
        return DecisionResponse(req.request_id, text, None, attempts)

    workers = min(backend.config.max_concurrency, len(requests))
    if workers == 1:
        return [one(r) for r in requests]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, requests))


# --- parsing --------------------------------------------------------------

# a letter followed by a lowercase word ("I think", "A person") is prose, not an answer
_ANSWER_RE = re.compile(r"answer\s*[:：]\s*\**\s*\(?\s*([A-Za-z])(?![A-Za-z])(?!\s+[a-z])", re.IGNORECASE)
_BARE_RE = re.compile(r"^\W*([A-Za-z])\W*$")
_UPPER_TOKEN_RE = re.compile(r"(?<![A-Za-z'])([A-Z])(?![A-Za-z'])")


def parse_choice(raw: str, num_options: int) -> int:
    """Extract a zero-based option index from a letter answer.

    Looks first for a letter after an ``Answer:`` marker, then for a reply
    that is just a letter (any case, optional punctuation), then for the
    first standalone capital letter within range.  Lowercase letters in
    running text are not considered, since ``a`` is usually an article.
    """
    if not 2 <= num_options <= 26:
        raise ValueError("num_options must be in [2, 26]")
    if raw is None:
        raise UnparseableResponse("empty response")
    valid = LETTERS[:num_options]

    # the prompt ends with "Answer:", so echo-style replies show up here
    for m in _ANSWER_RE.finditer(raw):
        letter = m.group(1).upper()
        if letter in valid:
            return valid.index(letter)
        raise OutOfRangeLetter(f"answer letter {letter!r} outside A..{valid[-1]}")

    bare = _BARE_RE.match(raw.strip())
    if bare:
        letter = bare.group(1).upper()
        if letter in valid:
            return valid.index(letter)
        raise OutOfRangeLetter(f"answer letter {letter!r} outside A..{valid[-1]}")

    for m in _UPPER_TOKEN_RE.finditer(raw):
        if m.group(1) in valid:
            return valid.index(m.group(1))
    raise UnparseableResponse(f"no option letter in {raw[:80]!r}")


# --- scripted policies ----------------------------------------------------

_PROFILE_FIELDS = ("gender", "education", "employed", "drug_use", "gang_exposed", "religion", "immigrant")


@dataclass(frozen=True)
class PolicyRule:
    """One row of a scripted policy table.

    Predicates are exact matches on profile fields plus optional age and
    punishment-level bounds; ``level_absent`` matches the no-impression
    baseline.  ``option`` is an index or ``"legal"`` / ``"illegal"``.
    ``probability`` makes the rule fire for a deterministic pseudo-random
    fraction of agents; on a miss evaluation falls through.
    """

    option: int | str
    match: Mapping[str, Any] = field(default_factory=dict)
    age_min: int | None = None
    age_max: int | None = None
    level_min: int | None = None
    level_max: int | None = None
    level_absent: bool | None = None
    scene_id: str | None = None
    probability: float | Mapping[str, float] | None = None

    @property
    def is_default(self) -> bool:
        return (
            not self.match
            and self.age_min is None
            and self.age_max is None
            and self.level_min is None
            and self.level_max is None
            and self.level_absent is None
            and self.scene_id is None
            and self.probability is None
        )

    def matches(self, profile: AgentProfile, scene: Scene, level: int | None) -> bool:
        for key, want in self.match.items():
            if getattr(profile, key) != want:
                return False
        if self.age_min is not None and profile.age < self.age_min:
            return False
        if self.age_max is not None and profile.age > self.age_max:
            return False
        if self.scene_id is not None and scene.scene_id != self.scene_id:
            return False
        if self.level_absent is not None and (level is None) != self.level_absent:
            return False
        if self.level_min is not None and (level is None or level < self.level_min):
            return False
        if self.level_max is not None and (level is None or level > self.level_max):
            return False
        return True

    def fire_probability(self, level: int | None) -> float:
        if self.probability is None:
            return 1.0
        if isinstance(self.probability, Mapping):
            key = "none" if level is None else str(level)
            return float(self.probability.get(key, 0.0))
        return float(self.probability)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PolicyRule":
        d = dict(d)
        option = d.pop("option", d.pop("option_index", None))
        if option is None:
            raise ConfigError(f"policy rule without option: {d}")
        match = {k: d.pop(k) for k in list(d) if k in _PROFILE_FIELDS}
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"unknown policy rule fields: {sorted(unknown)}")
        return cls(option=option, match=match, **known)


@dataclass(frozen=True)
class PolicyTable:
    name: str
    rules: tuple[PolicyRule, ...]
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.rules or not self.rules[-1].is_default:
            raise ConfigError(f"policy {self.name!r} must end with an unconditional default rule")

    @classmethod
    def from_json(cls, doc: Any, name: str = "custom", seed: int = 0) -> "PolicyTable":
        if isinstance(doc, Mapping):
            name = str(doc.get("name", name))
            seed = int(doc.get("seed", seed))
            doc = doc["rules"]
        return cls(name=name, rules=tuple(PolicyRule.from_dict(r) for r in doc), seed=seed)


def load_policy_table(path: str | Path, seed: int = 0) -> PolicyTable:
    p = Path(path)
    return PolicyTable.from_json(json.loads(p.read_text(encoding="utf-8")), name=p.stem, seed=seed)


def builtin_policy_names() -> list[str]:
    files = resources.files("legalsim.data.policies").iterdir()
    return sorted(p.name[:-5] for p in files if p.name.endswith(".json"))


def builtin_policy(name: str, seed: int = 0) -> PolicyTable:
    path = resources.files("legalsim.data.policies") / f"{name}.json"
    if not path.is_file():
        raise ConfigError(f"unknown scripted policy {name!r}; built-ins: {builtin_policy_names()}")
    return PolicyTable.from_json(json.loads(path.read_text("utf-8")), name=name, seed=seed)


def agent_uniform(seed: int, agent_id: int, scene_id: str, salt: str = "") -> float:
    """Deterministic uniform in [0, 1) keyed by agent and scene.

    Independent of the punishment level, so a probability schedule that
    falls with level selects nested sets of agents.
    """
    digest = hashlib.blake2b(f"{seed}|{agent_id}|{scene_id}|{salt}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2**64


def _resolve_option(option: int | str, scene: Scene) -> int:
    if isinstance(option, int):
        if not 0 <= option < len(scene.options):
            raise ConfigError(f"option {option} out of range for scene {scene.scene_id!r}")
        return option
    if option == "illegal":
        return scene.illegal_indices[0]
    if option == "legal":
        return scene.legal_indices[0]
    raise ConfigError(f"policy option must be an index, 'legal' or 'illegal', got {option!r}")


def scripted_choice(profile: AgentProfile, scene: Scene, level: int | None, table: PolicyTable) -> int:
    for i, rule in enumerate(table.rules):
        if not rule.matches(profile, scene, level):
            continue
        p = rule.fire_probability(level)
        if p < 1.0 and agent_uniform(table.seed, profile.agent_id, scene.scene_id, f"rule{i}") >= p:
            continue
        return _resolve_option(rule.option, scene)
    raise AssertionError("unreachable: policy tables end with a default rule")


def scripted_policy(profile: AgentProfile, scene: Scene, level: int | None, policy_table: PolicyTable) -> str:
    return f"Answer: {LETTERS[scripted_choice(profile, scene, level, policy_table)]}"


class ScriptedPolicyBackend(ScriptedBackend):
    """Answers macro decision requests from a policy table.

    Expects ``context`` to carry ``profile``, ``scene`` and ``level``.
    """

    def __init__(self, table: PolicyTable):
        self.table = table
        super().__init__(self._respond, backend_id=f"scripted:{table.name}")

    def _respond(self, prompt: str, context: Mapping[str, Any]) -> str:
        return scripted_policy(context["profile"], context["scene"], context.get("level"), self.table)


def make_macro_backend(spec: str, seed: int = 0) -> Backend:
    """Build a backend from a CLI spec.

    ``scripted:<name>`` uses a built-in policy, ``scripted:<file.json>`` a
    policy file, ``remote:<config.json>`` a remote endpoint.
    """
    kind, _, arg = spec.partition(":")
    if kind == "scripted":
        if not arg:
            raise ConfigError("scripted backend needs a policy name or file")
        if arg.endswith(".json") or Path(arg).is_file():
            return ScriptedPolicyBackend(load_policy_table(arg, seed=seed))
        return ScriptedPolicyBackend(builtin_policy(arg, seed=seed))
    if kind == "remote":
        return RemoteChatBackend(load_remote_config(arg))
    raise ConfigError(f"unknown backend spec {spec!r}")


def load_remote_config(arg: str) -> BackendConfig:
    if arg and Path(arg).is_file():
        return BackendConfig.from_file(arg)
    endpoint = arg or os.environ.get("LEGALSIM_ENDPOINT", "")
    if not endpoint:
        raise ConfigError("remote backend needs a config file or LEGALSIM_ENDPOINT")
    return BackendConfig(
        kind="remote_chat",
        endpoint_url=endpoint,
        model_name=os.environ.get("LEGALSIM_MODEL", ""),
        api_key_env_var=os.environ.get("LEGALSIM_API_KEY_ENV", "OPENAI_API_KEY"),
    )


__all__ = [
    "BackendConfig",
    "DecisionRecord",
    "DecisionRequest",
    "DecisionResponse",
    "PolicyRule",
    "PolicyTable",
    "RemoteChatBackend",
    "ScriptedBackend",
    "ScriptedPolicyBackend",
    "builtin_policy",
    "decide_batch",
    "make_macro_backend",
    "parse_choice",
    "scripted_policy",
]
