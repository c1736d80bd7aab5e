"""Uniform client for chat-completion backends.

Three model roles share one wire protocol (POST /chat/completions with a
model name and a messages array): the conversational model that writes
code, the extraction model that emits triples, and a locally served
fine-tuned student. A deterministic scripted mock stands in for all of
them in tests and demo mode, behind the same retry policy.
"""

from __future__ import annotations

import json
import logging
import os
import string
import time
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Sequence

import httpx

from .errors import (
    AuthFailure,
    GatewayError,
    GatewayTimeout,
    MalformedDocument,
    MalformedResponse,
    RateLimited,
)

logger = logging.getLogger(__name__)

Message = dict[str, str]   # {"role": ..., "content": ...}

MAX_COMPLETION_CHARS = 1_000_000   # anything longer is treated as truncation risk


class Role(str, Enum):
    CONVERSATIONAL = "conversational"
    EXTRACTOR = "extractor"
    STUDENT = "student"


@dataclass(frozen=True)
class ModelEndpoint:
    base_url: str
    model_name: str
    role: Role
    api_key_ref: Optional[str] = None    # name of the env var holding the key
    timeout: float = 60.0

    def __post_init__(self):
        if not (self.base_url.startswith("http://")
                or self.base_url.startswith("https://")
                or self.base_url.startswith("mock://")):
            raise MalformedDocument(f"bad base_url {self.base_url!r}")
        if self.timeout <= 0:
            raise MalformedDocument("endpoint timeout must be > 0")


@dataclass(frozen=True)
class Usage:
    prompt_tokens: int
    completion_tokens: int
    approximate: bool = False   # True when counted by whitespace fallback


@dataclass(frozen=True)
class ChatExchange:
    messages: tuple[Message, ...]
    response: str
    usage: Usage
    latency_ms: float


def approx_token_count(text: str) -> int:
    """Whitespace-token fallback used when a backend omits usage."""
    return len(text.split())


class ChatGateway:
    """Completion client with a shared retry policy.

    Transient failures (timeouts, rate limits, 5xx) are retried up to
    `retries` times with exponential backoff; a run of transient failures
    surfaces as RateLimited (or GatewayTimeout if the last one timed out).
    Subclasses implement a single attempt.
    """

    retries = 2
    backoff_base = 0.5

    def complete(self, endpoint: ModelEndpoint, messages: Sequence[Message]) -> ChatExchange:
        last_exc: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt and self.backoff_base:
                time.sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                return self._attempt(endpoint, messages)
            except (GatewayTimeout, RateLimited) as exc:
                last_exc = exc
                logger.debug("attempt %d for %s failed: %s", attempt + 1,
                             endpoint.role.value, exc)
        if isinstance(last_exc, GatewayTimeout):
            raise last_exc
        raise RateLimited(f"gave up after {self.retries + 1} attempts: {last_exc}")

    def _attempt(self, endpoint: ModelEndpoint, messages: Sequence[Message]) -> ChatExchange:
        raise NotImplementedError


class HttpChatGateway(ChatGateway):
    """Talks the chat-completions HTTP protocol, with an optional audit log.

    Responses the backend flags as cut off (finish_reason "length") raise
    MalformedResponse rather than returning silently truncated text.
    """

    def __init__(self, audit_log: Optional[Path] = None,
                 client: Optional[httpx.Client] = None):
        self._audit_log = audit_log
        self._client = client or httpx.Client()

    def _attempt(self, endpoint: ModelEndpoint, messages: Sequence[Message]) -> ChatExchange:
        payload = {"model": endpoint.model_name, "messages": list(messages)}
        headers = {"Content-Type": "application/json"}
        if endpoint.api_key_ref:
            key = os.environ.get(endpoint.api_key_ref)
            if not key:
                raise AuthFailure(f"environment variable {endpoint.api_key_ref} is not set")
            headers["Authorization"] = f"Bearer {key}"

        url = endpoint.base_url.rstrip("/") + "/chat/completions"
        start = time.monotonic()
        try:
            reply = self._client.post(url, json=payload, headers=headers,
                                      timeout=endpoint.timeout)
        except httpx.TimeoutException as exc:
            raise GatewayTimeout(f"{url}: {exc}") from exc
        except httpx.HTTPError as exc:
            raise RateLimited(f"{url}: {exc}") from exc
        if reply.status_code in (401, 403):
            raise AuthFailure(f"{url} returned {reply.status_code}")
        if reply.status_code == 429 or reply.status_code >= 500:
            raise RateLimited(f"{url} returned {reply.status_code}")
        if reply.status_code != 200:
            raise GatewayError(f"{url} returned {reply.status_code}: {reply.text[:500]}")
        exchange = self._parse_reply(reply.json(), messages,
                                     (time.monotonic() - start) * 1000.0)
        self._audit(endpoint, exchange)
        return exchange

    def _parse_reply(self, body: Any, messages: Sequence[Message],
                     latency_ms: float) -> ChatExchange:
        try:
            choice = body["choices"][0]
            content = choice["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(f"reply missing choices/message: {exc}") from exc
        if content is None:
            raise MalformedResponse("reply content is null")
        if choice.get("finish_reason") == "length" or len(content) > MAX_COMPLETION_CHARS:
            raise MalformedResponse("completion was truncated by the backend")
        usage_doc = body.get("usage") or {}
        if "prompt_tokens" in usage_doc and "completion_tokens" in usage_doc:
            usage = Usage(prompt_tokens=int(usage_doc["prompt_tokens"]),
                          completion_tokens=int(usage_doc["completion_tokens"]))
        else:
            usage = Usage(
                prompt_tokens=sum(approx_token_count(m["content"]) for m in messages),
                completion_tokens=approx_token_count(content),
                approximate=True,
            )
        return ChatExchange(messages=tuple(messages), response=content,
                            usage=usage, latency_ms=latency_ms)

    def _audit(self, endpoint: ModelEndpoint, exchange: ChatExchange) -> None:
        if self._audit_log is None:
            return
        line = json.dumps({
            "role": endpoint.role.value,
            "model": endpoint.model_name,
            "messages": list(exchange.messages),
            "response": exchange.response,
            "prompt_tokens": exchange.usage.prompt_tokens,
            "completion_tokens": exchange.usage.completion_tokens,
            "latency_ms": exchange.latency_ms,
        }, sort_keys=True)
        with self._audit_log.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")


class MockChatGateway(ChatGateway):
    """Deterministic scripted gateway for tests and offline demos.

    Scripts are per-role queues. Each entry is either a response string or
    a dict: {"response": ..., "latency_ms": ..., "prompt_tokens": ...,
    "completion_tokens": ...} for a success, or {"error": "timeout" |
    "rate_limited" | "auth" | "malformed"} for a failure. Identical
    scripts and inputs always produce identical exchanges, including
    token counts (whitespace tokenization, latency from the script).
    """

    backoff_base = 0.0   # no real sleeping in tests

    def __init__(self, scripts: dict[str, list[Any]]):
        self._queues = {Role(role): list(entries) for role, entries in scripts.items()}
        self.calls: list[tuple[Role, tuple[Message, ...]]] = []

    @classmethod
    def from_file(cls, path: Path) -> "MockChatGateway":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def remaining(self, role: Role) -> int:
        return len(self._queues.get(role, []))

    def _attempt(self, endpoint: ModelEndpoint, messages: Sequence[Message]) -> ChatExchange:
        self.calls.append((endpoint.role, tuple(messages)))
        queue = self._queues.get(endpoint.role)
        if not queue:
            raise GatewayError(f"mock script exhausted for role {endpoint.role.value}")
        entry = queue.pop(0)
        if isinstance(entry, str):
            entry = {"response": entry}
        if "error" in entry:
            kind = entry["error"]
            raise {
                "timeout": GatewayTimeout,
                "rate_limited": RateLimited,
                "auth": AuthFailure,
                "malformed": MalformedResponse,
            }.get(kind, GatewayError)(f"scripted {kind} failure")
        response = entry["response"]
        if not isinstance(response, str):
            response = json.dumps(response, sort_keys=True)
        return ChatExchange(
            messages=tuple(messages),
            response=response,
            usage=Usage(
                prompt_tokens=entry.get(
                    "prompt_tokens",
                    sum(approx_token_count(m["content"]) for m in messages)),
                completion_tokens=entry.get(
                    "completion_tokens", approx_token_count(response)),
            ),
            latency_ms=float(entry.get("latency_ms", 1.0)),
        )


@dataclass
class Backends:
    """A gateway plus the endpoint each role should use."""

    gateway: ChatGateway
    endpoints: dict[Role, ModelEndpoint] = field(default_factory=dict)

    def has_role(self, role: Role) -> bool:
        return role in self.endpoints

    def chat(self, role: Role, messages: Sequence[Message]) -> ChatExchange:
        if role not in self.endpoints:
            raise GatewayError(f"no endpoint configured for role {role.value}")
        return self.gateway.complete(self.endpoints[role], messages)


def mock_backends(scripts: dict[str, list[Any]],
                  with_student: bool = False) -> Backends:
    """Backends wired to a scripted mock; used by tests and --mock mode."""
    endpoints = {
        Role.CONVERSATIONAL: ModelEndpoint(
            base_url="mock://conversational", model_name="mock-conversational",
            role=Role.CONVERSATIONAL),
        Role.EXTRACTOR: ModelEndpoint(
            base_url="mock://extractor", model_name="mock-extractor",
            role=Role.EXTRACTOR),
    }
    if with_student:
        endpoints[Role.STUDENT] = ModelEndpoint(
            base_url="mock://student", model_name="mock-student", role=Role.STUDENT)
    return Backends(gateway=MockChatGateway(scripts), endpoints=endpoints)


def load_backends(config_path: Path, audit_log: Optional[Path] = None) -> Backends:
    """Read an endpoint config file.

    Format: {"endpoints": {"conversational": {"base_url": ..., "model_name":
    ..., "api_key_ref": ..., "timeout": ...}, ...}}. api_key_ref names an
    environment variable; it must exist at load time if given.
    """
    try:
        doc = json.loads(Path(config_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedDocument(f"cannot read gateway config {config_path}: {exc}") from exc
    endpoints: dict[Role, ModelEndpoint] = {}
    for role_name, entry in doc.get("endpoints", {}).items():
        try:
            role = Role(role_name)
        except ValueError as exc:
            raise MalformedDocument(f"unknown role {role_name!r}") from exc
        endpoint = ModelEndpoint(
            base_url=entry["base_url"],
            model_name=entry["model_name"],
            role=role,
            api_key_ref=entry.get("api_key_ref"),
            timeout=float(entry.get("timeout", 60.0)),
        )
        if endpoint.api_key_ref and not os.environ.get(endpoint.api_key_ref):
            raise MalformedDocument(
                f"endpoint {role_name!r} needs environment variable "
                f"{endpoint.api_key_ref} which is not set")
        endpoints[role] = endpoint
    if not endpoints:
        raise MalformedDocument(f"no endpoints configured in {config_path}")
    return Backends(gateway=HttpChatGateway(audit_log=audit_log), endpoints=endpoints)


def strip_fences(text: str) -> str:
    """Drop a ```...``` fence if the model wrapped its output in one."""
    stripped = text.strip()
    if stripped.startswith("```"):
        first_newline = stripped.index("\n") if "\n" in stripped else len(stripped)
        stripped = stripped[first_newline + 1:]
        if stripped.rstrip().endswith("```"):
            stripped = stripped.rstrip()[:-3]
    return stripped.strip()


def render_prompt(name: str, **params: str) -> str:
    """Fill the named prompt template from alignloop/prompts/<name>.txt.

    Templates use $placeholder substitution so embedded JSON braces never
    need escaping. They live in versioned files, not code, so model
    behavior can be tuned without a rebuild.
    """
    text = resources.files("alignloop").joinpath(f"prompts/{name}.txt").read_text("utf-8")
    return string.Template(text).substitute(**params)
