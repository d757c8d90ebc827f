"""Chat-completion gateway, two-round dialogue and query extraction.

Two backends share one interface: ``http`` talks to an OpenAI-compatible
``/chat/completions`` endpoint, ``mock`` answers from a directory of fixture
files named after a hash of the outgoing messages.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import httpx

from .graph.ontology import OntologySchema
from .graph.summary import KgSummary
from .prompts.builder import DEFAULT_TOKEN_BUDGET, build_round_one, build_round_two, system_prompt
from .prompts.cwe import CwePattern

ROLES = ("system", "user", "assistant")
BACKENDS = ("http", "mock")
DEFAULT_API_KEY_ENV = "CKG_LLM_API_KEY"
DETECT_TEMPERATURE = 0.0
PAIR_TEMPERATURE = 0.7


class EndpointError(RuntimeError):
    def __init__(self, status: Optional[int], body: str, attempts: int = 1):
        excerpt = body[:200]
        where = f"HTTP {status}" if status is not None else "transport error"
        super().__init__(f"{where} after {attempts} attempt(s): {excerpt}")
        self.status = status
        self.body = excerpt
        self.attempts = attempts


class MissingFixture(LookupError):
    def __init__(self, key: str, directory: Path):
        super().__init__(f"no mock fixture {key}.txt in {directory}")
        self.key = key
        self.directory = directory


class ExtractionFailure(ValueError):
    def __init__(self, message: str, transcript: Optional["DialogueTranscript"] = None):
        super().__init__(message)
        self.transcript = transcript


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")
        if self.role != "system" and not self.content.strip():
            raise ValueError(f"{self.role} message content must be non-empty")

    def to_dict(self) -> dict[str, str]:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class EndpointConfig:
    backend: str = "mock"
    base_url: Optional[str] = None
    model_name: str = "default"
    api_key_ref: str = DEFAULT_API_KEY_ENV
    temperature: float = DETECT_TEMPERATURE
    max_retries: int = 3
    timeout: float = 60.0
    fixture_dir: Optional[Path] = None
    backoff_base: float = 0.5
    max_in_flight: int = 4
    requests_per_second: Optional[float] = None

    def __post_init__(self) -> None:
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.backend == "http" and not self.base_url:
            raise ValueError("the http backend requires base_url")
        if self.backend == "mock" and self.fixture_dir is None:
            raise ValueError("the mock backend requires fixture_dir")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.timeout <= 0 or self.max_in_flight < 1:
            raise ValueError("timeout must be positive and max_in_flight at least 1")
        if self.requests_per_second is not None and self.requests_per_second <= 0:
            raise ValueError("requests_per_second must be positive")
        if self.fixture_dir is not None and not isinstance(self.fixture_dir, Path):
            object.__setattr__(self, "fixture_dir", Path(self.fixture_dir))


def message_key(messages: Sequence[ChatMessage]) -> str:
    """Stable hash of the message list; names mock fixtures."""
    canonical = json.dumps([[m.role, m.content] for m in messages], ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def fixture_path(directory: Path, messages: Sequence[ChatMessage], sample: Optional[int] = None) -> Path:
    key = message_key(messages)
    return Path(directory) / (f"{key}-{sample}.txt" if sample is not None else f"{key}.txt")


def write_fixture(directory: Path, messages: Sequence[ChatMessage], reply: str, sample: Optional[int] = None) -> Path:
    path = fixture_path(directory, messages, sample)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(reply, encoding="utf-8")
    return path


class TokenBucket:
    """Classic token bucket; ``acquire`` blocks until a token is available."""

    def __init__(
        self,
        rate: float,
        capacity: float = 1.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.rate = rate
        self.capacity = capacity
        self.tokens = capacity
        self.clock = clock
        self.sleep = sleep
        self.updated = clock()
        self.lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self.lock:
                now = self.clock()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1:
                    self.tokens -= 1
                    return
                wait = (1 - self.tokens) / self.rate
            self.sleep(wait)


@dataclass(frozen=True)
class Completion:
    text: str
    attempts: int
    latency: float


def _is_transient_status(status: int) -> bool:
    return status in (408, 429) or 500 <= status <= 599


class LlmGateway:
    """Sends chat requests with retries, an in-flight cap and optional rate limiting."""

    def __init__(
        self,
        cfg: EndpointConfig,
        transport: Optional[httpx.BaseTransport] = None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.perf_counter,
    ):
        self.cfg = cfg
        self.sleep = sleep
        self.clock = clock
        self.slots = threading.BoundedSemaphore(cfg.max_in_flight)
        self.bucket = TokenBucket(cfg.requests_per_second, sleep=sleep) if cfg.requests_per_second else None
        self._transport = transport
        self._client: Optional[httpx.Client] = None

    def close(self) -> None:
        if self._client is not None:
            self._client.close()
            self._client = None

    def __enter__(self) -> "LlmGateway":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

    def _http(self) -> httpx.Client:
        if self._client is None:
            self._client = httpx.Client(timeout=self.cfg.timeout, transport=self._transport)
        return self._client

    def complete(self, messages: Sequence[ChatMessage], sample: Optional[int] = None) -> Completion:
        start = self.clock()
        if self.cfg.backend == "mock":
            text = self._mock(messages, sample)
            return Completion(text, 1, max(0.0, self.clock() - start))
        with self.slots:
            text, attempts = self._post(messages)
        return Completion(text, attempts, max(0.0, self.clock() - start))

    def _mock(self, messages: Sequence[ChatMessage], sample: Optional[int]) -> str:
        assert self.cfg.fixture_dir is not None
        candidates = [fixture_path(self.cfg.fixture_dir, messages, sample)] if sample is not None else []
        candidates.append(fixture_path(self.cfg.fixture_dir, messages))
        for path in candidates:
            if path.is_file():
                return path.read_text(encoding="utf-8")
        raise MissingFixture(candidates[0].stem, self.cfg.fixture_dir)

    def _post(self, messages: Sequence[ChatMessage]) -> tuple[str, int]:
        cfg = self.cfg
        url = cfg.base_url.rstrip("/") + "/chat/completions"  # type: ignore[union-attr]
        body = {
            "model": cfg.model_name,
            "messages": [m.to_dict() for m in messages],
            "temperature": cfg.temperature,
        }
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(cfg.api_key_ref)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        attempt = 0
        while True:
            attempt += 1
            if self.bucket is not None:
                self.bucket.acquire()
            try:
                resp = self._http().post(url, json=body, headers=headers)
            except (httpx.TimeoutException, httpx.ConnectError) as exc:
                if attempt > cfg.max_retries:
                    raise EndpointError(None, str(exc), attempt) from exc
            else:
                if resp.status_code == 200:
                    return self._content(resp, attempt), attempt
                if not _is_transient_status(resp.status_code) or attempt > cfg.max_retries:
                    raise EndpointError(resp.status_code, resp.text, attempt)
            self.sleep(cfg.backoff_base * 2 ** (attempt - 1))

    @staticmethod
    def _content(resp: httpx.Response, attempt: int) -> str:
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            raise EndpointError(resp.status_code, "malformed completion body: " + resp.text, attempt) from None
        if not isinstance(content, str):
            raise EndpointError(resp.status_code, "completion content is not text", attempt)
        return content


def complete(
    messages: Sequence[ChatMessage],
    cfg: EndpointConfig,
    gateway: Optional[LlmGateway] = None,
    sample: Optional[int] = None,
) -> str:
    if gateway is not None:
        return gateway.complete(messages, sample).text
    with LlmGateway(cfg) as gw:
        return gw.complete(messages, sample).text


_FENCE = re.compile(r"```[ \t]*([A-Za-z0-9_-]*)[^\n]*\n(.*?)```", re.DOTALL)
_START = re.compile(r"\b(PREFIX|SELECT)\b", re.IGNORECASE)
_SELECT = re.compile(r"\bSELECT\b", re.IGNORECASE)
_LIMIT_TAIL = re.compile(r"\s*LIMIT\s+\d+", re.IGNORECASE)


def extract_sparql(reply: str) -> str:
    """Last ``sparql`` (or unlabeled SELECT-bearing) fence wins; else a bare-query fallback."""
    blocks = []
    for m in _FENCE.finditer(reply):
        label, body = m.group(1).lower(), m.group(2)
        if label == "sparql" or (label == "" and _SELECT.search(body)):
            blocks.append(body.strip())
    blocks = [b for b in blocks if b]
    if blocks:
        return blocks[-1]
    start = _START.search(reply)
    if start is not None:
        end = reply.rfind("}")
        if end > start.start():
            tail = _LIMIT_TAIL.match(reply, end + 1)
            stop = tail.end() if tail else end + 1
            return reply[start.start():stop].strip()
    raise ExtractionFailure("no SPARQL query found in the reply")


@dataclass
class DialogueRound:
    messages: list[ChatMessage]
    reply: str
    latency: float
    attempts: int = 1

    def to_dict(self) -> dict:
        return {
            "messages": [m.to_dict() for m in self.messages],
            "reply": self.reply,
            "latency": self.latency,
            "attempts": self.attempts,
        }


@dataclass
class DialogueTranscript:
    rounds: list[DialogueRound] = field(default_factory=list)
    extracted_query: Optional[str] = None

    def add(self, rnd: DialogueRound) -> None:
        if len(self.rounds) >= 2:
            raise ValueError("a dialogue has at most two rounds")
        if rnd.latency < 0:
            raise ValueError("latency must be non-negative")
        self.rounds.append(rnd)

    @property
    def latency(self) -> float:
        return sum(r.latency for r in self.rounds)

    def to_dict(self, include_latency: bool = True) -> dict:
        rounds = []
        for r in self.rounds:
            d = r.to_dict()
            if not include_latency:
                del d["latency"]
            rounds.append(d)
        return {"rounds": rounds, "extracted_query": self.extracted_query}

    def digest(self) -> str:
        """Hash of prompts, replies and query; latencies are excluded so mock runs compare equal."""
        data = json.dumps(self.to_dict(include_latency=False), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(data.encode("utf-8")).hexdigest()


def round_one_messages(pattern: CwePattern, schema: OntologySchema, summary: KgSummary,
                       token_budget: int = DEFAULT_TOKEN_BUDGET) -> list[ChatMessage]:
    prompt = build_round_one(pattern, schema, summary, token_budget)
    return [ChatMessage("system", system_prompt()), ChatMessage("user", prompt.text)]


def round_two_messages(round1_reply: str, pattern: CwePattern, schema: OntologySchema) -> list[ChatMessage]:
    prompt = build_round_two(round1_reply, pattern, schema)
    return [ChatMessage("system", system_prompt()), ChatMessage("user", prompt.text)]


def run_two_rounds(
    pattern: CwePattern,
    schema: OntologySchema,
    summary: KgSummary,
    cfg: EndpointConfig,
    gateway: Optional[LlmGateway] = None,
    sample: Optional[int] = None,
    token_budget: int = DEFAULT_TOKEN_BUDGET,
    transcript: Optional[DialogueTranscript] = None,
) -> DialogueTranscript:
    """Reasoning round, then query round; raises ExtractionFailure with the partial transcript attached.

    Pass ``transcript`` to have rounds recorded into a caller-owned object even
    when an exception escapes.
    """
    owned = gateway is None
    gw = gateway if gateway is not None else LlmGateway(cfg)
    tr = transcript if transcript is not None else DialogueTranscript()
    try:
        msgs1 = round_one_messages(pattern, schema, summary, token_budget)
        c1 = gw.complete(msgs1, sample)
        tr.add(DialogueRound(msgs1, c1.text, c1.latency, c1.attempts))
        if not c1.text.strip():
            raise ExtractionFailure("round-1 reply is empty", tr)
        msgs2 = round_two_messages(c1.text, pattern, schema)
        c2 = gw.complete(msgs2, sample)
        tr.add(DialogueRound(msgs2, c2.text, c2.latency, c2.attempts))
        try:
            tr.extracted_query = extract_sparql(c2.text)
        except ExtractionFailure as exc:
            raise ExtractionFailure(str(exc), tr) from None
        return tr
    finally:
        if owned:
            gw.close()
