"""LLM and faithfulness-scorer clients: wire contracts, caching, and mocks.

Wire contracts:
  - LLM endpoint: POST {"model", "temperature", "messages": [{"role":
    "user", "content"}]} -> {"text": str}; bearer token from the
    TN_EVAL_API_KEY environment variable when set.
  - Scorer endpoint: POST {"claim": str, "context": str} -> {"score":
    number in [0, 1]}.

The cache is content-addressed: one file per cache key holding the raw
reply, written atomically, so re-runs replay byte-identical responses
without touching the network.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import requests

from .prompts import PromptRecord, prompt_sha256

API_KEY_ENV = "TN_EVAL_API_KEY"


class TransportError(RuntimeError):
    """A call to the LLM or scorer endpoint failed."""


class ClientConfigError(ValueError):
    """Invalid judge configuration."""


@dataclass(frozen=True)
class JudgeConfig:
    model_id: str
    endpoint: str = ""
    temperature: float = 0.0
    max_in_flight: int = 4
    max_retries: int = 2
    cache_dir: str | None = None

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ClientConfigError("temperature must be >= 0")
        if self.max_in_flight < 1:
            raise ClientConfigError("max_in_flight must be >= 1")
        if self.max_retries < 0:
            raise ClientConfigError("max_retries must be >= 0")


class ResponseCache:
    """Content-addressed reply store; concurrent readers, serialized writers."""

    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.txt"

    def get(self, key: str) -> str | None:
        path = self._path(key)
        if not path.exists():
            return None
        return path.read_text(encoding="utf-8")

    def put(self, key: str, reply: str) -> None:
        with self._write_lock:
            fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as fh:
                    fh.write(reply)
                os.replace(tmp, self._path(key))
            finally:
                if os.path.exists(tmp):
                    os.unlink(tmp)


# A transport turns a rendered prompt into a raw reply string.
Transport = Callable[[str, JudgeConfig], str]


def http_transport(prompt: str, config: JudgeConfig) -> str:
    if not config.endpoint:
        raise TransportError("no LLM endpoint configured")
    headers = {}
    api_key = os.environ.get(API_KEY_ENV)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    body = {
        "model": config.model_id,
        "temperature": config.temperature,
        "messages": [{"role": "user", "content": prompt}],
    }
    try:
        response = requests.post(config.endpoint, json=body, headers=headers,
                                 timeout=300)
    except requests.RequestException as exc:
        raise TransportError(f"LLM call failed: {exc}") from None
    if response.status_code != 200:
        raise TransportError(f"LLM endpoint returned "
                             f"{response.status_code}: {response.text[:200]}")
    try:
        text = response.json()["text"]
    except (ValueError, KeyError):
        raise TransportError("LLM reply does not expose a 'text' field") \
            from None
    if not isinstance(text, str):
        raise TransportError("LLM reply 'text' field is not a string")
    return text


class ScriptedTransport:
    """Replies keyed by sha256 of the rendered prompt, from a JSONL file.

    Lets the whole pipeline run offline and deterministically."""

    def __init__(self, replies: Mapping[str, str]) -> None:
        self.replies = dict(replies)

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "ScriptedTransport":
        replies = {}
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                try:
                    replies[record["prompt_sha256"]] = record["reply"]
                except KeyError as exc:
                    raise ClientConfigError(
                        f"{path}:{line_no}: scripted reply missing "
                        f"{exc.args[0]!r}") from None
        return cls(replies)

    def __call__(self, prompt: str, config: JudgeConfig) -> str:
        key = prompt_sha256(prompt)
        if key not in self.replies:
            raise TransportError(f"no scripted reply for prompt hash {key}")
        return self.replies[key]


class StaticTransport:
    """Always replies with the same text (test double)."""

    def __init__(self, reply: str) -> None:
        self.reply = reply

    def __call__(self, prompt: str, config: JudgeConfig) -> str:
        return self.reply


@dataclass
class Completion:
    reply: str
    from_cache: bool


class LlmClient:
    """Caching, retrying front of a transport. Thread-safe up to
    config.max_in_flight concurrent callers."""

    def __init__(self, config: JudgeConfig,
                 transport: Transport = http_transport,
                 cache: ResponseCache | None = None) -> None:
        self.config = config
        self.transport = transport
        if cache is None and config.cache_dir:
            cache = ResponseCache(config.cache_dir)
        self.cache = cache
        self.calls = 0
        self._calls_lock = threading.Lock()

    @property
    def model_id(self) -> str:
        return self.config.model_id

    def _call_transport(self, prompt: str) -> str:
        with self._calls_lock:
            self.calls += 1
        return self.transport(prompt, self.config)

    def complete(self, record: PromptRecord,
                 bypass_cache: bool = False) -> Completion:
        """Raw reply for a rendered prompt; transport errors are retried up
        to max_retries times. bypass_cache forces a fresh call (the cache is
        still updated)."""
        if self.cache is not None and not bypass_cache:
            cached = self.cache.get(record.cache_key)
            if cached is not None:
                return Completion(cached, from_cache=True)
        last_error: TransportError | None = None
        for _ in range(1 + self.config.max_retries):
            try:
                reply = self._call_transport(record.rendered_text)
                break
            except TransportError as exc:
                last_error = exc
        else:
            raise last_error  # type: ignore[misc]
        if self.cache is not None:
            self.cache.put(record.cache_key, reply)
        return Completion(reply, from_cache=False)


# ---------------------------------------------------------------------------
# Faithfulness scorer
# ---------------------------------------------------------------------------

class ScorerError(RuntimeError):
    """The scorer endpoint misbehaved (unreachable or out-of-range score)."""


def claim_context_sha256(claim: str, context: str) -> str:
    digest = hashlib.sha256()
    digest.update(claim.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(context.encode("utf-8"))
    return digest.hexdigest()


ScorerTransport = Callable[[str, str], float]


def http_scorer_transport(endpoint: str, timeout: float = 300) -> ScorerTransport:
    def call(claim: str, context: str) -> float:
        try:
            response = requests.post(endpoint,
                                     json={"claim": claim, "context": context},
                                     timeout=timeout)
        except requests.RequestException as exc:
            raise ScorerError(f"scorer call failed: {exc}") from None
        if response.status_code != 200:
            raise ScorerError(f"scorer returned {response.status_code}")
        try:
            return float(response.json()["score"])
        except (ValueError, KeyError, TypeError):
            raise ScorerError("scorer reply does not expose a numeric "
                              "'score' field") from None
    return call


class ScriptedScorer:
    """Scores keyed by sha256 of claim + context, from a JSONL file."""

    def __init__(self, scores: Mapping[str, float]) -> None:
        self.scores = dict(scores)

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "ScriptedScorer":
        scores = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                scores[record["claim_sha256"]] = float(record["score"])
        return cls(scores)

    def __call__(self, claim: str, context: str) -> float:
        key = claim_context_sha256(claim, context)
        if key not in self.scores:
            raise ScorerError(f"no scripted score for claim hash {key}")
        return self.scores[key]


@dataclass
class ScorerClient:
    """Caching front of a claim/context scorer."""

    scorer_id: str
    transport: ScorerTransport
    cache: ResponseCache | None = None
    max_retries: int = 2
    calls: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock,
                                  repr=False)

    def score(self, claim: str, context: str) -> float:
        key = "align-" + claim_context_sha256(
            self.scorer_id + "\x00" + claim, context)
        if self.cache is not None:
            cached = self.cache.get(key)
            if cached is not None:
                return float(cached)
        last_error: ScorerError | None = None
        for _ in range(1 + self.max_retries):
            try:
                with self._lock:
                    self.calls += 1
                value = self.transport(claim, context)
                break
            except ScorerError as exc:
                last_error = exc
        else:
            raise last_error  # type: ignore[misc]
        if not 0.0 <= value <= 1.0:
            raise ScorerError(f"scorer returned {value}, outside [0, 1]")
        if self.cache is not None:
            self.cache.put(key, repr(value))
        return value
