"""Chat-endpoint transports, retry policy and the exchange cache.

Two transports ship: :class:`HTTPTransport` talks to an OpenAI-compatible
``/chat/completions`` endpoint, and :class:`ReplayTransport` serves canned
responses from a directory so the whole pipeline runs offline.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

from .errors import ConfigError, TransportError
from .records import atomic_write

log = logging.getLogger(__name__)

RETRYABLE_STATUS = frozenset({408, 409, 425, 429, 500, 502, 503, 504})


@dataclass(frozen=True)
class ModelConfig:
    model_name: str
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    temperature: float = 0.0
    max_tokens: int = 2048
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 120.0
    max_attempts: int = 3
    backoff_initial: float = 1.0
    backoff_factor: float = 2.0
    dialect: str = "chat"

    def __post_init__(self):
        if self.timeout <= 0:
            raise ConfigError("timeout must be positive")
        if self.max_attempts < 1:
            raise ConfigError("max_attempts must be at least 1")

    def echo(self) -> dict[str, Any]:
        # the credential itself is never part of the config
        return asdict(self)


@dataclass(frozen=True)
class Request:
    story_id: str
    model: ModelConfig
    prompt: str


@dataclass(frozen=True)
class Reply:
    text: str
    usage: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Exchange:
    story_id: str
    model_name: str
    template_digest: str
    prompt: str
    raw: str
    timestamp: str
    usage: dict[str, Any] = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.story_id, self.model_name, self.template_digest)


class Transport:
    """Sends one request; counts calls so cache behaviour is observable."""

    def __init__(self):
        self.calls = 0
        self._lock = threading.Lock()

    def send(self, request: Request) -> Reply:
        with self._lock:
            self.calls += 1
        return self._send(request)

    def _send(self, request: Request) -> Reply:
        raise NotImplementedError

    def check_credentials(self, model: ModelConfig) -> None:
        """Raise ``ConfigError`` if the transport cannot authenticate."""


class ReplayTransport(Transport):
    """Canned responses from ``<dir>/<model>/<story_id>.txt`` or ``<dir>/<story_id>.txt``."""

    def __init__(self, directory: str | Path):
        super().__init__()
        self.directory = Path(directory)

    def _send(self, request: Request) -> Reply:
        for path in (self.directory / request.model.model_name / f"{request.story_id}.txt",
                     self.directory / f"{request.story_id}.txt"):
            if path.is_file():
                return Reply(path.read_text(encoding="utf-8"))
        raise TransportError(f"no canned response for {request.story_id}", 404, "not found")


class HTTPTransport(Transport):
    """OpenAI-compatible chat completions over httpx."""

    def __init__(self, client=None):
        super().__init__()
        self._client = client

    def check_credentials(self, model: ModelConfig) -> None:
        if not os.environ.get(model.api_key_env):
            raise ConfigError(f"environment variable {model.api_key_env} is not set")

    def _send(self, request: Request) -> Reply:
        import httpx

        model = request.model
        key = os.environ.get(model.api_key_env)
        if not key:
            raise ConfigError(f"environment variable {model.api_key_env} is not set")
        body = {
            "model": model.model_name,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": model.temperature,
            "max_tokens": model.max_tokens,
        }
        client = self._client or httpx.Client()
        try:
            resp = client.post(
                model.endpoint,
                json=body,
                headers={"Authorization": f"Bearer {key}"},
                timeout=model.timeout,
            )
        except httpx.HTTPError as exc:
            raise TransportError(f"request failed: {type(exc).__name__}", None, str(exc)) from None
        finally:
            if self._client is None:
                client.close()
        if resp.status_code != 200:
            raise TransportError(f"HTTP {resp.status_code}", resp.status_code, resp.reason_phrase)
        try:
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            raise TransportError("malformed completion payload", resp.status_code, "bad body") from None
        return Reply(text, data.get("usage") or {})


def _retryable(exc: TransportError) -> bool:
    return exc.status is None or exc.status in RETRYABLE_STATUS


def send_with_retry(
    transport: Transport,
    request: Request,
    sleep: Callable[[float], None] = time.sleep,
) -> Reply:
    model = request.model
    delay = model.backoff_initial
    for attempt in range(1, model.max_attempts + 1):
        try:
            return transport.send(request)
        except TransportError as exc:
            if attempt == model.max_attempts or not _retryable(exc):
                raise
            log.warning("attempt %d/%d for %s failed (%s); retrying in %.1fs",
                        attempt, model.max_attempts, request.story_id, exc, delay)
            sleep(delay)
            delay *= model.backoff_factor
    raise AssertionError("unreachable")


class ExchangeCache:
    """One JSON file per (story, model, template digest) key.

    Writes are atomic and serialized per key, so concurrent readers never
    see a half-written exchange.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def _path(self, key: tuple[str, str, str]) -> Path:
        name = hashlib.sha256(json.dumps(list(key)).encode()).hexdigest()[:32]
        return self.directory / f"{name}.json"

    def lock(self, key) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(self._path(key).name, threading.Lock())

    def get(self, key) -> Exchange | None:
        path = self._path(key)
        if not path.is_file():
            return None
        with open(path, encoding="utf-8") as fh:
            return Exchange(**json.load(fh))

    def put(self, exchange: Exchange) -> None:
        data = json.dumps(asdict(exchange), indent=1, sort_keys=True, ensure_ascii=False)
        atomic_write(self._path(exchange.key), data.encode("utf-8"))

    def __len__(self) -> int:
        return len(list(self.directory.glob("*.json"))) if self.directory.is_dir() else 0


def query(
    model: ModelConfig,
    prompt: str,
    cache: ExchangeCache,
    transport: Transport,
    story_id: str,
    template_digest: str,
    sleep: Callable[[float], None] = time.sleep,
) -> Exchange:
    """Cached exchange for the key, or a fresh one persisted before returning."""
    key = (story_id, model.model_name, template_digest)
    with cache.lock(key):
        hit = cache.get(key)
        if hit is not None:
            return hit
        reply = send_with_retry(transport, Request(story_id, model, prompt), sleep=sleep)
        exchange = Exchange(
            story_id=story_id,
            model_name=model.model_name,
            template_digest=template_digest,
            prompt=prompt,
            raw=reply.text,
            timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
            usage=dict(reply.usage),
        )
        cache.put(exchange)
        return exchange
