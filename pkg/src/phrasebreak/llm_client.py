"""Chat-completion backends: HTTP, deterministic mock, replay, plus a
content-addressed response cache with retry/backoff and bounded concurrency.

The HTTP backend speaks the standard chat-completions shape (system + user
message in, single choice out) against a configurable base URL, so any
compatible endpoint works. The mock backend annotates the target text with a
fixed punctuation rule and exists so the whole pipeline runs offline.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    AuthMissing,
    BackendError,
    ContractViolation,
    ExhaustedRetries,
    MalformedResponse,
    ValidationError,
)
from .prompting import TARGET_CLOSE, TARGET_OPEN

log = logging.getLogger(__name__)

TERMINAL_PUNCTUATION = ".!?…。！？"  # . ! ? … 。 ！ ？
PAUSE_PUNCTUATION = ",;、，；"  # , ; 、 ， ；
_CLOSERS = "\"')»”’]}"  # trailing quotes/brackets to look through


@dataclass(frozen=True)
class CompletionRequest:
    system_message: str
    user_message: str
    model_id: str
    temperature: float = 0.0
    top_p: float = 1.0

    @property
    def request_digest(self) -> str:
        payload = json.dumps(
            {
                "system": self.system_message,
                "user": self.user_message,
                "model": self.model_id,
                "temperature": self.temperature,
                "top_p": self.top_p,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode()).hexdigest()


@dataclass
class CompletionResult:
    text: str
    backend: str  # http | mock | replay | cache
    latency_ms: float = 0.0
    attempt_count: int = 1


@dataclass
class BatchItem:
    """One slot of a batch: either a result or the error that sank it."""

    result: CompletionResult | None = None
    error: Exception | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class BackendConfig:
    base_url: str = "https://api.openai.com/v1"
    api_key_env_name: str = "OPENAI_API_KEY"
    timeout: float = 60.0
    max_retries: int = 3
    backoff: tuple[float, ...] = (1.0, 2.0, 4.0)
    max_concurrent_requests: int = 4
    cache_dir: str | None = None
    debug_log_requests: bool = False

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValidationError("timeout must be positive")
        if self.max_concurrent_requests < 1:
            raise ValidationError("max_concurrent_requests must be >= 1")


def strip_response(text: str) -> str:
    """Drop surrounding whitespace and code fences; formatting drift is a
    known generator failure mode and should not fail validation by itself."""
    text = text.strip()
    fence = re.match(r"^```[a-zA-Z]*\n(.*?)\n?```$", text, re.DOTALL)
    if fence:
        text = fence.group(1).strip()
    return text


def extract_target_text(user_message: str) -> str:
    """Pull the sentinel-delimited target out of a task prompt."""
    pattern = re.escape(TARGET_OPEN) + r"\n(.*?)\n" + re.escape(TARGET_CLOSE)
    m = re.search(pattern, user_message, re.DOTALL)
    if m is None:
        raise ValidationError("prompt carries no delimited target text")
    return m.group(1).strip()


def rule_annotate(text: str) -> str:
    """The mock annotation rule.

    ``/`` after any word ending in terminal punctuation, ``#`` after a comma
    or semicolon, ``/`` at utterance end; trailing quotes and brackets are
    looked through. Deterministic and auditable by eye.
    """
    words = text.split()
    parts = []
    for i, word in enumerate(words):
        parts.append(word)
        bare = word.rstrip(_CLOSERS)
        last = bare[-1] if bare else ""
        if last in TERMINAL_PUNCTUATION or i == len(words) - 1:
            parts.append("/")
        elif last in PAUSE_PUNCTUATION:
            parts.append("#")
    return " ".join(parts)


class ResponseCache:
    """One file per request digest under ``<dir>/<first-2-hex>/<digest>``.

    Each entry is a one-line JSON metadata header followed by the raw text.
    Writers may race on identical keys; values are identical by construction
    so last-writer-wins is safe.
    """

    def __init__(self, cache_dir):
        self.root = Path(cache_dir)

    def _path(self, digest):
        return self.root / digest[:2] / digest

    def get(self, digest) -> str | None:
        path = self._path(digest)
        try:
            raw = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            return None
        header, _, body = raw.partition("\n")
        json.loads(header)  # corrupt header -> ValueError, surfaced loudly
        return body

    def put(self, digest, text, meta=None):
        path = self._path(digest)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = json.dumps(
            {"digest": digest, "stored_at": time.time(), **(meta or {})}
        )
        tmp = path.with_suffix(".tmp-%d" % threading.get_ident())
        tmp.write_text(header + "\n" + text, encoding="utf-8")
        tmp.replace(path)


class CompletionClient:
    """Front door: cache lookup, then the configured backend with retries."""

    def __init__(self, backend, config: BackendConfig = None):
        self.config = config or BackendConfig()
        self.backend = backend
        self.cache = (
            ResponseCache(self.config.cache_dir) if self.config.cache_dir else None
        )
        self._permits = threading.Semaphore(self.config.max_concurrent_requests)

    def complete(self, request: CompletionRequest) -> CompletionResult:
        digest = request.request_digest
        if self.cache is not None:
            cached = self.cache.get(digest)
            if cached is not None:
                return CompletionResult(text=cached, backend="cache")
        start = time.monotonic()
        with self._permits:
            result = self.backend.complete(request, self.config)
        result.latency_ms = (time.monotonic() - start) * 1000.0
        if self.cache is not None:
            self.cache.put(digest, result.text, meta={"backend": result.backend})
        return result

    def complete_batch(self, requests, parallelism=1) -> list[BatchItem]:
        if parallelism > self.config.max_concurrent_requests:
            raise ContractViolation(
                f"parallelism {parallelism} exceeds configured maximum "
                f"{self.config.max_concurrent_requests}"
            )
        items = [BatchItem() for _ in requests]

        def run(i, req):
            try:
                items[i].result = self.complete(req)
            except Exception as exc:  # per-item isolation, batch continues
                items[i].error = exc

        if parallelism <= 1:
            for i, req in enumerate(requests):
                run(i, req)
        else:
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                futures = [
                    pool.submit(run, i, req) for i, req in enumerate(requests)
                ]
                for fut in futures:
                    fut.result()
        return items


class MockBackend:
    """Deterministic offline backend: applies ``rule_annotate`` to the target
    text extracted from the prompt. Depends on nothing but that text."""

    name = "mock"

    def complete(self, request, config) -> CompletionResult:
        target = extract_target_text(request.user_message)
        return CompletionResult(text=rule_annotate(target), backend=self.name)


class ReplayBackend:
    """Serves responses recorded from live runs; JSONL of digest/text pairs."""

    name = "replay"

    def __init__(self, replay_path):
        self.responses = {}
        with open(replay_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                self.responses[record["request_digest"]] = record["text"]

    def complete(self, request, config) -> CompletionResult:
        digest = request.request_digest
        if digest not in self.responses:
            raise BackendError(f"no replay entry for request {digest[:12]}")
        return CompletionResult(text=self.responses[digest], backend=self.name)


def record_replay_entry(path, request, text):
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(
            json.dumps(
                {"request_digest": request.request_digest, "text": text},
                ensure_ascii=False,
            )
            + "\n"
        )


_RETRYABLE_STATUS = {408, 409, 429, 500, 502, 503, 504}


class HttpBackend:
    """Chat-completions over HTTP with retry on transient failures."""

    name = "http"

    def __init__(self, session=None):
        # Lazy import keeps offline use of the toolkit free of the dependency.
        import requests

        self.session = session or requests.Session()

    def complete(self, request, config) -> CompletionResult:
        api_key = os.environ.get(config.api_key_env_name)
        if not api_key:
            raise AuthMissing(
                f"environment variable {config.api_key_env_name} is unset"
            )
        body = {
            "model": request.model_id,
            "temperature": request.temperature,
            "top_p": request.top_p,
            "messages": [
                {"role": "system", "content": request.system_message},
                {"role": "user", "content": request.user_message},
            ],
        }
        if config.debug_log_requests:
            log.debug("request %s: %s", request.request_digest[:12],
                      json.dumps(body, ensure_ascii=False))
        url = config.base_url.rstrip("/") + "/chat/completions"
        last_status = None
        attempts = config.max_retries + 1
        for attempt in range(attempts):
            try:
                response = self.session.post(
                    url,
                    json=body,
                    headers={"Authorization": f"Bearer {api_key}"},
                    timeout=config.timeout,
                )
                last_status = response.status_code
                if response.status_code == 200:
                    return CompletionResult(
                        text=_extract_message_text(response.json()),
                        backend=self.name,
                        attempt_count=attempt + 1,
                    )
                if response.status_code not in _RETRYABLE_STATUS:
                    raise ExhaustedRetries(
                        f"non-retryable HTTP {response.status_code}",
                        last_status=response.status_code,
                    )
            except (OSError, ConnectionError) as exc:
                log.warning("attempt %d failed: %s", attempt + 1, exc)
            if attempt < attempts - 1:
                delay = config.backoff[min(attempt, len(config.backoff) - 1)]
                time.sleep(delay)
        raise ExhaustedRetries(
            f"gave up after {attempts} attempts", last_status=last_status
        )


def _extract_message_text(payload) -> str:
    try:
        text = payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse(f"response lacks message text: {exc}") from exc
    if not isinstance(text, str):
        raise MalformedResponse("message content is not a string")
    return text


def make_backend(name, replay_path=None):
    if name == "mock":
        return MockBackend()
    if name == "http":
        return HttpBackend()
    if name == "replay":
        if replay_path is None:
            raise ValidationError("replay backend needs a replay file")
        return ReplayBackend(replay_path)
    raise ValidationError(f"unknown backend {name!r}")
