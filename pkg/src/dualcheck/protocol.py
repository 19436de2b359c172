"""Wire protocol to the two verdict backends.

Both backends speak HTTP with JSON bodies:

    POST /v1/factcheck     FactCheckRequest JSON  -> FactCheckResult JSON
    POST /v1/manipulation  ManipulationRequest JSON -> ManipulationResult JSON
    GET  /v1/health        -> {"status": "ok"}
    GET  /v1/stats         -> {"factcheck_requests": n, "manipulation_requests": m}

Status codes: 200 success, 400 rejected request (not retried), 503
retryable. Responses are validated against the core-domain invariants
before they are returned; anything that does not deserialize cleanly
raises ProtocolError so partially-valid values never escape.

Request ids are content hashes: SHA-256 over the UTF-8 canonical JSON
(keys sorted lexicographically, compact separators) of the request's
identifying payload, rendered as lowercase hex. For a fact-check request
the payload is ``{"image_locator", "manipulation_context", "post_id",
"text"}``; a manipulation request omits the context key. Identical
request ids against the same backend state return identical results.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from typing import Any, Mapping

import httpx

from .domain import (
    DomainError,
    FactCheckResult,
    ManipulationResult,
    Post,
)


class BackendError(Exception):
    """Base class for backend call failures."""


class Timeout(BackendError):
    """The backend did not answer within the deadline, retries included."""


class BackendUnavailable(BackendError):
    """Connection refused or service persistently unavailable."""


class ProtocolError(BackendError):
    """The exchange violated the wire contract (malformed request or response)."""


def canonical_json(payload: Any) -> str:
    """Serialize with sorted keys and compact separators; the hash input form."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def content_hash(payload: Any) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def _hash_payload(post: Post, context: ManipulationResult | None, with_context_key: bool) -> dict[str, Any]:
    payload: dict[str, Any] = {
        "post_id": post.id,
        "text": post.text,
        "image_locator": post.image.locator if post.image else None,
    }
    if with_context_key:
        payload["manipulation_context"] = context.to_dict() if context else None
    return payload


@dataclass(frozen=True)
class FactCheckRequest:
    """A post sent for external-evidence verification.

    ``manipulation_context`` carries a prior manipulation analysis when the
    pipeline runs in injection mode; its presence and content are part of
    the request id.
    """

    post: Post
    manipulation_context: ManipulationResult | None = None
    request_id: str = ""

    def __post_init__(self) -> None:
        expected = factcheck_request_id(self.post, self.manipulation_context)
        if not self.request_id:
            object.__setattr__(self, "request_id", expected)
        elif self.request_id != expected:
            raise DomainError(f"request_id {self.request_id!r} does not match content hash {expected!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "post": self.post.to_dict(),
            "manipulation_context": self.manipulation_context.to_dict() if self.manipulation_context else None,
            "request_id": self.request_id,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> FactCheckRequest:
        if not isinstance(data, Mapping):
            raise DomainError("fact-check request must be an object")
        context = data.get("manipulation_context")
        return cls(
            post=Post.from_dict(data.get("post", {})),
            manipulation_context=ManipulationResult.from_dict(context) if context is not None else None,
            request_id=str(data.get("request_id", "")),
        )


@dataclass(frozen=True)
class ManipulationRequest:
    """A post sent for content-manipulation analysis."""

    post: Post
    request_id: str = ""

    def __post_init__(self) -> None:
        expected = manipulation_request_id(self.post)
        if not self.request_id:
            object.__setattr__(self, "request_id", expected)
        elif self.request_id != expected:
            raise DomainError(f"request_id {self.request_id!r} does not match content hash {expected!r}")

    def to_dict(self) -> dict[str, Any]:
        return {"post": self.post.to_dict(), "request_id": self.request_id}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ManipulationRequest:
        if not isinstance(data, Mapping):
            raise DomainError("manipulation request must be an object")
        return cls(post=Post.from_dict(data.get("post", {})), request_id=str(data.get("request_id", "")))


def factcheck_request_id(post: Post, context: ManipulationResult | None = None) -> str:
    return content_hash(_hash_payload(post, context, with_context_key=True))


def manipulation_request_id(post: Post) -> str:
    return content_hash(_hash_payload(post, None, with_context_key=False))


@dataclass(frozen=True)
class BackendConfig:
    """Connection settings for one backend endpoint."""

    base_url: str
    timeout_ms: int = 10_000
    max_retries: int = 2
    backoff_base_ms: int = 100

    def __post_init__(self) -> None:
        if not self.base_url:
            raise DomainError("base_url must be non-empty")
        if not (isinstance(self.timeout_ms, int) and self.timeout_ms > 0):
            raise DomainError("timeout_ms must be an integer > 0")
        if not (isinstance(self.max_retries, int) and self.max_retries >= 0):
            raise DomainError("max_retries must be an integer >= 0")
        if not (isinstance(self.backoff_base_ms, int) and self.backoff_base_ms > 0):
            raise DomainError("backoff_base_ms must be an integer > 0")

    def to_dict(self) -> dict[str, Any]:
        return {
            "base_url": self.base_url,
            "timeout_ms": self.timeout_ms,
            "max_retries": self.max_retries,
            "backoff_base_ms": self.backoff_base_ms,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> BackendConfig:
        if not isinstance(data, Mapping):
            raise DomainError("backend config must be an object")
        kwargs = {k: data[k] for k in ("timeout_ms", "max_retries", "backoff_base_ms") if k in data}
        return cls(base_url=str(data.get("base_url", "")), **kwargs)


def post_json(cfg: BackendConfig, path: str, body: dict[str, Any], sleep=time.sleep) -> str:
    """POST a JSON body with retry/backoff; return the raw response text.

    At most ``max_retries + 1`` attempts are made. After the k-th failed
    attempt (0-based) the client sleeps ``backoff_base_ms * 2**k`` before
    retrying. Retryable failures: connection errors, timeouts, and 503.
    A 400 or any other unexpected status raises ProtocolError immediately.
    """
    url = cfg.base_url.rstrip("/") + path
    timeout = cfg.timeout_ms / 1000.0
    last_error: BackendError | None = None
    for attempt in range(cfg.max_retries + 1):
        if attempt:
            sleep(cfg.backoff_base_ms * 2 ** (attempt - 1) / 1000.0)
        try:
            response = httpx.post(url, json=body, timeout=timeout)
        except httpx.TimeoutException as exc:
            last_error = Timeout(f"no response from {url} within {cfg.timeout_ms} ms: {exc}")
            continue
        except httpx.ConnectError as exc:
            last_error = BackendUnavailable(f"cannot connect to {url}: {exc}")
            continue
        except httpx.HTTPError as exc:
            last_error = BackendUnavailable(f"transport failure for {url}: {exc}")
            continue
        if response.status_code == 200:
            return response.text
        if response.status_code == 503:
            last_error = BackendUnavailable(f"{url} answered 503")
            continue
        raise ProtocolError(f"{url} answered {response.status_code}: {response.text[:200]}")
    assert last_error is not None
    raise last_error


def _parse_response(raw: str, parser, what: str):
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"{what} response is not valid JSON: {exc}") from exc
    try:
        return parser(payload)
    except DomainError as exc:
        raise ProtocolError(f"{what} response violates the schema: {exc}") from exc


def parse_factcheck_response(raw: str) -> FactCheckResult:
    """Validate a raw fact-check response body; ProtocolError if unsound."""
    return _parse_response(raw, FactCheckResult.from_dict, "fact-check")


def parse_manipulation_response(raw: str) -> ManipulationResult:
    """Validate a raw manipulation response body; ProtocolError if unsound."""
    return _parse_response(raw, ManipulationResult.from_dict, "manipulation")


def check_fact(cfg: BackendConfig, req: FactCheckRequest, sleep=time.sleep) -> FactCheckResult:
    """Call the fact-check backend and return its validated verdict."""
    return parse_factcheck_response(post_json(cfg, "/v1/factcheck", req.to_dict(), sleep=sleep))


def detect_manipulation(cfg: BackendConfig, req: ManipulationRequest, sleep=time.sleep) -> ManipulationResult:
    """Call the manipulation backend and return its validated analysis."""
    return parse_manipulation_response(post_json(cfg, "/v1/manipulation", req.to_dict(), sleep=sleep))


def fetch_stats(base_url: str, timeout_s: float = 5.0) -> dict[str, Any]:
    """Read a backend's request counters (mock and adapter servers expose these)."""
    response = httpx.get(base_url.rstrip("/") + "/v1/stats", timeout=timeout_s)
    if response.status_code != 200:
        raise ProtocolError(f"stats endpoint answered {response.status_code}")
    return response.json()
