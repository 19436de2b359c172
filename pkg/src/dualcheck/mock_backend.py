"""Deterministic mock backends for offline runs and tests.

One mock server answers both wire endpoints. Two response sources:

  - fixture: a table from post id to canned responses, served verbatim
    (entries may be raw JSON, which lets tests serve intentionally
    invalid bodies to exercise client-side validation);
  - seeded: responses synthesized as a pure function of (seed, request
    id), with error-rate knobs to emulate backend quirks such as a
    conservative NEI bias.

When both a fixture table and a seed are configured, fixture hits take
precedence and misses fall through to the seeded generator. A fixture
miss without a seed serves the documented fallback: verdict NEI for
fact-check, pristine for manipulation.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Mapping

from .domain import (
    BoundingBox,
    DomainError,
    EvidenceItem,
    FactCheckResult,
    ManipulationClass,
    ManipulationResult,
    Post,
    Stance,
    ThreeWayLabel,
    TokenLabelSeq,
    ToolInvocation,
    ToolKind,
    whitespace_tokens,
)
from .protocol import factcheck_request_id, manipulation_request_id

#: Fixed timestamp stamped on synthetic evidence, so replays are byte-identical.
MOCK_EVIDENCE_TIMESTAMP = "2024-01-01T00:00:00+00:00"

_RATE_KEYS = ("nei_bias", "miss_rate", "false_alarm_rate")
_MANIPULATED_CLASSES = [k for k in ManipulationClass if k is not ManipulationClass.PRISTINE]


class BindError(Exception):
    """The requested port could not be bound."""


@dataclass(frozen=True)
class MockProfile:
    """Configuration for one mock server instance.

    ``fixture_table`` maps post id to ``{"factcheck": <response JSON>,
    "manipulation": <response JSON>}``; either key may be absent.
    """

    mode: str
    fixture_table: Mapping[str, Mapping[str, Any]] | None = None
    seed: int | None = None
    error_rates: Mapping[str, float] | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("fixture", "seeded"):
            raise DomainError(f"mock mode must be 'fixture' or 'seeded', got {self.mode!r}")
        if self.mode == "fixture" and self.fixture_table is None:
            raise DomainError("fixture mode requires a fixture_table")
        if self.mode == "seeded" and self.seed is None:
            raise DomainError("seeded mode requires a seed")
        if self.seed is not None and not isinstance(self.seed, int):
            raise DomainError("seed must be an integer")
        if self.error_rates is not None:
            for key, value in self.error_rates.items():
                if key not in _RATE_KEYS:
                    raise DomainError(f"unknown error rate {key!r}; expected one of {_RATE_KEYS}")
                if not (isinstance(value, (int, float)) and 0.0 <= value <= 1.0):
                    raise DomainError(f"error rate {key} must be in [0,1]")

    def rate(self, key: str) -> float:
        if self.error_rates is None:
            return 0.0
        return float(self.error_rates.get(key, 0.0))

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "fixture_table": {k: dict(v) for k, v in self.fixture_table.items()} if self.fixture_table else None,
            "seed": self.seed,
            "error_rates": dict(self.error_rates) if self.error_rates else None,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> MockProfile:
        if not isinstance(data, Mapping):
            raise DomainError("mock profile must be an object")
        return cls(
            mode=str(data.get("mode", "")),
            fixture_table=data.get("fixture_table"),
            seed=data.get("seed"),
            error_rates=data.get("error_rates"),
        )


def _draw(seed: int, request_id: str, salt: str) -> float:
    """Hash (seed, request_id, salt) into [0, 1); the mock's only randomness."""
    digest = hashlib.sha256(f"{seed}:{request_id}:{salt}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


def fallback_factcheck() -> dict[str, Any]:
    return FactCheckResult(
        verdict=ThreeWayLabel.NEI,
        reasoning=("fixture miss: deterministic fallback verdict",),
    ).to_dict()


def fallback_manipulation() -> dict[str, Any]:
    return ManipulationResult.pristine().to_dict()


def seeded_factcheck(profile: MockProfile, post: Post, request_id: str) -> dict[str, Any]:
    """Synthesize a fact-check response as a pure function of (seed, request id)."""
    assert profile.seed is not None
    seed = profile.seed
    confidence = round(_draw(seed, request_id, "conf"), 4)
    if _draw(seed, request_id, "nei") < profile.rate("nei_bias"):
        return FactCheckResult(
            verdict=ThreeWayLabel.NEI,
            confidence=confidence,
            reasoning=("seeded mock: verdict drawn as NEI",),
        ).to_dict()
    if _draw(seed, request_id, "verdict") < 0.5:
        verdict, stance = ThreeWayLabel.SUPPORTED, Stance.SUPPORTS
    else:
        verdict, stance = ThreeWayLabel.REFUTED, Stance.REFUTES
    evidence = EvidenceItem(
        source=f"https://mock.invalid/evidence/{request_id[:12]}",
        snippet=f"synthetic evidence for post {post.id}",
        retrieved_at=MOCK_EVIDENCE_TIMESTAMP,
        stance=stance,
    )
    trace = ToolInvocation(tool=ToolKind.WEB_SEARCH, query=post.text[:64], result_count=1)
    return FactCheckResult(
        verdict=verdict,
        confidence=confidence,
        evidence=(evidence,),
        reasoning=(f"seeded mock: verdict drawn as {verdict.value}",),
        tool_trace=(trace,),
    ).to_dict()


def seeded_manipulation(profile: MockProfile, post: Post, request_id: str) -> dict[str, Any]:
    """Synthesize a manipulation response as a pure function of (seed, request id)."""
    assert profile.seed is not None
    seed = profile.seed
    if _draw(seed, request_id, "miss") < profile.rate("miss_rate"):
        return fallback_manipulation()
    if _draw(seed, request_id, "false_alarm") >= profile.rate("false_alarm_rate"):
        return fallback_manipulation()
    klass = _MANIPULATED_CLASSES[int(_draw(seed, request_id, "class") * len(_MANIPULATED_CLASSES))]
    boxes = []
    if klass.value.startswith(("fs", "fa")):
        x1 = round(0.1 + 0.5 * _draw(seed, request_id, "bx"), 4)
        y1 = round(0.1 + 0.5 * _draw(seed, request_id, "by"), 4)
        width = round(0.2 + 0.2 * _draw(seed, request_id, "bw"), 4)
        boxes = [BoundingBox(x1, y1, min(x1 + width, 1.0), min(y1 + width, 1.0))]
    token_labels = None
    if "ts" in klass.value or "ta" in klass.value:
        tokens = whitespace_tokens(post.text)
        flagged = int(_draw(seed, request_id, "tok") * len(tokens))
        token_labels = TokenLabelSeq.from_text(post.text, [flagged])
    score = round(0.6 + 0.4 * _draw(seed, request_id, "score"), 4)
    return ManipulationResult(
        is_fake=True,
        klass=klass,
        class_scores={klass: score},
        token_labels=token_labels,
        boxes=boxes,
    ).to_dict()


def resolve_response(profile: MockProfile, endpoint: str, post: Post, request_id: str) -> dict[str, Any]:
    """Pick the response for one request: fixture hit, else seeded, else fallback."""
    if profile.fixture_table is not None:
        entry = profile.fixture_table.get(post.id)
        if entry is not None and entry.get(endpoint) is not None:
            return entry[endpoint]
    if profile.seed is not None:
        if endpoint == "factcheck":
            return seeded_factcheck(profile, post, request_id)
        return seeded_manipulation(profile, post, request_id)
    return fallback_factcheck() if endpoint == "factcheck" else fallback_manipulation()


class _MockState:
    def __init__(self, profile: MockProfile) -> None:
        self.profile = profile
        self.lock = threading.Lock()
        self.counts = {"factcheck": 0, "manipulation": 0}
        self.times: dict[str, list[float]] = {"factcheck": [], "manipulation": []}

    def record(self, endpoint: str) -> None:
        with self.lock:
            self.counts[endpoint] += 1
            self.times[endpoint].append(time.monotonic())

    def stats(self) -> dict[str, Any]:
        with self.lock:
            return {
                "factcheck_requests": self.counts["factcheck"],
                "manipulation_requests": self.counts["manipulation"],
                "request_times": {k: list(v) for k, v in self.times.items()},
            }


class _MockHandler(BaseHTTPRequestHandler):
    state: _MockState  # attached by serve_mock

    def log_message(self, fmt: str, *args: Any) -> None:  # keep test output clean
        pass

    def _send(self, status: int, payload: dict[str, Any]) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:
        if self.path == "/v1/health":
            self._send(200, {"status": "ok"})
        elif self.path == "/v1/stats":
            self._send(200, self.state.stats())
        else:
            self._send(404, {"error": f"unknown path {self.path}"})

    def do_POST(self) -> None:
        if self.path == "/v1/factcheck":
            endpoint = "factcheck"
        elif self.path == "/v1/manipulation":
            endpoint = "manipulation"
        else:
            self._send(404, {"error": f"unknown path {self.path}"})
            return
        self.state.record(endpoint)
        try:
            length = int(self.headers.get("Content-Length", "0"))
            data = json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, json.JSONDecodeError):
            self._send(400, {"error": "body is not valid JSON"})
            return
        try:
            post = Post.from_dict(data.get("post", {}))
            if endpoint == "factcheck":
                context = data.get("manipulation_context")
                ctx = ManipulationResult.from_dict(context) if context is not None else None
                expected = factcheck_request_id(post, ctx)
            else:
                expected = manipulation_request_id(post)
        except DomainError as exc:
            self._send(400, {"error": f"invalid request: {exc}"})
            return
        if data.get("request_id") != expected:
            self._send(400, {"error": "request_id does not match the content hash"})
            return
        self._send(200, resolve_response(self.state.profile, endpoint, post, expected))


class MockServer:
    """Handle to a running mock backend; shut down explicitly or via ``with``."""

    def __init__(self, profile: MockProfile, host: str = "127.0.0.1", port: int = 0) -> None:
        state = _MockState(profile)
        handler = type("BoundMockHandler", (_MockHandler,), {"state": state})
        try:
            self._server = ThreadingHTTPServer((host, port), handler)
        except OSError as exc:
            raise BindError(f"cannot bind {host}:{port}: {exc}") from exc
        self._server.daemon_threads = True
        self._state = state
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        self.host = host
        self.port = self._server.server_address[1]
        self.base_url = f"http://{host}:{self.port}"

    def stats(self) -> dict[str, Any]:
        return self._state.stats()

    def shutdown(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)

    def __enter__(self) -> MockServer:
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self.shutdown()


def serve_mock(profile: MockProfile, port: int = 0, host: str = "127.0.0.1") -> MockServer:
    """Start a mock backend serving the wire protocol until shut down."""
    return MockServer(profile, host=host, port=port)
