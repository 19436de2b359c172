"""HTTP server exposing one model through the backend wire protocol.

Endpoints mirror the protocol exactly: POST /v1/<kind>, GET /v1/health,
GET /v1/stats. Until the model is loaded (plus any configured warmup
delay) every endpoint answers 503 so clients retry rather than fail.
Malformed bodies and mismatched request ids answer 400; a model output
that cannot be mapped onto a schema-valid response answers 500.
Inference is serialized with a lock: one model, one request at a time.
"""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any

from .backends import load_backend
from .config import AdapterConfig, AdapterError
from .mapping import factcheck_response, manipulation_response, summarize_manipulation_context
from .normalize import MappingError
from .wire import RequestRejected, check_request


class _AdapterState:
    def __init__(self, cfg: AdapterConfig) -> None:
        self.cfg = cfg
        self.backend = None
        self.warm = threading.Event()
        self.inference_lock = threading.Lock()
        self.stats_lock = threading.Lock()
        self.counts = {"factcheck": 0, "manipulation": 0}

    def record(self, endpoint: str) -> None:
        with self.stats_lock:
            self.counts[endpoint] += 1

    def stats(self) -> dict[str, int]:
        with self.stats_lock:
            return {
                "factcheck_requests": self.counts["factcheck"],
                "manipulation_requests": self.counts["manipulation"],
            }


class _AdapterHandler(BaseHTTPRequestHandler):
    state: _AdapterState

    def log_message(self, fmt: str, *args: Any) -> None:
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
            if self.state.warm.is_set():
                self._send(200, {"status": "ok"})
            else:
                self._send(503, {"status": "warming"})
        elif self.path == "/v1/stats":
            self._send(200, self.state.stats())
        else:
            self._send(404, {"error": f"unknown path {self.path}"})

    def do_POST(self) -> None:
        kind = self.state.cfg.kind
        if self.path != f"/v1/{kind}":
            self._send(404, {"error": f"this adapter serves /v1/{kind} only"})
            return
        self.state.record(kind)
        if not self.state.warm.is_set():
            self._send(503, {"error": "model warming up"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, json.JSONDecodeError):
            self._send(400, {"error": "body is not valid JSON"})
            return
        try:
            body = check_request(body, kind)
        except RequestRejected as exc:
            self._send(400, {"error": str(exc)})
            return
        post = body["post"]
        image = post.get("image")
        locator = image["locator"] if image else None
        size = (image["width"], image["height"]) if image else None
        try:
            with self.state.inference_lock:
                if kind == "manipulation":
                    pred = self.state.backend.predict(post["text"], locator, size)
                    payload = manipulation_response(pred, post["text"], size)
                else:
                    summary = summarize_manipulation_context(body.get("manipulation_context"))
                    pred = self.state.backend.predict(post["text"], locator, summary)
                    payload = factcheck_response(pred)
        except MappingError as exc:
            self._send(500, {"error": f"model output could not be mapped: {exc}"})
            return
        self._send(200, payload)


class AdapterServer:
    """Running adapter handle; the model loads in the background.

    ``wait_until_warm`` blocks until inference is available; before that,
    endpoints answer 503 (retryable).
    """

    def __init__(self, cfg: AdapterConfig, backend=None) -> None:
        state = _AdapterState(cfg)
        handler = type("BoundAdapterHandler", (_AdapterHandler,), {"state": state})
        try:
            self._server = ThreadingHTTPServer((cfg.host, cfg.port), handler)
        except OSError as exc:
            raise AdapterError(f"cannot bind {cfg.host}:{cfg.port}: {exc}") from exc
        self._server.daemon_threads = True
        self._state = state
        self._serve_thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._serve_thread.start()
        self._load_thread = threading.Thread(target=self._load, args=(backend,), daemon=True)
        self._load_thread.start()
        self.host = cfg.host
        self.port = self._server.server_address[1]
        self.base_url = f"http://{cfg.host}:{self.port}"
        self.kind = cfg.kind

    def _load(self, backend) -> None:
        if self._state.cfg.warmup_delay_s:
            time.sleep(self._state.cfg.warmup_delay_s)
        self._state.backend = backend if backend is not None else load_backend(self._state.cfg)
        self._state.warm.set()

    def wait_until_warm(self, timeout_s: float = 30.0) -> None:
        if not self._state.warm.wait(timeout_s):
            raise AdapterError(f"model not warm after {timeout_s}s")

    def stats(self) -> dict[str, int]:
        return self._state.stats()

    def shutdown(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._serve_thread.join(timeout=5)

    def __enter__(self) -> AdapterServer:
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self.shutdown()


def serve_manipulation_adapter(cfg: AdapterConfig | None = None, **overrides) -> AdapterServer:
    return AdapterServer(cfg or AdapterConfig.from_env("manipulation", **overrides))


def serve_factcheck_adapter(cfg: AdapterConfig | None = None, **overrides) -> AdapterServer:
    return AdapterServer(cfg or AdapterConfig.from_env("factcheck", **overrides))
