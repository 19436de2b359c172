import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from dualcheck.domain import (
    BoundingBox,
    EvidenceItem,
    FactCheckResult,
    ImageRef,
    ManipulationClass,
    ManipulationResult,
    Post,
    Stance,
    ThreeWayLabel,
    TokenLabelSeq,
    ToolInvocation,
    ToolKind,
)
from dualcheck.ingest import fixture_path
from dualcheck.mock_backend import MockProfile, serve_mock

FIXED_STAMP = "2024-06-01T12:00:00+00:00"


def make_post(post_id="p1", text="PM resigns today", with_image=True, width=640, height=480):
    image = ImageRef(locator=f"images/{post_id}.jpg", width=width, height=height) if with_image else None
    return Post(id=post_id, text=text, image=image)


def make_evidence(source="https://example.org/a", snippet="an excerpt", stance=Stance.SUPPORTS):
    return EvidenceItem(source=source, snippet=snippet, retrieved_at=FIXED_STAMP, stance=stance)


def make_factcheck(verdict=ThreeWayLabel.SUPPORTED, confidence=0.9, n_evidence=1):
    evidence = [make_evidence(source=f"https://example.org/{i}") for i in range(n_evidence)]
    trace = [ToolInvocation(tool=ToolKind.WEB_SEARCH, query="q", result_count=n_evidence)] if n_evidence else []
    if verdict is ThreeWayLabel.NEI and n_evidence == 0:
        trace = []
    return FactCheckResult(
        verdict=verdict,
        confidence=confidence,
        evidence=evidence,
        reasoning=["step one"],
        tool_trace=trace,
    )


def make_manipulation(klass=ManipulationClass.FS, text="PM resigns today", flagged=(1,)):
    """A valid ManipulationResult for any class, grounded on the given text."""
    if klass is ManipulationClass.PRISTINE:
        return ManipulationResult.pristine()
    boxes = [BoundingBox(0.25, 0.25, 0.75, 0.75)] if klass.value.startswith(("fs", "fa")) else []
    token_labels = None
    if "ts" in klass.value or "ta" in klass.value:
        n = len(text.split())
        valid = [i for i in flagged if i < n] or [0]
        token_labels = TokenLabelSeq.from_text(text, valid)
    return ManipulationResult(
        is_fake=True,
        klass=klass,
        class_scores={klass: 0.9},
        token_labels=token_labels,
        boxes=boxes,
    )


def load_fixture_profile() -> MockProfile:
    return MockProfile.from_dict(json.loads(fixture_path("mock_profile.json").read_text(encoding="utf-8")))


@pytest.fixture(scope="session")
def fixture_mock_server():
    with serve_mock(load_fixture_profile()) as server:
        yield server


class ScriptedHandler(BaseHTTPRequestHandler):
    """Tiny test server scripted with (status, body) responses per request."""

    script: list
    record: list

    def log_message(self, fmt, *args):
        pass

    def do_POST(self):
        import time

        self.record.append(time.monotonic())
        length = int(self.headers.get("Content-Length", "0"))
        self.rfile.read(length)
        if self.script:
            status, body = self.script.pop(0)
        else:
            status, body = 503, {"error": "script exhausted"}
        if status == "sleep":
            time.sleep(body)
            status, body = 200, {}
        payload = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


class _QuietServer(ThreadingHTTPServer):
    def handle_error(self, request, client_address):
        pass  # clients disconnect mid-response in the timeout tests


def scripted_server(script):
    """Start a throwaway HTTP server that plays back the given responses."""
    handler = type(
        "BoundScripted", (ScriptedHandler,), {"script": list(script), "record": []}
    )
    server = _QuietServer(("127.0.0.1", 0), handler)
    server.daemon_threads = True
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    base_url = f"http://127.0.0.1:{server.server_address[1]}"
    return server, handler, base_url
