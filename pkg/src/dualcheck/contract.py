"""Black-box conformance checks for any server speaking the wire protocol.

Runs over HTTP against a base URL, so the same suite validates the
bundled mocks and any external adapter wrapping a real model. Checks:
health, response schema validity per endpoint, idempotency of repeated
identical requests, and the 400 error contract for malformed bodies and
mismatched request ids.
"""

from __future__ import annotations

from dataclasses import dataclass

import httpx

from .domain import Post
from .protocol import (
    FactCheckRequest,
    ManipulationRequest,
    ProtocolError,
    parse_factcheck_response,
    parse_manipulation_response,
)

PROBE_POST = Post(id="contract-probe-1", text="probe claim for contract checks")


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _probe_body(endpoint: str) -> dict:
    if endpoint == "factcheck":
        return FactCheckRequest(PROBE_POST).to_dict()
    return ManipulationRequest(PROBE_POST).to_dict()


def run_contract_checks(
    base_url: str,
    endpoints: tuple[str, ...] = ("factcheck", "manipulation"),
    timeout_s: float = 10.0,
) -> list[CheckResult]:
    """Execute every applicable check; never raises on check failure."""
    base = base_url.rstrip("/")
    results: list[CheckResult] = []

    def record(name: str, passed: bool, detail: str = "") -> None:
        results.append(CheckResult(name=name, passed=passed, detail=detail))

    try:
        response = httpx.get(f"{base}/v1/health", timeout=timeout_s)
        record(
            "health",
            response.status_code == 200 and response.json().get("status") == "ok",
            f"status={response.status_code} body={response.text[:100]}",
        )
    except (httpx.HTTPError, ValueError) as exc:
        record("health", False, str(exc))

    parsers = {"factcheck": parse_factcheck_response, "manipulation": parse_manipulation_response}
    for endpoint in endpoints:
        body = _probe_body(endpoint)
        url = f"{base}/v1/{endpoint}"
        try:
            first = httpx.post(url, json=body, timeout=timeout_s)
            if first.status_code != 200:
                record(f"{endpoint}/schema", False, f"status={first.status_code} body={first.text[:100]}")
                continue
            try:
                parsers[endpoint](first.text)
                record(f"{endpoint}/schema", True)
            except ProtocolError as exc:
                record(f"{endpoint}/schema", False, str(exc))
            second = httpx.post(url, json=body, timeout=timeout_s)
            record(
                f"{endpoint}/idempotency",
                second.status_code == 200 and second.content == first.content,
                "repeated request must return identical bytes",
            )
        except httpx.HTTPError as exc:
            record(f"{endpoint}/schema", False, str(exc))
            continue

        try:
            malformed = httpx.post(
                url, content=b"{not json", headers={"Content-Type": "application/json"}, timeout=timeout_s
            )
            record(f"{endpoint}/malformed-body-400", malformed.status_code == 400, f"status={malformed.status_code}")
        except httpx.HTTPError as exc:
            record(f"{endpoint}/malformed-body-400", False, str(exc))

        tampered = dict(body)
        tampered["request_id"] = "0" * 64
        try:
            bad_id = httpx.post(url, json=tampered, timeout=timeout_s)
            record(f"{endpoint}/bad-request-id-400", bad_id.status_code == 400, f"status={bad_id.status_code}")
        except httpx.HTTPError as exc:
            record(f"{endpoint}/bad-request-id-400", False, str(exc))

    return results


def assert_contract(base_url: str, endpoints: tuple[str, ...] = ("factcheck", "manipulation")) -> None:
    """Raise AssertionError listing every failed check."""
    failed = [r for r in run_contract_checks(base_url, endpoints) if not r.passed]
    if failed:
        lines = "\n".join(f"  {r.name}: {r.detail}" for r in failed)
        raise AssertionError(f"contract checks failed against {base_url}:\n{lines}")
