"""Wire-format primitives, independent of the pipeline package.

The adapters speak the dualcheck backend protocol over HTTP and must
agree byte-for-byte on its content hash: SHA-256 over the canonical JSON
(keys sorted lexicographically, compact separators, UTF-8) of the
request's identifying payload. For a fact-check request the payload is
``{"image_locator", "manipulation_context", "post_id", "text"}``; a
manipulation request omits the context key.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any


class RequestRejected(Exception):
    """The request body is malformed or inconsistent; answered with 400."""


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def content_hash(payload: Any) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def validate_post(data: Any) -> dict[str, Any]:
    """Check the post object shape; returns it unchanged."""
    if not isinstance(data, dict):
        raise RequestRejected("post must be an object")
    if not isinstance(data.get("id"), str) or not data["id"]:
        raise RequestRejected("post.id must be a non-empty string")
    if not isinstance(data.get("text"), str) or not data["text"]:
        raise RequestRejected("post.text must be a non-empty string")
    image = data.get("image")
    if image is not None:
        if not isinstance(image, dict) or not isinstance(image.get("locator"), str) or not image["locator"]:
            raise RequestRejected("post.image.locator must be a non-empty string")
        for side in ("width", "height"):
            value = image.get(side)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise RequestRejected(f"post.image.{side} must be an integer >= 1")
    return data


def expected_request_id(body: dict[str, Any], endpoint: str) -> str:
    """Recompute the content hash for a parsed request body."""
    post = validate_post(body.get("post"))
    image = post.get("image")
    payload: dict[str, Any] = {
        "post_id": post["id"],
        "text": post["text"],
        "image_locator": image["locator"] if image else None,
    }
    if endpoint == "factcheck":
        payload["manipulation_context"] = body.get("manipulation_context")
    return content_hash(payload)


def check_request(body: Any, endpoint: str) -> dict[str, Any]:
    """Validate a request body against the wire contract; 400-worthy on failure."""
    if not isinstance(body, dict):
        raise RequestRejected("request body must be a JSON object")
    expected = expected_request_id(body, endpoint)
    if body.get("request_id") != expected:
        raise RequestRejected("request_id does not match the content hash")
    return body
