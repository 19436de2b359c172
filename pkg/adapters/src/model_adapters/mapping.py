"""Mapping of raw model predictions onto wire-schema responses.

The wire schema has hard consistency rules (face classes need boxes,
text classes need flagged tokens, pristine needs neither); a prediction
that cannot satisfy them raises MappingError rather than producing a
response the client would reject.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .align import align_subword_flags
from .normalize import MappingError, normalize_class, normalize_verdict

#: Stamped on evidence items that carry no retrieval time of their own.
DEFAULT_RETRIEVED_AT = "1970-01-01T00:00:00+00:00"

_FACE_CLASSES = {"fs", "fa", "fs_ts", "fs_ta", "fa_ts", "fa_ta"}
_TEXT_CLASSES = {"ts", "ta", "fs_ts", "fs_ta", "fa_ts", "fa_ta"}
_STANCES = {"supports", "refutes", "neutral"}
_TOOLS = {"web_search", "image_search", "reverse_image_search", "geolocation"}


@dataclass
class ManipulationPrediction:
    """What a detection model reports, in its own vocabulary and pixel space."""

    class_name: str
    fake_score: float | None = None
    class_scores: dict[str, float] | None = None
    subword_spans: list[tuple[int, int]] = field(default_factory=list)
    subword_flags: list[int] = field(default_factory=list)
    pixel_boxes: list[tuple[float, float, float, float]] = field(default_factory=list)


@dataclass
class FactcheckPrediction:
    """What a fact-checking model reports before verdict normalization."""

    verdict_text: str
    confidence: float | None = None
    evidence: list[dict[str, Any]] = field(default_factory=list)
    reasoning: list[str] = field(default_factory=list)
    tool_trace: list[dict[str, Any]] = field(default_factory=list)


def _normalized_box(pixel_box, width: int, height: int) -> dict[str, float]:
    x1, y1, x2, y2 = pixel_box
    box = {
        "x1": max(0.0, min(1.0, x1 / width)),
        "y1": max(0.0, min(1.0, y1 / height)),
        "x2": max(0.0, min(1.0, x2 / width)),
        "y2": max(0.0, min(1.0, y2 / height)),
    }
    if not (box["x1"] < box["x2"] and box["y1"] < box["y2"]):
        raise MappingError(f"degenerate predicted box {pixel_box!r}")
    return box


def manipulation_response(
    pred: ManipulationPrediction,
    text: str,
    image_size: tuple[int, int] | None,
) -> dict[str, Any]:
    """Build a wire manipulation result from a raw prediction.

    Subword flags are projected onto whitespace tokens; pixel boxes are
    normalized by the post's image dimensions.
    """
    klass = normalize_class(pred.class_name)
    is_fake = klass != "pristine"

    boxes = []
    if pred.pixel_boxes:
        if image_size is None:
            raise MappingError("model predicted boxes but the post has no image dimensions")
        boxes = [_normalized_box(b, image_size[0], image_size[1]) for b in pred.pixel_boxes]
    if klass in _FACE_CLASSES and not boxes:
        raise MappingError(f"class {klass} requires at least one predicted box")

    token_labels = None
    if pred.subword_spans or klass in _TEXT_CLASSES:
        tokens, labels = align_subword_flags(text, pred.subword_spans, pred.subword_flags)
        token_labels = {"tokens": tokens, "labels": labels}
        if klass in _TEXT_CLASSES and not any(labels):
            raise MappingError(f"class {klass} requires at least one flagged token")
        if not is_fake and any(labels):
            raise MappingError("pristine prediction with flagged tokens")
    if not is_fake and boxes:
        raise MappingError("pristine prediction with boxes")

    class_scores = None
    if pred.class_scores is not None:
        class_scores = {}
        for name, score in pred.class_scores.items():
            try:
                class_scores[normalize_class(name)] = max(0.0, min(1.0, float(score)))
            except MappingError:
                continue  # score entries outside the table are advisory only
        class_scores = class_scores or None

    return {
        "is_fake": is_fake,
        "klass": klass,
        "class_scores": class_scores,
        "token_labels": token_labels,
        "boxes": boxes,
    }


def factcheck_response(pred: FactcheckPrediction) -> dict[str, Any]:
    """Build a wire fact-check result from a raw prediction."""
    verdict = normalize_verdict(pred.verdict_text)
    evidence = []
    for item in pred.evidence:
        source = item.get("source")
        if not isinstance(source, str) or not source:
            raise MappingError(f"evidence item without a source: {item!r}")
        stance = item.get("stance")
        evidence.append(
            {
                "source": source,
                "snippet": str(item.get("snippet", "")),
                "retrieved_at": str(item.get("retrieved_at") or DEFAULT_RETRIEVED_AT),
                "stance": stance if stance in _STANCES else None,
            }
        )
    trace = []
    for call in pred.tool_trace:
        tool = call.get("tool")
        if tool not in _TOOLS:
            raise MappingError(f"unknown tool in trace: {tool!r}")
        count = call.get("result_count", 0)
        if not isinstance(count, int) or isinstance(count, bool) or count < 0:
            raise MappingError(f"bad result_count: {count!r}")
        trace.append({"tool": tool, "query": str(call.get("query", "")), "result_count": count})
    if not evidence and verdict != "nei" and trace:
        raise MappingError(f"verdict {verdict} reached through tools must cite evidence")
    confidence = pred.confidence
    if confidence is not None:
        confidence = max(0.0, min(1.0, float(confidence)))
    return {
        "verdict": verdict,
        "confidence": confidence,
        "evidence": evidence,
        "reasoning": [str(step) for step in pred.reasoning],
        "tool_trace": trace,
    }


def summarize_manipulation_context(context: dict[str, Any] | None) -> str | None:
    """Serialize an attached manipulation analysis into model input text.

    One fixed template: binary flag, class, flagged caption tokens, and
    region count. Returns None when no context is attached.
    """
    if context is None:
        return None
    parts = [
        f"fake={'yes' if context.get('is_fake') else 'no'}",
        f"class={context.get('klass', 'unknown')}",
    ]
    token_labels = context.get("token_labels")
    if token_labels:
        flagged = [t for t, flag in zip(token_labels.get("tokens", []), token_labels.get("labels", [])) if flag]
        if flagged:
            parts.append("flagged tokens: " + " ".join(flagged))
    boxes = context.get("boxes") or []
    if boxes:
        parts.append(f"manipulated regions: {len(boxes)}")
    return "manipulation analysis: " + "; ".join(parts)
