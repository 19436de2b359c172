"""Unified human-readable explanation reports.

A report joins both evidence sources for one post: the fact-check
verdict with its evidence and reasoning, then the manipulation analysis
with the annotated caption and bounding-box overlays, then the fusion
rationale. Section order is fixed so golden-file tests stay stable.

Formats: markdown, html, and json (the machine form; parsing it back
recovers the report). Overlays are standalone SVG sidecars that
reference the image by path, so no pixels are ever decoded here.
Timestamps come from an injectable clock.
"""

from __future__ import annotations

import html as html_lib
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

from .domain import (
    BoundingBox,
    DomainError,
    EvidenceItem,
    FiveWayLabel,
    FusedOutcome,
    ManipulationClass,
    Post,
    ThreeWayLabel,
    TokenLabelSeq,
    parse_enum,
)

FORMATS = ("markdown", "html", "json")

_EXTENSIONS = {"markdown": "md", "html": "html", "json": "json"}


class UnsupportedFormat(Exception):
    pass


class LengthMismatch(Exception):
    pass


class InvalidBox(Exception):
    pass


Clock = Callable[[], datetime]


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


def highlight_tokens(seq: TokenLabelSeq, fmt: str = "markdown") -> str:
    """Re-emit the caption with flagged tokens wrapped in markers.

    Markdown wraps with ``**``, HTML with ``<mark>`` (tokens escaped).
    Tokens are joined by single spaces, so stripping the markers recovers
    the whitespace-normalized caption exactly.
    """
    if len(seq.tokens) != len(seq.labels):
        raise LengthMismatch(f"{len(seq.tokens)} tokens vs {len(seq.labels)} labels")
    if fmt == "markdown":
        wrapped = [f"**{t}**" if flag else t for t, flag in zip(seq.tokens, seq.labels)]
    elif fmt == "html":
        wrapped = [
            f"<mark>{html_lib.escape(t)}</mark>" if flag else html_lib.escape(t)
            for t, flag in zip(seq.tokens, seq.labels)
        ]
    else:
        raise UnsupportedFormat(f"no token markers for format {fmt!r}")
    return " ".join(wrapped)


def strip_highlight_markers(text: str, fmt: str = "markdown") -> str:
    """Inverse of highlight_tokens on its output."""
    if fmt == "markdown":
        return text.replace("**", "")
    if fmt == "html":
        return html_lib.unescape(text.replace("<mark>", "").replace("</mark>", ""))
    raise UnsupportedFormat(f"no token markers for format {fmt!r}")


def _round_half_away(value: float) -> int:
    # Round-half-away-from-zero; coordinates here are never negative.
    return int(math.floor(value + 0.5))


@dataclass(frozen=True)
class OverlaySpec:
    """Pixel-space drawing instructions for one image's box overlay."""

    image_ref: str
    pixel_boxes: tuple[tuple[int, int, int, int], ...]
    stroke_width: int
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.pixel_boxes) != len(self.labels):
            raise LengthMismatch(f"{len(self.pixel_boxes)} boxes vs {len(self.labels)} labels")


def project_boxes(
    boxes: Sequence[BoundingBox],
    width: int,
    height: int,
    image_ref: str = "",
    labels: Sequence[str] | None = None,
    stroke_width: int = 3,
) -> OverlaySpec:
    """Scale normalized boxes to pixel rectangles on a width x height image.

    Each coordinate is rounded half-away-from-zero; the result always lies
    within [0, width] x [0, height].
    """
    if width < 1 or height < 1:
        raise InvalidBox(f"image dimensions must be >= 1, got {width}x{height}")
    pixel_boxes = []
    for box in boxes:
        if not isinstance(box, BoundingBox):
            raise InvalidBox(f"not a bounding box: {box!r}")
        pixel_boxes.append(
            (
                _round_half_away(box.x1 * width),
                _round_half_away(box.y1 * height),
                _round_half_away(box.x2 * width),
                _round_half_away(box.y2 * height),
            )
        )
    if labels is None:
        labels = [f"region {i + 1}" for i in range(len(pixel_boxes))]
    return OverlaySpec(
        image_ref=image_ref,
        pixel_boxes=tuple(pixel_boxes),
        stroke_width=stroke_width,
        labels=tuple(labels),
    )


def overlay_svg(spec: OverlaySpec, width: int, height: int) -> str:
    """One SVG document: the referenced image plus one rect per box."""
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'  <image href="{html_lib.escape(spec.image_ref, quote=True)}" width="{width}" height="{height}"/>',
    ]
    for (x1, y1, x2, y2), label in zip(spec.pixel_boxes, spec.labels):
        parts.append(
            f'  <rect x="{x1}" y="{y1}" width="{x2 - x1}" height="{y2 - y1}" '
            f'fill="none" stroke="red" stroke-width="{spec.stroke_width}"/>'
        )
        parts.append(
            f'  <text x="{x1}" y="{max(y1 - 4, 10)}" fill="red" font-size="12">{html_lib.escape(label)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


@dataclass(frozen=True)
class VerdictSection:
    verdict: ThreeWayLabel
    confidence: float | None
    evidence: tuple[EvidenceItem, ...]
    reasoning: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict.value,
            "confidence": self.confidence,
            "evidence": [e.to_dict() for e in self.evidence],
            "reasoning": list(self.reasoning),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> VerdictSection:
        return cls(
            verdict=parse_enum(ThreeWayLabel, data.get("verdict")),
            confidence=data.get("confidence"),
            evidence=tuple(EvidenceItem.from_dict(e) for e in data.get("evidence", [])),
            reasoning=tuple(data.get("reasoning", [])),
        )


@dataclass(frozen=True)
class ManipulationSection:
    klass: ManipulationClass
    is_fake: bool
    annotated_text: str
    overlays: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "klass": self.klass.value,
            "is_fake": self.is_fake,
            "annotated_text": self.annotated_text,
            "overlays": list(self.overlays),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ManipulationSection:
        return cls(
            klass=parse_enum(ManipulationClass, data.get("klass")),
            is_fake=bool(data.get("is_fake")),
            annotated_text=str(data.get("annotated_text", "")),
            overlays=tuple(data.get("overlays", [])),
        )


@dataclass(frozen=True)
class UnifiedReport:
    """The structured form behind every rendered report."""

    post_id: str
    final_label: FiveWayLabel
    verdict_section: VerdictSection
    manipulation_section: ManipulationSection | None
    rationale: str
    generated_at: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "post_id": self.post_id,
            "final_label": self.final_label.value,
            "verdict_section": self.verdict_section.to_dict(),
            "manipulation_section": self.manipulation_section.to_dict() if self.manipulation_section else None,
            "rationale": self.rationale,
            "generated_at": self.generated_at,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> UnifiedReport:
        if not isinstance(data, Mapping):
            raise DomainError("report must be an object")
        section = data.get("manipulation_section")
        return cls(
            post_id=str(data.get("post_id", "")),
            final_label=parse_enum(FiveWayLabel, data.get("final_label")),
            verdict_section=VerdictSection.from_dict(data.get("verdict_section", {})),
            manipulation_section=ManipulationSection.from_dict(section) if section is not None else None,
            rationale=str(data.get("rationale", "")),
            generated_at=str(data.get("generated_at", "")),
        )


def overlay_filename(post_id: str, index: int = 0) -> str:
    return f"{post_id}.overlay.{index}.svg"


def build_report(outcome: FusedOutcome, post: Post, clock: Clock | None = None) -> UnifiedReport:
    """Assemble the structured report for one outcome.

    The manipulation section exists exactly when the detector ran (its
    result is attached to the outcome); the annotated caption uses
    markdown markers in this structured form.
    """
    clock = clock or _utc_now
    fact = outcome.fact_check
    manipulation_section = None
    if outcome.manipulation is not None:
        m = outcome.manipulation
        if m.token_labels is not None:
            annotated = highlight_tokens(m.token_labels, "markdown")
        else:
            annotated = post.text
        overlays = ()
        if m.boxes and post.image is not None:
            overlays = (overlay_filename(post.id),)
        manipulation_section = ManipulationSection(
            klass=m.klass,
            is_fake=m.is_fake,
            annotated_text=annotated,
            overlays=overlays,
        )
    return UnifiedReport(
        post_id=post.id,
        final_label=outcome.label,
        verdict_section=VerdictSection(
            verdict=fact.verdict,
            confidence=fact.confidence,
            evidence=fact.evidence,
            reasoning=fact.reasoning,
        ),
        manipulation_section=manipulation_section,
        rationale=outcome.rationale,
        generated_at=clock().isoformat(),
    )


def render(outcome: FusedOutcome, post: Post, fmt: str = "markdown", clock: Clock | None = None) -> bytes:
    """Render one outcome as document bytes in the requested format."""
    if fmt not in FORMATS:
        raise UnsupportedFormat(f"format must be one of {FORMATS}, got {fmt!r}")
    report = build_report(outcome, post, clock)
    if fmt == "json":
        return (json.dumps(report.to_dict(), ensure_ascii=False, indent=2) + "\n").encode("utf-8")
    if fmt == "markdown":
        return _render_markdown(report, outcome, post).encode("utf-8")
    return _render_html(report, outcome, post).encode("utf-8")


def parse_report(data: bytes | str) -> UnifiedReport:
    """Parse a JSON report back into its structured form."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return UnifiedReport.from_dict(json.loads(data))


def _stance_tag(item: EvidenceItem) -> str:
    return item.stance.value if item.stance else "unrated"


def _render_markdown(report: UnifiedReport, outcome: FusedOutcome, post: Post) -> str:
    v = report.verdict_section
    lines = [
        f"# Verification report: {report.post_id}",
        "",
        f"**Final label:** {report.final_label.value}",
        "",
        "## Fact check",
        "",
        f"Verdict: {v.verdict.value}"
        + (f" (confidence {v.confidence:.2f})" if v.confidence is not None else ""),
        "",
    ]
    if v.evidence:
        lines.append("Evidence:")
        for i, item in enumerate(v.evidence, 1):
            lines.append(f'{i}. {item.source} ({_stance_tag(item)}): "{item.snippet}"')
        lines.append("")
    else:
        lines.extend(["Evidence: none recorded.", ""])
    if v.reasoning:
        lines.append("Reasoning:")
        for i, step in enumerate(v.reasoning, 1):
            lines.append(f"{i}. {step}")
        lines.append("")
    lines.extend(["## Manipulation analysis", ""])
    section = report.manipulation_section
    if section is None:
        lines.extend(["Manipulation analysis unavailable for this post.", ""])
    else:
        lines.append(f"Class: {section.klass.value}")
        lines.append(f"Fake: {'yes' if section.is_fake else 'no'}")
        lines.append(f"Caption: {section.annotated_text}")
        if section.overlays:
            lines.append("Overlays: " + ", ".join(section.overlays))
        elif outcome.manipulation is not None and outcome.manipulation.boxes:
            lines.append(f"Regions: {len(outcome.manipulation.boxes)} (no image reference; overlay not rendered)")
        lines.append("")
    lines.extend(
        [
            "## Rationale",
            "",
            report.rationale,
            "",
            f"_Generated at {report.generated_at}_",
            "",
        ]
    )
    return "\n".join(lines)


def _render_html(report: UnifiedReport, outcome: FusedOutcome, post: Post) -> str:
    esc = html_lib.escape
    v = report.verdict_section
    parts = [
        "<!DOCTYPE html>",
        '<html lang="en">',
        f'<head><meta charset="utf-8"><title>Verification report: {esc(report.post_id)}</title></head>',
        "<body>",
        f"<h1>Verification report: {esc(report.post_id)}</h1>",
        f'<p><strong>Final label:</strong> <span class="final-label">{report.final_label.value}</span></p>',
        "<h2>Fact check</h2>",
        f"<p>Verdict: {v.verdict.value}"
        + (f" (confidence {v.confidence:.2f})" if v.confidence is not None else "")
        + "</p>",
    ]
    if v.evidence:
        parts.append("<ol class=\"evidence\">")
        for item in v.evidence:
            parts.append(
                f'<li><a href="{esc(item.source, quote=True)}">{esc(item.source)}</a> '
                f"({_stance_tag(item)}): {esc(item.snippet)}</li>"
            )
        parts.append("</ol>")
    else:
        parts.append("<p>Evidence: none recorded.</p>")
    if v.reasoning:
        parts.append("<ol class=\"reasoning\">")
        parts.extend(f"<li>{esc(step)}</li>" for step in v.reasoning)
        parts.append("</ol>")
    parts.append("<h2>Manipulation analysis</h2>")
    section = report.manipulation_section
    if section is None:
        parts.append("<p>Manipulation analysis unavailable for this post.</p>")
    else:
        parts.append(f"<p>Class: {section.klass.value}<br>Fake: {'yes' if section.is_fake else 'no'}</p>")
        if outcome.manipulation is not None and outcome.manipulation.token_labels is not None:
            caption = highlight_tokens(outcome.manipulation.token_labels, "html")
        else:
            caption = esc(post.text)
        parts.append(f'<p class="caption">Caption: {caption}</p>')
        if section.overlays:
            refs = ", ".join(f'<a href="{esc(o, quote=True)}">{esc(o)}</a>' for o in section.overlays)
            parts.append(f"<p>Overlays: {refs}</p>")
    parts.extend(
        [
            "<h2>Rationale</h2>",
            f"<p>{esc(report.rationale)}</p>",
            f"<footer><em>Generated at {esc(report.generated_at)}</em></footer>",
            "</body>",
            "</html>",
        ]
    )
    return "\n".join(parts) + "\n"


def write_report(
    outcome: FusedOutcome,
    post: Post,
    out_dir: str | Path,
    fmt: str = "markdown",
    clock: Clock | None = None,
) -> list[Path]:
    """Write the report document plus any overlay sidecars; returns the paths."""
    if fmt not in FORMATS:
        raise UnsupportedFormat(f"format must be one of {FORMATS}, got {fmt!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    doc_path = out_dir / f"{post.id}.report.{_EXTENSIONS[fmt]}"
    doc_path.write_bytes(render(outcome, post, fmt, clock))
    written.append(doc_path)
    m = outcome.manipulation
    if m is not None and m.boxes and post.image is not None:
        spec = project_boxes(
            list(m.boxes),
            post.image.width,
            post.image.height,
            image_ref=post.image.locator,
            labels=[f"{m.klass.value} region {i + 1}" for i in range(len(m.boxes))],
        )
        svg_path = out_dir / overlay_filename(post.id)
        svg_path.write_text(overlay_svg(spec, post.image.width, post.image.height), encoding="utf-8")
        written.append(svg_path)
    return written
