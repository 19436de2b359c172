"""Core domain types for dual-source verification.

Everything the pipeline passes around lives here: the post under
verification, the three-way fact-check verdict space, the nine-class
manipulation taxonomy with its region/token grounding, and the five-way
fused label space. All types are immutable values; constructors validate
their invariants so no inconsistent value circulates downstream.

Canonical JSON form: each type serializes to an object with the field
names used in this module, enumerations as lowercase snake_case strings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Any, Iterable, Mapping


class DomainError(ValueError):
    """An invariant violation detected while constructing a domain value."""


class ThreeWayLabel(Enum):
    """External-evidence verdict space."""

    SUPPORTED = "supported"
    REFUTED = "refuted"
    NEI = "nei"


class FiveWayLabel(Enum):
    """Final label space after fusing fact-check and manipulation signals.

    Extends the three-way space with:
      - LMGS: locally manipulated but globally supported
      - MBU: manipulated but unverifiable
    """

    SUPPORTED = "supported"
    REFUTED = "refuted"
    NEI = "nei"
    LMGS = "lmgs"
    MBU = "mbu"


class ManipulationClass(Enum):
    """Local-manipulation taxonomy: face/text swaps and attribute edits,
    alone or combined across modalities."""

    PRISTINE = "pristine"
    FS = "fs"
    FA = "fa"
    TS = "ts"
    TA = "ta"
    FS_TS = "fs_ts"
    FS_TA = "fs_ta"
    FA_TS = "fa_ts"
    FA_TA = "fa_ta"


#: Classes that include an image-region manipulation (require boxes).
FACE_CLASSES = frozenset(
    {
        ManipulationClass.FS,
        ManipulationClass.FA,
        ManipulationClass.FS_TS,
        ManipulationClass.FS_TA,
        ManipulationClass.FA_TS,
        ManipulationClass.FA_TA,
    }
)

#: Classes that include a text manipulation (require flagged tokens).
TEXT_CLASSES = frozenset(
    {
        ManipulationClass.TS,
        ManipulationClass.TA,
        ManipulationClass.FS_TS,
        ManipulationClass.FS_TA,
        ManipulationClass.FA_TS,
        ManipulationClass.FA_TA,
    }
)


class Stance(Enum):
    SUPPORTS = "supports"
    REFUTES = "refutes"
    NEUTRAL = "neutral"


class ToolKind(Enum):
    WEB_SEARCH = "web_search"
    IMAGE_SEARCH = "image_search"
    REVERSE_IMAGE_SEARCH = "reverse_image_search"
    GEOLOCATION = "geolocation"


class PipelineMode(Enum):
    ROUTING = "routing"
    INJECTION = "injection"


def collapse(label: FiveWayLabel) -> ThreeWayLabel:
    """Collapse a five-way label to the standard three-way space.

    LMGS and MBU both fold into Refuted; the shared variants map to
    themselves. Total over FiveWayLabel.
    """
    if label in (FiveWayLabel.LMGS, FiveWayLabel.MBU):
        return ThreeWayLabel.REFUTED
    return ThreeWayLabel(label.value)


def is_manipulated(klass: ManipulationClass) -> bool:
    """True for every class except pristine."""
    return klass is not ManipulationClass.PRISTINE


def whitespace_tokens(text: str) -> list[str]:
    """Segment text into whitespace tokens (the unit token labels refer to)."""
    return text.split()


_ENUM_KIND = {
    ThreeWayLabel: "three-way label",
    FiveWayLabel: "five-way label",
    ManipulationClass: "manipulation class",
    Stance: "stance",
    ToolKind: "tool",
    PipelineMode: "pipeline mode",
}


def parse_enum(enum_cls: type, value: Any) -> Any:
    if not isinstance(value, str):
        raise DomainError(f"{_ENUM_KIND.get(enum_cls, enum_cls.__name__)} must be a string, got {value!r}")
    try:
        return enum_cls(value)
    except ValueError:
        raise DomainError(f"unknown {_ENUM_KIND.get(enum_cls, enum_cls.__name__)}: {value!r}") from None


def _validate_timestamp(value: Any) -> str:
    if not isinstance(value, str) or not value:
        raise DomainError(f"timestamp must be a non-empty string, got {value!r}")
    try:
        datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError:
        raise DomainError(f"timestamp is not ISO 8601: {value!r}") from None
    return value


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise DomainError(message)


@dataclass(frozen=True)
class ImageRef:
    """Reference to an image by locator; pixel data is never read here."""

    locator: str
    width: int
    height: int

    def __post_init__(self) -> None:
        _require(bool(self.locator), "image locator must be non-empty")
        _require(isinstance(self.width, int) and self.width >= 1, "image width must be >= 1")
        _require(isinstance(self.height, int) and self.height >= 1, "image height must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {"locator": self.locator, "width": self.width, "height": self.height}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ImageRef:
        _require(isinstance(data, Mapping), "image must be an object")
        return cls(
            locator=_expect_str(data, "locator"),
            width=_expect_int(data, "width"),
            height=_expect_int(data, "height"),
        )


@dataclass(frozen=True)
class Post:
    """One image-text item under verification."""

    id: str
    text: str
    image: ImageRef | None = None
    source_meta: Mapping[str, str] | None = None

    def __post_init__(self) -> None:
        _require(isinstance(self.id, str) and bool(self.id), "post id must be non-empty")
        _require(isinstance(self.text, str) and bool(self.text), "post text must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "text": self.text,
            "image": self.image.to_dict() if self.image else None,
            "source_meta": dict(self.source_meta) if self.source_meta is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Post:
        _require(isinstance(data, Mapping), "post must be an object")
        image = data.get("image")
        meta = data.get("source_meta")
        if meta is not None and not isinstance(meta, Mapping):
            raise DomainError("source_meta must be an object or null")
        return cls(
            id=_expect_str(data, "id"),
            text=_expect_str(data, "text"),
            image=ImageRef.from_dict(image) if image is not None else None,
            source_meta=dict(meta) if meta is not None else None,
        )


@dataclass(frozen=True)
class BoundingBox:
    """Normalized image rectangle; pixel boxes are a render-time projection."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        for name in ("x1", "y1", "x2", "y2"):
            v = getattr(self, name)
            _require(isinstance(v, (int, float)) and not isinstance(v, bool), f"box {name} must be numeric")
        _require(0.0 <= self.x1 < self.x2 <= 1.0, f"box x-range invalid: {self.x1}..{self.x2}")
        _require(0.0 <= self.y1 < self.y2 <= 1.0, f"box y-range invalid: {self.y1}..{self.y2}")

    def to_dict(self) -> dict[str, float]:
        return {"x1": self.x1, "y1": self.y1, "x2": self.x2, "y2": self.y2}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> BoundingBox:
        _require(isinstance(data, Mapping), "box must be an object")
        missing = {"x1", "y1", "x2", "y2"} - set(data)
        _require(not missing, f"box missing fields: {sorted(missing)}")
        return cls(x1=data["x1"], y1=data["y1"], x2=data["x2"], y2=data["y2"])


@dataclass(frozen=True)
class TokenLabelSeq:
    """Whitespace tokens of a caption plus a 0/1 manipulation flag per token."""

    tokens: tuple[str, ...]
    labels: tuple[int, ...]

    def __init__(self, tokens: Iterable[str], labels: Iterable[int]) -> None:
        object.__setattr__(self, "tokens", tuple(tokens))
        object.__setattr__(self, "labels", tuple(labels))
        _require(len(self.tokens) == len(self.labels), "tokens and labels must have equal length")
        for t in self.tokens:
            _require(isinstance(t, str) and bool(t) and not re.search(r"\s", t), f"invalid token: {t!r}")
        for flag in self.labels:
            _require(flag in (0, 1), f"token label must be 0 or 1, got {flag!r}")

    @classmethod
    def from_text(cls, text: str, flagged_indices: Iterable[int] = ()) -> TokenLabelSeq:
        tokens = whitespace_tokens(text)
        flagged = set(flagged_indices)
        return cls(tokens, [1 if i in flagged else 0 for i in range(len(tokens))])

    def any_flagged(self) -> bool:
        return any(self.labels)

    def to_dict(self) -> dict[str, Any]:
        return {"tokens": list(self.tokens), "labels": list(self.labels)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> TokenLabelSeq:
        _require(isinstance(data, Mapping), "token_labels must be an object")
        tokens = data.get("tokens")
        labels = data.get("labels")
        _require(isinstance(tokens, list), "token_labels.tokens must be a list")
        _require(isinstance(labels, list), "token_labels.labels must be a list")
        return cls(tokens, labels)


@dataclass(frozen=True)
class EvidenceItem:
    """A retrieved piece of external evidence cited by the fact-check report."""

    source: str
    snippet: str
    retrieved_at: str
    stance: Stance | None = None

    def __post_init__(self) -> None:
        _require(isinstance(self.source, str) and bool(self.source), "evidence source must be non-empty")
        _require(isinstance(self.snippet, str), "evidence snippet must be a string")
        _validate_timestamp(self.retrieved_at)

    def to_dict(self) -> dict[str, Any]:
        return {
            "source": self.source,
            "snippet": self.snippet,
            "retrieved_at": self.retrieved_at,
            "stance": self.stance.value if self.stance else None,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> EvidenceItem:
        _require(isinstance(data, Mapping), "evidence item must be an object")
        stance = data.get("stance")
        return cls(
            source=_expect_str(data, "source"),
            snippet=_expect_str(data, "snippet", allow_empty=True),
            retrieved_at=data.get("retrieved_at", ""),
            stance=parse_enum(Stance, stance) if stance is not None else None,
        )


@dataclass(frozen=True)
class ToolInvocation:
    """One search-tool call recorded in the fact-check trace."""

    tool: ToolKind
    query: str
    result_count: int

    def __post_init__(self) -> None:
        _require(isinstance(self.tool, ToolKind), "tool must be a ToolKind")
        _require(isinstance(self.query, str), "query must be a string")
        _require(
            isinstance(self.result_count, int) and not isinstance(self.result_count, bool) and self.result_count >= 0,
            "result_count must be an integer >= 0",
        )

    def to_dict(self) -> dict[str, Any]:
        return {"tool": self.tool.value, "query": self.query, "result_count": self.result_count}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ToolInvocation:
        _require(isinstance(data, Mapping), "tool invocation must be an object")
        return cls(
            tool=parse_enum(ToolKind, data.get("tool")),
            query=_expect_str(data, "query", allow_empty=True),
            result_count=data.get("result_count", 0),
        )


@dataclass(frozen=True)
class FactCheckResult:
    """External-evidence verdict plus its structured reasoning report.

    Invariant: evidence may be empty only when the verdict is NEI or no
    tools were invoked; a supported/refuted verdict reached through tool
    use must cite at least one evidence item.
    """

    verdict: ThreeWayLabel
    confidence: float | None = None
    evidence: tuple[EvidenceItem, ...] = ()
    reasoning: tuple[str, ...] = ()
    tool_trace: tuple[ToolInvocation, ...] = ()

    def __init__(
        self,
        verdict: ThreeWayLabel,
        confidence: float | None = None,
        evidence: Iterable[EvidenceItem] = (),
        reasoning: Iterable[str] = (),
        tool_trace: Iterable[ToolInvocation] = (),
    ) -> None:
        object.__setattr__(self, "verdict", verdict)
        object.__setattr__(self, "confidence", confidence)
        object.__setattr__(self, "evidence", tuple(evidence))
        object.__setattr__(self, "reasoning", tuple(reasoning))
        object.__setattr__(self, "tool_trace", tuple(tool_trace))
        _require(isinstance(self.verdict, ThreeWayLabel), "verdict must be a ThreeWayLabel")
        if self.confidence is not None:
            _require(
                isinstance(self.confidence, (int, float))
                and not isinstance(self.confidence, bool)
                and 0.0 <= self.confidence <= 1.0,
                f"confidence must be in [0,1], got {self.confidence!r}",
            )
        for item in self.evidence:
            _require(isinstance(item, EvidenceItem), "evidence entries must be EvidenceItem")
        for step in self.reasoning:
            _require(isinstance(step, str), "reasoning steps must be strings")
        for call in self.tool_trace:
            _require(isinstance(call, ToolInvocation), "tool_trace entries must be ToolInvocation")
        if not self.evidence:
            _require(
                self.verdict is ThreeWayLabel.NEI or not self.tool_trace,
                "evidence may be empty only for NEI verdicts or when no tools ran",
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict.value,
            "confidence": self.confidence,
            "evidence": [e.to_dict() for e in self.evidence],
            "reasoning": list(self.reasoning),
            "tool_trace": [t.to_dict() for t in self.tool_trace],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> FactCheckResult:
        _require(isinstance(data, Mapping), "fact-check result must be an object")
        evidence = data.get("evidence", [])
        reasoning = data.get("reasoning", [])
        trace = data.get("tool_trace", [])
        _require(isinstance(evidence, list), "evidence must be a list")
        _require(isinstance(reasoning, list), "reasoning must be a list")
        _require(isinstance(trace, list), "tool_trace must be a list")
        return cls(
            verdict=parse_enum(ThreeWayLabel, data.get("verdict")),
            confidence=data.get("confidence"),
            evidence=[EvidenceItem.from_dict(e) for e in evidence],
            reasoning=reasoning,
            tool_trace=[ToolInvocation.from_dict(t) for t in trace],
        )


@dataclass(frozen=True)
class ManipulationResult:
    """Content-manipulation analysis: class, real/fake flag, and grounding.

    Consistency rules enforced here:
      - is_fake agrees with the class (fake iff not pristine);
      - classes with an image component carry at least one box;
      - classes with a text component carry token labels with >= 1 flag;
      - pristine results carry no boxes and no set flags.
    """

    is_fake: bool
    klass: ManipulationClass
    class_scores: Mapping[ManipulationClass, float] | None = None
    token_labels: TokenLabelSeq | None = None
    boxes: tuple[BoundingBox, ...] = ()

    def __init__(
        self,
        is_fake: bool,
        klass: ManipulationClass,
        class_scores: Mapping[ManipulationClass, float] | None = None,
        token_labels: TokenLabelSeq | None = None,
        boxes: Iterable[BoundingBox] = (),
    ) -> None:
        object.__setattr__(self, "is_fake", is_fake)
        object.__setattr__(self, "klass", klass)
        object.__setattr__(self, "class_scores", dict(class_scores) if class_scores is not None else None)
        object.__setattr__(self, "token_labels", token_labels)
        object.__setattr__(self, "boxes", tuple(boxes))
        _require(isinstance(self.is_fake, bool), "is_fake must be a boolean")
        _require(isinstance(self.klass, ManipulationClass), "klass must be a ManipulationClass")
        _require(
            self.is_fake == is_manipulated(self.klass),
            f"is_fake={self.is_fake} disagrees with class {self.klass.value}",
        )
        if self.class_scores is not None:
            for k, v in self.class_scores.items():
                _require(isinstance(k, ManipulationClass), "class_scores keys must be ManipulationClass")
                _require(
                    isinstance(v, (int, float)) and not isinstance(v, bool) and 0.0 <= v <= 1.0,
                    f"class score for {k.value} must be in [0,1]",
                )
        if self.token_labels is not None:
            _require(isinstance(self.token_labels, TokenLabelSeq), "token_labels must be a TokenLabelSeq")
        for box in self.boxes:
            _require(isinstance(box, BoundingBox), "boxes entries must be BoundingBox")
        if self.klass is ManipulationClass.PRISTINE:
            _require(not self.boxes, "pristine results must not carry boxes")
            if self.token_labels is not None:
                _require(not self.token_labels.any_flagged(), "pristine results must not flag tokens")
        if self.klass in FACE_CLASSES:
            _require(bool(self.boxes), f"class {self.klass.value} requires at least one box")
        if self.klass in TEXT_CLASSES:
            _require(
                self.token_labels is not None and self.token_labels.any_flagged(),
                f"class {self.klass.value} requires token labels with at least one flag",
            )

    @classmethod
    def pristine(cls) -> ManipulationResult:
        return cls(is_fake=False, klass=ManipulationClass.PRISTINE)

    def to_dict(self) -> dict[str, Any]:
        return {
            "is_fake": self.is_fake,
            "klass": self.klass.value,
            "class_scores": (
                {k.value: v for k, v in self.class_scores.items()} if self.class_scores is not None else None
            ),
            "token_labels": self.token_labels.to_dict() if self.token_labels else None,
            "boxes": [b.to_dict() for b in self.boxes],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ManipulationResult:
        _require(isinstance(data, Mapping), "manipulation result must be an object")
        scores = data.get("class_scores")
        if scores is not None:
            _require(isinstance(scores, Mapping), "class_scores must be an object or null")
            scores = {parse_enum(ManipulationClass, k): v for k, v in scores.items()}
        labels = data.get("token_labels")
        boxes = data.get("boxes", [])
        _require(isinstance(boxes, list), "boxes must be a list")
        is_fake = data.get("is_fake")
        _require(isinstance(is_fake, bool), "is_fake must be a boolean")
        return cls(
            is_fake=is_fake,
            klass=parse_enum(ManipulationClass, data.get("klass")),
            class_scores=scores,
            token_labels=TokenLabelSeq.from_dict(labels) if labels is not None else None,
            boxes=[BoundingBox.from_dict(b) for b in boxes],
        )


@dataclass(frozen=True)
class FusedOutcome:
    """Final five-way verdict with provenance from both evidence sources."""

    label: FiveWayLabel
    fact_check: FactCheckResult
    manipulation: ManipulationResult | None
    rationale: str
    pipeline_mode: PipelineMode

    def __post_init__(self) -> None:
        _require(isinstance(self.label, FiveWayLabel), "label must be a FiveWayLabel")
        _require(isinstance(self.fact_check, FactCheckResult), "fact_check must be a FactCheckResult")
        _require(isinstance(self.rationale, str) and bool(self.rationale), "rationale must be non-empty")
        _require(isinstance(self.pipeline_mode, PipelineMode), "pipeline_mode must be a PipelineMode")
        if self.label in (FiveWayLabel.LMGS, FiveWayLabel.MBU):
            _require(
                self.manipulation is not None and self.manipulation.is_fake,
                f"label {self.label.value} requires a manipulation result with is_fake=true",
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "label": self.label.value,
            "fact_check": self.fact_check.to_dict(),
            "manipulation": self.manipulation.to_dict() if self.manipulation else None,
            "rationale": self.rationale,
            "pipeline_mode": self.pipeline_mode.value,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> FusedOutcome:
        _require(isinstance(data, Mapping), "fused outcome must be an object")
        manipulation = data.get("manipulation")
        return cls(
            label=parse_enum(FiveWayLabel, data.get("label")),
            fact_check=FactCheckResult.from_dict(data.get("fact_check", {})),
            manipulation=ManipulationResult.from_dict(manipulation) if manipulation is not None else None,
            rationale=_expect_str(data, "rationale"),
            pipeline_mode=parse_enum(PipelineMode, data.get("pipeline_mode")),
        )


def _expect_str(data: Mapping[str, Any], key: str, allow_empty: bool = False) -> str:
    value = data.get(key)
    if not isinstance(value, str) or (not allow_empty and not value):
        raise DomainError(f"field {key!r} must be a non-empty string, got {value!r}")
    return value


def _expect_int(data: Mapping[str, Any], key: str) -> int:
    value = data.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise DomainError(f"field {key!r} must be an integer, got {value!r}")
    return value
