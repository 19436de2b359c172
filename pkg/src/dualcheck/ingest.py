"""Dataset loading with boundary validation.

Two canonical JSONL record shapes are defined here:

  - manipulation records: a post plus its gold manipulation class,
    normalized gold boxes, and gold token flags;
  - claim records: a post (image optional) plus a three-way gold label.

Every invariant is checked at load time and every error carries the
offending line number; nothing invalid survives past the boundary.
External files with dataset-specific class strings are adapted through a
configurable class-name map, and pixel-space boxes can be normalized by
the record's image dimensions at load. Exported files use a stable field
order, so re-exporting a loaded file is byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .domain import (
    BoundingBox,
    DomainError,
    ManipulationClass,
    Post,
    ThreeWayLabel,
    TokenLabelSeq,
    FACE_CLASSES,
    TEXT_CLASSES,
    is_manipulated,
)


class IngestError(Exception):
    """Base class for load failures; carries the 1-based line number."""

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class ParseError(IngestError):
    pass


class UnknownClass(IngestError):
    def __init__(self, line: int, class_string: str) -> None:
        super().__init__(line, f"unknown manipulation class string {class_string!r}")
        self.class_string = class_string


class InvalidBox(IngestError):
    pass


class TokenMismatch(IngestError):
    pass


class IoError(Exception):
    pass


@dataclass(frozen=True)
class ClassNameMap:
    """Adapter from dataset-specific class strings to the internal taxonomy.

    Lookups fold case; a string absent from the table is a load error.
    """

    table: Mapping[str, ManipulationClass]

    def __post_init__(self) -> None:
        folded = {}
        for key, value in self.table.items():
            if not isinstance(value, ManipulationClass):
                raise DomainError(f"class map values must be ManipulationClass, got {value!r}")
            folded[key.lower()] = value
        object.__setattr__(self, "table", folded)

    def resolve(self, class_string: str) -> ManipulationClass | None:
        return self.table.get(class_string.lower())


def default_class_map() -> ClassNameMap:
    """The canonical names themselves; external aliases are configuration."""
    return ClassNameMap({k.value: k for k in ManipulationClass})


_GOLD_ALIASES = {
    "supported": ThreeWayLabel.SUPPORTED,
    "refuted": ThreeWayLabel.REFUTED,
    "nei": ThreeWayLabel.NEI,
    "not-enough-information": ThreeWayLabel.NEI,
    "not_enough_information": ThreeWayLabel.NEI,
    "not enough information": ThreeWayLabel.NEI,
}


def parse_gold_label(value: Any) -> ThreeWayLabel:
    if not isinstance(value, str):
        raise DomainError(f"gold label must be a string, got {value!r}")
    label = _GOLD_ALIASES.get(value.strip().lower())
    if label is None:
        raise DomainError(f"unknown gold label {value!r}")
    return label


def _grounding_violation(
    klass: ManipulationClass,
    boxes: Sequence[BoundingBox],
    token_flags: TokenLabelSeq | None,
) -> tuple[str, str] | None:
    """Check class/box/token consistency; returns (kind, message) or None."""
    if klass is ManipulationClass.PRISTINE:
        if boxes:
            return "box", "pristine records must not carry boxes"
        if token_flags is not None and token_flags.any_flagged():
            return "token", "pristine records must not flag tokens"
        return None
    if klass in FACE_CLASSES and not boxes:
        return "box", f"class {klass.value} requires at least one box"
    if klass in TEXT_CLASSES and (token_flags is None or not token_flags.any_flagged()):
        return "token", f"class {klass.value} requires token flags with at least one flag set"
    return None


@dataclass(frozen=True)
class Dgm4Record:
    """One manipulation-annotated post with normalized grounding."""

    post: Post
    gold_class: ManipulationClass
    gold_boxes: tuple[BoundingBox, ...]
    gold_token_flags: TokenLabelSeq | None = None

    def __init__(
        self,
        post: Post,
        gold_class: ManipulationClass,
        gold_boxes: Iterable[BoundingBox] = (),
        gold_token_flags: TokenLabelSeq | None = None,
    ) -> None:
        object.__setattr__(self, "post", post)
        object.__setattr__(self, "gold_class", gold_class)
        object.__setattr__(self, "gold_boxes", tuple(gold_boxes))
        object.__setattr__(self, "gold_token_flags", gold_token_flags)
        violation = _grounding_violation(self.gold_class, self.gold_boxes, self.gold_token_flags)
        if violation is not None:
            raise DomainError(violation[1])

    def is_fake(self) -> bool:
        return is_manipulated(self.gold_class)

    def to_dict(self) -> dict[str, Any]:
        return {
            "post": self.post.to_dict(),
            "gold_class": self.gold_class.value,
            "gold_boxes": [b.to_dict() for b in self.gold_boxes],
            "gold_token_flags": self.gold_token_flags.to_dict() if self.gold_token_flags else None,
        }


@dataclass(frozen=True)
class ClaimRecord:
    """One claim post with its three-way gold label."""

    post: Post
    gold: ThreeWayLabel

    def to_dict(self) -> dict[str, Any]:
        return {"post": self.post.to_dict(), "gold": self.gold.value}


def _iter_jsonl(path: str | Path):
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(lineno, f"invalid JSON: {exc}") from exc


def _parse_box(data: Any, line: int, image, pixel: bool) -> BoundingBox:
    if not isinstance(data, Mapping) or {"x1", "y1", "x2", "y2"} - set(data):
        raise InvalidBox(line, f"box must be an object with x1/y1/x2/y2, got {data!r}")
    values = {k: data[k] for k in ("x1", "y1", "x2", "y2")}
    for k, v in values.items():
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise InvalidBox(line, f"box {k} must be numeric, got {v!r}")
    if pixel:
        if image is None:
            raise InvalidBox(line, "pixel boxes need image dimensions, but the record has no image")
        values = {
            "x1": values["x1"] / image.width,
            "y1": values["y1"] / image.height,
            "x2": values["x2"] / image.width,
            "y2": values["y2"] / image.height,
        }
    try:
        return BoundingBox(**values)
    except DomainError as exc:
        raise InvalidBox(line, str(exc)) from exc


def parse_dgm4_record(
    data: Any,
    line: int,
    class_map: ClassNameMap,
    boxes: str = "normalized",
) -> Dgm4Record:
    """Parse one manipulation record, attaching the line number to any error."""
    if not isinstance(data, Mapping):
        raise ParseError(line, "record must be a JSON object")
    try:
        post = Post.from_dict(data.get("post", {}))
    except DomainError as exc:
        raise ParseError(line, f"invalid post: {exc}") from exc
    raw_class = data.get("gold_class")
    if not isinstance(raw_class, str):
        raise ParseError(line, f"gold_class must be a string, got {raw_class!r}")
    klass = class_map.resolve(raw_class)
    if klass is None:
        raise UnknownClass(line, raw_class)
    raw_boxes = data.get("gold_boxes", [])
    if not isinstance(raw_boxes, list):
        raise InvalidBox(line, "gold_boxes must be a list")
    parsed_boxes = [_parse_box(b, line, post.image, pixel=(boxes == "pixel")) for b in raw_boxes]
    raw_flags = data.get("gold_token_flags")
    flags = None
    if raw_flags is not None:
        try:
            flags = TokenLabelSeq.from_dict(raw_flags)
        except DomainError as exc:
            raise TokenMismatch(line, str(exc)) from exc
    violation = _grounding_violation(klass, parsed_boxes, flags)
    if violation is not None:
        kind, message = violation
        raise (InvalidBox if kind == "box" else TokenMismatch)(line, message)
    return Dgm4Record(post=post, gold_class=klass, gold_boxes=parsed_boxes, gold_token_flags=flags)


def parse_claim_record(data: Any, line: int) -> ClaimRecord:
    if not isinstance(data, Mapping):
        raise ParseError(line, "record must be a JSON object")
    try:
        post = Post.from_dict(data.get("post", {}))
        gold = parse_gold_label(data.get("gold"))
    except DomainError as exc:
        raise ParseError(line, str(exc)) from exc
    return ClaimRecord(post=post, gold=gold)


def load_dgm4(
    path: str | Path,
    class_map: ClassNameMap | None = None,
    boxes: str = "normalized",
) -> list[Dgm4Record]:
    """Load manipulation records; ``boxes="pixel"`` normalizes source boxes
    by each record's image dimensions."""
    if boxes not in ("normalized", "pixel"):
        raise ValueError(f"boxes must be 'normalized' or 'pixel', got {boxes!r}")
    class_map = class_map or default_class_map()
    return [parse_dgm4_record(data, lineno, class_map, boxes) for lineno, data in _iter_jsonl(path)]


def load_claims(path: str | Path) -> list[ClaimRecord]:
    return [parse_claim_record(data, lineno) for lineno, data in _iter_jsonl(path)]


def export_canonical(records: Iterable[Dgm4Record | ClaimRecord], path: str | Path) -> None:
    """Write records as canonical JSONL; stable field order, one per line."""
    try:
        with Path(path).open("w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


FIXTURES_DIR = Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> Path:
    return FIXTURES_DIR / name


def load_fixture_claims() -> list[ClaimRecord]:
    """The bundled 12-claim set: four posts per gold label."""
    return load_claims(fixture_path("claims.jsonl"))


def load_fixture_dgm4() -> list[Dgm4Record]:
    """The bundled 12-record manipulation set: one per class plus edge cases."""
    return load_dgm4(fixture_path("dgm4.jsonl"))
