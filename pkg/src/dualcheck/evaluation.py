"""Scoring of five-way predictions against three-way gold labels.

Three evaluation rules with increasingly lenient acceptance sets:

  - strict: the raw five-way prediction must equal the gold label, so
    lmgs/mbu predictions are never strict-correct;
  - manipulation-aware: refuted/lmgs/mbu all count for gold refuted,
    everything else still needs an exact match;
  - intervention-aware: refuted/lmgs/mbu count for gold refuted or gold
    NEI, and only supported counts for gold supported. A literal NEI
    prediction on gold NEI is NOT correct under this rule: the rule
    rewards flagging unverifiable content, not abstaining.

Binary scoring (real/fake) and a pred x gold confusion matrix round out
the bookkeeping. All aggregation is plain counting: accuracy times n is
always an exact integer, which the count-check diagnostic asserts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .domain import DomainError, FiveWayLabel, ThreeWayLabel, collapse, parse_enum


class EmptySet(Exception):
    """Scoring needs at least one record."""


class EvalInputError(Exception):
    """A prediction file line failed to parse; carries the line number."""

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


#: Predictions accepted for gold refuted under the lenient rules.
FLAGGING_LABELS = frozenset({FiveWayLabel.REFUTED, FiveWayLabel.LMGS, FiveWayLabel.MBU})


@dataclass(frozen=True)
class PredictionRecord:
    post_id: str
    pred: FiveWayLabel
    gold: ThreeWayLabel

    def to_dict(self) -> dict:
        return {"post_id": self.post_id, "pred": self.pred.value, "gold": self.gold.value}

    @classmethod
    def from_dict(cls, data) -> PredictionRecord:
        if not isinstance(data, dict):
            raise DomainError("prediction record must be an object")
        post_id = data.get("post_id")
        if not isinstance(post_id, str) or not post_id:
            raise DomainError("post_id must be a non-empty string")
        return cls(
            post_id=post_id,
            pred=parse_enum(FiveWayLabel, data.get("pred")),
            gold=parse_enum(ThreeWayLabel, data.get("gold")),
        )


@dataclass(frozen=True)
class BinaryPredictionRecord:
    post_id: str
    pred_fake: bool
    gold_fake: bool

    def to_dict(self) -> dict:
        return {"post_id": self.post_id, "pred_fake": self.pred_fake, "gold_fake": self.gold_fake}

    @classmethod
    def from_dict(cls, data) -> BinaryPredictionRecord:
        if not isinstance(data, dict):
            raise DomainError("binary record must be an object")
        post_id = data.get("post_id")
        if not isinstance(post_id, str) or not post_id:
            raise DomainError("post_id must be a non-empty string")
        if not isinstance(data.get("pred_fake"), bool) or not isinstance(data.get("gold_fake"), bool):
            raise DomainError("pred_fake and gold_fake must be booleans")
        return cls(post_id=post_id, pred_fake=data["pred_fake"], gold_fake=data["gold_fake"])


def _checked(records: Sequence) -> Sequence:
    if not records:
        raise EmptySet("no records to score")
    seen: set[str] = set()
    for r in records:
        if r.post_id in seen:
            raise DomainError(f"duplicate post_id in record set: {r.post_id!r}")
        seen.add(r.post_id)
    return records


def strict_correct(record: PredictionRecord) -> bool:
    return record.pred.value == record.gold.value


def manipulation_aware_correct(record: PredictionRecord) -> bool:
    if record.gold is ThreeWayLabel.REFUTED:
        return record.pred in FLAGGING_LABELS
    return record.pred.value == record.gold.value


def intervention_aware_correct(record: PredictionRecord) -> bool:
    if record.gold in (ThreeWayLabel.REFUTED, ThreeWayLabel.NEI):
        return record.pred in FLAGGING_LABELS
    return record.pred is FiveWayLabel.SUPPORTED


def score_strict(records: Sequence[PredictionRecord]) -> float:
    records = _checked(records)
    return sum(strict_correct(r) for r in records) / len(records)


def score_manipulation_aware(records: Sequence[PredictionRecord]) -> float:
    records = _checked(records)
    return sum(manipulation_aware_correct(r) for r in records) / len(records)


def score_intervention_aware(records: Sequence[PredictionRecord]) -> float:
    records = _checked(records)
    return sum(intervention_aware_correct(r) for r in records) / len(records)


def score_binary(records: Sequence[BinaryPredictionRecord]) -> float:
    records = _checked(records)
    return sum(r.pred_fake == r.gold_fake for r in records) / len(records)


def collapse_predictions(records: Iterable[PredictionRecord]) -> list[PredictionRecord]:
    """Fold lmgs/mbu predictions into refuted before scoring (the comparison
    variant; under it strict and manipulation-aware coincide)."""
    return [
        PredictionRecord(r.post_id, FiveWayLabel(collapse(r.pred).value), r.gold)
        for r in records
    ]


def confusion_matrix(records: Sequence[PredictionRecord]) -> dict[FiveWayLabel, dict[ThreeWayLabel, int]]:
    """Counts per (pred, gold) cell; entries sum to len(records)."""
    records = _checked(records)
    matrix = {p: {g: 0 for g in ThreeWayLabel} for p in FiveWayLabel}
    for r in records:
        matrix[r.pred][r.gold] += 1
    return matrix


def accuracies_from_confusion(matrix: dict[FiveWayLabel, dict[ThreeWayLabel, int]]) -> dict[str, float]:
    """Re-derive all three rule accuracies from the matrix alone."""
    n = sum(sum(row.values()) for row in matrix.values())
    if n == 0:
        raise EmptySet("empty confusion matrix")
    strict = sum(matrix[p][g] for p in FiveWayLabel for g in ThreeWayLabel if p.value == g.value)
    manip = strict + sum(matrix[p][ThreeWayLabel.REFUTED] for p in (FiveWayLabel.LMGS, FiveWayLabel.MBU))
    interv = (
        matrix[FiveWayLabel.SUPPORTED][ThreeWayLabel.SUPPORTED]
        + sum(matrix[p][g] for p in FLAGGING_LABELS for g in (ThreeWayLabel.REFUTED, ThreeWayLabel.NEI))
    )
    return {"strict": strict / n, "manip_aware": manip / n, "interv_aware": interv / n}


RULE_NAMES = ("strict", "manip_aware", "interv_aware")

_RULE_FUNCS = {
    "strict": strict_correct,
    "manip_aware": manipulation_aware_correct,
    "interv_aware": intervention_aware_correct,
}


@dataclass(frozen=True)
class EvalReport:
    """Per-rule accuracies plus the confusion matrix and count diagnostics.

    ``correct`` holds the exact per-rule counts, so every accuracy is
    recoverable as the rational correct[rule] / n.
    """

    n: int
    strict_acc: float
    manip_aware_acc: float
    interv_aware_acc: float
    correct: dict[str, int]
    confusion: dict[FiveWayLabel, dict[ThreeWayLabel, int]]
    count_check: list[dict]

    def accuracy(self, rule: str) -> float:
        return {"strict": self.strict_acc, "manip_aware": self.manip_aware_acc, "interv_aware": self.interv_aware_acc}[
            rule
        ]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "strict_acc": self.strict_acc,
            "manip_aware_acc": self.manip_aware_acc,
            "interv_aware_acc": self.interv_aware_acc,
            "correct": dict(self.correct),
            "confusion": {p.value: {g.value: c for g, c in row.items()} for p, row in self.confusion.items()},
            "count_check": list(self.count_check),
        }


def build_report(records: Sequence[PredictionRecord], collapse_first: bool = False) -> EvalReport:
    records = _checked(records)
    if collapse_first:
        records = collapse_predictions(records)
    n = len(records)
    correct = {rule: sum(fn(r) for r in records) for rule, fn in _RULE_FUNCS.items()}
    count_check = []
    for rule in RULE_NAMES:
        acc = correct[rule] / n
        product = acc * n
        nearest = round(product)
        count_check.append({"rule": rule, "product": product, "nearest": nearest, "gap": abs(product - nearest)})
    return EvalReport(
        n=n,
        strict_acc=correct["strict"] / n,
        manip_aware_acc=correct["manip_aware"] / n,
        interv_aware_acc=correct["interv_aware"] / n,
        correct=correct,
        confusion=confusion_matrix(records),
        count_check=count_check,
    )


def format_percent(acc: float) -> str:
    return f"{acc * 100:.2f}"


def render_table(report: EvalReport, title: str = "predictions") -> str:
    """Aligned text table: one row per rule, percentages at two decimals."""
    rows = [
        ("strict", report.strict_acc, report.correct["strict"]),
        ("manip-aware", report.manip_aware_acc, report.correct["manip_aware"]),
        ("interv-aware", report.interv_aware_acc, report.correct["interv_aware"]),
    ]
    lines = [f"{title}  (n={report.n})", f"{'rule':<14}{'correct':>9}{'accuracy %':>12}"]
    for name, acc, count in rows:
        lines.append(f"{name:<14}{count:>9}{format_percent(acc):>12}")
    return "\n".join(lines)


def load_prediction_records(path: str | Path) -> list[PredictionRecord]:
    """Read one PredictionRecord JSON object per line."""
    return _load_jsonl(path, PredictionRecord.from_dict)


def load_binary_records(path: str | Path) -> list[BinaryPredictionRecord]:
    return _load_jsonl(path, BinaryPredictionRecord.from_dict)


def write_prediction_records(records: Iterable[PredictionRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), ensure_ascii=False) + "\n")


def _load_jsonl(path: str | Path, parse) -> list:
    out = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(parse(json.loads(line)))
            except (json.JSONDecodeError, DomainError) as exc:
                raise EvalInputError(lineno, str(exc)) from exc
    return out
