"""Routing and rule-based fusion of the two verdict sources.

The fact-check verdict arrives first. A refuted verdict is final; the
post still goes to the manipulation detector, but only to explain
whether localised edits or purely external evidence caused the refusal.
Supported and NEI verdicts hand the decision to the detector, which
splits them by whether the content is pristine:

    verdict    pristine     manipulated
    refuted    refuted      refuted        (detector is explanatory)
    supported  supported    lmgs
    nei        nei          mbu

All functions here are pure and total over their input spaces.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .domain import (
    DomainError,
    FactCheckResult,
    FiveWayLabel,
    FusedOutcome,
    ManipulationClass,
    ManipulationResult,
    PipelineMode,
    ThreeWayLabel,
    is_manipulated,
)


class MissingManipulation(Exception):
    """A decisive route needs a manipulation result and none was supplied."""


class HammerPurpose(Enum):
    """Why the manipulation detector runs for a given post."""

    EXPLANATION_ONLY = "explanation_only"
    DECISIVE = "decisive"


@dataclass(frozen=True)
class FusionPolicy:
    """Tunable fusion behavior.

    ``uncertainty_threshold`` (default 0, disabled) downgrades a supported
    verdict to NEI for fusion purposes when the backend's confidence falls
    below it. The default reproduces the plain routing logic exactly.
    """

    uncertainty_threshold: float = 0.0

    def __post_init__(self) -> None:
        t = self.uncertainty_threshold
        if not (isinstance(t, (int, float)) and 0.0 <= t <= 1.0):
            raise DomainError(f"uncertainty_threshold must be in [0,1], got {t!r}")

    def to_dict(self) -> dict:
        return {"uncertainty_threshold": self.uncertainty_threshold}

    @classmethod
    def from_dict(cls, data) -> FusionPolicy:
        return cls(uncertainty_threshold=data.get("uncertainty_threshold", 0.0))


@dataclass(frozen=True)
class RoutingDecision:
    """Whether and why to run the manipulation detector after fact-checking."""

    run_hammer: bool
    hammer_purpose: HammerPurpose
    provisional: FiveWayLabel | None = None

    def __post_init__(self) -> None:
        explanation = self.hammer_purpose is HammerPurpose.EXPLANATION_ONLY
        if explanation != (self.provisional is FiveWayLabel.REFUTED):
            raise DomainError("provisional refuted label and explanation-only purpose must coincide")


def effective_verdict(
    verdict: ThreeWayLabel, confidence: float | None, policy: FusionPolicy
) -> ThreeWayLabel:
    """Apply the uncertainty threshold: a low-confidence supported verdict
    is treated as NEI. Other verdicts pass through unchanged."""
    if (
        verdict is ThreeWayLabel.SUPPORTED
        and policy.uncertainty_threshold > 0.0
        and confidence is not None
        and confidence < policy.uncertainty_threshold
    ):
        return ThreeWayLabel.NEI
    return verdict


def route(verdict: ThreeWayLabel, confidence: float | None, policy: FusionPolicy) -> RoutingDecision:
    """Decide the detector's role for one post.

    Every post runs the detector: refuted verdicts for explanation only
    (the label is already final), supported and NEI verdicts decisively.
    """
    if verdict is ThreeWayLabel.REFUTED:
        return RoutingDecision(
            run_hammer=True,
            hammer_purpose=HammerPurpose.EXPLANATION_ONLY,
            provisional=FiveWayLabel.REFUTED,
        )
    return RoutingDecision(run_hammer=True, hammer_purpose=HammerPurpose.DECISIVE, provisional=None)


def fusion_rule(verdict: ThreeWayLabel, klass: ManipulationClass) -> tuple[FiveWayLabel, str]:
    """Map one (verdict, class) cell to its final label and the fired rule name.

    The 27 input cells partition into six rules; the two refuted rules
    share a label but differ in what the detector contributes.
    """
    manipulated = is_manipulated(klass)
    suffix = "manipulated" if manipulated else "pristine"
    if verdict is ThreeWayLabel.REFUTED:
        return FiveWayLabel.REFUTED, f"refuted+{suffix}"
    if verdict is ThreeWayLabel.SUPPORTED:
        if manipulated:
            return FiveWayLabel.LMGS, "supported+manipulated"
        return FiveWayLabel.SUPPORTED, "supported+pristine"
    if manipulated:
        return FiveWayLabel.MBU, "nei+manipulated"
    return FiveWayLabel.NEI, "nei+pristine"


def fuse(
    verdict: ThreeWayLabel,
    manipulation: ManipulationResult,
    policy: FusionPolicy | None = None,
) -> FiveWayLabel:
    """The rule table applied to an already-effective verdict.

    The uncertainty threshold never acts here; it is applied when the
    verdict is derived (see ``effective_verdict``), keeping this function
    total and deterministic over verdict x class.
    """
    label, _ = fusion_rule(verdict, manipulation.klass)
    return label


def fuse_outcome(
    fact: FactCheckResult,
    manipulation: ManipulationResult | None,
    policy: FusionPolicy,
    mode: PipelineMode,
) -> FusedOutcome:
    """Assemble the final outcome for one post.

    Routing mode applies the rule table; a decisive route without a
    manipulation result raises MissingManipulation, while an explanatory
    one merely notes the missing explanation. Injection mode takes the
    backend's verdict as-is (the manipulation context already shaped it)
    and performs no post-hoc fusion.
    """
    if mode is PipelineMode.INJECTION:
        return FusedOutcome(
            label=FiveWayLabel(fact.verdict.value),
            fact_check=fact,
            manipulation=manipulation,
            rationale="injection: verdict taken from the context-aware fact-check",
            pipeline_mode=PipelineMode.INJECTION,
        )

    decision = route(fact.verdict, fact.confidence, policy)
    if decision.hammer_purpose is HammerPurpose.EXPLANATION_ONLY:
        if manipulation is None:
            rationale = "rule: refuted (manipulation explanation unavailable)"
        else:
            _, rule = fusion_rule(ThreeWayLabel.REFUTED, manipulation.klass)
            rationale = f"rule: {rule}"
        return FusedOutcome(
            label=FiveWayLabel.REFUTED,
            fact_check=fact,
            manipulation=manipulation,
            rationale=rationale,
            pipeline_mode=PipelineMode.ROUTING,
        )

    if manipulation is None:
        raise MissingManipulation(f"decisive route for verdict {fact.verdict.value} needs a manipulation result")
    verdict = effective_verdict(fact.verdict, fact.confidence, policy)
    label, rule = fusion_rule(verdict, manipulation.klass)
    rationale = f"rule: {rule}"
    if verdict is not fact.verdict:
        rationale += " (supported verdict below confidence threshold, treated as nei)"
    return FusedOutcome(
        label=label,
        fact_check=fact,
        manipulation=manipulation,
        rationale=rationale,
        pipeline_mode=PipelineMode.ROUTING,
    )
