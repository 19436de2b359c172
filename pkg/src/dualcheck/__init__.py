"""Dual-source verification of image-text posts.

An external-evidence fact-check verdict and a content-manipulation
analysis are fused by a small rule table into a five-way label, scored
under three evaluation rules, and rendered as a unified explanation
report. Deterministic mock backends let the whole pipeline run offline.
"""

from .domain import (
    BoundingBox,
    DomainError,
    EvidenceItem,
    FactCheckResult,
    FiveWayLabel,
    FusedOutcome,
    ImageRef,
    ManipulationClass,
    ManipulationResult,
    PipelineMode,
    Post,
    Stance,
    ThreeWayLabel,
    TokenLabelSeq,
    ToolInvocation,
    ToolKind,
    collapse,
    is_manipulated,
    whitespace_tokens,
)
from .fusion import (
    FusionPolicy,
    HammerPurpose,
    MissingManipulation,
    RoutingDecision,
    fuse,
    fuse_outcome,
    fusion_rule,
    route,
)
from .protocol import (
    BackendConfig,
    BackendError,
    BackendUnavailable,
    FactCheckRequest,
    ManipulationRequest,
    ProtocolError,
    Timeout,
    check_fact,
    content_hash,
    detect_manipulation,
)

__all__ = [
    "BackendConfig",
    "BackendError",
    "BackendUnavailable",
    "BoundingBox",
    "DomainError",
    "EvidenceItem",
    "FactCheckRequest",
    "FactCheckResult",
    "FiveWayLabel",
    "FusedOutcome",
    "FusionPolicy",
    "HammerPurpose",
    "ImageRef",
    "ManipulationClass",
    "ManipulationRequest",
    "ManipulationResult",
    "MissingManipulation",
    "PipelineMode",
    "Post",
    "ProtocolError",
    "RoutingDecision",
    "Stance",
    "ThreeWayLabel",
    "Timeout",
    "TokenLabelSeq",
    "ToolInvocation",
    "ToolKind",
    "check_fact",
    "collapse",
    "content_hash",
    "detect_manipulation",
    "fuse",
    "fuse_outcome",
    "fusion_rule",
    "is_manipulated",
    "route",
    "whitespace_tokens",
]
