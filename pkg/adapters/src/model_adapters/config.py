"""Adapter configuration.

One adapter process serves one model kind on one endpoint. The
checkpoint locator is either ``stub`` (no weights, fixed outputs; the
mode CI runs in) or ``factory:pkg.module:attr`` naming a callable that
builds a real model backend. Each kind also reads its locator from an
environment variable when none is given explicitly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

KINDS = ("manipulation", "factcheck")

ENV_CHECKPOINT = {
    "manipulation": "DUALCHECK_MANIPULATION_CHECKPOINT",
    "factcheck": "DUALCHECK_FACTCHECK_CHECKPOINT",
}


class AdapterError(Exception):
    pass


@dataclass(frozen=True)
class AdapterConfig:
    kind: str
    checkpoint: str = "stub"
    device: str = "cpu"
    host: str = "127.0.0.1"
    port: int = 0
    warmup_delay_s: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise AdapterError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.checkpoint:
            raise AdapterError("checkpoint locator must be non-empty")
        if self.warmup_delay_s < 0:
            raise AdapterError("warmup_delay_s must be >= 0")

    @classmethod
    def from_env(cls, kind: str, **overrides) -> AdapterConfig:
        checkpoint = overrides.pop("checkpoint", None) or os.environ.get(ENV_CHECKPOINT.get(kind, ""), "") or "stub"
        return cls(kind=kind, checkpoint=checkpoint, **overrides)
