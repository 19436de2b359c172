"""Model backends behind the adapters.

A backend is anything with the right ``predict`` signature. The stubs
need no checkpoints and answer with fixed, schema-valid outputs
(pristine / NEI), which is what contract tests run against. Real models
plug in through a factory locator: ``factory:pkg.module:attr`` resolves
to a callable that receives the AdapterConfig and returns a backend.
"""

from __future__ import annotations

import importlib
from typing import Protocol

from .config import AdapterConfig, AdapterError
from .mapping import FactcheckPrediction, ManipulationPrediction


class ManipulationBackend(Protocol):
    def predict(
        self, text: str, image_locator: str | None, image_size: tuple[int, int] | None
    ) -> ManipulationPrediction: ...


class FactcheckBackend(Protocol):
    def predict(
        self, text: str, image_locator: str | None, context_summary: str | None
    ) -> FactcheckPrediction: ...


class StubManipulationBackend:
    """Fixed pristine answer; exercises the full mapping path without weights."""

    def predict(self, text, image_locator, image_size) -> ManipulationPrediction:
        return ManipulationPrediction(class_name="pristine")


class StubFactcheckBackend:
    """Fixed NEI answer with no evidence; echoes any injected context summary
    into its reasoning so the injection path is observable."""

    def predict(self, text, image_locator, context_summary) -> FactcheckPrediction:
        reasoning = ["stub model: no retrieval performed"]
        if context_summary:
            reasoning.append(f"context received: {context_summary}")
        return FactcheckPrediction(verdict_text="not enough information", reasoning=reasoning)


def load_backend(cfg: AdapterConfig):
    """Resolve the configured checkpoint locator into a backend instance."""
    if cfg.checkpoint == "stub":
        return StubManipulationBackend() if cfg.kind == "manipulation" else StubFactcheckBackend()
    if cfg.checkpoint.startswith("factory:"):
        target = cfg.checkpoint[len("factory:"):]
        module_name, _, attr = target.partition(":")
        if not module_name or not attr:
            raise AdapterError(f"factory locator must look like factory:pkg.module:attr, got {cfg.checkpoint!r}")
        try:
            factory = getattr(importlib.import_module(module_name), attr)
        except (ImportError, AttributeError) as exc:
            raise AdapterError(f"cannot resolve backend factory {target!r}: {exc}") from exc
        return factory(cfg)
    raise AdapterError(
        f"unknown checkpoint locator {cfg.checkpoint!r}; use 'stub' or 'factory:pkg.module:attr'"
    )
