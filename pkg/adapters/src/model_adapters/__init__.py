"""HTTP adapters exposing detection and fact-checking models through the
dualcheck backend wire protocol, including checkpoint-free stub mode."""

from .align import align_subword_flags, token_spans
from .backends import (
    FactcheckBackend,
    ManipulationBackend,
    StubFactcheckBackend,
    StubManipulationBackend,
    load_backend,
)
from .config import ENV_CHECKPOINT, KINDS, AdapterConfig, AdapterError
from .mapping import (
    FactcheckPrediction,
    ManipulationPrediction,
    factcheck_response,
    manipulation_response,
    summarize_manipulation_context,
)
from .normalize import MappingError, normalize_class, normalize_verdict
from .server import AdapterServer, serve_factcheck_adapter, serve_manipulation_adapter

__all__ = [
    "AdapterConfig",
    "AdapterError",
    "AdapterServer",
    "ENV_CHECKPOINT",
    "FactcheckBackend",
    "FactcheckPrediction",
    "KINDS",
    "ManipulationBackend",
    "ManipulationPrediction",
    "MappingError",
    "StubFactcheckBackend",
    "StubManipulationBackend",
    "align_subword_flags",
    "factcheck_response",
    "load_backend",
    "manipulation_response",
    "normalize_class",
    "normalize_verdict",
    "serve_factcheck_adapter",
    "serve_manipulation_adapter",
    "summarize_manipulation_context",
    "token_spans",
]
