"""End-to-end pipeline: backends -> routing/fusion -> reports -> metrics.

Posts are independent tasks fanned out over a bounded thread pool; all
aggregation folds over results sorted by post id, so a batch is a pure
function of (dataset, config, backend responses) regardless of
scheduling. Backend responses are cached content-addressed by request
id, which makes a finished run replayable with zero backend traffic.
A failing post never aborts the batch and is never mapped to NEI; it is
recorded as errored in the run manifest.
"""

from __future__ import annotations

import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .domain import (
    DomainError,
    FactCheckResult,
    FiveWayLabel,
    FusedOutcome,
    ManipulationResult,
    PipelineMode,
    Post,
    parse_enum,
)
from .evaluation import (
    EvalReport,
    EvalInputError,
    PredictionRecord,
    build_report,
    load_binary_records,
    score_binary,
)
from .fusion import FusionPolicy, HammerPurpose, fuse_outcome, route
from .ingest import ClaimRecord, load_claims, parse_gold_label
from .protocol import (
    BackendConfig,
    BackendError,
    FactCheckRequest,
    ManipulationRequest,
    parse_factcheck_response,
    parse_manipulation_response,
    post_json,
)
from .report import Clock, write_report

#: Bump to invalidate every existing cache entry (responses never expire by time).
CACHE_SCHEMA_VERSION = 1


class MissingGold(Exception):
    def __init__(self, post_id: str) -> None:
        super().__init__(f"no gold label for post {post_id!r}")
        self.post_id = post_id


def default_parallelism() -> int:
    return min(os.cpu_count() or 1, 16)


@dataclass(frozen=True)
class PipelineConfig:
    factcheck_backend: BackendConfig
    manipulation_backend: BackendConfig
    mode: PipelineMode = PipelineMode.ROUTING
    policy: FusionPolicy = FusionPolicy()
    cache_dir: str | None = None
    parallelism: int = 1
    report_format: str = "markdown"

    def __post_init__(self) -> None:
        if not (isinstance(self.parallelism, int) and self.parallelism >= 1):
            raise DomainError("parallelism must be an integer >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "factcheck_backend": self.factcheck_backend.to_dict(),
            "manipulation_backend": self.manipulation_backend.to_dict(),
            "mode": self.mode.value,
            "policy": self.policy.to_dict(),
            "cache_dir": self.cache_dir,
            "parallelism": self.parallelism,
            "report_format": self.report_format,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> PipelineConfig:
        if not isinstance(data, Mapping):
            raise DomainError("pipeline config must be an object")
        return cls(
            factcheck_backend=BackendConfig.from_dict(data.get("factcheck_backend", {})),
            manipulation_backend=BackendConfig.from_dict(data.get("manipulation_backend", {})),
            mode=parse_enum(PipelineMode, data.get("mode", "routing")),
            policy=FusionPolicy.from_dict(data.get("policy", {})),
            cache_dir=data.get("cache_dir"),
            parallelism=data.get("parallelism", default_parallelism()),
            report_format=data.get("report_format", "markdown"),
        )


class ResponseCache:
    """Content-addressed store of raw backend response bodies.

    Keyed by (backend kind, request id); a hit returns the body byte-for-
    byte as originally received. Entries carry the schema version and the
    backend they came from; a version bump invalidates everything.
    Writers are serialized and land atomically, readers never block.
    """

    def __init__(self, cache_dir: str | Path) -> None:
        self._dir = Path(cache_dir)
        self._write_lock = threading.Lock()

    def _path(self, kind: str, request_id: str) -> Path:
        return self._dir / kind / f"{request_id}.json"

    def get(self, kind: str, request_id: str) -> str | None:
        path = self._path(kind, request_id)
        try:
            entry = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return None
        if entry.get("schema_version") != CACHE_SCHEMA_VERSION or entry.get("backend") != kind:
            return None
        body = entry.get("body")
        return body if isinstance(body, str) else None

    def put(self, kind: str, request_id: str, body: str, base_url: str) -> None:
        entry = {
            "schema_version": CACHE_SCHEMA_VERSION,
            "backend": kind,
            "base_url": base_url,
            "request_id": request_id,
            "body": body,
        }
        path = self._path(kind, request_id)
        with self._write_lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(entry, ensure_ascii=False), encoding="utf-8")
            os.replace(tmp, path)


def _cached_body(cache: ResponseCache | None, kind: str, cfg: BackendConfig, path: str, body, request_id: str) -> str:
    if cache is not None:
        hit = cache.get(kind, request_id)
        if hit is not None:
            return hit
    raw = post_json(cfg, path, body)
    if cache is not None:
        cache.put(kind, request_id, raw, cfg.base_url)
    return raw


def cached_check_fact(cfg: BackendConfig, req: FactCheckRequest, cache: ResponseCache | None) -> FactCheckResult:
    raw = _cached_body(cache, "factcheck", cfg, "/v1/factcheck", req.to_dict(), req.request_id)
    return parse_factcheck_response(raw)


def cached_detect_manipulation(
    cfg: BackendConfig, req: ManipulationRequest, cache: ResponseCache | None
) -> ManipulationResult:
    raw = _cached_body(cache, "manipulation", cfg, "/v1/manipulation", req.to_dict(), req.request_id)
    return parse_manipulation_response(raw)


def verify_one(post: Post, cfg: PipelineConfig, cache: ResponseCache | None = None) -> FusedOutcome:
    """Run one post through both backends and fuse the outcome.

    Routing mode asks the fact-checker first and sends every post to the
    detector (decisively for supported/NEI, for explanation on refuted;
    an explanation failure degrades to a note instead of an error).
    Injection mode runs the detector first and hands its result to the
    fact-checker as request context. Backend errors propagate so the
    caller can mark the post errored; nothing is coerced to NEI.
    """
    if cache is None and cfg.cache_dir:
        cache = ResponseCache(cfg.cache_dir)
    if cfg.mode is PipelineMode.INJECTION:
        manipulation = cached_detect_manipulation(cfg.manipulation_backend, ManipulationRequest(post), cache)
        fact = cached_check_fact(
            cfg.factcheck_backend, FactCheckRequest(post, manipulation_context=manipulation), cache
        )
        return fuse_outcome(fact, manipulation, cfg.policy, PipelineMode.INJECTION)

    fact = cached_check_fact(cfg.factcheck_backend, FactCheckRequest(post), cache)
    decision = route(fact.verdict, fact.confidence, cfg.policy)
    manipulation = None
    if decision.run_hammer:
        request = ManipulationRequest(post)
        if decision.hammer_purpose is HammerPurpose.EXPLANATION_ONLY:
            try:
                manipulation = cached_detect_manipulation(cfg.manipulation_backend, request, cache)
            except BackendError:
                manipulation = None  # label already final; explanation is best-effort
        else:
            manipulation = cached_detect_manipulation(cfg.manipulation_backend, request, cache)
    return fuse_outcome(fact, manipulation, cfg.policy, PipelineMode.ROUTING)


@dataclass(frozen=True)
class BatchSummary:
    total: int
    completed: list[str]
    errors: list[dict[str, str]]
    predictions_path: Path
    manifest_path: Path

    @property
    def all_errored(self) -> bool:
        return self.total > 0 and not self.completed


def run_batch(
    dataset_path: str | Path,
    cfg: PipelineConfig,
    out_dir: str | Path,
    clock: Clock | None = None,
) -> BatchSummary:
    """Verify a claims dataset and write predictions, reports, and a manifest.

    Outputs under ``out_dir``: ``predictions.jsonl`` (post_id/pred/gold,
    sorted by post id), one report per completed post under ``reports/``,
    and ``manifest.json`` listing every post exactly once as completed or
    errored.
    """
    records = load_claims(dataset_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports_dir = out_dir / "reports"
    cache = ResponseCache(cfg.cache_dir) if cfg.cache_dir else None

    def _work(record: ClaimRecord):
        try:
            return record.post.id, verify_one(record.post, cfg, cache), None
        except (BackendError, DomainError) as exc:
            return record.post.id, None, f"{type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
        results = list(pool.map(_work, records))

    by_id = {record.post.id: record for record in records}
    outcomes: dict[str, FusedOutcome] = {}
    errors: list[dict[str, str]] = []
    for post_id, outcome, error in sorted(results, key=lambda item: item[0]):
        if error is not None:
            errors.append({"post_id": post_id, "error": error})
        else:
            outcomes[post_id] = outcome

    predictions_path = out_dir / "predictions.jsonl"
    with predictions_path.open("w", encoding="utf-8") as fh:
        for post_id in sorted(outcomes):
            record = PredictionRecord(post_id=post_id, pred=outcomes[post_id].label, gold=by_id[post_id].gold)
            fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")

    for post_id in sorted(outcomes):
        write_report(outcomes[post_id], by_id[post_id].post, reports_dir, cfg.report_format, clock)

    manifest = {
        "schema_version": CACHE_SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "counts": {"total": len(records), "completed": len(outcomes), "errored": len(errors)},
        "completed": sorted(outcomes),
        "errors": errors,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    return BatchSummary(
        total=len(records),
        completed=sorted(outcomes),
        errors=errors,
        predictions_path=predictions_path,
        manifest_path=manifest_path,
    )


def _read_gold_map(path: str | Path) -> dict[str, Any]:
    """Gold labels from either canonical claim records or bare
    {post_id, gold} lines."""
    gold: dict[str, Any] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
                if "post" in data:
                    record = ClaimRecord(post=Post.from_dict(data["post"]), gold=parse_gold_label(data.get("gold")))
                    gold[record.post.id] = record.gold
                else:
                    post_id = data.get("post_id")
                    if not isinstance(post_id, str) or not post_id:
                        raise DomainError("post_id must be a non-empty string")
                    gold[post_id] = parse_gold_label(data.get("gold"))
            except (json.JSONDecodeError, DomainError) as exc:
                raise EvalInputError(lineno, str(exc)) from exc
    return gold


def eval_predictions(
    pred_path: str | Path,
    gold_path: str | Path | None = None,
    collapse_first: bool = False,
) -> EvalReport:
    """Join predictions with gold by post id and score all three rules.

    Predictions may carry their own gold labels; an explicit gold source
    overrides them and must cover every predicted post id.
    """
    gold_map = _read_gold_map(gold_path) if gold_path is not None else None
    records: list[PredictionRecord] = []
    with Path(pred_path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
                post_id = data.get("post_id")
                if not isinstance(post_id, str) or not post_id:
                    raise DomainError("post_id must be a non-empty string")
                pred = parse_enum(FiveWayLabel, data.get("pred"))
                own_gold = parse_gold_label(data["gold"]) if data.get("gold") is not None else None
            except (json.JSONDecodeError, DomainError) as exc:
                raise EvalInputError(lineno, str(exc)) from exc
            if gold_map is not None:
                if post_id not in gold_map:
                    raise MissingGold(post_id)
                gold = gold_map[post_id]
            elif own_gold is not None:
                gold = own_gold
            else:
                raise MissingGold(post_id)
            records.append(PredictionRecord(post_id=post_id, pred=pred, gold=gold))
    return build_report(records, collapse_first=collapse_first)


def eval_binary(pred_path: str | Path) -> dict[str, Any]:
    records = load_binary_records(pred_path)
    acc = score_binary(records)
    return {"n": len(records), "binary_acc": acc, "correct": round(acc * len(records))}
