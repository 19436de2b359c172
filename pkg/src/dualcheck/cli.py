"""Command-line entry point.

Subcommands:

  verify      run one post through the pipeline and print its report
  batch       verify a claims dataset; write predictions, reports, manifest
  eval        score a predictions file under the three rules (or binary)
  report      re-render a saved outcome envelope in another format
  mock-serve  run a deterministic mock backend from a profile file

Exit codes: 0 success, 1 usage error, 2 dataset/parse error, 3 backend
failure (every post errored).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from datetime import datetime
from pathlib import Path

from .domain import DomainError, FusedOutcome, ImageRef, PipelineMode, Post, parse_enum
from .evaluation import EvalInputError, EmptySet, format_percent, render_table
from .fusion import FusionPolicy
from .ingest import IngestError, IoError
from .mock_backend import BindError, MockProfile, serve_mock
from .pipeline import (
    MissingGold,
    PipelineConfig,
    default_parallelism,
    eval_binary,
    eval_predictions,
    run_batch,
    verify_one,
)
from .protocol import BackendConfig, BackendError, content_hash
from .report import FORMATS, UnsupportedFormat, render, write_report

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BACKEND = 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit(2); we map usage to 1
        raise UsageError(message)


def _parse_clock(value: str | None):
    if value is None:
        return None
    stamp = datetime.fromisoformat(value.replace("Z", "+00:00"))
    return lambda: stamp


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        cfg = PipelineConfig.from_dict(data)
    else:
        backend = BackendConfig(base_url=args.backend)
        cfg = PipelineConfig(factcheck_backend=backend, manipulation_backend=backend)
    overrides = {}
    if args.cache_dir:
        overrides["cache_dir"] = args.cache_dir
    if args.parallelism:
        overrides["parallelism"] = args.parallelism
    if getattr(args, "mode", None):
        overrides["mode"] = parse_enum(PipelineMode, args.mode)
    if getattr(args, "format", None) and args.command == "batch":
        overrides["report_format"] = args.format
    if getattr(args, "threshold", None) is not None:
        overrides["policy"] = FusionPolicy(uncertainty_threshold=args.threshold)
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    return cfg


def _build_post(args: argparse.Namespace) -> Post:
    image = None
    if args.image:
        try:
            w, h = (int(v) for v in args.image_size.lower().split("x"))
        except ValueError as exc:
            raise UsageError(f"--image-size must look like 640x480, got {args.image_size!r}") from exc
        image = ImageRef(locator=args.image, width=w, height=h)
    post_id = args.id or f"post-{content_hash({'text': args.text, 'image': args.image})[:10]}"
    return Post(id=post_id, text=args.text, image=image)


def _cmd_verify(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    post = _build_post(args)
    outcome = verify_one(post, cfg)
    clock = _parse_clock(args.clock)
    if args.save_outcome:
        envelope = {"post": post.to_dict(), "outcome": outcome.to_dict()}
        Path(args.save_outcome).write_text(json.dumps(envelope, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    if args.out:
        paths = write_report(outcome, post, args.out, args.format, clock)
        print("\n".join(str(p) for p in paths))
    else:
        sys.stdout.write(render(outcome, post, args.format, clock).decode("utf-8"))
    return EXIT_OK


def _cmd_batch(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    summary = run_batch(args.dataset, cfg, args.out, clock=_parse_clock(args.clock))
    print(
        f"batch finished: {len(summary.completed)}/{summary.total} completed, "
        f"{len(summary.errors)} errored; predictions at {summary.predictions_path}"
    )
    for err in summary.errors:
        print(f"  errored {err['post_id']}: {err['error']}", file=sys.stderr)
    return EXIT_BACKEND if summary.all_errored else EXIT_OK


def _cmd_eval(args: argparse.Namespace) -> int:
    if args.binary:
        result = eval_binary(args.pred)
        print(json.dumps(result, ensure_ascii=False, indent=2))
        return EXIT_OK
    report = eval_predictions(args.pred, args.gold, collapse_first=args.collapse_first)
    if args.table:
        print(render_table(report, title=str(args.pred)))
    elif args.rule == "all":
        print(json.dumps(report.to_dict(), ensure_ascii=False, indent=2))
    else:
        rule = {"strict": "strict", "manip": "manip_aware", "interv": "interv_aware"}[args.rule]
        print(f"{rule}: {format_percent(report.accuracy(rule))}% ({report.correct[rule]}/{report.n})")
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    try:
        envelope = json.loads(Path(args.outcome).read_text(encoding="utf-8"))
        post = Post.from_dict(envelope.get("post", {}))
        outcome = FusedOutcome.from_dict(envelope.get("outcome", {}))
    except (OSError, json.JSONDecodeError, DomainError) as exc:
        raise DataError(f"cannot load outcome envelope {args.outcome}: {exc}") from exc
    clock = _parse_clock(args.clock)
    if args.out:
        paths = write_report(outcome, post, args.out, args.format, clock)
        print("\n".join(str(p) for p in paths))
    else:
        sys.stdout.write(render(outcome, post, args.format, clock).decode("utf-8"))
    return EXIT_OK


def _cmd_mock_serve(args: argparse.Namespace) -> int:
    try:
        data = json.loads(Path(args.profile).read_text(encoding="utf-8"))
        profile = MockProfile.from_dict(data)
    except (OSError, json.JSONDecodeError, DomainError) as exc:
        raise DataError(f"cannot load mock profile {args.profile}: {exc}") from exc
    server = serve_mock(profile, port=args.port)
    print(f"mock backend serving at {server.base_url} (Ctrl+C to stop)")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        server.shutdown()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dualcheck", description="Dual-source verification pipeline for image-text posts.")
    parser.add_argument("--config", help="JSON config file mirroring the pipeline configuration")
    parser.add_argument("--cache-dir", help="directory for the content-addressed response cache")
    parser.add_argument("--parallelism", type=int, help=f"worker threads (default {default_parallelism()})")
    parser.add_argument(
        "--backend",
        default="http://127.0.0.1:8765",
        help="base URL used for both backends when no config file is given",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="verify a single post")
    p.add_argument("--text", required=True, help="caption or headline text")
    p.add_argument("--id", help="post id (derived from content when omitted)")
    p.add_argument("--image", help="image locator (path or URL)")
    p.add_argument("--image-size", default="640x480", help="image dimensions as WxH")
    p.add_argument("--mode", choices=["routing", "injection"], help="pipeline mode")
    p.add_argument("--threshold", type=float, help="uncertainty threshold for supported verdicts")
    p.add_argument("--format", default="markdown", choices=("md", *FORMATS))
    p.add_argument("--out", help="write report files here instead of stdout")
    p.add_argument("--save-outcome", help="write a {post, outcome} envelope JSON for later re-rendering")
    p.add_argument("--clock", help="fixed ISO-8601 timestamp for deterministic reports")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("batch", help="verify a claims dataset")
    p.add_argument("--dataset", required=True, help="claims JSONL file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--mode", choices=["routing", "injection"])
    p.add_argument("--threshold", type=float)
    p.add_argument("--format", default="markdown", choices=("md", *FORMATS), help="per-post report format")
    p.add_argument("--clock", help="fixed ISO-8601 timestamp for deterministic reports")
    p.set_defaults(func=_cmd_batch)

    p = sub.add_parser("eval", help="score a predictions file")
    p.add_argument("--pred", required=True, help="predictions JSONL")
    p.add_argument("--gold", help="gold source: claims JSONL or {post_id, gold} JSONL")
    p.add_argument("--rule", default="all", choices=["strict", "manip", "interv", "all"])
    p.add_argument("--collapse-first", action="store_true", help="collapse five-way predictions before scoring")
    p.add_argument("--binary", action="store_true", help="score real/fake binary records instead")
    p.add_argument("--table", action="store_true", help="print an aligned text table")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("report", help="render a saved outcome envelope")
    p.add_argument("--outcome", required=True, help="envelope JSON written by verify --save-outcome")
    p.add_argument("--format", default="markdown", choices=("md", *FORMATS))
    p.add_argument("--out", help="write report files here instead of stdout")
    p.add_argument("--clock", help="fixed ISO-8601 timestamp")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("mock-serve", help="run a deterministic mock backend")
    p.add_argument("--profile", required=True, help="mock profile JSON file")
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(func=_cmd_mock_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "format", None) == "md":
            args.format = "markdown"
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IngestError, EvalInputError, EmptySet, MissingGold, DataError, IoError, UnsupportedFormat) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DomainError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (BackendError, BindError) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
