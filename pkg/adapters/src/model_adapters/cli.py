"""CLI: run one adapter in the foreground.

    dualcheck-adapter --kind manipulation --port 8801
    dualcheck-adapter --kind factcheck --port 8802 --checkpoint factory:my_models.fc:build
"""

from __future__ import annotations

import argparse
import sys
import time

from .config import KINDS, AdapterConfig, AdapterError
from .server import AdapterServer


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="dualcheck-adapter", description=__doc__)
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--checkpoint", help="'stub' or factory:pkg.module:attr (default: env var, then stub)")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=0)
    parser.add_argument("--warmup-delay", type=float, default=0.0, help="seconds of forced 503 before serving")
    args = parser.parse_args(argv)
    try:
        cfg = AdapterConfig.from_env(
            args.kind,
            checkpoint=args.checkpoint,
            device=args.device,
            host=args.host,
            port=args.port,
            warmup_delay_s=args.warmup_delay,
        )
        server = AdapterServer(cfg)
    except AdapterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{args.kind} adapter serving at {server.base_url} (Ctrl+C to stop)")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        server.shutdown()
    return 0


if __name__ == "__main__":
    sys.exit(main())
