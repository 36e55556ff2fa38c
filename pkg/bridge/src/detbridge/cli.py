"""detbridge entry point: watch a work directory, answer manifests."""

from __future__ import annotations

import argparse
import sys

from .backends import BackendError, load_backend
from .watcher import JobError, serve


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detbridge",
        description="Answer foveated-layer manifests with detection JSON",
    )
    parser.add_argument("--work-dir", required=True, help="handshake directory")
    parser.add_argument("--model", default="stub",
                        help="backend: stub, stub:x0,y0,x1,y1,label,conf, "
                             "or a torchvision detection model name")
    parser.add_argument("--threshold", type=float, default=0.01,
                        help="drop detections below this confidence")
    parser.add_argument("--device", default="cpu", help="inference device")
    parser.add_argument("--once", action="store_true",
                        help="answer one job and exit (for tests)")
    parser.add_argument("--poll", type=float, default=0.05,
                        help="seconds between directory scans")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        backend = load_backend(args.model, device=args.device)
    except BackendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        answered = serve(
            args.work_dir,
            backend,
            threshold=args.threshold,
            once=args.once,
            poll=args.poll,
        )
    except JobError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 0
    print(f"answered {answered} job(s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
