"""Entry point: ``nnbridge --role generator --model torchscript-inpaint ...``"""
from __future__ import annotations

import argparse
import sys

from .models import BridgeConfig, KNOWN_FAMILIES
from .server import selfcheck, serve


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nnbridge", description=__doc__)
    parser.add_argument("--role", required=True,
                        choices=["generator", "detector"])
    parser.add_argument("--model", required=True, choices=list(KNOWN_FAMILIES))
    parser.add_argument("--checkpoint", required=True)
    parser.add_argument("--patch-size", type=int, default=96)
    parser.add_argument("--native-size", type=int, default=None,
                        help="model input side; defaults to --patch-size")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--selfcheck", action="store_true",
                        help="load the model, run one request per op, exit")
    return parser


def main(argv=None) -> None:
    args = build_parser().parse_args(argv)
    try:
        config = BridgeConfig(role=args.role, model=args.model,
                              checkpoint=args.checkpoint,
                              patch_size=args.patch_size,
                              native_size=args.native_size,
                              device=args.device)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(1)
    if args.selfcheck:
        sys.exit(selfcheck(config))
    sys.exit(serve(config))


if __name__ == "__main__":
    main()
