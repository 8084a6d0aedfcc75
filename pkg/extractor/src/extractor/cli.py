"""CLI: export dilated-ResNet feature maps for an image directory."""

from __future__ import annotations

import argparse
import sys

from .export import ExportError, build_model, extract_features


def parse_resize(text):
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="freespace-extract",
        description="Export last-layer dilated-ResNet-26 features as FMP1 files",
    )
    parser.add_argument("--images", required=True, help="input image directory")
    parser.add_argument("--out", required=True, help="output directory for .fmp1 files")
    parser.add_argument("--weights", help="path to an ImageNet DRN-26 checkpoint")
    parser.add_argument(
        "--random-init", action="store_true",
        help="use a seeded randomly initialized network (testing only)",
    )
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for --random-init (default 0)")
    parser.add_argument("--resize", type=parse_resize,
                        help="resize inputs to WxH before inference")
    parser.add_argument("--device", default="cpu", help="cpu or cuda (default cpu)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        model = build_model(weights=args.weights, random_init=args.random_init,
                            seed=args.seed)
        manifest = extract_features(
            args.images, args.out, model, resize=args.resize, device=args.device,
            manifest_extra={
                "weights": args.weights or f"random-init(seed={args.seed})"
            },
        )
    except (ExportError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(manifest['files'])} feature maps to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
