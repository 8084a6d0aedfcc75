"""Command-line pipeline driver.

Subcommands: superpixels | features-fallback | generate | evaluate |
sweep | overlay.  Exit codes: 0 success, 1 usage error, 2 partial data
failure, 3 internal error.

Run parameters come from an optional flat key=value config file; any flag
given on the command line overrides the file.  Recognized keys mirror the
prior/cluster/superpixel parameter names (see DEFAULTS below).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import pipeline, superpix
from .core import (
    FREE,
    BinaryMask,
    ImageRGB,
    PriorConfig,
    load_image,
    load_mask,
    save_image,
    write_feature_map,
)
from .features import handcrafted_feature_map
from .pipeline import PipelineInputError
from .superpix import FHParams

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARTIAL = 2
EXIT_INTERNAL = 3

DEFAULTS = {
    "mu_row": 0.75,
    "mu_col": 0.5,
    "sigma_row": 0.1,
    "sigma_col": 0.1,
    "clusters": 4,
    "batch_size": 30,
    "samples_per_superpixel": 10,
    "centroid_weight": 1.0,
    "max_iters": 100,
    "seed": 0,
    "scale": 300.0,
    "smoothing_sigma": 0.8,
    "min_size": 100,
    "stride": 8,
    "workers": 1,
}
_INT_KEYS = {"clusters", "batch_size", "samples_per_superpixel", "max_iters",
             "seed", "min_size", "stride", "workers"}


class UsageError(ValueError):
    pass


class PartialDataError(RuntimeError):
    pass


def read_config(path) -> dict:
    """Flat key=value file; '#' starts a comment, blank lines ignored."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"unreadable config file: {exc}")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = int(val) if key in _INT_KEYS else float(val)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key!r}: {val!r}")
    return values


def resolve_params(args) -> dict:
    """DEFAULTS, overlaid by the config file, overlaid by CLI flags."""
    params = dict(DEFAULTS)
    if getattr(args, "config", None):
        params.update(read_config(args.config))
    for key in DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            params[key] = flag
    return params


def prior_config(params) -> PriorConfig:
    try:
        return PriorConfig(
            mu=(params["mu_row"], params["mu_col"]),
            sigma=(params["sigma_row"], params["sigma_col"]),
            k=int(params["clusters"]),
            batch_size=int(params["batch_size"]),
            samples_per_superpixel=int(params["samples_per_superpixel"]),
            centroid_weight=float(params["centroid_weight"]),
            max_iters=int(params["max_iters"]),
            seed=int(params["seed"]),
        )
    except ValueError as exc:
        raise UsageError(str(exc))


def fh_params(params) -> FHParams:
    try:
        return FHParams(
            scale=float(params["scale"]),
            smoothing_sigma=float(params["smoothing_sigma"]),
            min_size=int(params["min_size"]),
        )
    except ValueError as exc:
        raise UsageError(str(exc))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_superpixels(args) -> int:
    params = resolve_params(args)
    image = load_image(args.image)
    sp = superpix.segment(image, fh_params(params))
    print(f"{args.image}: {sp.num_segments} segments")
    if args.out_labels:
        from PIL import Image as PILImage

        try:
            data = superpix.label_map_image(sp)
        except ValueError as exc:
            raise PartialDataError(str(exc))
        PILImage.fromarray(data).save(args.out_labels, format="PNG")
    if args.out_overlay:
        save_image(args.out_overlay, superpix.boundary_overlay(image, sp))
    return EXIT_OK


def cmd_features_fallback(args) -> int:
    params = resolve_params(args)
    names = pipeline.list_images(args.images)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in names:
        image = load_image(Path(args.images) / name)
        fmap = handcrafted_feature_map(image, int(params["stride"]))
        write_feature_map(out / (Path(name).stem + pipeline.FEATURE_SUFFIX), fmap)
    print(f"wrote {len(names)} feature maps to {out}")
    return EXIT_OK


def cmd_generate(args) -> int:
    params = resolve_params(args)
    manifest = pipeline.generate(
        args.images,
        args.out,
        prior_config(params),
        fh_params(params),
        features_dir=args.features,
        stride=int(params["stride"]),
        workers=int(params["workers"]),
    )
    n_ok = len(manifest["images"])
    n_fail = len(manifest["failures"])
    print(f"generated {n_ok} masks in {args.out}" +
          (f" ({n_fail} images failed)" if n_fail else ""))
    if n_fail:
        for rec in manifest["failures"]:
            print(f"  failed: {rec['name']}: {rec['error']}", file=sys.stderr)
        raise PartialDataError(f"{n_fail} images failed")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    try:
        metrics = pipeline.evaluate(args.pred, args.gt)
    except PipelineInputError as exc:
        raise PartialDataError(str(exc))
    text = json.dumps(metrics, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(json.dumps(metrics["dataset"], sort_keys=True))
    return EXIT_OK


SWEEP_AXES = ("clusters", "batch_size", "scale")


def cmd_sweep(args) -> int:
    if args.axis not in SWEEP_AXES:
        raise UsageError(f"axis must be one of {SWEEP_AXES}, got {args.axis!r}")
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad sweep values: {args.values!r}")
    if not values:
        raise UsageError("empty sweep value list")

    params = resolve_params(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for value in values:
        run_params = dict(params)
        run_params[args.axis] = value if args.axis == "scale" else int(value)
        run_dir = out / f"run_{args.axis}_{value:g}"
        pipeline.generate(
            args.images,
            run_dir,
            prior_config(run_params),
            fh_params(run_params),
            features_dir=args.features,
            stride=int(run_params["stride"]),
            workers=int(run_params["workers"]),
        )
        metrics = pipeline.evaluate(run_dir, args.gt)
        ds = metrics["dataset"]
        rows.append({
            "axis": args.axis,
            "value": value,
            "iou": ds["iou"],
            "precision": ds["precision"],
            "recall": ds["recall"],
        })
        print(f"{args.axis}={value:g}: iou={ds['iou']:.4f}")

    with open(out / "sweep.csv", "w", newline="") as f:
        writer = csv.DictWriter(
            f, fieldnames=["axis", "value", "iou", "precision", "recall"]
        )
        writer.writeheader()
        writer.writerows(rows)
    with open(out / "sweep.json", "w") as f:
        json.dump({"axis": args.axis, "rows": rows}, f, indent=2, sort_keys=True)

    from .plots import render_sweep

    render_sweep(rows, args.axis, out / "sweep.png")
    return EXIT_OK


def cmd_overlay(args) -> int:
    image = load_image(args.image)
    mask = load_mask(args.mask)
    if (mask.height, mask.width) != (image.height, image.width):
        raise UsageError("image and mask dimensions differ")
    save_image(args.out, overlay_mask(image, mask))
    return EXIT_OK


def overlay_mask(image: ImageRGB, mask: BinaryMask) -> ImageRGB:
    """FREE region blended 50/50 with red (integer floor average)."""
    out = image.pixels.copy()
    free = mask.labels == FREE
    blended = (out[free].astype(np.uint16) + np.array([255, 0, 0])) // 2
    out[free] = blended.astype(np.uint8)
    return ImageRGB(out)


# ---------------------------------------------------------------------------
# parser / entry point
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(EXIT_USAGE)


def _add_param_flags(p, keys=DEFAULTS):
    for key in keys:
        typ = int if key in _INT_KEYS else float
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=typ,
                       default=None, help=f"override {key} (default {DEFAULTS[key]})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="freespace",
                     description="Free-space mask generation and evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("superpixels", help="segment one image, write debug views")
    p.add_argument("--image", required=True)
    p.add_argument("--out-labels", help="16-bit gray label map PNG")
    p.add_argument("--out-overlay", help="boundary overlay PNG")
    p.add_argument("--config")
    _add_param_flags(p)
    p.set_defaults(func=cmd_superpixels)

    p = sub.add_parser("features-fallback",
                       help="write hand-crafted FMP1 feature maps for a directory")
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    _add_param_flags(p)
    p.set_defaults(func=cmd_features_fallback)

    p = sub.add_parser("generate", help="generate masks for an image directory")
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--features", help="directory of FMP1 files (default: fallback extractor)")
    p.add_argument("--config")
    _add_param_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="score generated masks against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", help="write full metrics JSON here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="parameter sensitivity sweep (CSV + JSON + figure)")
    p.add_argument("--axis", required=True, help=f"one of {SWEEP_AXES}")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--images", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--features")
    p.add_argument("--config")
    _add_param_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("overlay", help="blend the FREE region in red over the image")
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_overlay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PipelineInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PartialDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
