"""End-to-end mask generation over an image directory.

Per image: superpixel segmentation, feature lookup (FMP1 file or the
fallback extractor), superpixel alignment.  Images are then grouped into
batches of cfg.batch_size in sorted-filename order (the last batch may be
short), each batch is clustered jointly, and cluster-0 memberships become
mask PNGs.  A JSON manifest records the effective parameters, seed, and
per-image diagnostics; it contains no timestamps so identical runs produce
identical bytes.
"""

from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import align, cluster, masks, superpix
from .core import PriorConfig, load_feature_map, load_image, rng_for_image, save_mask
from .features import handcrafted_feature_map
from .superpix import FHParams

IMAGE_SUFFIXES = (".png",)
FEATURE_SUFFIX = ".fmp1"


class PipelineInputError(ValueError):
    """The run cannot start at all (empty image directory, bad paths)."""


def list_images(images_dir) -> list[str]:
    d = Path(images_dir)
    if not d.is_dir():
        raise PipelineInputError(f"not a directory: {d}")
    names = sorted(p.name for p in d.iterdir()
                   if p.suffix.lower() in IMAGE_SUFFIXES)
    if not names:
        raise PipelineInputError(f"no images found in {d}")
    return names


def group_batches(names: list[str], batch_size: int) -> list[list[str]]:
    """Consecutive groups of batch_size over the sorted names."""
    ordered = sorted(names)
    return [ordered[i:i + batch_size] for i in range(0, len(ordered), batch_size)]


def _features_for(name, images_dir, features_dir, stride, fh, cfg):
    """Superpixels + aligned features for one image; raises on missing data."""
    image = load_image(Path(images_dir) / name)
    sp = superpix.segment(image, fh)
    stem = Path(name).stem
    if features_dir is not None:
        fpath = Path(features_dir) / (stem + FEATURE_SUFFIX)
        if not fpath.exists():
            raise FileNotFoundError(f"feature map not found: {fpath}")
        fmap = load_feature_map(fpath, source_image_id=stem)
    else:
        fmap = handcrafted_feature_map(image, stride)
        fmap = dataclasses.replace(fmap, source_image_id=stem)
    rng = rng_for_image(cfg.seed, stem)
    feats = align.align_superpixels(fmap, sp, cfg, rng)
    return sp, feats


def generate(images_dir, out_dir, cfg: PriorConfig, fh: FHParams,
             features_dir=None, stride: int = 8, workers: int = 1) -> dict:
    """Generate one mask PNG per input image plus a manifest.

    Returns the manifest dict; per-image feature failures are recorded in
    manifest["failures"] and the remaining images still run.
    """
    names = list_images(images_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    results = {}
    failures = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = {
                name: pool.submit(_features_for, name, images_dir,
                                  features_dir, stride, fh, cfg)
                for name in names
            }
            for name in names:
                try:
                    results[name] = futs[name].result()
                except (FileNotFoundError, ValueError) as exc:
                    failures.append({"name": name, "error": str(exc)})
    else:
        for name in names:
            try:
                results[name] = _features_for(name, images_dir, features_dir,
                                              stride, fh, cfg)
            except (FileNotFoundError, ValueError) as exc:
                failures.append({"name": name, "error": str(exc)})

    usable = [n for n in names if n in results]
    batches = group_batches(usable, cfg.batch_size)

    image_records = {}
    batch_records = []
    for b_idx, batch in enumerate(batches):
        per_image = [results[n][1] for n in batch]
        cluster_views = cluster.cluster_batch(per_image, cfg)
        for name, view in zip(batch, cluster_views):
            sp = results[name][0]
            mask = masks.mask_from_membership(sp, view.membership)
            save_mask(out / name, mask)
            image_records[name] = {
                "name": name,
                "segments": sp.num_segments,
                "batch": b_idx,
                "converged": view.converged,
            }
        batch_records.append({
            "index": b_idx,
            "images": batch,
            "iterations": cluster_views[0].iterations_run,
            "converged": cluster_views[0].converged,
        })

    manifest = {
        "config": {
            "mu": list(cfg.mu),
            "sigma": list(cfg.sigma),
            "clusters": cfg.k,
            "batch_size": cfg.batch_size,
            "samples_per_superpixel": cfg.samples_per_superpixel,
            "centroid_weight": cfg.centroid_weight,
            "max_iters": cfg.max_iters,
            "seed": cfg.seed,
            "scale": fh.scale,
            "smoothing_sigma": fh.smoothing_sigma,
            "min_size": fh.min_size,
            "feature_source": "fmp1-dir" if features_dir is not None else "fallback",
            "stride": stride,
        },
        "images": [image_records[n] for n in usable],
        "failures": failures,
    }
    manifest["batches"] = batch_records
    with open(out / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return manifest


def evaluate(pred_dir, gt_dir) -> dict:
    """Score every prediction against the same-named ground-truth mask.

    Raises PipelineInputError listing missing pairs if the filename sets
    differ.  Returns {"per_image": [...], "dataset": {...}}.
    """
    from .core import load_mask

    pred = Path(pred_dir)
    gt = Path(gt_dir)
    pred_names = {p.name for p in pred.glob("*.png")}
    gt_names = {p.name for p in gt.glob("*.png")}
    if pred_names != gt_names:
        missing_gt = sorted(pred_names - gt_names)
        missing_pred = sorted(gt_names - pred_names)
        raise PipelineInputError(
            "prediction/ground-truth filename mismatch; "
            f"missing ground truth for {missing_gt}, "
            f"missing predictions for {missing_pred}"
        )
    if not pred_names:
        raise PipelineInputError("no mask pairs to evaluate")

    per_image = []
    scores = []
    for name in sorted(pred_names):
        s = masks.score(load_mask(pred / name), load_mask(gt / name))
        scores.append(s)
        rec = {"name": name}
        rec.update(s.to_dict())
        per_image.append(rec)
    dataset = masks.aggregate_scores(scores)
    return {"per_image": per_image, "dataset": dataset.to_dict()}
