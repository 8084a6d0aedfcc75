"""Batch feature export: one FMP1 tensor file per input image.

The FMP1 format (shared with the mask-generation pipeline): magic "FMP1",
three uint32 LE (C, Hf, Wf), then C*Hf*Wf float32 LE in C-order.  A sidecar
``export_manifest.json`` records the resize policy, normalization and
weight source so downstream coordinate mapping can stay shape-driven.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

from .drn import DRN26, load_pretrained

FMP1_MAGIC = b"FMP1"
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


class ExportError(RuntimeError):
    pass


def write_fmp1(path, data: np.ndarray) -> None:
    """Write a (C, Hf, Wf) float32 array as an FMP1 file."""
    c, h, w = data.shape
    with open(path, "wb") as f:
        f.write(FMP1_MAGIC)
        f.write(struct.pack("<III", c, h, w))
        f.write(np.ascontiguousarray(data, dtype="<f4").tobytes())


def build_model(weights=None, random_init=False, seed=0) -> DRN26:
    """Pretrained network, or a seeded random one for offline testing.

    ``random_init`` exists so the export path can be exercised without the
    ImageNet checkpoint; its features are deterministic but carry no
    semantic content.
    """
    if weights is None and not random_init:
        raise ExportError(
            "pretrained weights required: pass weights=... or random_init=True"
        )
    torch.manual_seed(seed)
    model = DRN26()
    if weights is not None:
        path = Path(weights)
        if not path.exists():
            raise ExportError(f"weights file not found: {path}")
        try:
            load_pretrained(model, path)
        except Exception as exc:
            raise ExportError(f"cannot load weights from {path}: {exc}") from exc
    model.eval()
    return model


def _load_image_tensor(path, resize):
    try:
        with Image.open(path) as im:
            rgb = im.convert("RGB")
            if resize is not None:
                rgb = rgb.resize(resize, Image.BILINEAR)
            arr = np.asarray(rgb, dtype=np.float32) / 255.0
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ExportError(f"unreadable image {path}: {exc}") from exc
    if arr.size == 0 or arr.ndim != 3:
        raise ExportError(f"zero-size or malformed image: {path}")
    arr = (arr - np.array(IMAGENET_MEAN, dtype=np.float32)) / np.array(
        IMAGENET_STD, dtype=np.float32
    )
    return torch.from_numpy(arr.transpose(2, 0, 1))[None]


def extract_features(image_dir, out_dir, model: DRN26, resize=None,
                     device="cpu", manifest_extra=None) -> dict:
    """Run the network over every image and write <stem>.fmp1 files.

    ``resize`` is an optional (width, height) applied before inference;
    the choice is recorded in the sidecar manifest.  Returns the manifest.
    """
    image_dir = Path(image_dir)
    out_dir = Path(out_dir)
    if not image_dir.is_dir():
        raise ExportError(f"not a directory: {image_dir}")
    names = sorted(
        p.name for p in image_dir.iterdir()
        if p.suffix.lower() in (".png", ".jpg", ".jpeg")
    )
    if not names:
        raise ExportError(f"no images found in {image_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)

    dev = torch.device(device)
    model = model.to(dev)
    written = []
    with torch.no_grad():
        for name in names:
            tensor = _load_image_tensor(image_dir / name, resize).to(dev)
            feats = model.features(tensor)[0].cpu().numpy().astype(np.float32)
            if not np.isfinite(feats).all():
                raise ExportError(f"non-finite activations for {name}")
            out_path = out_dir / (Path(name).stem + ".fmp1")
            write_fmp1(out_path, feats)
            written.append({
                "image": name,
                "file": out_path.name,
                "shape": list(feats.shape),
            })

    manifest = {
        "arch": "drn-26 (dilated residual, stride 8)",
        "feature_layer": "last convolutional block before global pooling",
        "normalization": {"mean": list(IMAGENET_MEAN), "std": list(IMAGENET_STD)},
        "resize": list(resize) if resize is not None else None,
        "files": written,
    }
    if manifest_extra:
        manifest.update(manifest_extra)
    with open(out_dir / "export_manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return manifest
