"""Hand-crafted per-cell features: a self-contained stand-in extractor.

Produces 7 channels per stride x stride cell: mean R/G/B, population std
R/G/B, and mean gradient magnitude of the gray image (central differences
inside, one-sided at the borders).  Meant to make homogeneous regions
separable from textured ones in tests and demos; it is not a substitute
for a pretrained-CNN extractor in accuracy experiments.
"""

from __future__ import annotations

import numpy as np

from .core import FeatureMap, ImageRGB

NUM_CHANNELS = 7


def _cell_reduce(img2d, stride, hf, wf, how):
    """Reduce an (H, W) array per stride-cell; ragged edge cells included."""
    h, w = img2d.shape
    out = np.empty((hf, wf), dtype=np.float64)
    for i in range(hf):
        for j in range(wf):
            cell = img2d[i * stride:min((i + 1) * stride, h),
                         j * stride:min((j + 1) * stride, w)]
            out[i, j] = how(cell)
    return out


def handcrafted_feature_map(image: ImageRGB, stride: int) -> FeatureMap:
    """7-channel per-cell statistics; Hf = ceil(H/stride), Wf = ceil(W/stride)."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    h, w = image.height, image.width
    hf = -(-h // stride)
    wf = -(-w // stride)
    px = image.pixels.astype(np.float64)

    gray = px.mean(axis=2)
    gy = np.gradient(gray, axis=0) if h > 1 else np.zeros_like(gray)
    gx = np.gradient(gray, axis=1) if w > 1 else np.zeros_like(gray)
    grad_mag = np.hypot(gy, gx)

    channels = []
    for c in range(3):
        channels.append(_cell_reduce(px[:, :, c], stride, hf, wf, np.mean))
    for c in range(3):
        channels.append(_cell_reduce(px[:, :, c], stride, hf, wf, np.std))
    channels.append(_cell_reduce(grad_mag, stride, hf, wf, np.mean))

    data = np.stack(channels).astype(np.float32)
    return FeatureMap(data)
