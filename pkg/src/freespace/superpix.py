"""Felzenszwalb-Huttenlocher graph-based superpixel segmentation.

Single graph over the 8-connected pixel grid; edge weight is the Euclidean
distance in (optionally Gaussian-smoothed) RGB space.  Components merge in
nondecreasing edge-weight order under the adaptive threshold tau(C) =
scale / |C|, followed by a pass that absorbs any component smaller than
min_size into its nearest-connected neighbor.  Edges are ordered by
(weight, source index, target index) so the labeling is identical across
runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .core import FREE, NOT_FREE, BinaryMask, ImageRGB, SuperpixelMap


@dataclass(frozen=True)
class FHParams:
    """Graph-merge threshold `scale`, pre-smoothing sigma, minimum segment size."""

    scale: float = 300.0
    smoothing_sigma: float = 0.8
    min_size: int = 100

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be > 0")
        if self.min_size < 1:
            raise ValueError("min_size must be >= 1")
        if self.smoothing_sigma < 0:
            raise ValueError("smoothing_sigma must be >= 0")


def _grid_edges(height, width):
    """8-connected grid edges as (src, dst) flat-index arrays."""
    idx = np.arange(height * width).reshape(height, width)
    pairs = [
        (idx[:, :-1], idx[:, 1:]),        # right
        (idx[:-1, :], idx[1:, :]),        # down
        (idx[:-1, :-1], idx[1:, 1:]),     # down-right
        (idx[:-1, 1:], idx[1:, :-1]),     # down-left
    ]
    src = np.concatenate([a.ravel() for a, _ in pairs])
    dst = np.concatenate([b.ravel() for _, b in pairs])
    return src, dst


def segment(image: ImageRGB, params: FHParams) -> SuperpixelMap:
    """Segment an RGB image into superpixels.

    Deterministic for fixed inputs; labels are dense 0..S-1 numbered by
    first row-major occurrence.
    """
    h, w = image.height, image.width
    img = image.pixels.astype(np.float64)
    if params.smoothing_sigma > 0:
        img = gaussian_filter(img, sigma=(params.smoothing_sigma,) * 2 + (0.0,))

    src, dst = _grid_edges(h, w)
    flat = img.reshape(-1, 3)
    diff = flat[src] - flat[dst]
    weights = np.sqrt((diff * diff).sum(axis=1))

    order = np.lexsort((dst, src, weights))
    src_l = src[order].tolist()
    dst_l = dst[order].tolist()
    w_l = weights[order].tolist()

    n = h * w
    scale = float(params.scale)
    parent = list(range(n))
    size = [1] * n
    thr = [scale] * n

    # pass 1: threshold-gated merging (path-halving find, union by size)
    for i in range(len(w_l)):
        a = src_l[i]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = dst_l[i]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a == b:
            continue
        wt = w_l[i]
        if wt <= thr[a] and wt <= thr[b]:
            if size[a] < size[b]:
                a, b = b, a
            parent[b] = a
            size[a] += size[b]
            thr[a] = wt + scale / size[a]

    # pass 2: absorb undersized components along the lightest edges first
    min_size = params.min_size
    for i in range(len(w_l)):
        a = src_l[i]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = dst_l[i]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a != b and (size[a] < min_size or size[b] < min_size):
            if size[a] < size[b]:
                a, b = b, a
            parent[b] = a
            size[a] += size[b]

    roots = np.empty(n, dtype=np.int64)
    for i in range(n):
        x = i
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        roots[i] = x

    # dense labels in first-occurrence (row-major) order
    _, first_idx, inverse = np.unique(roots, return_index=True, return_inverse=True)
    rank = np.empty(len(first_idx), dtype=np.int32)
    rank[np.argsort(first_idx)] = np.arange(len(first_idx), dtype=np.int32)
    labels = rank[inverse].reshape(h, w)
    return SuperpixelMap(labels)


def largest_superpixel_mask(sp: SuperpixelMap) -> BinaryMask:
    """FREE exactly on the segment with the most pixels (ties: lowest id)."""
    biggest = int(np.argmax(sp.counts))
    mask = np.where(sp.labels == biggest, FREE, NOT_FREE).astype(np.uint8)
    return BinaryMask(mask)


def boundary_overlay(image: ImageRGB, sp: SuperpixelMap,
                     color=(255, 255, 0)) -> ImageRGB:
    """Debug view: segment boundaries drawn over the image."""
    lab = sp.labels
    edge = np.zeros(lab.shape, dtype=bool)
    edge[:, :-1] |= lab[:, :-1] != lab[:, 1:]
    edge[:-1, :] |= lab[:-1, :] != lab[1:, :]
    out = image.pixels.copy()
    out[edge] = color
    return ImageRGB(out)


def label_map_image(sp: SuperpixelMap) -> np.ndarray:
    """Label map as 16-bit gray pixel data; errors if S > 65535."""
    if sp.num_segments > 65535:
        raise ValueError(
            f"{sp.num_segments} segments exceed the 16-bit label PNG limit"
        )
    return sp.labels.astype(np.uint16)
