"""Superpixel alignment: pool feature-map values into one vector per superpixel.

For each superpixel a fixed number of member pixels is drawn uniformly at
random (with replacement), each is mapped into feature-map cell coordinates
and bilinearly interpolated, and the samples are average-pooled.  The
normalized centroid (scaled by a configurable weight) is appended, giving a
vector of length C + 2.  Each superpixel also carries a Gaussian location
prior weight: the mean over its pixels of
exp(-sum_d (p_d - mu_d)^2 / (2 sigma_d^2)).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .core import FeatureMap, PriorConfig, SuperpixelMap

SPF1_MAGIC = b"SPF1"


@dataclass(frozen=True)
class SuperpixelFeature:
    """Pooled feature vector (length C + 2) plus location-prior weight."""

    segment_id: int
    image_id: str
    vector: np.ndarray
    prior_weight: float


def bilinear_sample(fmap: FeatureMap, y: float, x: float) -> np.ndarray:
    """Bilinear interpolation of all channels at cell coordinates (y, x).

    Coordinates live on the feature-map grid, valid range
    [0, Hf-1] x [0, Wf-1]; integer coordinates return the cell value
    exactly.
    """
    hf, wf = fmap.height, fmap.width
    if not (0.0 <= y <= hf - 1 and 0.0 <= x <= wf - 1):
        raise ValueError(
            f"sample point ({y}, {x}) outside [0, {hf - 1}] x [0, {wf - 1}]"
        )
    f = fmap.data
    y0 = int(np.floor(y))
    x0 = int(np.floor(x))
    y1 = min(y0 + 1, hf - 1)
    x1 = min(x0 + 1, wf - 1)
    dy = np.float64(y) - y0
    dx = np.float64(x) - x0
    out = (
        f[:, y0, x0].astype(np.float64) * (1.0 - dy) * (1.0 - dx)
        + f[:, y0, x1].astype(np.float64) * (1.0 - dy) * dx
        + f[:, y1, x0].astype(np.float64) * dy * (1.0 - dx)
        + f[:, y1, x1].astype(np.float64) * dy * dx
    )
    return out


def bilinear_sample_many(fmap: FeatureMap, ys, xs) -> np.ndarray:
    """Vectorized bilinear interpolation; returns (N, C) float64."""
    hf, wf = fmap.height, fmap.width
    ys = np.asarray(ys, dtype=np.float64)
    xs = np.asarray(xs, dtype=np.float64)
    if (ys < 0).any() or (ys > hf - 1).any() or (xs < 0).any() or (xs > wf - 1).any():
        raise ValueError("sample points outside the feature-map grid")
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, hf - 1)
    x1 = np.minimum(x0 + 1, wf - 1)
    dy = ys - y0
    dx = xs - x0
    f = fmap.data.astype(np.float64)
    out = (
        f[:, y0, x0] * (1.0 - dy) * (1.0 - dx)
        + f[:, y0, x1] * (1.0 - dy) * dx
        + f[:, y1, x0] * dy * (1.0 - dx)
        + f[:, y1, x1] * dy * dx
    )
    return out.T


def pixel_to_feature_coords(ys, xs, image_h, image_w, fmap_h, fmap_w):
    """Map pixel coordinates to feature-map cell coordinates.

    Uses the align-corners-false convention
    (y_f = (y + 0.5) / H * Hf - 0.5), clamped into the valid grid, so the
    effective stride is derived from the two shapes rather than hard-coded.
    """
    yf = (np.asarray(ys, dtype=np.float64) + 0.5) / image_h * fmap_h - 0.5
    xf = (np.asarray(xs, dtype=np.float64) + 0.5) / image_w * fmap_w - 0.5
    return np.clip(yf, 0.0, fmap_h - 1.0), np.clip(xf, 0.0, fmap_w - 1.0)


def _gaussian_at(rows, cols, mu, sigma):
    dr = (np.asarray(rows, dtype=np.float64) - mu[0]) / sigma[0]
    dc = (np.asarray(cols, dtype=np.float64) - mu[1]) / sigma[1]
    g = np.exp(-0.5 * (dr * dr + dc * dc))
    # weights are contractually in (0, 1]; guard against exp underflow for
    # segments very far from the prior under tiny sigmas
    return np.maximum(g, np.finfo(np.float64).tiny)


def prior_weight(ys, xs, height, width, mu, sigma) -> float:
    """Average-of-Gaussians prior weight for one segment's pixels.

    Coordinates are normalized as (y / height, x / width); a single pixel
    exactly at mu gives 1.0.
    """
    ys = np.asarray(ys)
    if ys.size == 0:
        raise ValueError("segment must contain at least one pixel")
    g = _gaussian_at(np.asarray(ys) / height, np.asarray(xs) / width, mu, sigma)
    return float(g.mean())


def prior_weights(sp: SuperpixelMap, mu, sigma) -> np.ndarray:
    """Prior weights for every segment of a map, vectorized over pixels."""
    h, w = sp.height, sp.width
    rows = (np.arange(h, dtype=np.float64) / h)[:, None]
    cols = (np.arange(w, dtype=np.float64) / w)[None, :]
    g = _gaussian_at(
        np.broadcast_to(rows, (h, w)).ravel(),
        np.broadcast_to(cols, (h, w)).ravel(),
        mu,
        sigma,
    )
    sums = np.bincount(sp.labels.ravel(), weights=g, minlength=sp.num_segments)
    return sums / sp.counts


def align_superpixels(fmap: FeatureMap, sp: SuperpixelMap, cfg: PriorConfig,
                      rng: np.random.Generator) -> list[SuperpixelFeature]:
    """One pooled feature per superpixel, in segment-id order.

    Sampling is with replacement, so segments smaller than the sample count
    simply repeat pixels.  Bitwise deterministic for a fixed rng state.
    """
    h, w = sp.height, sp.width
    n_seg = sp.num_segments
    n_samples = cfg.samples_per_superpixel
    order, offsets = sp.pixel_order()

    picks = rng.integers(0, sp.counts[:, None], size=(n_seg, n_samples))
    flat = order[offsets[:-1, None] + picks]
    ys, xs = np.divmod(flat, w)
    yf, xf = pixel_to_feature_coords(ys, xs, h, w, fmap.height, fmap.width)
    vals = bilinear_sample_many(fmap, yf.ravel(), xf.ravel())
    pooled = vals.reshape(n_seg, n_samples, fmap.channels).mean(axis=1)

    vectors = np.hstack([pooled, cfg.centroid_weight * sp.centroids])
    weights = prior_weights(sp, cfg.mu, cfg.sigma)
    return [
        SuperpixelFeature(i, fmap.source_image_id, vectors[i], float(weights[i]))
        for i in range(n_seg)
    ]


def pixel_features_raw(fmap: FeatureMap, cfg: PriorConfig) -> list[SuperpixelFeature]:
    """Each feature-map cell as a pseudo-superpixel (raw-feature ablation).

    The vector is the cell's channel column plus the weighted normalized
    cell center ((n + 0.5) / Hf, (m + 0.5) / Wf); the prior weight is the
    single-point Gaussian at that center.  Cell ids run row-major.
    """
    c, hf, wf = fmap.data.shape
    cols_feat = fmap.data.reshape(c, hf * wf).T.astype(np.float64)
    rows = (np.arange(hf, dtype=np.float64)[:, None] + 0.5) / hf
    cols = (np.arange(wf, dtype=np.float64)[None, :] + 0.5) / wf
    rr = np.broadcast_to(rows, (hf, wf)).ravel()
    cc = np.broadcast_to(cols, (hf, wf)).ravel()
    centers = np.stack([rr, cc], axis=1)
    vectors = np.hstack([cols_feat, cfg.centroid_weight * centers])
    weights = _gaussian_at(rr, cc, cfg.mu, cfg.sigma)
    return [
        SuperpixelFeature(i, fmap.source_image_id, vectors[i], float(weights[i]))
        for i in range(hf * wf)
    ]


# ---------------------------------------------------------------------------
# SPF1 dump: magic "SPF1", uint32 count, uint32 dim, count*dim float32
# vectors, then count float32 prior weights.  For offline analysis only.
# ---------------------------------------------------------------------------

def write_spf1(path, features: list[SuperpixelFeature]):
    count = len(features)
    dim = len(features[0].vector) if count else 0
    vecs = np.stack([f.vector for f in features]).astype("<f4") if count else np.zeros((0, 0))
    ws = np.array([f.prior_weight for f in features], dtype="<f4")
    with open(path, "wb") as f:
        f.write(SPF1_MAGIC)
        f.write(struct.pack("<II", count, dim))
        f.write(vecs.tobytes())
        f.write(ws.tobytes())


def load_spf1(path):
    """Returns (vectors (count, dim) float32, weights (count,) float32)."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != SPF1_MAGIC:
        raise ValueError(f"{path}: bad magic {blob[:4]!r}")
    count, dim = struct.unpack("<II", blob[4:12])
    expected = count * dim * 4 + count * 4
    if len(blob) - 12 != expected:
        raise ValueError(f"{path}: payload size mismatch")
    vecs = np.frombuffer(blob[12:12 + count * dim * 4], dtype="<f4").reshape(count, dim)
    ws = np.frombuffer(blob[12 + count * dim * 4:], dtype="<f4")
    return vecs, ws
