"""Location-prior k-means over superpixel features, single image or batched.

Cluster 0 is the free-space cluster by construction: it is seeded from the
features whose prior weight lies strictly above the (lower) median, its
center is the w-weighted mean of its members, and every other cluster uses
repellent (1 - w) weights.  Memberships update as a plain nearest-center
argmin, ties going to the lowest cluster index.  The update rule breaks the
usual k-means convergence guarantee, so iteration is capped by max_iters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .align import SuperpixelFeature
from .core import PriorConfig, stable_u64


@dataclass(frozen=True)
class ClusterResult:
    """Centers (k, D), per-feature membership (N,), convergence diagnostics."""

    centers: np.ndarray
    membership: np.ndarray
    iterations_run: int
    converged: bool

    def to_dict(self):
        return {
            "centers": self.centers.tolist(),
            "membership": self.membership.tolist(),
            "iterations_run": self.iterations_run,
            "converged": self.converged,
        }


def median(values) -> float:
    """Lower median: element at index (n-1)//2 of the sorted values."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("median of empty list")
    return float(np.sort(arr)[(arr.size - 1) // 2])


def _seeded_membership(features, w, k, seed):
    """Initial assignment: cluster 0 above the median weight, else a keyed
    uniform draw from 1..k-1.

    The draw is indexed by (seed, image_id, segment_id) rather than list
    position, so permuting the input features permutes memberships
    identically.
    """
    med = median(w)
    m = np.zeros(len(features), dtype=np.int64)
    for i, f in enumerate(features):
        if not (w[i] > med):
            m[i] = 1 + stable_u64(seed, f.image_id, f.segment_id) % (k - 1)
    return m


def _compute_centers(x, w, m, k, dim):
    """Weighted centers with empty-cluster repair.

    Cluster 0 uses weights w, clusters q > 0 use 1 - w.  If a repellent
    cluster's weights sum to zero (every member has w == 1.0 exactly) the
    unweighted mean is used.  An empty cluster is reseeded at the feature
    farthest from its nearest already-defined center.
    """
    centers = np.zeros((k, dim), dtype=np.float64)
    defined = np.zeros(k, dtype=bool)
    for q in range(k):
        members = m == q
        if not members.any():
            continue
        wq = w[members] if q == 0 else 1.0 - w[members]
        denom = wq.sum()
        if denom > 0:
            centers[q] = (x[members] * wq[:, None]).sum(axis=0) / denom
        else:
            centers[q] = x[members].mean(axis=0)
        defined[q] = True

    for q in range(k):
        if defined[q]:
            continue
        d2 = ((x[:, None, :] - centers[None, defined, :]) ** 2).sum(axis=2)
        centers[q] = x[int(np.argmax(d2.min(axis=1)))]
        defined[q] = True
    return centers


def location_prior_kmeans(features: list[SuperpixelFeature], cfg: PriorConfig,
                          init_membership=None) -> ClusterResult:
    """Weighted Lloyd iteration with the location-prior seeding.

    Runs until assignments are stable or cfg.max_iters is reached.  All
    randomness comes from cfg.seed via stable per-feature keys, so results
    are reproducible and independent of input permutation (up to the same
    permutation of the membership array).  ``init_membership`` overrides
    the seeded initialization (used for side-by-side comparisons against
    plain k-means).
    """
    n = len(features)
    if n < cfg.k:
        raise ValueError(f"need at least k={cfg.k} features, got {n}")
    dim = len(features[0].vector)
    x = np.empty((n, dim), dtype=np.float64)
    for i, f in enumerate(features):
        if len(f.vector) != dim:
            raise ValueError("feature vectors must share one dimension")
        x[i] = f.vector
    w = np.array([f.prior_weight for f in features], dtype=np.float64)

    if init_membership is not None:
        m = np.asarray(init_membership, dtype=np.int64).copy()
        if m.shape != (n,) or (m < 0).any() or (m >= cfg.k).any():
            raise ValueError("init_membership must be n values in 0..k-1")
    else:
        m = _seeded_membership(features, w, cfg.k, cfg.seed)

    converged = False
    iterations = 0
    centers = np.zeros((cfg.k, dim), dtype=np.float64)
    for it in range(1, cfg.max_iters + 1):
        iterations = it
        centers = _compute_centers(x, w, m, cfg.k, dim)
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_m = d2.argmin(axis=1)
        if (new_m == m).all():
            converged = True
            break
        m = new_m
    return ClusterResult(centers, m, iterations, converged)


def cluster_batch(per_image_features: list[list[SuperpixelFeature]],
                  cfg: PriorConfig) -> list[ClusterResult]:
    """Cluster several images' features jointly, then split per image.

    Prior weights are already image-local, so concatenation needs no
    rescaling.  Returns one ClusterResult view per input image, all sharing
    the joint centers and diagnostics.
    """
    if not per_image_features:
        raise ValueError("empty batch")
    if len(per_image_features) > cfg.batch_size:
        raise ValueError(
            f"batch of {len(per_image_features)} exceeds batch_size={cfg.batch_size}"
        )
    flat = [f for image_feats in per_image_features for f in image_feats]
    joint = location_prior_kmeans(flat, cfg)
    out = []
    start = 0
    for image_feats in per_image_features:
        stop = start + len(image_feats)
        out.append(
            ClusterResult(
                joint.centers,
                joint.membership[start:stop],
                joint.iterations_run,
                joint.converged,
            )
        )
        start = stop
    return out
