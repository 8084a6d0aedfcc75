"""Mask construction from cluster memberships, baseline masks, and scoring.

All scoring ignores pixels where the ground truth is VOID; a VOID pixel in
a prediction counts as NOT_FREE.  Dataset-level numbers come from globally
summed tp/fp/fn counts (the Cityscapes convention), not from averaging
per-image IoUs.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import FREE, NOT_FREE, VOID, BinaryMask, SuperpixelMap


@dataclass(frozen=True)
class MaskScore:
    tp: int
    fp: int
    fn: int
    iou: float
    precision: float
    recall: float

    def to_dict(self):
        return asdict(self)


def mask_from_membership(sp: SuperpixelMap, membership) -> BinaryMask:
    """Pixel is FREE iff its segment's cluster membership is 0."""
    m = np.asarray(membership)
    if m.shape != (sp.num_segments,):
        raise ValueError(
            f"membership covers {m.shape} segments, map has {sp.num_segments}"
        )
    free_seg = m == 0
    labels = np.where(free_seg[sp.labels], FREE, NOT_FREE).astype(np.uint8)
    return BinaryMask(labels)


def mask_from_cell_membership(membership, hf: int, wf: int,
                              height: int, width: int, stride: int) -> BinaryMask:
    """Render per-cell cluster memberships to a pixel mask.

    Cells are stride x stride blocks (ragged at the bottom/right edges),
    matching the grid of a feature map with hf = ceil(height/stride).
    Used to turn raw-feature clustering output into a saliency mask for
    overlap_select.
    """
    m = np.asarray(membership)
    if m.shape != (hf * wf,):
        raise ValueError(f"membership covers {m.shape}, grid has {hf * wf} cells")
    if -(-height // stride) != hf or -(-width // stride) != wf:
        raise ValueError("grid shape inconsistent with image dims and stride")
    free_cells = (m == 0).reshape(hf, wf)
    rows = np.arange(height) // stride
    cols = np.arange(width) // stride
    free = free_cells[rows[:, None], cols[None, :]]
    return BinaryMask(np.where(free, FREE, NOT_FREE).astype(np.uint8))


def overlap_select(sp: SuperpixelMap, saliency: BinaryMask,
                   tau: float = 0.5) -> BinaryMask:
    """Segment is FREE iff at least a tau fraction of it overlaps saliency FREE."""
    if (saliency.height, saliency.width) != (sp.height, sp.width):
        raise ValueError("saliency dimensions do not match the superpixel map")
    free = (saliency.labels == FREE).ravel().astype(np.float64)
    inter = np.bincount(sp.labels.ravel(), weights=free, minlength=sp.num_segments)
    selected = inter / sp.counts >= tau
    labels = np.where(selected[sp.labels], FREE, NOT_FREE).astype(np.uint8)
    return BinaryMask(labels)


def bottom_half_mask(width: int, height: int) -> BinaryMask:
    """Rows >= ceil(height/2) are FREE (the trivial bottom-half baseline)."""
    labels = np.full((height, width), NOT_FREE, dtype=np.uint8)
    labels[(height + 1) // 2:, :] = FREE
    return BinaryMask(labels)


def score(pred: BinaryMask, gt: BinaryMask) -> MaskScore:
    """IoU/precision/recall of the FREE class over non-VOID ground truth.

    Zero-denominator conventions (documented): IoU of two empty masks is
    1.0, and precision/recall with a zero denominator are 1.0.
    """
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise ValueError("prediction and ground truth dimensions differ")
    valid = gt.labels != VOID
    p = (pred.labels == FREE) & valid
    g = (gt.labels == FREE) & valid
    tp = int((p & g).sum())
    fp = int((p & ~g).sum())
    fn = int((~p & g).sum())
    return MaskScore(tp, fp, fn, *_ratios(tp, fp, fn))


def _ratios(tp, fp, fn):
    iou = tp / (tp + fp + fn) if tp + fp + fn else 1.0
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    return iou, precision, recall


def aggregate_scores(per_image: list[MaskScore]) -> MaskScore:
    """Dataset score from summed counts: iou = sum(tp) / sum(tp + fp + fn)."""
    if not per_image:
        raise ValueError("no scores to aggregate")
    tp = sum(s.tp for s in per_image)
    fp = sum(s.fp for s in per_image)
    fn = sum(s.fn for s in per_image)
    return MaskScore(tp, fp, fn, *_ratios(tp, fp, fn))


# Cityscapes labelId ingestion: the seven 'void' category ids (0..6) score
# as VOID, the road id (7) as FREE, everything else as NOT_FREE.  This sits
# outside the core mask API; generated masks never contain VOID.
CITYSCAPES_ROAD_ID = 7
CITYSCAPES_VOID_IDS = (0, 1, 2, 3, 4, 5, 6)


def mask_from_cityscapes_label_ids(label_ids: np.ndarray) -> BinaryMask:
    """Convert a Cityscapes labelId image into a FREE/NOT_FREE/VOID mask."""
    out = np.full(label_ids.shape, NOT_FREE, dtype=np.uint8)
    out[np.isin(label_ids, CITYSCAPES_VOID_IDS)] = VOID
    out[label_ids == CITYSCAPES_ROAD_ID] = FREE
    return BinaryMask(out)
