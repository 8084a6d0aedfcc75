"""Shared domain types, image/tensor I/O, and deterministic RNG.

Conventions used throughout the package:

* images are (H, W, 3) uint8 arrays, row-major;
* feature maps are (C, Hf, Wf) float32 arrays (channel-major);
* normalized spatial coordinates are (row, col) = (y / height, x / width),
  so the bottom-center prior location is (0.75, 0.5);
* masks are (H, W) uint8 arrays whose only values are FREE (255),
  NOT_FREE (0) and VOID (128), matching the on-disk gray PNG encoding.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError

FREE = 255
NOT_FREE = 0
VOID = 128

FMP1_MAGIC = b"FMP1"


class ImageDecodeError(ValueError):
    """The file exists but is not a decodable image (corrupt stream)."""


class UnsupportedImageError(ValueError):
    """The image decoded but its mode/bit depth cannot be converted losslessly."""


class FeatureMapFormatError(ValueError):
    """An FMP1 file violates the format: bad magic, shape mismatch, non-finite."""


@dataclass(frozen=True)
class ImageRGB:
    """8-bit RGB image; pixels has shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.dtype != np.uint8:
            raise ValueError(f"expected (H, W, 3) uint8 pixels, got {p.shape} {p.dtype}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("image dimensions must be >= 1")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class FeatureMap:
    """Dense per-location feature tensor, layout (channels, Hf, Wf) float32."""

    data: np.ndarray
    source_image_id: str = ""

    def __post_init__(self):
        d = self.data
        if d.ndim != 3:
            raise ValueError(f"feature map must be rank 3, got shape {d.shape}")
        if d.dtype != np.float32:
            raise ValueError(f"feature map must be float32, got {d.dtype}")

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


class SuperpixelMap:
    """Per-pixel segment labels plus per-segment metadata.

    Labels are dense ids 0..S-1 over an (H, W) grid.  Per-segment arrays:
    ``counts`` (pixel counts), ``centroids`` (normalized (row, col) mean of
    the segment's pixels) and ``bboxes`` (y0, x0, y1, x1 inclusive).  A
    label-sorted pixel ordering is precomputed so per-segment pixel lists
    are O(1) slices.
    """

    def __init__(self, labels: np.ndarray):
        labels = np.ascontiguousarray(labels, dtype=np.int32)
        if labels.ndim != 2:
            raise ValueError("labels must be a 2-d array")
        h, w = labels.shape
        flat = labels.ravel()
        if flat.min() != 0:
            raise ValueError("segment ids must start at 0")
        n_seg = int(flat.max()) + 1
        counts = np.bincount(flat, minlength=n_seg)
        if (counts == 0).any():
            raise ValueError("segment ids must be dense 0..S-1")

        ys, xs = np.divmod(np.arange(h * w), w)
        row_sum = np.bincount(flat, weights=ys, minlength=n_seg)
        col_sum = np.bincount(flat, weights=xs, minlength=n_seg)
        centroids = np.stack(
            [row_sum / counts / h, col_sum / counts / w], axis=1
        )

        order = np.argsort(flat, kind="stable")
        offsets = np.concatenate([[0], np.cumsum(counts)])
        ys_sorted = ys[order]
        xs_sorted = xs[order]
        starts = offsets[:-1]
        bboxes = np.stack(
            [
                np.minimum.reduceat(ys_sorted, starts),
                np.minimum.reduceat(xs_sorted, starts),
                np.maximum.reduceat(ys_sorted, starts),
                np.maximum.reduceat(xs_sorted, starts),
            ],
            axis=1,
        ).astype(np.int32)

        self.labels = labels
        self.counts = counts
        self.centroids = centroids
        self.bboxes = bboxes
        self._order = order
        self._offsets = offsets

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def num_segments(self) -> int:
        return len(self.counts)

    def segment_pixels(self, segment_id: int):
        """(ys, xs) arrays for one segment, in row-major pixel order."""
        lo = self._offsets[segment_id]
        hi = self._offsets[segment_id + 1]
        flat = self._order[lo:hi]
        return flat // self.width, flat % self.width

    def pixel_order(self):
        """Label-sorted flat pixel indices and per-segment offsets."""
        return self._order, self._offsets


@dataclass(frozen=True)
class PriorConfig:
    """Location prior and clustering parameters.

    Defaults follow the published configuration: prior mean at the bottom
    center (0.75, 0.5) with std 0.1 per axis, 4 clusters, batches of 30
    images, 10 sampled locations per superpixel.
    """

    mu: tuple = (0.75, 0.5)
    sigma: tuple = (0.1, 0.1)
    k: int = 4
    batch_size: int = 30
    samples_per_superpixel: int = 10
    centroid_weight: float = 1.0
    max_iters: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.sigma[0] <= 0 or self.sigma[1] <= 0:
            raise ValueError("sigma components must be > 0")
        if self.samples_per_superpixel < 1:
            raise ValueError("samples_per_superpixel must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class BinaryMask:
    """Per-pixel {FREE, NOT_FREE, VOID} labeling as an (H, W) uint8 array."""

    labels: np.ndarray

    def __post_init__(self):
        m = self.labels
        if m.ndim != 2 or m.dtype != np.uint8:
            raise ValueError(f"mask must be (H, W) uint8, got {m.shape} {m.dtype}")
        bad = ~np.isin(m, (FREE, NOT_FREE, VOID))
        if bad.any():
            raise ValueError("mask values must be in {0, 128, 255}")

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


# ---------------------------------------------------------------------------
# image I/O
# ---------------------------------------------------------------------------

def load_image(path) -> ImageRGB:
    """Load a PNG (or other Pillow-readable) file as 8-bit RGB.

    Missing files raise FileNotFoundError, undecodable streams raise
    ImageDecodeError, and modes that cannot be converted to 8-bit RGB
    without loss (e.g. 16-bit channels) raise UnsupportedImageError.
    """
    try:
        with Image.open(path) as im:
            if im.mode in ("I", "I;16", "I;16B", "I;16L", "F"):
                raise UnsupportedImageError(
                    f"{path}: unsupported bit depth/mode {im.mode!r}"
                )
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageDecodeError(f"{path}: corrupt or truncated image ({exc})") from exc
    return ImageRGB(arr)


def save_image(path, image: ImageRGB):
    Image.fromarray(image.pixels, mode="RGB").save(path, format="PNG")


def load_mask(path) -> BinaryMask:
    """Load a mask PNG (single gray channel, values FREE/NOT_FREE/VOID)."""
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("L"), dtype=np.uint8)
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageDecodeError(f"{path}: corrupt or truncated mask ({exc})") from exc
    return BinaryMask(arr)


def save_mask(path, mask: BinaryMask):
    Image.fromarray(mask.labels, mode="L").save(path, format="PNG")


# ---------------------------------------------------------------------------
# FMP1 tensor format
# ---------------------------------------------------------------------------
# magic "FMP1", then three uint32 LE (C, Hf, Wf), then C*Hf*Wf float32 LE
# in (C, Hf, Wf) C-order.  No padding, no footer.

def write_feature_map(path, fmap: FeatureMap):
    c, h, w = fmap.data.shape
    with open(path, "wb") as f:
        f.write(FMP1_MAGIC)
        f.write(struct.pack("<III", c, h, w))
        f.write(np.ascontiguousarray(fmap.data, dtype="<f4").tobytes())


def load_feature_map(path, source_image_id: str = "") -> FeatureMap:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != FMP1_MAGIC:
        raise FeatureMapFormatError(f"{path}: bad magic {blob[:4]!r}")
    if len(blob) < 16:
        raise FeatureMapFormatError(f"{path}: truncated header")
    c, h, w = struct.unpack("<III", blob[4:16])
    payload = blob[16:]
    expected = c * h * w * 4
    if len(payload) != expected:
        raise FeatureMapFormatError(
            f"{path}: payload is {len(payload)} bytes, header declares {expected}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(c, h, w)
    if not np.isfinite(data).all():
        raise FeatureMapFormatError(f"{path}: non-finite values in payload")
    return FeatureMap(np.ascontiguousarray(data, dtype=np.float32), source_image_id)


# ---------------------------------------------------------------------------
# deterministic RNG
# ---------------------------------------------------------------------------
# All randomness flows through NumPy's PCG64 generator, which has a fixed,
# documented algorithm, so identical seeds give identical streams on every
# platform.  Per-image streams are derived by XORing the run seed with a
# SHA-256-based digest of the image id (Python's builtin hash() is salted
# per process and must not be used).

def stable_u64(*parts) -> int:
    """Stable 64-bit digest of the given parts (strings/ints)."""
    h = hashlib.sha256("\x1f".join(str(p) for p in parts).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little")


def rng_from_seed(seed: int) -> np.random.Generator:
    """Deterministic PCG64 generator for a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


def rng_for_image(seed: int, image_id: str) -> np.random.Generator:
    """Per-image stream: seed XOR stable digest of the image id.

    Independent of scheduling order, so parallel per-image work reproduces
    the serial results.
    """
    return rng_from_seed(int(seed) ^ stable_u64(image_id))
