"""Free-space mask generation from unannotated vehicle-centric images.

Pipeline: graph-based superpixels -> superpixel alignment of feature maps
-> location-prior k-means (optionally batched across images) -> binary
free-space masks, plus the IoU evaluation protocol and trivial baselines.
"""

from .align import (
    SuperpixelFeature,
    align_superpixels,
    bilinear_sample,
    bilinear_sample_many,
    pixel_features_raw,
    prior_weight,
    prior_weights,
)
from .cluster import ClusterResult, cluster_batch, location_prior_kmeans, median
from .core import (
    FREE,
    NOT_FREE,
    VOID,
    BinaryMask,
    FeatureMap,
    ImageRGB,
    PriorConfig,
    SuperpixelMap,
    load_feature_map,
    load_image,
    load_mask,
    rng_for_image,
    rng_from_seed,
    save_image,
    save_mask,
    write_feature_map,
)
from .features import handcrafted_feature_map
from .masks import (
    MaskScore,
    aggregate_scores,
    bottom_half_mask,
    mask_from_cell_membership,
    mask_from_membership,
    overlap_select,
    score,
)
from .superpix import FHParams, largest_superpixel_mask, segment

__version__ = "0.1.0"

__all__ = [
    "FREE", "NOT_FREE", "VOID",
    "BinaryMask", "FeatureMap", "ImageRGB", "PriorConfig", "SuperpixelMap",
    "FHParams", "SuperpixelFeature", "ClusterResult", "MaskScore",
    "load_image", "save_image", "load_mask", "save_mask",
    "load_feature_map", "write_feature_map",
    "rng_from_seed", "rng_for_image",
    "segment", "largest_superpixel_mask",
    "bilinear_sample", "bilinear_sample_many", "align_superpixels",
    "prior_weight", "prior_weights", "pixel_features_raw",
    "handcrafted_feature_map",
    "location_prior_kmeans", "cluster_batch", "median",
    "mask_from_membership", "mask_from_cell_membership", "overlap_select",
    "bottom_half_mask", "score", "aggregate_scores",
]
