"""Feature export for the free-space mask pipeline: DRN-26 -> FMP1 files."""

from .drn import DRN26, load_pretrained
from .export import ExportError, build_model, extract_features, write_fmp1

__all__ = [
    "DRN26",
    "ExportError",
    "build_model",
    "extract_features",
    "load_pretrained",
    "write_fmp1",
]
