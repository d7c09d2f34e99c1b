"""Geometric multi-resolution analysis of point clouds."""

from ._gmra import (
    GmraError,
    Model,
    generate,
    hausdorff,
    ortho_cross_gram,
    prune,
    set_threads,
    svd_baseline,
)

__all__ = [
    "GmraError",
    "Model",
    "generate",
    "hausdorff",
    "ortho_cross_gram",
    "prune",
    "set_threads",
    "svd_baseline",
]
__version__ = "0.1.0"
