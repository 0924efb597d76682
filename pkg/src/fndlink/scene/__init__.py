"""
Scene generation and camera-frame rendering.
"""

from .generator import generate_clusters, place_resonant_clusters
from .models import FieldOfView, FluorescenceFrame, NoiseModel
from .renderer import (
    DEFAULT_PSF_SIGMA_UM,
    FrameRenderer,
    average_frames,
    psf_stack,
    render_frame,
    sample_counts,
)
from .seeding import Stream, child_seed, seed_sequence, stream_rng

__all__ = [
    "DEFAULT_PSF_SIGMA_UM",
    "FieldOfView",
    "FluorescenceFrame",
    "FrameRenderer",
    "NoiseModel",
    "Stream",
    "average_frames",
    "child_seed",
    "generate_clusters",
    "place_resonant_clusters",
    "psf_stack",
    "render_frame",
    "sample_counts",
    "seed_sequence",
    "stream_rng",
]
