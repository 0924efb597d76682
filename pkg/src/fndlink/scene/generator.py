"""
Random and deterministic placement of FND clusters in the field of view.
"""

import math
from typing import Literal, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from fndlink.logger import get_logger
from fndlink.physics import (
    FndCluster,
    MagneticFieldMap,
    NvSpinModel,
    axial_field_for_peak,
    axis_for_axial_field,
)

from .models import FieldOfView
from .seeding import Stream, stream_rng

logger = get_logger(__name__)

AxisMode = Literal["single", "tetrahedral"]

# The four NV orientations of the diamond lattice
_TETRAHEDRAL_AXES = np.array(
    [[1.0, 1.0, 1.0], [-1.0, -1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0]]
) / math.sqrt(3.0)

DEFAULT_MIXTURE_WEIGHTS = (0.7, 0.1, 0.1, 0.1)


def _unit(v: np.ndarray) -> tuple[float, float, float]:
    v = v / np.linalg.norm(v)
    return (float(v[0]), float(v[1]), float(v[2]))


def _random_rotation(rng: np.random.Generator) -> Rotation:
    # normalised 4-D Gaussian quaternion is uniform over SO(3)
    q = rng.normal(size=4)
    return Rotation.from_quat(q / np.linalg.norm(q))


def generate_clusters(
    seed: int,
    count: int,
    fov: FieldOfView,
    model_defaults: NvSpinModel,
    *,
    brightness_mean: float = 5.0e4,
    brightness_log_sigma: float = 0.3,
    jitter: float = 0.2,
    axis_mode: AxisMode = "single",
    mixture_weights: Sequence[float] = DEFAULT_MIXTURE_WEIGHTS,
) -> list[FndCluster]:
    """Scatter ``count`` clusters uniformly over the field of view.

    Each cluster is drawn from its own stream keyed by its index, so the
    first n clusters for a seed are the same whatever ``count`` is.

    Args:
        seed: Master seed.
        count: Number of clusters (>= 0).
        fov: Field of view the positions are drawn in.
        model_defaults: Spin model the per-cluster jitter is applied to.
        brightness_mean: Mean of the log-normal brightness in counts/ms.
        brightness_log_sigma: Sigma of log(brightness).
        jitter: Fractional +/- range for contrast cap and linewidth.
        axis_mode: ``single`` dominant axis, or a ``tetrahedral`` mixture.
        mixture_weights: Weights of the four lattice axes, dominant first.

    Returns:
        Clusters with ids 0..count-1.
    """
    if count < 0:
        raise ValueError("cluster count must be non-negative")
    if not 0.0 <= jitter < 1.0:
        raise ValueError("jitter must lie in [0, 1)")

    mu = math.log(brightness_mean) - 0.5 * brightness_log_sigma**2
    clusters: list[FndCluster] = []
    for index in range(count):
        rng = stream_rng(seed, Stream.CLUSTERS, index)
        position = (float(rng.uniform(0.0, fov.width)), float(rng.uniform(0.0, fov.height)))
        rotation = _random_rotation(rng)
        brightness = float(rng.lognormal(mu, brightness_log_sigma))
        contrast_factor = float(rng.uniform(1.0 - jitter, 1.0 + jitter))
        linewidth_factor = float(rng.uniform(1.0 - jitter, 1.0 + jitter))

        axes = rotation.apply(_TETRAHEDRAL_AXES)
        extra = {}
        if axis_mode == "tetrahedral":
            extra = {
                "secondary_axes": tuple(_unit(a) for a in axes[1:]),
                "axis_weights": tuple(float(w) for w in mixture_weights),
            }
        clusters.append(
            FndCluster(
                id=index,
                position=position,
                nv_axis=_unit(axes[0]),
                brightness=brightness,
                spin_model=model_defaults.jittered(contrast_factor, linewidth_factor),
                **extra,
            )
        )

    logger.debug("Generated {} clusters (seed={}, axis_mode={})", count, seed, axis_mode)
    return clusters


def place_resonant_clusters(
    targets_mhz: Sequence[float],
    positions: Sequence[tuple[float, float]],
    field_map: MagneticFieldMap,
    model: NvSpinModel,
    *,
    seed: int = 0,
    brightness: float = 5.0e4,
    first_id: int = 0,
) -> list[FndCluster]:
    """Build clusters whose upper resonance sits on each target frequency.

    The NV axis of each cluster is tilted so that the local field projects
    to the axial value D + gamma*B = target; the azimuth of the tilt is
    random but seeded.
    """
    if len(targets_mhz) != len(positions):
        raise ValueError("one position is required per target resonance")

    clusters = []
    for offset, (target, position) in enumerate(zip(targets_mhz, positions)):
        if target < model.zfs_freq:
            raise ValueError(f"target {target} MHz lies below the zero-field splitting")
        b_axial = axial_field_for_peak(model, target)
        rng = stream_rng(seed, Stream.PLACEMENT, offset)
        axis = axis_for_axial_field(
            field_map.field_at(position), b_axial, azimuth=float(rng.uniform(0.0, 2 * math.pi))
        )
        clusters.append(
            FndCluster(
                id=first_id + offset,
                position=(float(position[0]), float(position[1])),
                nv_axis=axis,
                brightness=brightness,
                spin_model=model,
            )
        )
    return clusters
