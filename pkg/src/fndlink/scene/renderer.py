"""
Camera-frame rendering of FND clusters under microwave illumination.

Each cluster is a pixel-integrated isotropic Gaussian spot. The expected
frame of a slot depends only on the tones each cluster receives, so
``FrameRenderer`` caches it per tone configuration; noise is then drawn
per slot from an explicit seed.
"""

from typing import Hashable, Optional, Sequence

import numpy as np
from scipy.special import erf

from fndlink.errors import DimensionMismatchError
from fndlink.logger import get_logger
from fndlink.physics import FndCluster, MagneticFieldMap, Tone, cluster_fluorescence

from .models import FieldOfView, FluorescenceFrame, NoiseModel

logger = get_logger(__name__)

DEFAULT_PSF_SIGMA_UM = 1.0

ClusterTones = Sequence[Sequence[Tone]]


def _axis_weights(edges: np.ndarray, centre: float, sigma: float) -> np.ndarray:
    z = (edges - centre) / (np.sqrt(2.0) * sigma)
    return 0.5 * np.diff(erf(z))


def psf_stack(
    clusters: Sequence[FndCluster], fov: FieldOfView, sigma: float = DEFAULT_PSF_SIGMA_UM
) -> np.ndarray:
    """Per-cluster spot images, shape (K, pixels_y, pixels_x).

    Each image integrates a unit-mass Gaussian over the pixel areas, so its
    sum is the fraction of the spot falling inside the field of view.
    """
    if sigma <= 0:
        raise ValueError("psf sigma must be positive")
    x_edges, y_edges = fov.pixel_edges()
    stack = np.empty((len(clusters), fov.pixels_y, fov.pixels_x))
    for k, cluster in enumerate(clusters):
        x0, y0 = cluster.position
        stack[k] = np.outer(
            _axis_weights(y_edges, y0, sigma), _axis_weights(x_edges, x0, sigma)
        )
    return stack


def sample_counts(
    expected: np.ndarray, noise: NoiseModel, rng: np.random.Generator
) -> np.ndarray:
    """Poisson shot noise plus Gaussian read noise, clamped at zero."""
    counts = rng.poisson(expected).astype(float)
    if noise.read_noise_sd > 0:
        counts += rng.normal(0.0, noise.read_noise_sd, size=np.shape(expected))
    return np.maximum(counts, 0.0)


class FrameRenderer:
    """Renders frames of a fixed scene for varying per-cluster tones."""

    def __init__(
        self,
        clusters: Sequence[FndCluster],
        field_map: MagneticFieldMap,
        fov: FieldOfView,
        noise: NoiseModel,
        psf_sigma: float = DEFAULT_PSF_SIGMA_UM,
    ):
        for cluster in clusters:
            if not fov.contains(cluster.position):
                raise ValueError(f"cluster {cluster.id} lies outside the field of view")
        self.clusters = list(clusters)
        self.field_map = field_map
        self.fov = fov
        self.noise = noise
        self.psf_sigma = psf_sigma
        self.psf = psf_stack(self.clusters, fov, psf_sigma)
        self._background = noise.background_rate * noise.exposure
        self._cache: dict[Hashable, np.ndarray] = {}

    def rates(self, per_cluster_tones: ClusterTones) -> np.ndarray:
        """Expected photon rate of every cluster, counts/ms."""
        if len(per_cluster_tones) != len(self.clusters):
            raise DimensionMismatchError(
                f"{len(per_cluster_tones)} tone lists for {len(self.clusters)} clusters"
            )
        return np.array(
            [
                cluster_fluorescence(c, tones, self.field_map, self.noise.laser_scale)
                for c, tones in zip(self.clusters, per_cluster_tones)
            ]
        )

    def _compute_signal(self, per_cluster_tones: ClusterTones) -> np.ndarray:
        counts = self.rates(per_cluster_tones) * self.noise.exposure
        if len(self.clusters):
            out = np.tensordot(counts, self.psf, axes=1)
        else:
            out = np.zeros(self.fov.shape)
        out.setflags(write=False)
        return out

    def signal(self, per_cluster_tones: ClusterTones, cache: bool = True) -> np.ndarray:
        """Expected cluster counts per pixel, background excluded.

        Tone sets that recur (symbol tuples, calibration slots) are cached.
        Pass ``cache=False`` for one-off tones such as analog samples.
        """
        key = tuple(tuple(tones) for tones in per_cluster_tones)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        out = self._compute_signal(per_cluster_tones)
        if cache:
            self._cache[key] = out
        return out

    @property
    def cached_signals(self) -> int:
        return len(self._cache)

    def expected(self, per_cluster_tones: ClusterTones, cache: bool = True) -> np.ndarray:
        return self.signal(per_cluster_tones, cache=cache) + self._background

    def render(
        self,
        per_cluster_tones: ClusterTones,
        rng: Optional[np.random.Generator] = None,
        deterministic: bool = False,
        cache: bool = True,
    ) -> FluorescenceFrame:
        expected = self.expected(per_cluster_tones, cache=cache)
        if deterministic:
            return FluorescenceFrame(expected)
        if rng is None:
            raise ValueError("a random generator is required unless deterministic")
        return FluorescenceFrame(sample_counts(expected, self.noise, rng))

    def signal_counts_per_frame(self, per_cluster_tones: Optional[ClusterTones] = None) -> float:
        """Total expected cluster counts in a frame (no microwave by default)."""
        tones = per_cluster_tones or [[] for _ in self.clusters]
        return float(self.signal(tones).sum())


def render_frame(
    clusters: Sequence[FndCluster],
    per_cluster_tones: ClusterTones,
    field_map: MagneticFieldMap,
    noise: NoiseModel,
    seed: int,
    *,
    fov: FieldOfView,
    psf_sigma: float = DEFAULT_PSF_SIGMA_UM,
    deterministic: bool = False,
) -> FluorescenceFrame:
    """Render one acquisition slot.

    Args:
        clusters: Scene clusters.
        per_cluster_tones: Tones received by each cluster, same length as clusters.
        field_map: Static magnetic field.
        noise: Exposure and camera noise.
        seed: Seed of this slot's noise.
        fov: Field of view and pixel grid.
        psf_sigma: Spot sigma in micrometres.
        deterministic: Return the expectation instead of a noisy draw.
    """
    renderer = FrameRenderer(clusters, field_map, fov, noise, psf_sigma)
    return renderer.render(
        per_cluster_tones, rng=np.random.default_rng(seed), deterministic=deterministic
    )


def average_frames(frames: Sequence[FluorescenceFrame]) -> FluorescenceFrame:
    """Element-wise mean of equally sized frames."""
    if not frames:
        raise ValueError("cannot average an empty list of frames")
    shape = frames[0].shape
    total = np.zeros(shape)
    for frame in frames:
        if frame.shape != shape:
            raise DimensionMismatchError(f"frame shape {frame.shape} != {shape}")
        total += frame.counts
    return FluorescenceFrame(total / len(frames))
