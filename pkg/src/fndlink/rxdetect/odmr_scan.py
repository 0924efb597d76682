"""
ODMR frequency sweeps over regions of interest around localised spots.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from fndlink.errors import DetectionError
from fndlink.logger import get_logger
from fndlink.physics import Tone
from fndlink.scene import FieldOfView, FluorescenceFrame, FrameRenderer, Stream, stream_rng

from .models import LorentzianFit, OdmrScan, Vec2

logger = get_logger(__name__)

DEFAULT_ROI_RADIUS_FACTOR = 2.0


def disk_mask(fov: FieldOfView, center: Vec2, radius: float) -> np.ndarray:
    """Pixels whose centre lies within ``radius`` micrometres of ``center``."""
    xs, ys = fov.pixel_centers()
    return (xs - center[0]) ** 2 + (ys - center[1]) ** 2 <= radius**2


def locate_spots(
    frame: FluorescenceFrame,
    nominal_positions: Sequence[Vec2],
    fov: FieldOfView,
    window: float,
) -> list[Vec2]:
    """Intensity centroids of the spots near each nominal position.

    Each centroid is taken over the pixels within ``window`` micrometres of
    the nominal position, with the frame's median level subtracted.
    """
    if not nominal_positions:
        return []
    counts = np.clip(frame.counts - np.median(frame.counts), 0.0, None)
    labels = np.zeros(frame.shape, dtype=np.int32)
    for index, position in enumerate(nominal_positions, start=1):
        labels[disk_mask(fov, position, window) & (labels == 0)] = index

    centroids = []
    found = ndimage.center_of_mass(counts, labels, range(1, len(nominal_positions) + 1))
    for position, (row, col) in zip(nominal_positions, found):
        if not np.isfinite(row) or not np.isfinite(col):
            # empty or dark window
            centroids.append((float(position[0]), float(position[1])))
            continue
        centroids.append(((col + 0.5) * fov.pitch_x, (row + 0.5) * fov.pitch_y))
    return centroids


def overlapping_rois(centroids: Sequence[Vec2], radius: float) -> set[int]:
    """Indices of ROIs that overlap at least one other ROI."""
    points = np.asarray(centroids, dtype=float).reshape(-1, 2)
    if len(points) < 2:
        return set()
    dist = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1)
    np.fill_diagonal(dist, np.inf)
    return {int(i) for i in np.nonzero(np.any(dist < 2.0 * radius, axis=1))[0]}


def sweep_odmr(
    renderer: FrameRenderer,
    frequencies: Sequence[float],
    probe_power: float,
    *,
    seed: int = 0,
    deterministic: bool = False,
    radius_factor: float = DEFAULT_ROI_RADIUS_FACTOR,
    centroids: Optional[Sequence[Vec2]] = None,
    threads: int = 1,
) -> OdmrScan:
    """Sweep a single probe tone over a grid and record every ROI's mean counts.

    The probe reaches all clusters at the same power. ROIs are disks of
    ``radius_factor * psf_sigma`` around the spot centroids, localised from
    a microwave-free frame unless given. Every grid point draws its noise
    from its own stream, so ``threads`` never changes the result.

    Raises:
        DetectionError: empty or non-increasing grid.
    """
    freqs = np.asarray(frequencies, dtype=float)
    if freqs.size == 0:
        raise DetectionError("ODMR sweep needs a non-empty frequency grid")

    clusters = renderer.clusters
    radius = radius_factor * renderer.psf_sigma
    if centroids is None:
        dark = renderer.render(
            [[] for _ in clusters],
            rng=stream_rng(seed, Stream.SCAN, len(freqs)),
            deterministic=deterministic,
        )
        centroids = locate_spots(dark, [c.position for c in clusters], renderer.fov, radius)
    masks = [disk_mask(renderer.fov, c, radius) for c in centroids]

    def roi_means(i: int) -> list[float]:
        probe = [Tone(frequency=float(freqs[i]), power=probe_power)]
        frame = renderer.render(
            [probe] * len(clusters),
            rng=stream_rng(seed, Stream.SCAN, i),
            deterministic=deterministic,
            cache=False,
        )
        return [float(frame.counts[mask].mean()) if mask.any() else 0.0 for mask in masks]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            columns = list(pool.map(roi_means, range(freqs.size)))
    else:
        columns = [roi_means(i) for i in range(freqs.size)]
    traces = np.array(columns, dtype=float).reshape(freqs.size, len(masks)).T

    logger.info("ODMR sweep: {} points over {} ROIs", freqs.size, len(masks))
    return OdmrScan(
        frequencies=freqs,
        traces=traces,
        roi_ids=tuple(c.id for c in clusters),
        centroids=tuple((float(x), float(y)) for x, y in centroids),
        roi_radius=radius,
        probe_power=probe_power,
    )


def scan_rows(scan: OdmrScan) -> list[tuple]:
    """Long-format rows (freq_mhz, roi_id, counts)."""
    return [
        (float(f), roi_id, float(scan.traces[k, i]))
        for k, roi_id in enumerate(scan.roi_ids)
        for i, f in enumerate(scan.frequencies)
    ]


SCAN_COLUMNS = ("freq_mhz", "roi_id", "counts")
FIT_COLUMNS = (
    "roi_id",
    "peak",
    "center_mhz",
    "fwhm_mhz",
    "contrast",
    "baseline",
    "residual_norm",
    "converged",
)


def fit_rows(fits: dict[int, LorentzianFit]) -> list[tuple]:
    rows = []
    for roi_id, fit in fits.items():
        for index, peak in enumerate(fit.peaks):
            rows.append(
                (
                    roi_id,
                    index,
                    peak.center,
                    peak.fwhm,
                    peak.contrast,
                    fit.baseline,
                    fit.residual_norm,
                    int(fit.converged),
                )
            )
    return rows
