"""
ODMR response of FND clusters to superposed microwave tones.

Every function here is pure. Scalar inputs give floats; frequency arguments
may also be numpy arrays, which is how spectra are evaluated over a grid.
"""

import math
from typing import Iterable, Sequence

import numpy as np

from .models import FndCluster, MagneticFieldMap, NvSpinModel, Tone


def axial_field(
    field_map: MagneticFieldMap, cluster: FndCluster, axis: np.ndarray | None = None
) -> float:
    """Absolute projection of the local field on an NV axis, in gauss.

    Transverse components are ignored. ``axis`` defaults to the cluster's
    dominant axis.
    """
    n = np.asarray(cluster.nv_axis if axis is None else axis, dtype=float)
    return float(abs(field_map.field_at(cluster.position) @ n))


def zeeman_peaks(model: NvSpinModel, b_axial: float) -> tuple[float, float]:
    """Lower and upper resonance (D - gamma*B, D + gamma*B) in MHz."""
    if b_axial < 0:
        raise ValueError(f"axial field must be non-negative, got {b_axial}")
    shift = model.gyromagnetic_ratio * b_axial
    return model.zfs_freq - shift, model.zfs_freq + shift


def axial_field_for_peak(model: NvSpinModel, f_peak: float) -> float:
    """Axial field that puts one Zeeman branch at ``f_peak``."""
    return abs(f_peak - model.zfs_freq) / model.gyromagnetic_ratio


def lorentzian_dip(f, f0, fwhm):
    """Unit-height Lorentzian of full width ``fwhm`` centred on ``f0``."""
    if np.any(np.asarray(fwhm) <= 0):
        raise ValueError("fwhm must be positive")
    half = 0.5 * np.asarray(fwhm, dtype=float)
    delta = np.asarray(f, dtype=float) - f0
    out = half**2 / (delta**2 + half**2)
    return float(out) if np.ndim(out) == 0 else out


def dbm_to_mw(power_dbm):
    return np.power(10.0, np.asarray(power_dbm, dtype=float) / 10.0)


def contrast_at_power(power: float, model: NvSpinModel):
    """Saturating contrast law C_max * s / (1 + s) with s = p / P_sat."""
    s = dbm_to_mw(power) / model.saturation_power
    out = model.contrast_cap * s / (1.0 + s)
    return float(out) if np.ndim(out) == 0 else out


def cluster_dip(
    cluster: FndCluster,
    tones: Sequence[Tone],
    field_map: MagneticFieldMap,
) -> float:
    """Total fractional fluorescence drop of a cluster, clamped at C_max."""
    model = cluster.spin_model
    total = 0.0
    for axis, weight in cluster.axes():
        if weight == 0.0:
            continue
        f_minus, f_plus = zeeman_peaks(model, axial_field(field_map, cluster, axis))
        branch = 0.0
        for tone in tones:
            c = contrast_at_power(tone.power, model)
            branch += c * (
                lorentzian_dip(tone.frequency, f_minus, model.linewidth_fwhm)
                + lorentzian_dip(tone.frequency, f_plus, model.linewidth_fwhm)
            )
        total += weight * branch
    return min(total, model.contrast_cap)


def cluster_fluorescence(
    cluster: FndCluster,
    tones: Sequence[Tone],
    field_map: MagneticFieldMap,
    laser_scale: float = 1.0,
) -> float:
    """Expected photon rate of a cluster in counts/ms."""
    if laser_scale < 0:
        raise ValueError("laser_scale must be non-negative")
    return cluster.brightness * laser_scale * (1.0 - cluster_dip(cluster, tones, field_map))


def axis_for_axial_field(
    field_vector: Iterable[float], b_axial: float, azimuth: float = 0.0
) -> tuple[float, float, float]:
    """Unit axis whose projection of ``field_vector`` equals ``b_axial``.

    The axis is tilted away from the field direction by acos(b/|B|) and
    rotated by ``azimuth`` (radians) around it.
    """
    b = np.asarray(list(field_vector), dtype=float)
    magnitude = float(np.linalg.norm(b))
    if magnitude == 0.0 or b_axial > magnitude + 1e-12:
        raise ValueError(
            f"cannot project {magnitude:.4f} G onto an axis as {b_axial:.4f} G"
        )
    b_hat = b / magnitude
    ref = np.array([1.0, 0.0, 0.0]) if abs(b_hat[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(b_hat, ref)
    u /= np.linalg.norm(u)
    v = np.cross(b_hat, u)
    cos_t = min(b_axial / magnitude, 1.0)
    sin_t = math.sqrt(max(0.0, 1.0 - cos_t * cos_t))
    axis = cos_t * b_hat + sin_t * (math.cos(azimuth) * u + math.sin(azimuth) * v)
    axis /= np.linalg.norm(axis)
    return tuple(float(c) for c in axis)
