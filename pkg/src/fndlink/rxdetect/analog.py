"""
Analog demodulation by calibration inversion.

A waveform sample s in [-1, 1] is mapped linearly onto a tone power (AM)
or a tone frequency on the right slope of the upper resonance (FM). The
joint mode moves along a line in the (power, frequency) plane where power
rises as frequency falls, traversed so that equal steps in s give equal
steps in the calibrated response. The receiver measures total frame
counts and inverts the tabulated response.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.interpolate import RegularGridInterpolator

from fndlink.errors import CalibrationError, PayloadError
from fndlink.logger import get_logger
from fndlink.physics import Tone, axial_field, zeeman_peaks
from fndlink.scene import FrameRenderer, Stream, stream_rng

from .models import AnalogKind, AnalogResult, CalibrationCurve, JointCalibration

logger = get_logger(__name__)

AnyCalibration = Union[CalibrationCurve, JointCalibration]

# dense samples of the joint line per path point
JOINT_PATH_OVERSAMPLE = 8


class AnalogSettings(BaseModel):
    """Modulation ranges of the analog link.

    The FM range is given in linewidths above the upper resonance of the
    first cluster.
    """

    model_config = ConfigDict(frozen=True)

    carrier_mhz: float = Field(2870.0, gt=0)
    am_power_range: tuple[float, float] = (-12.0, -2.0)
    fm_offset_range: tuple[float, float] = (0.15, 0.9)
    fm_power: float = -2.0
    grid_points: int = Field(201, ge=2)
    joint_grid_points: int = Field(101, ge=2)

    @model_validator(mode="after")
    def _ordered_ranges(self) -> "AnalogSettings":
        for name in ("am_power_range", "fm_offset_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must be increasing")
        return self


def fm_range(renderer: FrameRenderer, settings: AnalogSettings) -> tuple[float, float]:
    """Frequency range in MHz on the right slope of the first cluster's upper peak."""
    if not renderer.clusters:
        raise CalibrationError("analog link needs at least one cluster")
    cluster = renderer.clusters[0]
    model = cluster.spin_model
    _, f_plus = zeeman_peaks(model, axial_field(renderer.field_map, cluster))
    lo, hi = settings.fm_offset_range
    return f_plus + lo * model.linewidth_fwhm, f_plus + hi * model.linewidth_fwhm


def _unit(samples: np.ndarray) -> np.ndarray:
    return (samples + 1.0) / 2.0


def _measure(
    renderer: FrameRenderer,
    tone: Tone,
    rng: Optional[np.random.Generator],
    deterministic: bool,
) -> float:
    # every analog tone is new, so nothing is kept in the renderer cache
    frame = renderer.render(
        [[tone]] * len(renderer.clusters), rng=rng, deterministic=deterministic, cache=False
    )
    return frame.total()


def _tone(kind: AnalogKind, u: float, renderer: FrameRenderer, settings: AnalogSettings) -> Tone:
    if kind == "am":
        p_lo, p_hi = settings.am_power_range
        return Tone(frequency=settings.carrier_mhz, power=p_lo + u * (p_hi - p_lo))
    f_lo, f_hi = fm_range(renderer, settings)
    return Tone(frequency=f_lo + u * (f_hi - f_lo), power=settings.fm_power)


def _joint_path(
    interp: RegularGridInterpolator,
    powers: np.ndarray,
    freqs: np.ndarray,
    n_points: int,
) -> tuple[CalibrationCurve, np.ndarray, np.ndarray]:
    """Points on the joint line spaced for a constant response step.

    The line runs from (lowest power, highest frequency) to (highest power,
    lowest frequency). Its response is tabulated densely from the surface,
    then inverted so that sample s lands where the response has covered
    (s + 1) / 2 of its full swing.
    """
    t = np.linspace(0.0, 1.0, JOINT_PATH_OVERSAMPLE * n_points)
    line_p = powers[0] + t * (powers[-1] - powers[0])
    line_f = freqs[-1] - t * (freqs[-1] - freqs[0])
    dense = interp(np.column_stack([line_p, line_f]))
    if np.any(np.diff(dense) >= 0):
        raise CalibrationError("joint calibration response is not strictly decreasing along its path")

    s_grid = np.linspace(-1.0, 1.0, n_points)
    target = dense[0] + _unit(s_grid) * (dense[-1] - dense[0])
    t_s = np.interp(target, dense[::-1], t[::-1])
    path_p = powers[0] + t_s * (powers[-1] - powers[0])
    path_f = freqs[-1] - t_s * (freqs[-1] - freqs[0])
    response = interp(np.column_stack([path_p, path_f]))
    return CalibrationCurve(kind="joint", axis=s_grid, response=response), path_p, path_f


def calibrate_analog(
    kind: AnalogKind,
    renderer: FrameRenderer,
    settings: AnalogSettings = AnalogSettings(),
    *,
    deterministic: bool = True,
    seed: int = 0,
    shots: int = 1,
) -> AnyCalibration:
    """Tabulate the response over the modulation range.

    AM curves are indexed by power in dBm, FM curves by frequency in MHz.
    The joint calibration measures a power x frequency grid and derives the
    response along the modulation path by bilinear interpolation.

    Raises:
        CalibrationError: the measured curve is not strictly monotone.
    """
    if shots < 1:
        raise CalibrationError("calibration needs at least one shot per point")

    def measure(tone: Tone, index: int) -> float:
        if deterministic:
            return _measure(renderer, tone, None, True)
        values = [
            _measure(renderer, tone, stream_rng(seed, Stream.ANALOG, 0, index, shot), False)
            for shot in range(shots)
        ]
        return float(np.mean(values))

    if kind in ("am", "fm"):
        u = np.linspace(0.0, 1.0, settings.grid_points)
        tones = [_tone(kind, float(x), renderer, settings) for x in u]
        axis = [t.power if kind == "am" else t.frequency for t in tones]
        response = [measure(t, i) for i, t in enumerate(tones)]
        curve = CalibrationCurve(kind=kind, axis=np.array(axis), response=np.array(response))
        logger.debug("{} calibration over {} points", kind, len(axis))
        return curve

    if kind != "joint":
        raise CalibrationError(f"unknown analog modulation '{kind}'")

    n = settings.joint_grid_points
    powers = np.linspace(*settings.am_power_range, n)
    freqs = np.linspace(*fm_range(renderer, settings), n)
    surface = np.empty((n, n))
    for i, p in enumerate(powers):
        for j, f in enumerate(freqs):
            surface[i, j] = measure(Tone(frequency=float(f), power=float(p)), i * n + j)

    interp = RegularGridInterpolator((powers, freqs), surface, method="linear")
    path, path_p, path_f = _joint_path(interp, powers, freqs, settings.grid_points)
    return JointCalibration(
        powers=powers,
        frequencies=freqs,
        surface=surface,
        path=path,
        path_powers=path_p,
        path_frequencies=path_f,
    )


def demod_analog(
    samples: Sequence[float],
    calibration: AnyCalibration,
    renderer: FrameRenderer,
    settings: AnalogSettings = AnalogSettings(),
    *,
    deterministic: bool = False,
    seed: int = 0,
    threads: int = 1,
) -> AnalogResult:
    """Transmit each sample in its own slot and recover it from the counts.

    The modulation follows ``calibration.kind``; joint calibrations send the
    tone of their path and decode along it. Sample ``i`` draws its noise
    from its own stream, so ``threads`` never changes the result.

    Raises:
        PayloadError: a sample outside [-1, 1].
    """
    s = np.asarray(samples, dtype=float).ravel()
    if s.size and (not np.all(np.isfinite(s)) or np.max(np.abs(s)) > 1.0):
        raise PayloadError("analog samples must lie in [-1, 1]")

    kind = calibration.kind

    def slot_counts(i: int) -> float:
        if kind == "joint":
            power, frequency = calibration.tone_at(float(s[i]))
            tone = Tone(frequency=frequency, power=power)
        else:
            tone = _tone(kind, float(_unit(s[i])), renderer, settings)
        rng = None if deterministic else stream_rng(seed, Stream.ANALOG, 1, i)
        return _measure(renderer, tone, rng, deterministic)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            counts = np.array(list(pool.map(slot_counts, range(s.size))), dtype=float)
    else:
        counts = np.array([slot_counts(i) for i in range(s.size)], dtype=float)

    if kind == "joint":
        recovered = calibration.path.inverse(counts)
    else:
        axis = calibration.inverse(counts)
        lo, hi = calibration.axis[0], calibration.axis[-1]
        recovered = 2.0 * (axis - lo) / (hi - lo) - 1.0

    result = AnalogResult(expected=s, recovered=np.asarray(recovered, dtype=float))
    logger.info(
        "{} demodulation of {} samples: max residual {:.4%}", kind, s.size, result.max_abs_residual
    )
    return result
