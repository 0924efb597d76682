"""
Analog audio link: a waveform is demodulated through one bulk FND.
"""

from pathlib import Path
from typing import Optional, Union

import numpy as np

from fndlink.config import ExperimentConfig
from fndlink.errors import ConfigError
from fndlink.image_utils import read_wav, write_csv
from fndlink.logger import get_logger
from fndlink.physics import FndCluster, MagneticFieldMap
from fndlink.rxdetect import AnalogResult, calibrate_analog, demod_analog
from fndlink.scene import FieldOfView, FrameRenderer

from .reports import ArtifactWriter, RunReport, write_report

logger = get_logger(__name__)

RESIDUAL_COLUMNS = ("sample", "mode", "expected", "recovered", "residual")
HISTOGRAM_COLUMNS = ("mode", "bin_low", "bin_high", "count")


def analog_renderer(config: ExperimentConfig) -> FrameRenderer:
    """A single cluster in a small FOV whose slot budget is ``analog.photon_budget`` counts."""
    a = config.analog
    noise = config.noise
    if noise.laser_scale <= 0:
        raise ConfigError("the analog link needs a positive laser_scale", field="noise.laser_scale")
    fov = FieldOfView(width=a.fov_um, height=a.fov_um, pixels_x=a.pixels, pixels_y=a.pixels)
    cluster = FndCluster(
        id=0,
        position=(a.fov_um / 2.0, a.fov_um / 2.0),
        nv_axis=(0.0, 0.0, 1.0),
        brightness=a.photon_budget / (noise.exposure * noise.laser_scale),
        spin_model=config.spin,
    )
    field_map = config.field_map or MagneticFieldMap.zero()
    return FrameRenderer([cluster], field_map, fov, noise, config.cluster.psf_sigma)


def residual_histogram(result: AnalogResult, bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Counts and edges of the residual distribution; counts sum to the sample count."""
    residuals = result.residuals
    if residuals.size == 0:
        return np.zeros(bins, dtype=int), np.linspace(-1.0, 1.0, bins + 1)
    span = max(float(np.max(np.abs(residuals))), 1e-12)
    return np.histogram(residuals, bins=bins, range=(-span, span))


def run_demod_audio(
    config: ExperimentConfig,
    waveform: Union[str, Path],
    config_source: Optional[str] = None,
) -> RunReport:
    """Demodulate a mono waveform with every configured analog mode."""
    rate, samples = read_wav(waveform)
    if config.analog.max_samples is not None:
        samples = samples[: config.analog.max_samples]
    renderer = analog_renderer(config)

    writer = ArtifactWriter(config.output_dir)
    residual_rows, histogram_rows, summary = [], [], {}
    for mode in config.analog.modes:
        calibration = calibrate_analog(mode, renderer, config.analog, deterministic=True)
        result = demod_analog(
            samples,
            calibration,
            renderer,
            config.analog,
            deterministic=config.deterministic,
            seed=config.master_seed,
            threads=config.threads,
        )
        for i, (e, r) in enumerate(zip(result.expected, result.recovered)):
            residual_rows.append((i, mode, float(e), float(r), float(r - e)))
        counts, edges = residual_histogram(result, config.analog.histogram_bins)
        for lo, hi, n in zip(edges[:-1], edges[1:], counts):
            histogram_rows.append((mode, float(lo), float(hi), int(n)))
        summary[mode] = {
            "max_abs_residual": result.max_abs_residual,
            "rms_residual": result.rms_residual,
        }

    writer.record("residuals", write_csv(writer.path("residuals.csv"), RESIDUAL_COLUMNS, residual_rows))
    writer.record(
        "residual_histogram",
        write_csv(writer.path("residual_histogram.csv"), HISTOGRAM_COLUMNS, histogram_rows),
    )
    report = RunReport(
        command="demod-audio",
        scheme=None,
        master_seed=config.master_seed,
        config_echo=config.echo(),
        config_source=config_source,
        artifacts=writer.paths,
        extra={
            "waveform": Path(waveform).name,
            "sample_rate": rate,
            "samples": int(samples.size),
            "photon_budget": config.analog.photon_budget,
            "modes": summary,
        },
    )
    write_report(report, config.output_dir)
    return report
