"""
Standalone ODMR scan of the configured scene.
"""

from typing import Optional

from fndlink.config import ExperimentConfig
from fndlink.image_utils import write_csv
from fndlink.logger import get_logger
from fndlink.rxdetect import FIT_COLUMNS, SCAN_COLUMNS, fit_rows, fit_scan, scan_rows, sweep_odmr

from .pipeline import build_scene, scheme_symbol_map
from .reports import ArtifactWriter, RunReport, write_report

logger = get_logger(__name__)


def run_odmr_scan(config: ExperimentConfig, config_source: Optional[str] = None) -> RunReport:
    """Sweep the probe tone over ``config.scan`` and fit every ROI trace."""
    scene = build_scene(config, scheme_symbol_map(config))
    scan = sweep_odmr(
        scene.renderer,
        config.scan.grid(),
        config.scan.probe_power_dbm,
        seed=config.master_seed,
        deterministic=config.deterministic,
        radius_factor=config.scan.roi_radius_factor,
        threads=config.threads,
    )
    fits = fit_scan(scan, config.scan.n_peaks)

    writer = ArtifactWriter(config.output_dir)
    writer.record("scan", write_csv(writer.path("scan.csv"), SCAN_COLUMNS, scan_rows(scan)))
    writer.record("fits", write_csv(writer.path("fits.csv"), FIT_COLUMNS, fit_rows(fits)))

    resonances = {
        str(roi): [p.center for p in fit.peaks] for roi, fit in sorted(fits.items()) if fit.converged
    }
    report = RunReport(
        command="odmr-scan",
        scheme=config.scheme,
        master_seed=config.master_seed,
        config_echo=config.echo(),
        config_source=config_source,
        artifacts=writer.paths,
        extra={
            "clusters": len(scene.clusters),
            "rois": len(scan.roi_ids),
            "converged_fits": len(resonances),
            "resonances_mhz": resonances,
        },
    )
    write_report(report, config.output_dir)
    logger.info("ODMR scan: {} ROIs, {} converged fits", len(scan.roi_ids), len(resonances))
    return report
