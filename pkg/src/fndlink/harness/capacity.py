"""
Capacity study: how many users a random FND field can serve reference-free.

For every seed the field of view is scanned, each ROI trace is fitted and
users are greedily bound to spectrally separated clusters. With
``capacity.link_bits`` set, the assigned users then run a reference-free
link on a map retuned to their resonances.
"""

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from fndlink.config import ExperimentConfig
from fndlink.errors import ConfigError
from fndlink.image_utils import write_csv
from fndlink.logger import get_logger
from fndlink.modem import build_schedule, random_bitstream, retune_reffree_map
from fndlink.rxdetect import (
    FIT_COLUMNS,
    SCAN_COLUMNS,
    UserAssignment,
    assign_users,
    calibrate_thresholds,
    calibration_schedule,
    fit_rows,
    fit_scan,
    reffree_detect,
    scan_rows,
    sweep_odmr,
)
from fndlink.scene import FrameRenderer, Stream, generate_clusters, stream_rng

from .channel import ChannelModel
from .pipeline import resolve_field_map
from .reports import ArtifactWriter, RunReport, ber_summary, write_report

logger = get_logger(__name__)

CAPACITY_COLUMNS = ("seed", "clusters", "assigned", "utilization", "resonances_mhz", "link_ber")


def reffree_link_ber(
    config: ExperimentConfig, renderer: FrameRenderer, assignment: UserAssignment, seed: int
) -> Optional[float]:
    """Pooled BER of a reference-free link over every assigned user.

    Each user's bit 0 sits on its assigned resonance and bit 1 on the
    common parking tone. Every cluster receives every tone at full power.
    """
    if assignment.n_assigned == 0 or config.capacity.link_bits == 0:
        return None
    symbol_map = retune_reffree_map(assignment, config.reffree.park_mhz)
    channel = ChannelModel.flat(symbol_map.n_users, len(renderer.clusters))

    def frame(tones, stream: Stream, index: int):
        rng = None if config.deterministic else stream_rng(seed, stream, index)
        return renderer.render(
            channel.cluster_tones(tones), rng=rng, deterministic=config.deterministic, cache=False
        )

    preamble = calibration_schedule(symbol_map, config.reffree.calibration_repeats)
    calibration = [frame(slot.tones, Stream.CALIBRATION, i) for i, slot in enumerate(preamble)]
    assignment = calibrate_thresholds(calibration, preamble, assignment, config.fov)

    tx = [
        random_bitstream(stream_rng(seed, Stream.PAYLOAD, u), config.capacity.link_bits)
        for u in range(symbol_map.n_users)
    ]
    layout = build_schedule(tx, symbol_map, 1, with_reference=False)
    data = (
        frame(symbol_map.tones_for(t), Stream.DATA, i) for i, t in enumerate(layout.data_slots())
    )
    rx = reffree_detect(data, assignment, symbol_map, config.fov, payload_bits=layout.payload_bits)
    return ber_summary(tx, rx)["aggregate_ber"]


def _capacity_for_seed(config: ExperimentConfig, seed: int):
    field_map = resolve_field_map(config, "capacity")
    c = config.cluster
    clusters = generate_clusters(
        seed,
        config.cluster_count,
        config.fov,
        config.spin,
        brightness_mean=c.brightness_mean,
        brightness_log_sigma=c.brightness_log_sigma,
        jitter=c.jitter,
        axis_mode=c.axis_mode,
        mixture_weights=c.mixture_weights,
    )
    if not clusters:
        return None, None, None, None
    renderer = FrameRenderer(clusters, field_map, config.fov, config.noise, c.psf_sigma)
    scan = sweep_odmr(
        renderer,
        config.scan.grid(),
        config.scan.probe_power_dbm,
        seed=seed,
        deterministic=config.deterministic,
        radius_factor=config.scan.roi_radius_factor,
    )
    fits = fit_scan(scan, config.scan.n_peaks)
    requested = config.capacity.max_users if config.capacity.max_users is not None else len(clusters)
    assignment = assign_users(
        fits,
        requested,
        config.capacity.min_separation_mhz,
        centroids=dict(zip(scan.roi_ids, scan.centroids)),
        roi_radius=scan.roi_radius,
    )
    return assignment, scan, fits, reffree_link_ber(config, renderer, assignment, seed)


def run_capacity(config: ExperimentConfig, config_source: Optional[str] = None) -> RunReport:
    """Utilisation over ``config.capacity.seeds`` random fields.

    Raises:
        ConfigError: the field map has no gradient.
    """
    if not resolve_field_map(config, "capacity").has_gradient:
        raise ConfigError("capacity study needs a field map with a nonzero gradient", field="field_map")

    seeds = [config.master_seed + s for s in range(config.capacity.seeds)]
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            outcomes = list(pool.map(lambda s: _capacity_for_seed(config, s), seeds))
    else:
        outcomes = [_capacity_for_seed(config, s) for s in seeds]

    writer = ArtifactWriter(config.output_dir)
    rows, assigned, utilizations, link_bers = [], [], [], []
    for seed, (assignment, _, _, link_ber) in zip(seeds, outcomes):
        link_bers.append(link_ber)
        if assignment is None:
            rows.append((seed, 0, 0, "", "", ""))
            continue
        assigned.append(assignment.n_assigned)
        utilizations.append(assignment.utilization)
        resonances = " ".join(f"{f:.2f}" for f in sorted(assignment.resonances))
        rows.append(
            (
                seed,
                assignment.total_clusters,
                assignment.n_assigned,
                assignment.utilization,
                resonances,
                "" if link_ber is None else link_ber,
            )
        )
    writer.record("capacity", write_csv(writer.path("capacity.csv"), CAPACITY_COLUMNS, rows))

    _, first_scan, first_fits, _ = outcomes[0]
    if first_scan is not None:
        writer.record("scan", write_csv(writer.path("scan.csv"), SCAN_COLUMNS, scan_rows(first_scan)))
        writer.record("fits", write_csv(writer.path("fits.csv"), FIT_COLUMNS, fit_rows(first_fits)))

    histogram = {str(k): v for k, v in sorted(Counter(assigned).items())}
    extra = {
        "cluster_count": config.cluster_count,
        "min_separation_mhz": config.capacity.min_separation_mhz,
        "assigned_per_seed": assigned,
        "utilization_histogram": histogram,
        "mean_assigned": float(np.mean(assigned)) if assigned else None,
        "mean_utilization": float(np.mean(utilizations)) if utilizations else None,
        "link_bits": config.capacity.link_bits,
        "link_ber_per_seed": link_bers,
    }
    report = RunReport(
        command="capacity",
        scheme=None,
        master_seed=config.master_seed,
        config_echo=config.echo(),
        config_source=config_source,
        artifacts=writer.paths,
        extra=extra,
    )
    write_report(report, config.output_dir)
    logger.info("Capacity: mean {} users over {} seeds", extra["mean_assigned"], len(seeds))
    return report
