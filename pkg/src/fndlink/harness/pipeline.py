"""
End-to-end link simulation: payload -> schedule -> channel -> frames ->
detection -> payload.

Two receivers are supported. Reference-bank schemes transmit the full
S^U reference preamble and detect by minimum distance; ``fsk-reffree``
scans the field of view, binds each user to a resonant cluster and
thresholds ROI counts after a short calibration preamble.
"""

import time
from dataclasses import dataclass, field
from itertools import repeat
from typing import Iterable, Iterator, Optional

import numpy as np

from fndlink.config import ExperimentConfig
from fndlink.errors import AssignmentError
from fndlink.image_utils import read_pgm, write_csv, write_frame_pgm16, write_pgm
from fndlink.logger import get_logger
from fndlink.modem import (
    Bitstream,
    FrameLayout,
    SymbolMap,
    SymbolTuple,
    build_schedule,
    concat_bits,
    decode_image,
    encode_image,
    preset_symbol_maps,
    random_bitstream,
    reffree_map,
    scheme_field_map,
)
from fndlink.physics import FndCluster, MagneticFieldMap
from fndlink.rxdetect import (
    FIT_COLUMNS,
    SCAN_COLUMNS,
    LorentzianFit,
    OdmrScan,
    ReferenceBank,
    UserAssignment,
    assign_users,
    build_reference_bank,
    calibrate_thresholds,
    calibration_schedule,
    detect_stream,
    fit_rows,
    fit_scan,
    reffree_detect,
    scan_rows,
    sweep_odmr,
)
from fndlink.scene import (
    FluorescenceFrame,
    FrameRenderer,
    Stream,
    average_frames,
    generate_clusters,
    place_resonant_clusters,
    sample_counts,
    stream_rng,
)

from .channel import ChannelModel, draw_channel
from .reports import ArtifactWriter, RunReport, SlotCounts, SlotTiming, ber_summary, write_report

logger = get_logger(__name__)

REFFREE_SCHEME = "fsk-reffree"


@dataclass(frozen=True)
class Payload:
    """Per-user transmit bits and the image shapes they encode, if any."""

    bits: list[Bitstream]
    shapes: list[list[tuple[int, int]]] = field(default_factory=list)


@dataclass
class Scene:
    clusters: list[FndCluster]
    field_map: MagneticFieldMap
    renderer: FrameRenderer


@dataclass
class LinkResult:
    tx: list[Bitstream]
    rx: list[Bitstream]
    slots: SlotCounts
    layout: FrameLayout
    bank: Optional[ReferenceBank] = None
    scan: Optional[OdmrScan] = None
    fits: Optional[dict[int, LorentzianFit]] = None
    assignment: Optional[UserAssignment] = None


def load_payloads(config: ExperimentConfig, seed: Optional[int] = None) -> Payload:
    """Read the configured message images, or draw random payload bits."""
    seed = config.master_seed if seed is None else seed
    if not config.payload.images:
        return Payload(
            bits=[
                random_bitstream(stream_rng(seed, Stream.PAYLOAD, u), config.payload.random_bits)
                for u in range(config.n_users)
            ]
        )
    bits, shapes = [], []
    for paths in config.payload.images:
        images = [read_pgm(p) for p in paths]
        bits.append(concat_bits([encode_image(img) for img in images]))
        shapes.append([(img.height, img.width) for img in images])
    return Payload(bits=bits, shapes=shapes)


def scheme_symbol_map(config: ExperimentConfig) -> SymbolMap:
    """Symbol map of the configured scheme; reference-free maps use the configured parking tone."""
    symbol_map = preset_symbol_maps(config.scheme, config.n_users)
    if config.scheme == REFFREE_SCHEME:
        resonances = [symbol_map.tone(u, 0).frequency for u in range(config.n_users)]
        return reffree_map(resonances, config.reffree.park_mhz)
    return symbol_map


def resolve_field_map(config: ExperimentConfig, scheme: Optional[str] = None) -> MagneticFieldMap:
    if config.field_map is not None:
        return config.field_map
    return scheme_field_map(scheme or config.scheme, config.spin)


def reffree_positions(config: ExperimentConfig, n_users: int) -> list[tuple[float, float]]:
    """Resonant clusters on a horizontal line through the FOV centre."""
    cx, cy = config.fov.width / 2.0, config.fov.height / 2.0
    spacing = config.reffree.spacing_um
    return [(cx + (u - (n_users - 1) / 2.0) * spacing, cy) for u in range(n_users)]


def build_scene(
    config: ExperimentConfig,
    symbol_map: Optional[SymbolMap] = None,
    seed: Optional[int] = None,
) -> Scene:
    """Clusters, field and renderer for a run.

    The reference-free scheme places one resonant cluster per user; every
    other scheme scatters ``cluster_count`` random clusters.
    """
    seed = config.master_seed if seed is None else seed
    field_map = resolve_field_map(config)
    if config.scheme == REFFREE_SCHEME and symbol_map is not None:
        targets = [symbol_map.tone(u, 0).frequency for u in range(symbol_map.n_users)]
        clusters = place_resonant_clusters(
            targets,
            reffree_positions(config, symbol_map.n_users),
            field_map,
            config.spin,
            seed=seed,
            brightness=config.reffree.brightness,
        )
    else:
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
    renderer = FrameRenderer(clusters, field_map, config.fov, config.noise, config.cluster.psf_sigma)
    logger.info("Scene: {} clusters, signal {:.3g} counts/frame", len(clusters), renderer.signal_counts_per_frame())
    return Scene(clusters=clusters, field_map=field_map, renderer=renderer)


def _expected_by_tuple(
    renderer: FrameRenderer, channel: ChannelModel, symbol_map: SymbolMap
) -> dict[SymbolTuple, np.ndarray]:
    return {
        t: renderer.expected(channel.cluster_tones(symbol_map.tones_for(t)))
        for t in symbol_map.tuple_space()
    }


def _frames(
    expectations: Iterable[np.ndarray],
    config: ExperimentConfig,
    seed: int,
    stream: Stream,
    offset: int = 0,
) -> Iterator[FluorescenceFrame]:
    """Slot frames; slot ``offset + i`` draws its noise from its own stream."""
    for i, expected in enumerate(expectations, start=offset):
        if config.deterministic:
            yield FluorescenceFrame(expected)
        else:
            yield FluorescenceFrame(sample_counts(expected, config.noise, stream_rng(seed, stream, i)))


def _reference_link(
    config: ExperimentConfig,
    payload: Payload,
    symbol_map: SymbolMap,
    scene: Scene,
    channel: ChannelModel,
    seed: int,
) -> LinkResult:
    layout = build_schedule(payload.bits, symbol_map, config.n_ref)
    expected = _expected_by_tuple(scene.renderer, channel, symbol_map)

    # average each tuple's block as it is rendered to bound memory
    averaged: dict[SymbolTuple, list[FluorescenceFrame]] = {}
    for j, t in enumerate(layout.reference_tuples):
        block = _frames(
            repeat(expected[t], config.n_ref), config, seed, Stream.REFERENCE, offset=j * config.n_ref
        )
        averaged[t] = [average_frames(list(block))]
    bank = build_reference_bank(averaged, expected_tuples=symbol_map.tuple_space())

    data = _frames((expected[t] for t in layout.data_slots()), config, seed, Stream.DATA)
    rx = detect_stream(data, bank, layout, threads=config.threads)
    slots = SlotCounts(reference=layout.reference_slot_count, data=layout.data_slot_count)
    return LinkResult(tx=payload.bits, rx=rx, slots=slots, layout=layout, bank=bank)


def _reffree_link(
    config: ExperimentConfig,
    payload: Payload,
    symbol_map: SymbolMap,
    scene: Scene,
    channel: ChannelModel,
    seed: int,
) -> LinkResult:
    renderer = scene.renderer
    scan = sweep_odmr(
        renderer,
        config.scan.grid(),
        config.scan.probe_power_dbm,
        seed=seed,
        deterministic=config.deterministic,
        radius_factor=config.scan.roi_radius_factor,
        threads=config.threads,
    )
    fits = fit_scan(scan, config.scan.n_peaks)
    targets = [symbol_map.tone(u, 0).frequency for u in range(symbol_map.n_users)]
    assignment = assign_users(
        fits,
        symbol_map.n_users,
        config.reffree.min_separation_mhz,
        centroids=dict(zip(scan.roi_ids, scan.centroids)),
        roi_radius=scan.roi_radius,
        targets=targets,
    )
    if assignment.partial:
        raise AssignmentError(
            f"only {assignment.n_assigned} of {symbol_map.n_users} users found a resonant cluster"
        )

    preamble = calibration_schedule(symbol_map, config.reffree.calibration_repeats)
    cal_frames = list(
        _frames(
            (renderer.expected(channel.cluster_tones(slot.tones)) for slot in preamble),
            config,
            seed,
            Stream.CALIBRATION,
        )
    )
    assignment = calibrate_thresholds(cal_frames, preamble, assignment, config.fov)

    layout = build_schedule(payload.bits, symbol_map, 1, with_reference=False)
    expected = _expected_by_tuple(renderer, channel, symbol_map)
    data = _frames((expected[t] for t in layout.data_slots()), config, seed, Stream.DATA)
    rx = reffree_detect(data, assignment, symbol_map, config.fov, payload_bits=layout.payload_bits)
    slots = SlotCounts(calibration=len(preamble), data=layout.data_slot_count)
    return LinkResult(
        tx=payload.bits,
        rx=rx,
        slots=slots,
        layout=layout,
        scan=scan,
        fits=fits,
        assignment=assignment,
    )


def simulate_link(
    config: ExperimentConfig, payload: Payload, seed: Optional[int] = None
) -> LinkResult:
    """Run one link without writing any files."""
    seed = config.master_seed if seed is None else seed
    symbol_map = scheme_symbol_map(config)
    scene = build_scene(config, symbol_map, seed)
    channel = draw_channel(
        seed,
        config.n_users,
        len(scene.clusters),
        config.channel.gain_sd_db,
        config.channel.user_offsets_db,
    )
    if config.scheme == REFFREE_SCHEME:
        return _reffree_link(config, payload, symbol_map, scene, channel, seed)
    return _reference_link(config, payload, symbol_map, scene, channel, seed)


def _write_recovered_images(writer: ArtifactWriter, payload: Payload, rx: list[Bitstream]) -> None:
    for user, (shapes, bits) in enumerate(zip(payload.shapes, rx)):
        start = 0
        for index, (height, width) in enumerate(shapes):
            n = height * width * 8
            image = decode_image(Bitstream(bits.bits[start : start + n]), width, height)
            start += n
            path = write_pgm(image, writer.path(f"recovered/user{user}_{index}.pgm"))
            writer.record(f"recovered_user{user}_{index}", path)


def run_simulate(config: ExperimentConfig, config_source: Optional[str] = None) -> RunReport:
    """Full simulation with artefacts and a JSON report in ``config.output_dir``."""
    started = time.perf_counter()
    payload = load_payloads(config)
    result = simulate_link(config, payload)
    writer = ArtifactWriter(config.output_dir)

    _write_recovered_images(writer, payload, result.rx)
    writer.write_bit_dumps(result.tx, result.rx)
    if result.bank is not None:
        for key, frame in result.bank.frames.items():
            name = "-".join(str(s) for s in key)
            writer.record(f"reference_{name}", write_frame_pgm16(frame, writer.path(f"reference/ref_{name}.pgm")))
    extra = {}
    if result.scan is not None:
        writer.record("scan", write_csv(writer.path("scan.csv"), SCAN_COLUMNS, scan_rows(result.scan)))
        writer.record("fits", write_csv(writer.path("fits.csv"), FIT_COLUMNS, fit_rows(result.fits)))
    if result.assignment is not None:
        extra["assignment"] = result.assignment.model_dump(mode="json")

    report = RunReport(
        command="simulate",
        scheme=config.scheme,
        master_seed=config.master_seed,
        slots=result.slots,
        timing=SlotTiming.for_slots(config.noise, result.slots),
        config_echo=config.echo(),
        config_source=config_source,
        artifacts=writer.paths,
        extra=extra,
        **ber_summary(result.tx, result.rx),
    )
    write_report(report, config.output_dir)
    logger.info(
        "simulate {}: BER {} over {} bits ({:.1f} s)",
        config.scheme,
        report.aggregate_ber,
        report.total_bits,
        time.perf_counter() - started,
    )
    return report
