"""
Experiment drivers: link simulation, BER sweeps, ODMR scans, capacity
studies and the analog audio link.
"""

from .audio import analog_renderer, run_demod_audio
from .capacity import reffree_link_ber, run_capacity
from .channel import ChannelModel, draw_channel
from .pipeline import (
    LinkResult,
    Payload,
    Scene,
    build_scene,
    load_payloads,
    resolve_field_map,
    run_simulate,
    scheme_symbol_map,
    simulate_link,
)
from .reports import REPORT_NAME, ArtifactWriter, RunReport, SlotCounts, SlotTiming, ber_summary, write_report
from .scan import run_odmr_scan
from .sweep import point_config, run_ber_sweep

__all__ = [
    "REPORT_NAME",
    "ArtifactWriter",
    "ChannelModel",
    "LinkResult",
    "Payload",
    "RunReport",
    "Scene",
    "SlotCounts",
    "SlotTiming",
    "analog_renderer",
    "ber_summary",
    "build_scene",
    "draw_channel",
    "load_payloads",
    "point_config",
    "reffree_link_ber",
    "resolve_field_map",
    "run_ber_sweep",
    "run_capacity",
    "run_demod_audio",
    "run_odmr_scan",
    "run_simulate",
    "scheme_symbol_map",
    "simulate_link",
    "write_report",
]
