"""
Reference-free demultiplexing: each user owns one FND resonance.

A user's bit 0 puts a tone on its cluster's resonance and dims that
cluster; bit 1 parks the tone away from every resonance. Decisions are
per-user thresholds on ROI counts, set from a short calibration preamble
of ``2 * U * repeats`` slots.
"""

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from fndlink.errors import CalibrationError, DetectionError
from fndlink.logger import get_logger
from fndlink.modem import Bitstream, SymbolMap
from fndlink.physics import Tone
from fndlink.scene import FieldOfView, FluorescenceFrame

from .models import UserAssignment
from .odmr_scan import disk_mask

logger = get_logger(__name__)

RESONANCE_TOLERANCE_MHZ = 5.0


@dataclass(frozen=True)
class CalibrationSlot:
    """One preamble slot: ``user``'s bit-0 tone on, or everyone parked."""

    user: int
    tone_on: bool
    tones: tuple[Tone, ...]


def calibration_schedule(symbol_map: SymbolMap, repeats: int = 1) -> list[CalibrationSlot]:
    """Preamble slots: for each repeat and user, an on slot then an off slot."""
    if repeats < 1:
        raise CalibrationError("calibration repeats must be at least 1")
    parked = tuple(symbol_map.tone(u, 1) for u in range(symbol_map.n_users))
    slots = []
    for _ in range(repeats):
        for user in range(symbol_map.n_users):
            on = list(parked)
            on[user] = symbol_map.tone(user, 0)
            slots.append(CalibrationSlot(user, True, tuple(on)))
            slots.append(CalibrationSlot(user, False, parked))
    return slots


def _roi_masks(assignment: UserAssignment, fov: FieldOfView) -> list[np.ndarray]:
    if assignment.roi_radius is None:
        raise DetectionError("assignment carries no ROI radius")
    masks = []
    for channel in assignment.channels:
        if channel.centroid is None:
            raise DetectionError(f"user {channel.user} has no ROI centroid")
        masks.append(disk_mask(fov, channel.centroid, assignment.roi_radius))
    return masks


def roi_counts(frame: FluorescenceFrame, masks: Sequence[np.ndarray]) -> np.ndarray:
    """Integrated counts in each ROI."""
    return np.array([frame.counts[mask].sum() for mask in masks])


def calibrate_thresholds(
    frames: Sequence[FluorescenceFrame],
    slots: Sequence[CalibrationSlot],
    assignment: UserAssignment,
    fov: FieldOfView,
) -> UserAssignment:
    """Set each user's threshold to the midpoint of its on/off mean ROI counts.

    Raises:
        CalibrationError: misaligned preamble or a user whose tone does not dim its ROI.
    """
    if len(frames) != len(slots):
        raise CalibrationError(f"{len(frames)} calibration frames for {len(slots)} slots")
    masks = _roi_masks(assignment, fov)
    on: list[list[float]] = [[] for _ in masks]
    off: list[list[float]] = [[] for _ in masks]
    for frame, slot in zip(frames, slots):
        if slot.user >= len(masks):
            raise CalibrationError(f"calibration slot for unassigned user {slot.user}")
        value = float(frame.counts[masks[slot.user]].sum())
        (on if slot.tone_on else off)[slot.user].append(value)

    thresholds = []
    for user, (lit, dark) in enumerate(zip(on, off)):
        if not lit or not dark:
            raise CalibrationError(f"user {user} lacks on or off calibration slots")
        on_mean, off_mean = float(np.mean(lit)), float(np.mean(dark))
        if on_mean >= off_mean:
            raise CalibrationError(
                f"user {user}: resonant tone does not dim its ROI ({on_mean:.1f} >= {off_mean:.1f})"
            )
        thresholds.append(0.5 * (on_mean + off_mean))
        logger.debug("User {} threshold {:.1f} (on {:.1f}, off {:.1f})", user, thresholds[-1], on_mean, off_mean)
    return assignment.with_thresholds(thresholds)


def reffree_detect(
    frames: Iterable[FluorescenceFrame],
    assignment: UserAssignment,
    symbol_map: SymbolMap,
    fov: FieldOfView,
    payload_bits: Optional[Sequence[int]] = None,
) -> list[Bitstream]:
    """Threshold each user's ROI counts slot by slot.

    Bit 0 when the counts fall below the user's threshold, else bit 1.
    ``payload_bits`` truncates each stream to drop schedule padding.

    Raises:
        DetectionError: missing thresholds, or a resonance that does not match
            the user's bit-0 frequency.
    """
    if assignment.n_assigned != symbol_map.n_users:
        raise DetectionError(
            f"{assignment.n_assigned} assigned users for a {symbol_map.n_users}-user map"
        )
    for channel in assignment.channels:
        if channel.threshold is None:
            raise DetectionError(f"user {channel.user} has no calibrated threshold")
        f0 = symbol_map.tone(channel.user, 0).frequency
        if abs(f0 - channel.resonance_mhz) > RESONANCE_TOLERANCE_MHZ:
            raise DetectionError(
                f"user {channel.user} resonance {channel.resonance_mhz:.1f} MHz "
                f"does not match bit-0 tone {f0:.1f} MHz"
            )

    masks = _roi_masks(assignment, fov)
    thresholds = np.array([c.threshold for c in assignment.channels])
    decisions = [roi_counts(frame, masks) >= thresholds for frame in frames]
    bits = np.array(decisions, dtype=np.uint8).reshape(len(decisions), len(masks))

    streams = []
    for user in range(len(masks)):
        column = bits[:, user]
        if payload_bits is not None:
            column = column[: payload_bits[user]]
        streams.append(Bitstream(column))
    return streams
