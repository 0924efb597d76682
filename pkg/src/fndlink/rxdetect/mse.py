"""
Minimum-distance detection against a bank of averaged reference frames.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from fndlink.errors import DetectionError, DimensionMismatchError
from fndlink.logger import get_logger
from fndlink.modem import Bitstream, FrameLayout, SymbolTuple, unpack_symbols
from fndlink.scene import FluorescenceFrame, average_frames

from .models import ReferenceBank

logger = get_logger(__name__)

DETECT_CHUNK = 256


def build_reference_bank(
    frames_by_tuple: Mapping[SymbolTuple, Sequence[FluorescenceFrame]],
    expected_tuples: Optional[Sequence[SymbolTuple]] = None,
) -> ReferenceBank:
    """Average the reference frames of every symbol tuple.

    Raises:
        DetectionError: a tuple has no frames, or an expected tuple is missing.
        DimensionMismatchError: frames of different shapes.
    """
    if expected_tuples is not None:
        missing = [t for t in expected_tuples if tuple(t) not in frames_by_tuple]
        if missing:
            raise DetectionError(f"reference frames missing for tuples {missing}")
    averaged = {}
    for key, frames in frames_by_tuple.items():
        if not frames:
            raise DetectionError(f"no reference frames for tuple {tuple(key)}")
        averaged[tuple(key)] = average_frames(frames)
    bank = ReferenceBank(averaged)
    logger.debug("Reference bank built with {} entries", len(bank))
    return bank


def mse_distances(frame: FluorescenceFrame, bank: ReferenceBank) -> np.ndarray:
    """Squared Frobenius distance from the frame to every reference, in key order."""
    if frame.shape != bank.shape:
        raise DimensionMismatchError(f"frame shape {frame.shape} != bank shape {bank.shape}")
    return np.array([np.sum((frame.counts - ref) ** 2) for ref in bank.stack])


def mse_detect(frame: FluorescenceFrame, bank: ReferenceBank) -> SymbolTuple:
    """Tuple whose reference is closest; ties go to the smallest tuple."""
    if len(bank) == 0:
        raise DetectionError("reference bank is empty")
    # argmin returns the first minimum and keys are sorted
    return bank.keys[int(np.argmin(mse_distances(frame, bank)))]


def _detect_chunk(frames: list[FluorescenceFrame], bank: ReferenceBank) -> list[SymbolTuple]:
    return [mse_detect(frame, bank) for frame in frames]


def _chunks(frames: Iterable[FluorescenceFrame], size: int):
    chunk = []
    for frame in frames:
        chunk.append(frame)
        if len(chunk) == size:
            yield chunk
            chunk = []
    if chunk:
        yield chunk


def detect_symbols(
    frames: Iterable[FluorescenceFrame], bank: ReferenceBank, threads: int = 1
) -> np.ndarray:
    """Detected tuples of every frame, shape (T, U), in input order."""
    if threads > 1:
        tuples = []
        with ThreadPoolExecutor(max_workers=threads) as pool:
            # bounded batches keep only threads * DETECT_CHUNK frames alive
            for batch in _chunks(frames, DETECT_CHUNK * threads):
                parts = [batch[i : i + DETECT_CHUNK] for i in range(0, len(batch), DETECT_CHUNK)]
                for chunk in pool.map(lambda c: _detect_chunk(c, bank), parts):
                    tuples.extend(chunk)
    else:
        tuples = [mse_detect(frame, bank) for frame in frames]
    width = len(bank.keys[0])
    return np.array(tuples, dtype=np.int64).reshape(len(tuples), width)


def detect_stream(
    frames: Iterable[FluorescenceFrame],
    bank: ReferenceBank,
    layout: FrameLayout,
    threads: int = 1,
) -> list[Bitstream]:
    """Detect every data slot and split the tuples into per-user bitstreams.

    Padding added by the schedule is stripped from each user's stream.
    """
    if not bank.is_complete(layout.symbol_map.tuple_space()):
        raise DetectionError("reference bank does not cover the full tuple space")
    detected = detect_symbols(frames, bank, threads=threads)
    return unpack_symbols(layout, detected)
