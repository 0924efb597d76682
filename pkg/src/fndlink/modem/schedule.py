"""
Reference + data slot scheduling.
"""

import math
from typing import Sequence

import numpy as np

from fndlink.errors import ScheduleError
from fndlink.logger import get_logger

from .codec import bits_to_symbols, symbols_to_bits
from .models import Bitstream, FrameLayout, SymbolMap

logger = get_logger(__name__)


def build_schedule(
    bitstreams: Sequence[Bitstream],
    symbol_map: SymbolMap,
    n_ref: int,
    *,
    with_reference: bool = True,
) -> FrameLayout:
    """Lay out the reference preamble and the data slots of every user.

    Shorter payloads are zero-padded to the longest one; the padding is
    recorded so :func:`unpack_symbols` can strip it again.

    Raises:
        ScheduleError: wrong number of users, an empty bitstream or n_ref < 1.
    """
    if len(bitstreams) != symbol_map.n_users:
        raise ScheduleError(
            f"{len(bitstreams)} bitstreams for a {symbol_map.n_users}-user symbol map"
        )
    for user, bits in enumerate(bitstreams):
        if len(bits) == 0:
            raise ScheduleError(f"bitstream of user {user} is empty")

    k = symbol_map.bits_per_symbol
    n_slots = max(math.ceil(len(bits) / k) for bits in bitstreams)
    columns = [bits_to_symbols(bits, k, n_slots) for bits in bitstreams]
    layout = FrameLayout(
        symbol_map=symbol_map,
        n_ref=n_ref,
        data_symbols=np.stack(columns, axis=1),
        payload_bits=tuple(len(bits) for bits in bitstreams),
        with_reference=with_reference,
    )
    logger.debug(
        "Schedule {}: {} reference + {} data slots",
        symbol_map.scheme,
        layout.reference_slot_count,
        layout.data_slot_count,
    )
    return layout


def unpack_symbols(layout: FrameLayout, detected: np.ndarray) -> list[Bitstream]:
    """Split detected symbol tuples (T, U) into per-user bitstreams without padding."""
    detected = np.asarray(detected, dtype=np.int64)
    if detected.shape != layout.data_symbols.shape:
        raise ScheduleError(
            f"detected symbols shape {detected.shape} != schedule {layout.data_symbols.shape}"
        )
    k = layout.symbol_map.bits_per_symbol
    return [
        symbols_to_bits(detected[:, user], k, layout.payload_bits[user])
        for user in range(layout.n_users)
    ]
