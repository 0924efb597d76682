"""
Data models of the modem layer: symbol maps, bitstreams, image messages
and the reference+data slot schedule.
"""

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from fndlink.errors import PayloadError, ScheduleError
from fndlink.physics import Tone

SymbolTuple = Tuple[int, ...]


class ModulationKind(str, Enum):
    FSK = "fsk"
    ASK = "ask"
    JOINT = "joint"

    @property
    def bits_per_symbol(self) -> int:
        return 2 if self is ModulationKind.JOINT else 1


class SymbolMap(BaseModel):
    """Per-user mapping from symbol value to the transmitted tone.

    ``user_tones[u][s]`` is the tone user ``u`` sends for symbol ``s``.
    """

    model_config = ConfigDict(frozen=True)

    scheme: str
    kind: ModulationKind
    user_tones: Tuple[Tuple[Tone, ...], ...]

    @model_validator(mode="after")
    def _check_tables(self) -> "SymbolMap":
        if not self.user_tones:
            raise ValueError("a symbol map needs at least one user")
        expected = 2**self.kind.bits_per_symbol
        for user, tones in enumerate(self.user_tones):
            if len(tones) != expected:
                raise ValueError(
                    f"user {user} maps {len(tones)} symbols, {self.kind.value} needs {expected}"
                )
            if len(set(tones)) != len(tones):
                raise ValueError(f"user {user} maps two symbols to the same tone")
        return self

    @property
    def n_users(self) -> int:
        return len(self.user_tones)

    @property
    def symbols_per_user(self) -> int:
        return 2**self.kind.bits_per_symbol

    @property
    def bits_per_symbol(self) -> int:
        return self.kind.bits_per_symbol

    def tone(self, user: int, symbol: int) -> Tone:
        if not 0 <= symbol < self.symbols_per_user:
            raise ScheduleError(f"symbol {symbol} is outside the map of user {user}")
        return self.user_tones[user][symbol]

    def tones_for(self, symbols: Sequence[int]) -> list[Tone]:
        """Tones sent by every user for one symbol tuple."""
        if len(symbols) != self.n_users:
            raise ScheduleError(f"tuple {tuple(symbols)} does not have {self.n_users} entries")
        return [self.tone(u, int(s)) for u, s in enumerate(symbols)]

    def tuple_space(self) -> list[SymbolTuple]:
        """All S^U symbol tuples in lexicographic order."""
        return list(itertools.product(range(self.symbols_per_user), repeat=self.n_users))


@dataclass(frozen=True)
class Bitstream:
    """Ordered sequence of bits stored as a read-only uint8 array."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.array(self.bits, dtype=np.uint8).ravel()
        if np.any(bits > 1):
            raise PayloadError("bitstream values must be 0 or 1")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return int(self.bits.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Bitstream):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash(self.bits.tobytes())


@dataclass(frozen=True)
class ImageMessage:
    """8-bit greyscale image carried as a message payload."""

    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.array(self.pixels)
        if pixels.ndim != 2 or pixels.size == 0:
            raise PayloadError(f"image must be a non-empty 2-D array, got shape {pixels.shape}")
        if pixels.dtype != np.uint8:
            if np.any(pixels < 0) or np.any(pixels > 255):
                raise PayloadError("image pixels must fit in uint8")
            pixels = pixels.astype(np.uint8)
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def bit_length(self) -> int:
        return self.width * self.height * 8

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ImageMessage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    def __hash__(self) -> int:
        return hash((self.pixels.shape, self.pixels.tobytes()))


@dataclass(frozen=True)
class FrameLayout:
    """Slot schedule: the reference section followed by the data section.

    ``data_symbols`` has shape (T, U). ``payload_bits`` holds each user's
    unpadded bit count so padding can be dropped after detection.
    """

    symbol_map: SymbolMap
    n_ref: int
    data_symbols: np.ndarray
    payload_bits: Tuple[int, ...]
    with_reference: bool = True
    reference_tuples: Tuple[SymbolTuple, ...] = field(init=False)

    def __post_init__(self):
        if self.n_ref < 1:
            raise ScheduleError("n_ref must be at least 1")
        data = np.array(self.data_symbols, dtype=np.int64)
        if data.ndim != 2 or data.shape[1] != self.symbol_map.n_users:
            raise ScheduleError(
                f"data symbols must have shape (T, {self.symbol_map.n_users}), got {data.shape}"
            )
        if data.size and (data.min() < 0 or data.max() >= self.symbol_map.symbols_per_user):
            raise ScheduleError("data symbol value outside the symbol map")
        if len(self.payload_bits) != self.symbol_map.n_users:
            raise ScheduleError("one payload length is required per user")
        data.setflags(write=False)
        object.__setattr__(self, "data_symbols", data)
        refs = tuple(self.symbol_map.tuple_space()) if self.with_reference else ()
        object.__setattr__(self, "reference_tuples", refs)

    @property
    def n_users(self) -> int:
        return self.symbol_map.n_users

    @property
    def reference_slot_count(self) -> int:
        return len(self.reference_tuples) * self.n_ref

    @property
    def data_slot_count(self) -> int:
        return int(self.data_symbols.shape[0])

    @property
    def slot_count(self) -> int:
        return self.reference_slot_count + self.data_slot_count

    def reference_slots(self) -> Iterator[SymbolTuple]:
        """Reference tuples in transmission order, each repeated n_ref times."""
        for symbols in self.reference_tuples:
            for _ in range(self.n_ref):
                yield symbols

    def data_slots(self) -> Iterator[SymbolTuple]:
        for row in self.data_symbols:
            yield tuple(int(s) for s in row)

    def slot_tuple(self, slot: int) -> SymbolTuple:
        """Symbol tuple of a slot index counted over the whole schedule."""
        if not 0 <= slot < self.slot_count:
            raise ScheduleError(f"slot {slot} outside schedule of {self.slot_count}")
        if slot < self.reference_slot_count:
            return self.reference_tuples[slot // self.n_ref]
        return tuple(int(s) for s in self.data_symbols[slot - self.reference_slot_count])

    def slot_tones(self, slot: int) -> list[Tone]:
        """Per-user tones emitted in a slot."""
        return self.symbol_map.tones_for(self.slot_tuple(slot))

    def airtime_ms(self, slot_ms: float) -> tuple[float, float]:
        """(reference, data) section durations for a given slot length."""
        return self.reference_slot_count * slot_ms, self.data_slot_count * slot_ms
