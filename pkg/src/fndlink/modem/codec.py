"""
Source coding between image messages and bits, symbol packing and BER.

Bits are serialised MSB-first within each pixel, pixels in row-major order.
"""

import textwrap
from typing import Sequence

import numpy as np

from fndlink.errors import PayloadError

from .models import Bitstream, ImageMessage

HEX_LINE_WIDTH = 64


def encode_image(img: ImageMessage) -> Bitstream:
    return Bitstream(np.unpackbits(img.pixels.ravel(), bitorder="big"))


def decode_image(bits: Bitstream, width: int, height: int) -> ImageMessage:
    """Inverse of :func:`encode_image`."""
    if width < 1 or height < 1:
        raise PayloadError(f"invalid image size {width}x{height}")
    expected = width * height * 8
    if len(bits) != expected:
        raise PayloadError(f"{len(bits)} bits cannot form a {width}x{height} image ({expected})")
    pixels = np.packbits(bits.bits, bitorder="big").reshape(height, width)
    return ImageMessage(pixels)


def concat_bits(streams: Sequence[Bitstream]) -> Bitstream:
    if not streams:
        return Bitstream(np.zeros(0, dtype=np.uint8))
    return Bitstream(np.concatenate([s.bits for s in streams]))


def random_bitstream(rng: np.random.Generator, length: int) -> Bitstream:
    if length < 1:
        raise PayloadError("random payload length must be positive")
    return Bitstream(rng.integers(0, 2, size=length, dtype=np.uint8))


def bits_to_symbols(bits: Bitstream, bits_per_symbol: int, n_symbols: int) -> np.ndarray:
    """Group bits into symbols, MSB first, zero-padding up to ``n_symbols``."""
    capacity = n_symbols * bits_per_symbol
    if len(bits) > capacity:
        raise PayloadError(f"{len(bits)} bits do not fit in {n_symbols} symbols")
    padded = np.zeros(capacity, dtype=np.int64)
    padded[: len(bits)] = bits.bits
    groups = padded.reshape(n_symbols, bits_per_symbol)
    weights = 2 ** np.arange(bits_per_symbol - 1, -1, -1)
    return groups @ weights


def symbols_to_bits(symbols: np.ndarray, bits_per_symbol: int, length: int) -> Bitstream:
    """Expand symbols back to bits and keep the first ``length``."""
    symbols = np.asarray(symbols, dtype=np.int64)
    shifts = np.arange(bits_per_symbol - 1, -1, -1)
    bits = ((symbols[:, None] >> shifts) & 1).ravel()
    if length > bits.size:
        raise PayloadError(f"requested {length} bits from {bits.size} decoded bits")
    return Bitstream(bits[:length])


def bit_errors(tx: Bitstream, rx: Bitstream) -> int:
    if len(tx) != len(rx):
        raise PayloadError(f"bitstream lengths differ: {len(tx)} != {len(rx)}")
    return int(np.count_nonzero(tx.bits != rx.bits))


def ber(tx: Bitstream, rx: Bitstream) -> float:
    """Fraction of mismatched bit positions."""
    errors = bit_errors(tx, rx)
    if len(tx) == 0:
        raise PayloadError("cannot compute BER of empty bitstreams")
    return errors / len(tx)


def bits_to_hex(bits: Bitstream) -> str:
    """Hex dump: a ``bits=N`` header then packed bytes, 64 hex digits a line."""
    digits = np.packbits(bits.bits, bitorder="big").tobytes().hex()
    body = "\n".join(textwrap.wrap(digits, HEX_LINE_WIDTH))
    return f"bits={len(bits)}\n{body}\n" if body else f"bits={len(bits)}\n"


def hex_to_bits(text: str) -> Bitstream:
    lines = text.strip().splitlines()
    if not lines or not lines[0].startswith("bits="):
        raise PayloadError("hex dump is missing its bits= header")
    try:
        length = int(lines[0].split("=", 1)[1])
        raw = bytes.fromhex("".join(line.strip() for line in lines[1:]))
    except ValueError as e:
        raise PayloadError(f"malformed hex dump: {e}") from e
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="big")
    if length > bits.size:
        raise PayloadError(f"hex dump declares {length} bits but holds {bits.size}")
    return Bitstream(bits[:length])
