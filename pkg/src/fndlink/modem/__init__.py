"""
Source coding, symbol maps and slot scheduling.
"""

from .codec import (
    ber,
    bit_errors,
    bits_to_hex,
    bits_to_symbols,
    concat_bits,
    decode_image,
    encode_image,
    hex_to_bits,
    random_bitstream,
    symbols_to_bits,
)
from .models import Bitstream, FrameLayout, ImageMessage, ModulationKind, SymbolMap, SymbolTuple
from .schedule import build_schedule, unpack_symbols
from .schemes import (
    DEFAULT_PARK_MHZ,
    SCHEME_NAMES,
    preset_symbol_maps,
    reffree_map,
    retune_reffree_map,
    scheme_field_map,
)

__all__ = [
    "DEFAULT_PARK_MHZ",
    "SCHEME_NAMES",
    "Bitstream",
    "FrameLayout",
    "ImageMessage",
    "ModulationKind",
    "SymbolMap",
    "SymbolTuple",
    "ber",
    "bit_errors",
    "bits_to_hex",
    "bits_to_symbols",
    "build_schedule",
    "concat_bits",
    "decode_image",
    "encode_image",
    "hex_to_bits",
    "preset_symbol_maps",
    "random_bitstream",
    "reffree_map",
    "retune_reffree_map",
    "scheme_field_map",
    "symbols_to_bits",
    "unpack_symbols",
]
