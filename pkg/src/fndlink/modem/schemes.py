"""
Named modulation schemes and their magnetic-field presets.
"""

from typing import TYPE_CHECKING, Callable, Optional

from fndlink.errors import SchemeError
from fndlink.physics import DEFAULT_TONE_POWER_DBM, MagneticFieldMap, NvSpinModel, Tone

from .models import ModulationKind, SymbolMap

if TYPE_CHECKING:
    from fndlink.rxdetect.models import UserAssignment

ZFS_CARRIER_MHZ = 2870.0
ZFS_SHIFTED_MHZ = 2900.0
LOW_BAND_MHZ = (2700.0, 2776.0)
HIGH_BAND_MHZ = (2963.0, 3020.0)
REFFREE_RESONANCES_MHZ = (2946.5, 2959.5)
DEFAULT_PARK_MHZ = 3000.0

# (bit 0, bit 1) powers in dBm for each user
ASK_POWERS_DBM = ((-15.0, -7.0), (-15.0, 0.0))

REFFREE_BASE_FIELD_G = 35.0
REFFREE_GRADIENT_G_PER_UM = 0.023


def _fsk(scheme: str, pairs: list[tuple[float, float]]) -> SymbolMap:
    return SymbolMap(
        scheme=scheme,
        kind=ModulationKind.FSK,
        user_tones=tuple(
            (
                Tone(frequency=f0, power=DEFAULT_TONE_POWER_DBM),
                Tone(frequency=f1, power=DEFAULT_TONE_POWER_DBM),
            )
            for f0, f1 in pairs
        ),
    )


def _fsk_zfs(n_users: int) -> SymbolMap:
    return _fsk("fsk-zfs", [(ZFS_CARRIER_MHZ, ZFS_SHIFTED_MHZ)] * n_users)


def _fsk_low(n_users: int) -> SymbolMap:
    return _fsk("fsk-low", [LOW_BAND_MHZ] * n_users)


def _fsk_high(n_users: int) -> SymbolMap:
    return _fsk("fsk-high", [HIGH_BAND_MHZ] * n_users)


def _fsk_reffree(n_users: int) -> SymbolMap:
    return _fsk("fsk-reffree", [(f, DEFAULT_PARK_MHZ) for f in REFFREE_RESONANCES_MHZ[:n_users]])


def _ask_zfs(n_users: int) -> SymbolMap:
    return SymbolMap(
        scheme="ask-zfs",
        kind=ModulationKind.ASK,
        user_tones=tuple(
            (Tone(frequency=ZFS_CARRIER_MHZ, power=p0), Tone(frequency=ZFS_CARRIER_MHZ, power=p1))
            for p0, p1 in ASK_POWERS_DBM[:n_users]
        ),
    )


def _joint_zfs(n_users: int) -> SymbolMap:
    # symbol = 2 * frequency bit + power bit
    tables = []
    for p0, p1 in ASK_POWERS_DBM[:n_users]:
        tables.append(
            tuple(
                Tone(frequency=f, power=p)
                for f in (ZFS_CARRIER_MHZ, ZFS_SHIFTED_MHZ)
                for p in (p0, p1)
            )
        )
    return SymbolMap(scheme="joint-zfs", kind=ModulationKind.JOINT, user_tones=tuple(tables))


_SCHEMES: dict[str, tuple[Callable[[int], SymbolMap], int]] = {
    "fsk-zfs": (_fsk_zfs, 2),
    "ask-zfs": (_ask_zfs, 2),
    "fsk-low": (_fsk_low, 2),
    "fsk-high": (_fsk_high, 2),
    "fsk-reffree": (_fsk_reffree, 2),
    "joint-zfs": (_joint_zfs, 2),
}

SCHEME_NAMES = tuple(_SCHEMES)


def preset_symbol_maps(scheme_name: str, n_users: int = 2) -> SymbolMap:
    """Symbol map of a named scheme for the first ``n_users`` users.

    Raises:
        SchemeError: unknown scheme or more users than the scheme defines.
    """
    if scheme_name not in _SCHEMES:
        raise SchemeError(f"unknown scheme '{scheme_name}' (expected one of {list(SCHEME_NAMES)})")
    builder, max_users = _SCHEMES[scheme_name]
    if not 1 <= n_users <= max_users:
        raise SchemeError(f"scheme '{scheme_name}' defines 1..{max_users} users, got {n_users}")
    return builder(n_users)


def scheme_field_map(scheme_name: str, model: Optional[NvSpinModel] = None) -> MagneticFieldMap:
    """Default static field for a scheme.

    The multi-band schemes use a uniform field along z strong enough for an
    aligned cluster to reach the far edge of the band.
    """
    model = model or NvSpinModel()
    if scheme_name in ("fsk-zfs", "ask-zfs", "joint-zfs"):
        return MagneticFieldMap.zero()
    if scheme_name == "fsk-low":
        return MagneticFieldMap.along_z((model.zfs_freq - LOW_BAND_MHZ[0]) / model.gyromagnetic_ratio)
    if scheme_name == "fsk-high":
        return MagneticFieldMap.along_z((HIGH_BAND_MHZ[1] - model.zfs_freq) / model.gyromagnetic_ratio)
    if scheme_name in ("fsk-reffree", "capacity"):
        return MagneticFieldMap.along_z(REFFREE_BASE_FIELD_G, gradient_x=REFFREE_GRADIENT_G_PER_UM)
    raise SchemeError(f"no field preset for '{scheme_name}'")


def reffree_map(resonances_mhz: list[float], park_mhz: float = DEFAULT_PARK_MHZ) -> SymbolMap:
    """Reference-free FSK map: bit 0 on each user's resonance, bit 1 parked."""
    if not resonances_mhz:
        raise SchemeError("a reference-free map needs at least one resonance")
    for f in resonances_mhz:
        if abs(f - park_mhz) < 1e-9:
            raise SchemeError(f"resonance {f} MHz coincides with the parking tone")
    return _fsk("fsk-reffree", [(float(f), park_mhz) for f in resonances_mhz])


def retune_reffree_map(
    assignment: "UserAssignment", park_mhz: float = DEFAULT_PARK_MHZ
) -> SymbolMap:
    """Reference-free map for every user of an assignment."""
    return reffree_map(list(assignment.resonances), park_mhz)
