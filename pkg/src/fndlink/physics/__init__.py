"""
Physical response model of NV centers in fluorescent nanodiamonds.
"""

from .models import (
    DEFAULT_TONE_POWER_DBM,
    FndCluster,
    MagneticFieldMap,
    NvSpinModel,
    Tone,
)
from .odmr import (
    axial_field,
    axial_field_for_peak,
    axis_for_axial_field,
    cluster_dip,
    cluster_fluorescence,
    contrast_at_power,
    lorentzian_dip,
    zeeman_peaks,
)

__all__ = [
    "DEFAULT_TONE_POWER_DBM",
    "FndCluster",
    "MagneticFieldMap",
    "NvSpinModel",
    "Tone",
    "axial_field",
    "axial_field_for_peak",
    "axis_for_axial_field",
    "cluster_dip",
    "cluster_fluorescence",
    "contrast_at_power",
    "lorentzian_dip",
    "zeeman_peaks",
]
