"""
Receiver-side processing: reference-bank detection, ODMR scans and fits,
user assignment, reference-free thresholds and analog demodulation.
"""

from .analog import AnalogSettings, calibrate_analog, demod_analog, fm_range
from .assignment import assign_users
from .fitting import fit_lorentzian, fit_scan
from .models import (
    AnalogResult,
    CalibrationCurve,
    JointCalibration,
    LorentzianFit,
    LorentzianPeak,
    OdmrScan,
    ReferenceBank,
    UserAssignment,
    UserChannel,
)
from .mse import build_reference_bank, detect_stream, detect_symbols, mse_detect, mse_distances
from .odmr_scan import (
    FIT_COLUMNS,
    SCAN_COLUMNS,
    disk_mask,
    fit_rows,
    locate_spots,
    overlapping_rois,
    scan_rows,
    sweep_odmr,
)
from .reffree import (
    CalibrationSlot,
    calibrate_thresholds,
    calibration_schedule,
    reffree_detect,
    roi_counts,
)

__all__ = [
    "FIT_COLUMNS",
    "SCAN_COLUMNS",
    "AnalogResult",
    "AnalogSettings",
    "CalibrationCurve",
    "CalibrationSlot",
    "JointCalibration",
    "LorentzianFit",
    "LorentzianPeak",
    "OdmrScan",
    "ReferenceBank",
    "UserAssignment",
    "UserChannel",
    "assign_users",
    "build_reference_bank",
    "calibrate_analog",
    "calibrate_thresholds",
    "calibration_schedule",
    "demod_analog",
    "detect_stream",
    "detect_symbols",
    "disk_mask",
    "fit_lorentzian",
    "fit_rows",
    "fit_scan",
    "fm_range",
    "locate_spots",
    "mse_detect",
    "mse_distances",
    "overlapping_rois",
    "reffree_detect",
    "roi_counts",
    "scan_rows",
    "sweep_odmr",
]
