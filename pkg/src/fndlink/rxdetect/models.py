"""
Receiver-side data models.
"""

from dataclasses import dataclass, field
from typing import Literal, Mapping, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from fndlink.errors import CalibrationError, DetectionError, DimensionMismatchError
from fndlink.modem import SymbolTuple
from fndlink.scene import FluorescenceFrame

Vec2 = Tuple[float, float]


@dataclass(frozen=True)
class ReferenceBank:
    """Averaged reference frame per symbol tuple, keys in lexicographic order."""

    frames: Mapping[SymbolTuple, FluorescenceFrame]
    stack: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.frames:
            raise DetectionError("reference bank is empty")
        ordered = dict(sorted((tuple(k), v) for k, v in self.frames.items()))
        shapes = {frame.shape for frame in ordered.values()}
        if len(shapes) != 1:
            raise DimensionMismatchError(f"reference frames differ in shape: {sorted(shapes)}")
        stack = np.stack([frame.counts for frame in ordered.values()])
        stack.setflags(write=False)
        object.__setattr__(self, "frames", ordered)
        object.__setattr__(self, "stack", stack)

    @property
    def keys(self) -> list[SymbolTuple]:
        return list(self.frames)

    @property
    def shape(self) -> tuple[int, int]:
        return self.stack.shape[1:]

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, key: SymbolTuple) -> FluorescenceFrame:
        return self.frames[tuple(key)]

    def is_complete(self, tuples: list[SymbolTuple]) -> bool:
        return set(self.frames) == {tuple(t) for t in tuples}


@dataclass(frozen=True)
class OdmrScan:
    """Per-ROI mean counts over a strictly increasing frequency grid.

    ``traces`` has shape (n_roi, n_freq); ``roi_ids`` are the cluster ids
    the regions were centred on.
    """

    frequencies: np.ndarray
    traces: np.ndarray
    roi_ids: Tuple[int, ...]
    centroids: Tuple[Vec2, ...]
    roi_radius: float
    probe_power: float

    def __post_init__(self):
        freqs = np.array(self.frequencies, dtype=float)
        traces = np.array(self.traces, dtype=float)
        if freqs.ndim != 1 or freqs.size == 0:
            raise DetectionError("scan grid must be a non-empty 1-D array")
        if np.any(np.diff(freqs) <= 0):
            raise DetectionError("scan grid must be strictly increasing")
        if traces.shape != (len(self.roi_ids), freqs.size):
            raise DimensionMismatchError(
                f"traces shape {traces.shape} != ({len(self.roi_ids)}, {freqs.size})"
            )
        if len(self.centroids) != len(self.roi_ids):
            raise DimensionMismatchError("one centroid is required per ROI")
        for arr in (freqs, traces):
            arr.setflags(write=False)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "traces", traces)

    def trace(self, roi_id: int) -> np.ndarray:
        return self.traces[self.roi_ids.index(roi_id)]


class LorentzianPeak(BaseModel):
    model_config = ConfigDict(frozen=True)

    center: float
    fwhm: float = Field(..., gt=0)
    contrast: float = Field(..., ge=0, lt=1)


class LorentzianFit(BaseModel):
    """Result of fitting baseline * (1 - sum of Lorentzian dips) to a trace."""

    model_config = ConfigDict(frozen=True)

    baseline: float
    peaks: Tuple[LorentzianPeak, ...]
    residual_norm: float = Field(..., ge=0)
    converged: bool = True
    iterations: int = 0
    message: str = ""

    @model_validator(mode="after")
    def _sorted_peaks(self) -> "LorentzianFit":
        centers = [p.center for p in self.peaks]
        if centers != sorted(centers):
            raise ValueError("peaks must be ordered by centre frequency")
        return self

    @property
    def upper(self) -> LorentzianPeak:
        return self.peaks[-1]

    @property
    def branch_separation(self) -> Optional[float]:
        if len(self.peaks) < 2:
            return None
        return self.peaks[-1].center - self.peaks[0].center

    def evaluate(self, frequencies: np.ndarray) -> np.ndarray:
        f = np.asarray(frequencies, dtype=float)
        dip = np.zeros_like(f)
        for p in self.peaks:
            half = 0.5 * p.fwhm
            dip += p.contrast * half**2 / ((f - p.center) ** 2 + half**2)
        return self.baseline * (1.0 - dip)


class UserChannel(BaseModel):
    """One user bound to an FND cluster."""

    model_config = ConfigDict(frozen=True)

    user: int = Field(..., ge=0)
    cluster_id: int
    resonance_mhz: float
    contrast: float = 0.0
    centroid: Optional[Vec2] = None
    threshold: Optional[float] = None


class UserAssignment(BaseModel):
    model_config = ConfigDict(frozen=True)

    channels: Tuple[UserChannel, ...] = ()
    requested_users: int = Field(..., ge=0)
    total_clusters: int = Field(..., ge=0)
    min_separation: float = Field(..., gt=0)
    roi_radius: Optional[float] = None

    @model_validator(mode="after")
    def _check_separation(self) -> "UserAssignment":
        res = sorted(c.resonance_mhz for c in self.channels)
        for lo, hi in zip(res, res[1:]):
            if hi - lo < self.min_separation:
                raise ValueError(f"resonances {lo} and {hi} MHz closer than min_separation")
        return self

    @property
    def n_assigned(self) -> int:
        return len(self.channels)

    @property
    def partial(self) -> bool:
        return self.n_assigned < self.requested_users

    @property
    def utilization(self) -> Optional[float]:
        """Assigned users over observed clusters; None when there are no clusters."""
        if self.total_clusters == 0:
            return None
        return self.n_assigned / self.total_clusters

    @property
    def resonances(self) -> list[float]:
        return [c.resonance_mhz for c in self.channels]

    def with_thresholds(self, thresholds: list[float]) -> "UserAssignment":
        if len(thresholds) != self.n_assigned:
            raise CalibrationError(
                f"{len(thresholds)} thresholds for {self.n_assigned} assigned users"
            )
        channels = tuple(
            c.model_copy(update={"threshold": float(t)}) for c, t in zip(self.channels, thresholds)
        )
        return self.model_copy(update={"channels": channels})


AnalogKind = Literal["am", "fm", "joint"]


@dataclass(frozen=True)
class CalibrationCurve:
    """Tabulated monotone fluorescence response along a modulation axis.

    ``axis`` holds the modulation coordinate (dBm for AM, MHz for FM, the
    normalised sample value for joint paths); ``response`` the measured
    counts. Both directions use linear interpolation.
    """

    kind: AnalogKind
    axis: np.ndarray
    response: np.ndarray

    def __post_init__(self):
        axis = np.array(self.axis, dtype=float)
        response = np.array(self.response, dtype=float)
        if axis.ndim != 1 or axis.shape != response.shape or axis.size < 2:
            raise CalibrationError("calibration needs matching 1-D grids of at least 2 points")
        if np.any(np.diff(axis) <= 0):
            raise CalibrationError("calibration axis must be strictly increasing")
        steps = np.diff(response)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise CalibrationError(f"{self.kind} calibration curve is not strictly monotone")
        for arr in (axis, response):
            arr.setflags(write=False)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "response", response)

    @property
    def increasing(self) -> bool:
        return bool(self.response[-1] > self.response[0])

    def __call__(self, x):
        return np.interp(x, self.axis, self.response)

    def inverse(self, y):
        """Axis value producing response ``y``; clipped to the calibrated range."""
        if self.increasing:
            return np.interp(y, self.response, self.axis)
        return np.interp(y, self.response[::-1], self.axis[::-1])


@dataclass(frozen=True)
class AnalogResult:
    expected: np.ndarray
    recovered: np.ndarray
    full_scale: float = 2.0

    @property
    def residuals(self) -> np.ndarray:
        return self.recovered - self.expected

    @property
    def max_abs_residual(self) -> float:
        """Largest |residual| as a fraction of full scale."""
        if self.expected.size == 0:
            return 0.0
        return float(np.max(np.abs(self.residuals)) / self.full_scale)

    @property
    def rms_residual(self) -> float:
        if self.expected.size == 0:
            return 0.0
        return float(np.sqrt(np.mean(self.residuals**2)) / self.full_scale)


@dataclass(frozen=True)
class JointCalibration:
    """Response surface over (power, frequency) plus its modulation path.

    ``surface[i, j]`` is the counts at ``powers[i]`` and ``frequencies[j]``.
    ``path`` is the response along the modulation path indexed by the
    normalised sample value; ``path_powers`` and ``path_frequencies`` give
    the tone at each of its axis points.
    """

    powers: np.ndarray
    frequencies: np.ndarray
    surface: np.ndarray
    path: CalibrationCurve
    path_powers: np.ndarray
    path_frequencies: np.ndarray

    def __post_init__(self):
        if self.surface.shape != (len(self.powers), len(self.frequencies)):
            raise CalibrationError("surface shape does not match its power and frequency grids")
        if self.path.kind != "joint":
            raise CalibrationError("joint calibration needs a joint path curve")
        if not (len(self.path_powers) == len(self.path_frequencies) == len(self.path.axis)):
            raise CalibrationError("path tones must match the path axis")

    def tone_at(self, sample: float) -> tuple[float, float]:
        """(power in dBm, frequency in MHz) that carries ``sample``."""
        return (
            float(np.interp(sample, self.path.axis, self.path_powers)),
            float(np.interp(sample, self.path.axis, self.path_frequencies)),
        )

    @property
    def kind(self) -> AnalogKind:
        return "joint"
