"""
Pydantic value types for the NV-center physical model.

All models are frozen: a cluster or field map never changes after it is
built, so scene data can be shared freely between rendering workers.
"""

import math
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Vec3 = Tuple[float, float, float]
Vec2 = Tuple[float, float]

DEFAULT_ZFS_MHZ = 2870.0
DEFAULT_GYROMAGNETIC_RATIO = 2.8  # MHz per gauss
DEFAULT_LINEWIDTH_MHZ = 10.0
DEFAULT_CONTRAST_CAP = 0.05
DEFAULT_SATURATION_MW = 1.0

# Used by symbol maps that only name a frequency.
DEFAULT_TONE_POWER_DBM = 0.0

_UNIT_TOLERANCE = 1e-9


class NvSpinModel(BaseModel):
    """Spin-resonance parameters shared by the NV centers of one cluster."""

    model_config = ConfigDict(frozen=True)

    zfs_freq: float = Field(DEFAULT_ZFS_MHZ, gt=0, description="Zero-field splitting D in MHz")
    gyromagnetic_ratio: float = Field(
        DEFAULT_GYROMAGNETIC_RATIO, gt=0, description="Electron gyromagnetic ratio in MHz/G"
    )
    linewidth_fwhm: float = Field(DEFAULT_LINEWIDTH_MHZ, gt=0, description="ODMR FWHM in MHz")
    contrast_cap: float = Field(
        DEFAULT_CONTRAST_CAP, gt=0, lt=1, description="Maximum fractional fluorescence drop"
    )
    saturation_power: float = Field(
        DEFAULT_SATURATION_MW, gt=0, description="Microwave saturation power in mW"
    )

    def jittered(self, contrast_factor: float, linewidth_factor: float) -> "NvSpinModel":
        """Copy with contrast cap and linewidth scaled by the given factors."""
        cap = min(self.contrast_cap * contrast_factor, 0.999)
        return self.model_copy(
            update={
                "contrast_cap": cap,
                "linewidth_fwhm": self.linewidth_fwhm * linewidth_factor,
            }
        )


class Tone(BaseModel):
    """A continuous-wave microwave tone as seen at a receiver."""

    model_config = ConfigDict(frozen=True)

    frequency: float = Field(..., gt=0, description="Frequency in MHz")
    power: float = Field(DEFAULT_TONE_POWER_DBM, description="Power in dBm")

    @field_validator("power")
    @classmethod
    def _finite_power(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("tone power must be finite")
        return value

    def attenuated(self, gain_db: float) -> "Tone":
        """Same tone after a channel with the given gain in dB."""
        return Tone(frequency=self.frequency, power=self.power + gain_db)


class FndCluster(BaseModel):
    """One fluorescent nanodiamond acting as a nano-antenna.

    ``nv_axis`` is the dominant NV orientation. A cluster may additionally
    carry ``secondary_axes`` with ``axis_weights`` (dominant axis first) to
    model a mixture of crystallographic orientations.
    """

    model_config = ConfigDict(frozen=True)

    id: int
    position: Vec2 = Field(..., description="(x, y) in micrometres")
    nv_axis: Vec3
    brightness: float = Field(..., gt=0, description="Counts/ms at reference laser power")
    spin_model: NvSpinModel = Field(default_factory=NvSpinModel)
    secondary_axes: Tuple[Vec3, ...] = ()
    axis_weights: Tuple[float, ...] = ()

    @field_validator("nv_axis")
    @classmethod
    def _unit_axis(cls, axis: Vec3) -> Vec3:
        norm = math.sqrt(sum(c * c for c in axis))
        if abs(norm - 1.0) > _UNIT_TOLERANCE:
            raise ValueError(f"nv_axis must be a unit vector (|n| = {norm})")
        return axis

    @model_validator(mode="after")
    def _check_mixture(self) -> "FndCluster":
        for axis in self.secondary_axes:
            norm = math.sqrt(sum(c * c for c in axis))
            if abs(norm - 1.0) > _UNIT_TOLERANCE:
                raise ValueError("secondary axes must be unit vectors")
        if self.axis_weights:
            if len(self.axis_weights) != 1 + len(self.secondary_axes):
                raise ValueError("axis_weights needs one weight per axis, dominant first")
            if any(w < 0 for w in self.axis_weights):
                raise ValueError("axis weights must be non-negative")
            if abs(sum(self.axis_weights) - 1.0) > 1e-9:
                raise ValueError("axis weights must sum to 1")
        elif self.secondary_axes:
            raise ValueError("secondary_axes given without axis_weights")
        return self

    def axes(self) -> list[tuple[np.ndarray, float]]:
        """(axis, weight) pairs, dominant axis first."""
        if not self.secondary_axes:
            return [(np.asarray(self.nv_axis, dtype=float), 1.0)]
        all_axes = (self.nv_axis, *self.secondary_axes)
        return [(np.asarray(a, dtype=float), w) for a, w in zip(all_axes, self.axis_weights)]


class MagneticFieldMap(BaseModel):
    """Uniform field plus a linear gradient over the field of view.

    ``gradient[i][j]`` is dB_i/dx_j in G/um with x_0 = x and x_1 = y.
    """

    model_config = ConfigDict(frozen=True)

    uniform_field: Vec3 = (0.0, 0.0, 0.0)
    gradient: Tuple[Vec2, Vec2, Vec2] = ((0.0, 0.0), (0.0, 0.0), (0.0, 0.0))

    def field_at(self, position: Vec2) -> np.ndarray:
        """Field vector in gauss at an (x, y) position in micrometres."""
        return np.asarray(self.uniform_field, dtype=float) + np.asarray(
            self.gradient, dtype=float
        ) @ np.asarray(position, dtype=float)

    @property
    def has_gradient(self) -> bool:
        return any(g != 0.0 for row in self.gradient for g in row)

    @classmethod
    def zero(cls) -> "MagneticFieldMap":
        return cls()

    @classmethod
    def along_z(
        cls,
        magnitude: float,
        gradient_x: float = 0.0,
        gradient_component: Optional[int] = 2,
    ) -> "MagneticFieldMap":
        """Field of ``magnitude`` gauss along z with an optional x-gradient.

        The gradient acts on ``gradient_component`` (z by default).
        """
        rows = [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]
        if gradient_x and gradient_component is not None:
            rows[gradient_component][0] = gradient_x
        return cls(
            uniform_field=(0.0, 0.0, magnitude),
            gradient=tuple(tuple(r) for r in rows),
        )
