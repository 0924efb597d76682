"""
Data models for the imaged scene: field of view, camera noise and frames.
"""

from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from fndlink.errors import DimensionMismatchError


class FieldOfView(BaseModel):
    """Imaged region and the camera pixel grid laid over it."""

    model_config = ConfigDict(frozen=True)

    width: float = Field(75.0, gt=0, description="Width in micrometres")
    height: float = Field(75.0, gt=0, description="Height in micrometres")
    pixels_x: int = Field(128, ge=1)
    pixels_y: int = Field(128, ge=1)

    @property
    def pitch_x(self) -> float:
        return self.width / self.pixels_x

    @property
    def pitch_y(self) -> float:
        return self.height / self.pixels_y

    @property
    def shape(self) -> tuple[int, int]:
        """Frame shape as (rows, columns)."""
        return (self.pixels_y, self.pixels_x)

    def contains(self, position: tuple[float, float]) -> bool:
        x, y = position
        return 0.0 <= x <= self.width and 0.0 <= y <= self.height

    def pixel_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Pixel boundary coordinates along x and y."""
        return (
            np.linspace(0.0, self.width, self.pixels_x + 1),
            np.linspace(0.0, self.height, self.pixels_y + 1),
        )

    def pixel_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrids (X, Y) of pixel-centre coordinates in micrometres."""
        xs = (np.arange(self.pixels_x) + 0.5) * self.pitch_x
        ys = (np.arange(self.pixels_y) + 0.5) * self.pitch_y
        return np.meshgrid(xs, ys)


class NoiseModel(BaseModel):
    """Camera exposure and noise parameters for one acquisition slot.

    ``microwave_ms`` and ``balance_ms`` only describe the slot timing; they
    do not change simulated counts.
    """

    model_config = ConfigDict(frozen=True)

    exposure: float = Field(40.0, gt=0, description="Exposure per frame in ms")
    laser_scale: float = Field(1.0, ge=0)
    background_rate: float = Field(0.5, ge=0, description="Counts/ms/pixel")
    read_noise_sd: float = Field(2.0, ge=0, description="Gaussian read noise in counts")
    microwave_ms: float = Field(30.0, ge=0)
    balance_ms: float = Field(10.0, ge=0)

    @classmethod
    def lab(cls) -> "NoiseModel":
        """Calibrated default: EMCCD-class widefield setup."""
        return cls()

    @classmethod
    def compact(cls) -> "NoiseModel":
        """Compact-device setup: CMOS sensor and a weak laser diode."""
        return cls(laser_scale=0.02, background_rate=2.0, read_noise_sd=6.0)

    @classmethod
    def preset(cls, name: str) -> "NoiseModel":
        presets = {"lab": cls.lab, "compact": cls.compact}
        if name not in presets:
            raise ValueError(f"unknown noise preset '{name}' (expected one of {sorted(presets)})")
        return presets[name]()


@dataclass(frozen=True)
class FluorescenceFrame:
    """Photon counts of one acquisition slot, shape (pixels_y, pixels_x)."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=float)
        if counts.ndim != 2:
            raise DimensionMismatchError(f"frame must be 2-D, got shape {counts.shape}")
        if np.any(counts < 0):
            raise ValueError("frame counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape

    def total(self) -> float:
        return float(self.counts.sum())

    def matches(self, fov: FieldOfView) -> bool:
        return self.shape == fov.shape
