"""Exception hierarchy shared by all fndlink packages."""

from typing import Optional


class FndlinkError(Exception):
    """Base class for every error raised deliberately by fndlink."""


class ConfigError(FndlinkError):
    """Invalid or unreadable experiment configuration."""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        prefix = f"{field}: " if field else ""
        super().__init__(f"{prefix}{message}")


class DimensionMismatchError(FndlinkError):
    """Frames, tone lists or banks whose shapes do not line up."""


class ScheduleError(FndlinkError):
    """A frame schedule cannot be built from the given bitstreams."""


class SchemeError(FndlinkError):
    """Unknown modulation scheme or a symbol missing from a map."""


class DetectionError(FndlinkError):
    """Detection cannot proceed (empty or incomplete reference bank)."""


class FitError(FndlinkError):
    """Lorentzian fitting preconditions are violated."""


class CalibrationError(FndlinkError):
    """An analog calibration curve is not strictly monotone."""


class AssignmentError(FndlinkError):
    """Users cannot be bound to spectrally separated clusters."""


class PayloadError(FndlinkError):
    """Malformed message images, waveforms or bitstream dumps."""
