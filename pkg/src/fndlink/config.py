"""
Experiment configuration: schema, file loading and CLI overrides.

Configs are UTF-8 JSON (or YAML) documents validated against
:class:`ExperimentConfig`. Keys may be written in snake_case, kebab-case
or SCREAMING_SNAKE_CASE; they are normalised before validation.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .logger import get_logger
from .modem import SCHEME_NAMES
from .physics import MagneticFieldMap, NvSpinModel
from .rxdetect import AnalogSettings
from .scene import FieldOfView, NoiseModel

logger = get_logger(__name__)

MAX_SEED = 2**64 - 1

SweepParameter = Literal["cluster_count", "laser_scale", "n_ref", "noise"]


def _normalize_keys(d: Dict[str, Any]) -> Dict[str, Any]:
    """Normalise keys to the snake_case names the models expect, recursively.

    Accepts SCREAMING_SNAKE_CASE, kebab-case or snake_case.
    """
    out: Dict[str, Any] = {}
    for k, v in d.items():
        if not isinstance(k, str):
            continue
        nk = k.strip().lower().replace("-", "_").replace(" ", "_")
        out[nk] = _normalize_keys(v) if isinstance(v, dict) else v
    return out


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class ClusterSettings(_Section):
    brightness_mean: float = Field(5.0e4, gt=0, description="Mean counts/ms at laser_scale 1")
    brightness_log_sigma: float = Field(0.3, ge=0)
    jitter: float = Field(0.2, ge=0, lt=1)
    psf_sigma: float = Field(1.0, gt=0, description="Spot sigma in micrometres")
    axis_mode: Literal["single", "tetrahedral"] = "single"
    mixture_weights: List[float] = [0.7, 0.1, 0.1, 0.1]


class ChannelSettings(_Section):
    gain_sd_db: float = Field(3.0, ge=0)
    user_offsets_db: List[float] = []


class ScanSettings(_Section):
    start_mhz: float = Field(2750.0, gt=0)
    stop_mhz: float = Field(3000.0, gt=0)
    step_mhz: float = Field(1.0, gt=0)
    probe_power_dbm: float = 0.0
    roi_radius_factor: float = Field(2.0, gt=0)
    n_peaks: Literal[1, 2] = 2

    @model_validator(mode="after")
    def _ordered(self) -> "ScanSettings":
        if self.stop_mhz <= self.start_mhz:
            raise ValueError("stop_mhz must exceed start_mhz")
        return self

    def grid(self) -> List[float]:
        n = int(round((self.stop_mhz - self.start_mhz) / self.step_mhz)) + 1
        return [self.start_mhz + i * self.step_mhz for i in range(n)]


class PayloadSettings(_Section):
    """Per-user message images, or random bits when no images are given.

    ``images[u]`` lists the PGM files concatenated into user ``u``'s payload.
    """

    images: List[List[Path]] = []
    random_bits: int = Field(14464, ge=1)


class ReffreeSettings(_Section):
    calibration_repeats: int = Field(1, ge=1)
    park_mhz: float = Field(3000.0, gt=0)
    spacing_um: float = Field(10.0, gt=0)
    brightness: float = Field(5.0e4, gt=0)
    min_separation_mhz: float = Field(10.0, gt=0)


class CapacitySettings(_Section):
    min_separation_mhz: float = Field(13.0, gt=0)
    seeds: int = Field(20, ge=1)
    max_users: Optional[int] = Field(None, ge=0)
    link_bits: int = Field(
        0, ge=0, description="Random bits per assigned user for a reference-free link check; 0 skips it"
    )


class AnalogRunSettings(AnalogSettings):
    photon_budget: float = Field(1.0e10, gt=0, description="Expected counts per slot")
    fov_um: float = Field(10.0, gt=0)
    pixels: int = Field(16, ge=1)
    modes: List[Literal["am", "fm", "joint"]] = ["am", "fm", "joint"]
    histogram_bins: int = Field(50, ge=1)
    max_samples: Optional[int] = Field(None, ge=1)


class SweepSettings(_Section):
    parameter: SweepParameter = "cluster_count"
    values: List[float] = [1, 2, 4, 8, 16]
    seeds: int = Field(5, ge=1)


class ExperimentConfig(BaseModel):
    """Complete, validated description of one run."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    scheme: str = "fsk-zfs"
    n_users: int = Field(2, ge=1)
    master_seed: int = Field(..., ge=0, le=MAX_SEED)
    cluster_count: int = Field(20, ge=0)
    fov: FieldOfView = FieldOfView()
    noise: NoiseModel = NoiseModel()
    spin: NvSpinModel = NvSpinModel()
    cluster: ClusterSettings = ClusterSettings()
    channel: ChannelSettings = ChannelSettings()
    field_map: Optional[MagneticFieldMap] = None
    n_ref: int = Field(400, ge=1)
    scan: ScanSettings = ScanSettings()
    payload: PayloadSettings = PayloadSettings()
    reffree: ReffreeSettings = ReffreeSettings()
    capacity: CapacitySettings = CapacitySettings()
    analog: AnalogRunSettings = AnalogRunSettings()
    sweep: SweepSettings = SweepSettings()
    deterministic: bool = False
    threads: int = Field(1, ge=1)
    output_dir: Path = Path("results")

    @field_validator("scheme")
    @classmethod
    def _known_scheme(cls, value: str) -> str:
        if value not in SCHEME_NAMES:
            raise ValueError(f"unknown scheme '{value}' (expected one of {list(SCHEME_NAMES)})")
        return value

    @field_validator("noise", mode="before")
    @classmethod
    def _noise_preset(cls, value: Any) -> Any:
        if isinstance(value, str):
            return NoiseModel.preset(value)
        if isinstance(value, dict) and "preset" in value:
            rest = {k: v for k, v in value.items() if k != "preset"}
            return NoiseModel.preset(value["preset"]).model_copy(update=rest)
        return value

    @model_validator(mode="after")
    def _payload_users(self) -> "ExperimentConfig":
        if self.payload.images and len(self.payload.images) != self.n_users:
            raise ValueError(f"payload.images lists {len(self.payload.images)} users, expected {self.n_users}")
        if self.channel.user_offsets_db and len(self.channel.user_offsets_db) != self.n_users:
            raise ValueError("channel.user_offsets_db needs one offset per user")
        return self

    def with_overrides(
        self,
        seed: Optional[int] = None,
        output_dir: Optional[Path] = None,
        deterministic: Optional[bool] = None,
        threads: Optional[int] = None,
    ) -> "ExperimentConfig":
        """Apply CLI flags on top of the file values, re-validating the result."""
        data = self.model_dump()
        if seed is not None:
            data["master_seed"] = seed
        if output_dir is not None:
            data["output_dir"] = output_dir
        if deterministic:
            data["deterministic"] = True
        if threads is not None:
            data["threads"] = threads
        return validate_config(data)

    def echo(self) -> str:
        """Canonical JSON of the fully resolved config."""
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, indent=2)


def validate_config(data: Dict[str, Any]) -> ExperimentConfig:
    """Validate a raw mapping, reporting the first failing field."""
    try:
        return ExperimentConfig.model_validate(_normalize_keys(data))
    except ValidationError as ve:
        first = ve.errors()[0]
        field = ".".join(str(p) for p in first["loc"]) or None
        logger.error("Config validation error: {}", ve)
        raise ConfigError(first["msg"], field=field) from ve


def read_config_text(path: Union[str, Path]) -> str:
    p = Path(path)
    try:
        return p.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}", field=str(p)) from e


def parse_config_text(text: str, suffix: str = ".json") -> Dict[str, Any]:
    try:
        if suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text) or {}
        else:
            data = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"malformed config: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    return data


def _resolve_payload_paths(data: Dict[str, Any], base: Path) -> None:
    images = data.get("payload", {}).get("images")
    if not images:
        return
    data["payload"]["images"] = [
        [str(p if Path(p).is_absolute() else base / p) for p in user] for user in images
    ]


def load_config(path: Union[str, Path]) -> tuple[ExperimentConfig, str]:
    """Load and validate a config file.

    Relative payload image paths are resolved against the file's directory.

    Returns:
        The validated config and the file's original text.
    """
    p = Path(path)
    text = read_config_text(p)
    data = _normalize_keys(parse_config_text(text, p.suffix))
    _resolve_payload_paths(data, p.parent)
    config = validate_config(data)
    logger.info("Loaded configuration from {}", p)
    return config, text
