"""
Run reports and the artefact directory layout.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field

from fndlink.logger import get_logger
from fndlink.modem import Bitstream, bit_errors, bits_to_hex
from fndlink.scene import NoiseModel
from fndlink.utils import canonical_json

logger = get_logger(__name__)

REPORT_NAME = "report.json"


class SlotCounts(BaseModel):
    model_config = ConfigDict(frozen=True)

    reference: int = 0
    calibration: int = 0
    data: int = 0

    @property
    def total(self) -> int:
        return self.reference + self.calibration + self.data


class SlotTiming(BaseModel):
    """Acquisition timing; the balancing interval never changes counts."""

    model_config = ConfigDict(frozen=True)

    exposure_ms: float
    microwave_ms: float
    balance_ms: float
    slot_ms: float
    preamble_airtime_ms: float = 0.0
    data_airtime_ms: float = 0.0

    @classmethod
    def for_slots(cls, noise: NoiseModel, slots: SlotCounts) -> "SlotTiming":
        slot_ms = noise.exposure + noise.balance_ms
        return cls(
            exposure_ms=noise.exposure,
            microwave_ms=noise.microwave_ms,
            balance_ms=noise.balance_ms,
            slot_ms=slot_ms,
            preamble_airtime_ms=(slots.reference + slots.calibration) * slot_ms,
            data_airtime_ms=slots.data * slot_ms,
        )


class RunReport(BaseModel):
    """Outcome of one command.

    ``aggregate_ber`` pools errors over all users' compared bits.
    ``config_source`` is the config file text as read; ``config_echo`` the
    fully resolved config as canonical JSON.
    """

    command: str
    scheme: Optional[str] = None
    master_seed: int
    per_user_bits: List[int] = []
    per_user_errors: List[int] = []
    per_user_ber: List[float] = []
    aggregate_ber: Optional[float] = None
    slots: SlotCounts = SlotCounts()
    timing: Optional[SlotTiming] = None
    config_echo: str
    config_source: Optional[str] = None
    artifacts: Dict[str, str] = Field(default_factory=dict)
    extra: Dict[str, Any] = Field(default_factory=dict)

    @property
    def total_errors(self) -> int:
        return sum(self.per_user_errors)

    @property
    def total_bits(self) -> int:
        return sum(self.per_user_bits)


def ber_summary(tx: Sequence[Bitstream], rx: Sequence[Bitstream]) -> dict[str, Any]:
    """Per-user bit, error and BER lists plus the pooled BER."""
    bits = [len(t) for t in tx]
    errors = [bit_errors(t, r) for t, r in zip(tx, rx)]
    per_user = [e / n if n else 0.0 for e, n in zip(errors, bits)]
    total = sum(bits)
    return {
        "per_user_bits": bits,
        "per_user_errors": errors,
        "per_user_ber": per_user,
        "aggregate_ber": sum(errors) / total if total else None,
    }


class ArtifactWriter:
    """Writes artefacts under an output directory and records their paths."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.paths: Dict[str, str] = {}

    def path(self, relative: str) -> Path:
        p = self.out_dir / relative
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def record(self, key: str, path: Path) -> Path:
        self.paths[key] = Path(path).relative_to(self.out_dir).as_posix()
        return path

    def write_text(self, key: str, relative: str, text: str) -> Path:
        p = self.path(relative)
        p.write_text(text, encoding="utf-8")
        return self.record(key, p)

    def write_bit_dumps(self, tx: Sequence[Bitstream], rx: Sequence[Bitstream]) -> None:
        for user, (t, r) in enumerate(zip(tx, rx)):
            self.write_text(f"bits_tx_user{user}", f"bits/user{user}_tx.hex", bits_to_hex(t))
            self.write_text(f"bits_rx_user{user}", f"bits/user{user}_rx.hex", bits_to_hex(r))


def write_report(report: RunReport, out_dir: Path) -> Path:
    """Serialise a report as canonical JSON in ``out_dir``."""
    path = Path(out_dir) / REPORT_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(report), encoding="utf-8")
    logger.info("Report written to {}", path)
    return path
