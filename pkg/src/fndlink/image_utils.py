"""
File I/O for message images, camera frames, tables and waveforms.

This module provides functionality for:
- Reading and writing 8-bit PGM message images
- Exporting frames as 16-bit PGM with a ``.hdr`` scale sidecar
- Writing UTF-8 CSV tables
- Reading mono WAV waveforms normalised to [-1, 1]
"""

import csv
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy.io import wavfile

from .errors import PayloadError
from .logger import get_logger
from .modem import ImageMessage
from .scene import FluorescenceFrame

logger = get_logger(__name__)

PathLike = Union[str, Path]

PGM16_MAX = 65535


def read_pgm(path: PathLike) -> ImageMessage:
    """Load an 8-bit greyscale PGM as a message image."""
    try:
        with Image.open(path) as img:
            if img.mode != "L":
                raise PayloadError(f"{path}: expected an 8-bit greyscale image, got mode {img.mode}")
            return ImageMessage(np.array(img, dtype=np.uint8))
    except (OSError, UnidentifiedImageError) as e:
        raise PayloadError(f"cannot read message image {path}: {e}") from e


def write_pgm(image: ImageMessage, path: PathLike) -> Path:
    """Write a message image as binary P5 PGM."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(image.pixels)).save(p, format="PPM")
    return p


def sidecar_path(path: PathLike) -> Path:
    return Path(path).with_suffix(".hdr")


def write_frame_pgm16(frame: FluorescenceFrame, path: PathLike) -> Path:
    """Export a frame as 16-bit P5 PGM.

    Counts above the 16-bit range are scaled down; the factor is written to
    a ``.hdr`` sidecar so ``counts = value * scale + offset``.
    """
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    peak = float(frame.counts.max()) if frame.counts.size else 0.0
    scale = peak / PGM16_MAX if peak > PGM16_MAX else 1.0
    if scale != 1.0:
        logger.warning("Frame {} exceeds 16 bits, scaled by {:.6g}", p.name, scale)
    values = np.clip(np.rint(frame.counts / scale), 0, PGM16_MAX).astype(np.int32)
    Image.fromarray(values).save(p, format="PPM")
    sidecar_path(p).write_text(f"scale={scale!r}\noffset=0\n", encoding="utf-8")
    return p


def read_frame_pgm16(path: PathLike) -> FluorescenceFrame:
    """Inverse of :func:`write_frame_pgm16` up to rounding."""
    header = {}
    try:
        for line in sidecar_path(path).read_text(encoding="utf-8").splitlines():
            if "=" in line:
                key, value = line.split("=", 1)
                header[key.strip()] = float(value)
        with Image.open(path) as img:
            values = np.array(img, dtype=float)
    except (OSError, ValueError, UnidentifiedImageError) as e:
        raise PayloadError(f"cannot read frame {path}: {e}") from e
    return FluorescenceFrame(values * header.get("scale", 1.0) + header.get("offset", 0.0))


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Write a UTF-8 CSV table with a header row."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return p


def read_csv(path: PathLike) -> list[dict[str, str]]:
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def read_wav(path: PathLike) -> tuple[int, np.ndarray]:
    """Read a mono WAV and normalise its samples to [-1, 1].

    Integer formats are scaled by their full range; float formats are
    checked to already lie in [-1, 1].

    Returns:
        (sample rate, samples)
    """
    try:
        rate, data = wavfile.read(path)
    except (OSError, ValueError) as e:
        raise PayloadError(f"cannot read waveform {path}: {e}") from e
    if data.ndim != 1:
        raise PayloadError(f"{path}: expected a mono waveform, got {data.shape[1]} channels")
    if data.dtype == np.uint8:
        samples = (data.astype(float) - 128.0) / 128.0
    elif np.issubdtype(data.dtype, np.integer):
        samples = data.astype(float) / float(-np.iinfo(data.dtype).min)
    else:
        samples = data.astype(float)
        if samples.size and np.max(np.abs(samples)) > 1.0:
            raise PayloadError(f"{path}: float samples exceed [-1, 1]")
    return int(rate), samples
