"""Shared pytest fixtures and configuration."""

import json
from pathlib import Path

import numpy as np
import pytest

from fndlink.config import ExperimentConfig, validate_config
from fndlink.physics import NvSpinModel
from fndlink.scene import FieldOfView, NoiseModel

# Small enough for a full link to run in well under a second.
SMALL_CONFIG = {
    "master_seed": 7,
    "fov": {"width": 20.0, "height": 20.0, "pixels_x": 32, "pixels_y": 32},
    "cluster_count": 6,
    "n_ref": 5,
    "payload": {"random_bits": 64},
}


def _merge(base: dict, overrides: dict) -> dict:
    out = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


@pytest.fixture
def spin():
    """Default spin model."""
    return NvSpinModel()


@pytest.fixture
def small_fov():
    """20 x 20 um field imaged on 32 x 32 pixels."""
    return FieldOfView(width=20.0, height=20.0, pixels_x=32, pixels_y=32)


@pytest.fixture
def lab_noise():
    return NoiseModel.lab()


@pytest.fixture
def rng():
    """Seeded generator for test data."""
    return np.random.default_rng(1234)


@pytest.fixture
def make_config(tmp_path):
    """Factory for small validated configs writing into a temporary directory."""

    def _make(**overrides) -> ExperimentConfig:
        data = _merge(SMALL_CONFIG, {"output_dir": str(tmp_path / "out")})
        return validate_config(_merge(data, overrides))

    return _make


@pytest.fixture
def write_config(tmp_path):
    """Write a config mapping to a JSON file and return its path."""

    def _write(name: str = "config.json", **overrides) -> Path:
        path = tmp_path / name
        data = _merge(SMALL_CONFIG, overrides)
        path.write_text(json.dumps(data, indent=2), encoding="utf-8")
        return path

    return _write
