"""Unit tests for experiment configuration (fndlink.config)."""

import json
from pathlib import Path

import pytest

from fndlink.config import ExperimentConfig, ScanSettings, load_config, parse_config_text, validate_config
from fndlink.errors import ConfigError
from fndlink.scene import NoiseModel


class TestValidate:
    def test_minimal_config_uses_defaults(self):
        config = validate_config({"master_seed": 1})
        assert config.scheme == "fsk-zfs"
        assert config.n_users == 2
        assert config.n_ref == 400
        assert config.noise == NoiseModel.lab()
        assert config.fov.pixels_x == 128
        assert config.field_map is None

    def test_keys_are_normalised(self):
        config = validate_config({"MASTER_SEED": 3, "cluster-count": 4, "noise": {"Read-Noise-SD": 6.0}})
        assert config.master_seed == 3
        assert config.cluster_count == 4
        assert config.noise.read_noise_sd == 6.0

    def test_master_seed_required(self):
        with pytest.raises(ConfigError) as exc:
            validate_config({})
        assert exc.value.field == "master_seed"

    def test_seed_range(self):
        validate_config({"master_seed": 2**64 - 1})
        with pytest.raises(ConfigError):
            validate_config({"master_seed": 2**64})

    def test_unknown_scheme(self):
        with pytest.raises(ConfigError) as exc:
            validate_config({"master_seed": 1, "scheme": "psk-zfs"})
        assert exc.value.field == "scheme"

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            validate_config({"master_seed": 1, "laser": 2.0})

    def test_nested_error_location(self):
        with pytest.raises(ConfigError) as exc:
            validate_config({"master_seed": 1, "noise": {"exposure": -1}})
        assert exc.value.field == "noise.exposure"

    def test_noise_preset_by_name(self):
        config = validate_config({"master_seed": 1, "noise": "compact"})
        assert config.noise == NoiseModel.compact()

    def test_noise_preset_with_override(self):
        config = validate_config({"master_seed": 1, "noise": {"preset": "compact", "read_noise_sd": 1.0}})
        assert config.noise.laser_scale == NoiseModel.compact().laser_scale
        assert config.noise.read_noise_sd == 1.0

    def test_payload_images_per_user(self):
        with pytest.raises(ConfigError):
            validate_config({"master_seed": 1, "payload": {"images": [["a.pgm"]]}})

    def test_field_map(self):
        config = validate_config(
            {"master_seed": 1, "field_map": {"uniform_field": [0, 0, 35], "gradient": [[0, 0], [0, 0], [0.023, 0]]}}
        )
        assert config.field_map.has_gradient

    def test_scan_grid(self):
        grid = ScanSettings(start_mhz=2900.0, stop_mhz=2910.0, step_mhz=2.5).grid()
        assert grid == [2900.0, 2902.5, 2905.0, 2907.5, 2910.0]

    def test_scan_range_must_increase(self):
        with pytest.raises(ValueError):
            ScanSettings(start_mhz=3000.0, stop_mhz=2900.0)


class TestOverrides:
    def test_cli_flags_replace_file_values(self, make_config, tmp_path):
        config = make_config().with_overrides(seed=99, output_dir=tmp_path / "x", deterministic=True, threads=4)
        assert config.master_seed == 99
        assert config.output_dir == tmp_path / "x"
        assert config.deterministic
        assert config.threads == 4

    def test_no_flags_keep_config(self, make_config):
        config = make_config(deterministic=True)
        assert config.with_overrides() == config

    def test_invalid_override(self, make_config):
        with pytest.raises(ConfigError):
            make_config().with_overrides(threads=0)

    def test_echo_is_sorted_json(self, make_config):
        echo = make_config().echo()
        data = json.loads(echo)
        assert data["master_seed"] == 7
        assert list(data) == sorted(data)
        assert validate_config(data) == make_config()


class TestLoad:
    def test_json_file(self, write_config):
        path = write_config(scheme="ask-zfs")
        config, text = load_config(path)
        assert config.scheme == "ask-zfs"
        assert text == path.read_text(encoding="utf-8")

    def test_yaml_file(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("master_seed: 5\nscheme: fsk-high\nnoise: compact\n", encoding="utf-8")
        config, _ = load_config(path)
        assert config.scheme == "fsk-high"
        assert config.noise == NoiseModel.compact()

    def test_relative_image_paths(self, tmp_path):
        path = tmp_path / "cfg" / "config.json"
        path.parent.mkdir()
        path.write_text(json.dumps({"master_seed": 1, "n_users": 1, "payload": {"images": [["img/a.pgm"]]}}), encoding="utf-8")
        config, _ = load_config(path)
        assert config.payload.images[0][0] == Path(tmp_path / "cfg" / "img" / "a.pgm")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")

    def test_malformed_json(self):
        with pytest.raises(ConfigError):
            parse_config_text("{master_seed: ")

    def test_root_must_be_mapping(self):
        with pytest.raises(ConfigError):
            parse_config_text("[1, 2]")


def test_config_is_frozen(make_config):
    config = make_config()
    with pytest.raises(Exception):
        config.n_ref = 3
    assert isinstance(config, ExperimentConfig)
