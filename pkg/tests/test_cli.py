"""End-to-end tests of the fndlink command line."""

import json

import pytest
from typer.testing import CliRunner

from fndlink.cli import app

runner = CliRunner()

pytestmark = pytest.mark.integration


def test_simulate(write_config, tmp_path):
    path = write_config()
    out = tmp_path / "run"
    result = runner.invoke(app, ["simulate", "-c", str(path), "-o", str(out), "--deterministic"])
    assert result.exit_code == 0, result.output
    assert "report:" in result.output
    report = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert report["aggregate_ber"] == 0.0
    assert report["config_source"] == path.read_text(encoding="utf-8")


def test_seed_flag_overrides_file(write_config, tmp_path):
    out = tmp_path / "run"
    result = runner.invoke(app, ["simulate", "-c", str(write_config()), "-o", str(out), "--seed", "31"])
    assert result.exit_code == 0, result.output
    assert json.loads((out / "report.json").read_text(encoding="utf-8"))["master_seed"] == 31


def test_invalid_config_exits_nonzero(write_config, tmp_path):
    path = write_config(scheme="psk-zfs")
    result = runner.invoke(app, ["simulate", "-c", str(path), "-o", str(tmp_path / "run")])
    assert result.exit_code == 1
    assert not (tmp_path / "run" / "report.json").exists()


def test_missing_config_file(tmp_path):
    result = runner.invoke(app, ["simulate", "-c", str(tmp_path / "nope.json")])
    assert result.exit_code != 0


def test_ber_sweep_parameter_flag(write_config, tmp_path):
    path = write_config(sweep={"values": [2, 3], "seeds": 5})
    out = tmp_path / "sweep"
    result = runner.invoke(app, ["ber-sweep", "-c", str(path), "-o", str(out), "--parameter", "n_ref"])
    assert result.exit_code == 0, result.output
    assert (out / "ber_sweep.csv").exists()
