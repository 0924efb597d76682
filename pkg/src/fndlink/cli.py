from pathlib import Path
from typing import Callable, Optional

import typer
from dotenv import load_dotenv

from fndlink.config import ExperimentConfig, load_config
from fndlink.errors import FndlinkError
from fndlink.harness import (
    REPORT_NAME,
    RunReport,
    run_ber_sweep,
    run_capacity,
    run_demod_audio,
    run_odmr_scan,
    run_simulate,
)
from fndlink.logger import get_logger, setup_logging

load_dotenv()

app = typer.Typer(help="fndlink - multi-user nanodiamond receiver simulator")
logger = get_logger(__name__)

ConfigOption = typer.Option(..., "--config", "-c", exists=True, dir_okay=False, help="JSON or YAML config")
SeedOption = typer.Option(None, "--seed", min=0, max=2**64 - 1, help="Override master_seed")
OutOption = typer.Option(None, "--out", "-o", file_okay=False, help="Output directory")
DeterministicOption = typer.Option(False, "--deterministic", help="Use expected counts instead of sampled noise")
ThreadsOption = typer.Option(None, "--threads", min=1, help="Worker threads")


@app.callback()
def main(
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Console log level"),
    log_file: Optional[str] = typer.Option(None, "--log-file", help="Rotating DEBUG log file"),
):
    """Simulate and demodulate FND-received wireless links."""
    setup_logging(level=log_level, log_file=log_file, force=True)


def _prepare(
    config_path: Path,
    seed: Optional[int],
    out: Optional[Path],
    deterministic: bool,
    threads: Optional[int],
) -> tuple[ExperimentConfig, str]:
    config, text = load_config(config_path)
    return config.with_overrides(seed=seed, output_dir=out, deterministic=deterministic, threads=threads), text


def _execute(
    run: Callable[[ExperimentConfig, str], RunReport],
    summarize: Callable[[RunReport], str],
    config_path: Path,
    seed: Optional[int],
    out: Optional[Path],
    deterministic: bool,
    threads: Optional[int],
) -> None:
    try:
        config, text = _prepare(config_path, seed, out, deterministic, threads)
        report = run(config, text)
    except FndlinkError as e:
        logger.error("{}: {}", type(e).__name__, e)
        typer.echo(f"❌ {e}", err=True)
        raise typer.Exit(code=1)
    typer.echo(f"✅ {summarize(report)}")
    typer.echo(f"   report: {Path(config.output_dir) / REPORT_NAME}")


def _ber_line(report: RunReport) -> str:
    ber = "n/a" if report.aggregate_ber is None else f"{report.aggregate_ber:.3e}"
    return f"{report.scheme}: BER {ber} ({report.total_errors}/{report.total_bits} bits, {report.slots.total} slots)"


@app.command()
def simulate(
    config: Path = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    deterministic: bool = DeterministicOption,
    threads: Optional[int] = ThreadsOption,
):
    """Run one end-to-end link and compare recovered bits."""
    _execute(run_simulate, _ber_line, config, seed, out, deterministic, threads)


@app.command("ber-sweep")
def ber_sweep(
    config: Path = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    deterministic: bool = DeterministicOption,
    threads: Optional[int] = ThreadsOption,
    parameter: Optional[str] = typer.Option(None, "--parameter", help="Override sweep.parameter"),
):
    """Sweep BER over one scene or noise parameter."""
    _execute(
        lambda cfg, text: run_ber_sweep(cfg, parameter, text),
        lambda r: f"swept {r.extra['parameter']} over {len(r.extra['values'])} points x {r.extra['seeds']} seeds",
        config,
        seed,
        out,
        deterministic,
        threads,
    )


@app.command("odmr-scan")
def odmr_scan(
    config: Path = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    deterministic: bool = DeterministicOption,
    threads: Optional[int] = ThreadsOption,
):
    """Scan the probe tone over the field of view and fit each ROI."""
    _execute(
        run_odmr_scan,
        lambda r: f"{r.extra['rois']} ROIs, {r.extra['converged_fits']} converged fits",
        config,
        seed,
        out,
        deterministic,
        threads,
    )


@app.command()
def capacity(
    config: Path = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    deterministic: bool = DeterministicOption,
    threads: Optional[int] = ThreadsOption,
):
    """Count reference-free users a random field can serve."""
    _execute(
        run_capacity,
        lambda r: f"mean {r.extra['mean_assigned']} users over {len(r.extra['assigned_per_seed'])} seeds",
        config,
        seed,
        out,
        deterministic,
        threads,
    )


@app.command("demod-audio")
def demod_audio(
    config: Path = ConfigOption,
    waveform: Path = typer.Option(..., "--waveform", "-w", exists=True, dir_okay=False, help="Mono WAV file"),
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    deterministic: bool = DeterministicOption,
    threads: Optional[int] = ThreadsOption,
):
    """Demodulate an audio waveform through one bulk FND."""

    def summarize(r: RunReport) -> str:
        modes = ", ".join(f"{m} max |r| {v['max_abs_residual']:.3g}" for m, v in r.extra["modes"].items())
        return f"{r.extra['samples']} samples: {modes}"

    _execute(
        lambda cfg, text: run_demod_audio(cfg, waveform, text),
        summarize,
        config,
        seed,
        out,
        deterministic,
        threads,
    )


if __name__ == "__main__":
    app()
