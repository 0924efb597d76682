"""
BER sweeps over one scene or noise parameter.

Each (value, seed) point is an independent link simulation with seed
``master_seed + seed_index``; points run on a thread pool and rows are
written in (value, seed) order.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Optional

from fndlink.config import ExperimentConfig, validate_config
from fndlink.errors import ConfigError
from fndlink.image_utils import write_csv
from fndlink.logger import get_logger

from .pipeline import load_payloads, simulate_link
from .reports import ArtifactWriter, RunReport, ber_summary, write_report

logger = get_logger(__name__)

MIN_POINTS = 2
MIN_SEEDS = 5
SWEEP_FILE = "ber_sweep.csv"


def point_config(config: ExperimentConfig, parameter: str, value: float, seed: int) -> ExperimentConfig:
    """Config of one sweep point."""
    data = config.model_dump()
    data["master_seed"] = seed
    data["threads"] = 1
    if parameter == "cluster_count":
        data["cluster_count"] = int(value)
    elif parameter == "n_ref":
        data["n_ref"] = int(value)
    elif parameter == "laser_scale":
        data["noise"]["laser_scale"] = float(value)
    elif parameter == "noise":
        data["noise"]["read_noise_sd"] = float(value)
    else:
        raise ConfigError(f"cannot sweep '{parameter}'", field="sweep.parameter")
    return validate_config(data)


def sweep_columns(n_users: int) -> list[str]:
    return ["param", "seed", *(f"ber_user_{u}" for u in range(n_users)), "ber_aggregate"]


def _run_point(config: ExperimentConfig, parameter: str, value: float, seed: int) -> tuple:
    cfg = point_config(config, parameter, value, seed)
    result = simulate_link(cfg, load_payloads(cfg))
    summary = ber_summary(result.tx, result.rx)
    logger.debug("{}={} seed={}: BER {}", parameter, value, seed, summary["aggregate_ber"])
    return (value, seed, *summary["per_user_ber"], summary["aggregate_ber"])


def run_ber_sweep(
    config: ExperimentConfig,
    parameter: Optional[str] = None,
    config_source: Optional[str] = None,
) -> RunReport:
    """Sweep ``parameter`` over ``config.sweep.values`` for ``config.sweep.seeds`` seeds.

    Raises:
        ConfigError: fewer than 2 points or fewer than 5 seeds.
    """
    parameter = parameter or config.sweep.parameter
    values = list(config.sweep.values)
    if len(values) < MIN_POINTS:
        raise ConfigError(f"a sweep needs at least {MIN_POINTS} points", field="sweep.values")
    if config.sweep.seeds < MIN_SEEDS:
        raise ConfigError(f"a sweep needs at least {MIN_SEEDS} seeds per point", field="sweep.seeds")

    jobs = [(v, config.master_seed + s) for v in values for s in range(config.sweep.seeds)]
    logger.info("BER sweep over {}: {} points x {} seeds", parameter, len(values), config.sweep.seeds)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            rows = list(pool.map(lambda job: _run_point(config, parameter, *job), jobs))
    else:
        rows = [_run_point(config, parameter, *job) for job in jobs]

    writer = ArtifactWriter(config.output_dir)
    path = write_csv(writer.path(SWEEP_FILE), sweep_columns(config.n_users), rows)
    writer.record("sweep", path)
    report = RunReport(
        command="ber-sweep",
        scheme=config.scheme,
        master_seed=config.master_seed,
        config_echo=config.echo(),
        config_source=config_source,
        artifacts=writer.paths,
        extra={"parameter": parameter, "values": values, "seeds": config.sweep.seeds},
    )
    write_report(report, config.output_dir)
    return report
