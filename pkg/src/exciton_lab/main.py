"""Command-line entry point: ``exciton-lab run|validate --config <path>``.

Exit codes: 0 on success, 2 on an invalid configuration or input, 3 on a numerical failure
(embedded in report.json together with the failing module), 1 on any other error.
"""

import argparse
import logging
import platform
import sys
import time
import traceback
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np
import scipy

from exciton_lab import __version__, config_shared
from exciton_lab.chain_mapping import (
    TwoLevelSystem,
    chain_coefficients,
    chain_table,
    discretize,
    propagate_star_vs_chain,
)
from exciton_lab.channel_classicality import channel_family, classify_trajectory, load_snapshots
from exciton_lab.errors import ConfigValidationError, LabValidationError, NumericalError
from exciton_lab.experiment_config import ExperimentConfig, load_config
from exciton_lab.open_dynamics import IntegratorSettings, trajectory_table
from exciton_lab.output_handler import ArtifactWriter
from exciton_lab.transport_lab import (
    disorder_ensemble_sweep,
    efficiency_sweep,
    fmo_experiment,
    log_gamma_grid,
    optimal_dephasing,
    scaling_study,
)
from exciton_lab.utils.metrics import get_prometheus_metrics, record_experiment_metrics
from exciton_lab.utils.setup_logger import set_log_level, setup_logger
from exciton_lab.utils.types import ExperimentKind, RunReport, VersionInfo

logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_UNHANDLED = 1
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

Runner = Callable[[ExperimentConfig, ArtifactWriter], dict[str, Any]]


def _workers(cfg: ExperimentConfig) -> int:
    return cfg.workers or config_shared.get_max_workers()


def _run_transport_sweep(cfg: ExperimentConfig, writer: ArtifactWriter) -> dict[str, Any]:
    block = cfg.block
    net = block.network.build()
    settings = IntegratorSettings.from_config()
    sites = list(block.sites) if block.sites else None
    summary: dict[str, Any] = {}

    if block.optimize:
        optimum = optimal_dephasing(
            net,
            block.time_ps,
            (block.gamma_min, block.gamma_max),
            points=block.points,
            sites=sites,
            settings=settings,
            max_workers=_workers(cfg),
        )
        sweep = optimum.sweep
        summary.update(
            optimal_gamma=optimum.gamma,
            optimal_efficiency=optimum.efficiency,
            optimal_on_boundary=optimum.boundary,
        )
    else:
        grid = log_gamma_grid(block.gamma_min, block.gamma_max, block.points)
        sweep = efficiency_sweep(
            net, grid, block.time_ps, sites=sites, settings=settings, max_workers=_workers(cfg)
        )
    writer.write_csv("sweep.csv", *sweep.table())
    summary.update(argmax_gamma=sweep.argmax_gamma, max_efficiency=sweep.max_efficiency)

    if block.disorder is not None:
        ensemble = disorder_ensemble_sweep(
            net,
            sweep.gamma_grid,
            block.time_ps,
            block.disorder.sigma_cm1,
            block.disorder.realizations,
            cfg.seed,
            settings=settings,
            max_workers=_workers(cfg),
        )
        writer.write_csv("disorder_sweep.csv", *ensemble.table())
        best = int(np.argmax(ensemble.mean_efficiency))
        summary["disorder_argmax_gamma"] = float(ensemble.gamma_grid[best])
    return summary


def _run_scaling(cfg: ExperimentConfig, writer: ArtifactWriter) -> dict[str, Any]:
    block = cfg.block
    result = scaling_study(
        list(block.n_sites),
        block.coupling_cm1,
        energy=block.energy_cm1,
        sink_rate=block.sink_rate,
        max_workers=_workers(cfg),
    )
    writer.write_csv("scaling.csv", *result.table())
    return {"fit_exponent": result.fit_exponent, "fit_prefactor": result.fit_prefactor}


def _run_fmo(cfg: ExperimentConfig, writer: ArtifactWriter) -> dict[str, Any]:
    report = fmo_experiment(
        cfg.block, integrator=IntegratorSettings.from_config(), max_workers=_workers(cfg)
    )
    writer.write_csv("fmo_coherent.csv", *trajectory_table(report.coherent))
    writer.write_csv("fmo_dephased.csv", *trajectory_table(report.dephased))
    if report.optimal is not None and report.optimal.sweep is not None:
        writer.write_csv("fmo_sweep.csv", *report.optimal.sweep.table())
    writer.write_json("fmo_hybrid.json", report.hybrid_payload())

    summary = report.summary()
    summary["conservation_violations"] = {
        "coherent": report.coherent.conservation_violations(),
        "dephased": report.dephased.conservation_violations(),
    }
    return summary


def _run_chainmap(cfg: ExperimentConfig, writer: ArtifactWriter) -> dict[str, Any]:
    block = cfg.block
    density = block.spectral_density
    coefficients = chain_coefficients(density, block.n_max)
    star = discretize(density, block.star_modes)
    comparison = propagate_star_vs_chain(
        TwoLevelSystem(gap=block.gap, tunneling=block.tunneling),
        star,
        block.n_fock,
        np.linspace(0.0, block.t_max, block.t_points),
    )
    writer.write_csv("chain.csv", *chain_table(coefficients))
    writer.write_csv("star_vs_chain.csv", *comparison.table())
    return {
        "spectral_density": density.to_dict(),
        "total_weight": density.total_weight(),
        "system_coupling": coefficients.system_coupling,
        "star_modes": star.count,
        "lanczos_chain_length": comparison.chain.length,
        "max_trace_distance": comparison.max_distance,
        "max_fock_leakage": comparison.max_leakage,
    }


def _run_classify(cfg: ExperimentConfig, writer: ArtifactWriter) -> dict[str, Any]:
    block = cfg.block
    if block.snapshots is not None:
        snapshots = load_snapshots(block.snapshots, project_cp=block.project_cp)
        channels = [s.channel for s in snapshots]
        times = [s.time for s in snapshots]
    else:
        family = block.family
        times = list(family.times)
        channels = channel_family(
            family.kind, family.rate, times, terms=family.terms, seed=cfg.seed
        )
    classification = classify_trajectory(channels, times)
    writer.write_json("classification.json", classification.to_dict())
    return {
        "verdict": classification.verdict.value,
        "intervals": len(classification.reports),
    }


_RUNNERS: dict[ExperimentKind, Runner] = {
    ExperimentKind.TRANSPORT_SWEEP: _run_transport_sweep,
    ExperimentKind.SCALING: _run_scaling,
    ExperimentKind.FMO: _run_fmo,
    ExperimentKind.CHAINMAP: _run_chainmap,
    ExperimentKind.CLASSIFY: _run_classify,
}


def versions() -> VersionInfo:
    return {
        "exciton_lab": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def tolerances() -> dict[str, Any]:
    """Numerical settings in effect for this process."""
    return {
        "integrator": IntegratorSettings.from_config().as_dict(),
        "fock_dimension_cap": config_shared.get_fock_dimension_cap(),
        "fock_leakage_tolerance": config_shared.get_fock_leakage_tolerance(),
        "condition_number_cap": config_shared.get_condition_number_cap(),
        "quadrature_oversampling": config_shared.get_quadrature_oversampling(),
        "optimizer_rtol": config_shared.get_optimizer_rtol(),
        "optimizer_max_iterations": config_shared.get_optimizer_max_iterations(),
        "csv_significant_digits": config_shared.get_csv_significant_digits(),
    }


def _failing_module(error: BaseException) -> str:
    frames = traceback.extract_tb(error.__traceback__)
    return Path(frames[-1].filename).stem if frames else "unknown"


def run_experiment(config_path: str | Path, output_dir: str | Path | None = None) -> int:
    """Run one configured experiment and write its artifacts and report.json.

    Args:
        config_path (str | Path): Experiment config file.
        output_dir (str | Path | None): Overrides the config's output directory.

    Returns:
        int: Process exit code.

    """
    try:
        cfg = load_config(config_path)
    except ConfigValidationError as e:
        logger.error("❌ Invalid config %s: %s", config_path, e)
        return EXIT_INVALID

    writer = ArtifactWriter(output_dir or cfg.output_dir)
    report: RunReport = {
        "experiment": cfg.experiment.value,
        "config": cfg.raw,
        "versions": versions(),
        "tolerances": tolerances(),
    }
    start = time.perf_counter()
    try:
        writer.prepare()
        logger.info("🚀 Running %s into %s", cfg.experiment.value, writer.output_dir)
        report["summary"] = _RUNNERS[cfg.experiment](cfg, writer)
        report["status"], exit_code = "success", EXIT_OK
    except LabValidationError as e:
        logger.error("❌ Invalid input: %s", e)
        report["status"], exit_code = "invalid_input", EXIT_INVALID
        report["error"] = {
            "type": type(e).__name__,
            "message": str(e),
            "module": _failing_module(e),
        }
    except NumericalError as e:
        logger.error("❌ Numerical failure in %s: %s", _failing_module(e), e)
        report["status"], exit_code = "numerical_failure", EXIT_NUMERICAL
        report["error"] = {
            "type": type(e).__name__,
            "message": str(e),
            "module": _failing_module(e),
            "context": {k: v for k, v in vars(e).items() if not k.startswith("_")},
        }
    except Exception as e:
        logger.exception("❌ Unhandled error in %s: %s", _failing_module(e), e)
        report["status"], exit_code = "error", EXIT_UNHANDLED
        report["error"] = {
            "type": type(e).__name__,
            "message": str(e),
            "module": _failing_module(e),
        }

    duration = time.perf_counter() - start
    record_experiment_metrics(cfg.experiment.value, report["status"], duration)
    report["exit_code"] = exit_code
    report["wall_time_seconds"] = duration
    report["artifacts"] = list(writer.written)
    if writer.output_dir.is_dir():
        writer.write_json("report.json", report)
        if config_shared.get_metrics_enabled():
            writer.write_text("metrics.prom", get_prometheus_metrics())
    logger.info("✅ Finished %s with exit code %d", cfg.experiment.value, exit_code)
    return exit_code


def validate(config_path: str | Path) -> int:
    """Validate a config without running it or touching the file system."""
    try:
        cfg = load_config(config_path)
    except ConfigValidationError as e:
        logger.error("❌ Invalid config %s: %s", config_path, e)
        return EXIT_INVALID
    logger.info("✅ Config %s is valid (%s)", config_path, cfg.experiment.value)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exciton-lab", description="Noise-assisted transport and open-system experiments."
    )
    subcommands = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "run an experiment"), ("validate", "validate a config")):
        command = subcommands.add_parser(name, help=help_text)
        command.add_argument("--config", required=True, type=Path, help="experiment JSON config")
        command.add_argument("--verbose", action="store_true", help="log at DEBUG level")
        if name == "run":
            command.add_argument("--output-dir", type=Path, help="override the output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    """Parse arguments and dispatch the subcommand.

    Also the console-script entry point, so unexpected errors are logged here and mapped to
    exit code 1.
    """
    args = build_parser().parse_args(argv)
    try:
        if args.verbose:
            set_log_level(logging.DEBUG)
        if args.command == "validate":
            return validate(args.config)
        return run_experiment(args.config, args.output_dir)
    except Exception as e:
        logger.exception("❌ Unhandled exception: %s", e)
        return EXIT_UNHANDLED


if __name__ == "__main__":
    sys.exit(main())
