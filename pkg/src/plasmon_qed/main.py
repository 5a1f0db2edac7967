#!/usr/bin/env python3
"""
QD-MNP hybrid molecule simulator
Runs one configured experiment and writes results.csv + meta.txt
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .config import Config
from .errors import ConfigError, SimulationError
from .experiments.config import load_experiment_config
from .experiments.runner import run_experiment
from .utils.file_utils import print_file_summary

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_PARTIAL = 4
EXIT_INTERRUPTED = 130


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Quantum optics of a quantum dot coupled to a metal nanoparticle plasmon",
    )
    parser.add_argument("config", type=Path, help="experiment config file (key = value lines)")
    parser.add_argument("--out", type=Path, default=None, help="output directory (overrides output.dir)")
    parser.add_argument("--workers", type=int, default=None, help="worker processes for sweeps (default: all processors)")
    parser.add_argument("--fock-cap", type=int, default=None, help="largest Fock cutoff tried by auto convergence")
    parser.add_argument("--defaults", type=Path, default=None, help="defaults file (default: configs/defaults.conf)")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    return parser


def simulate(config_path: Path, out: Optional[Path], workers: Optional[int], fock_cap: Optional[int], defaults: Optional[Path]) -> int:
    """
    Load, run and report one experiment

    Args:
        config_path: Experiment config file
        out: Output directory override
        workers: Worker process count
        fock_cap: Fock cutoff cap override
        defaults: Defaults file override

    Returns:
        Process exit code
    """
    try:
        if workers is not None and workers < 1:
            raise ConfigError(f"--workers must be >= 1, got {workers}")
        cfg = load_experiment_config(config_path, defaults).with_overrides(output_dir=out, fock_cap=fock_cap)
        result = run_experiment(cfg, workers)
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return EXIT_INTERRUPTED
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except SimulationError as e:
        logger.error(f"Simulation failed: {type(e).__name__}: {e}")
        return EXIT_SOLVER
    except Exception as e:
        logger.error(f"Simulation failed: {e}", exc_info=True)
        return EXIT_FAILURE

    print_file_summary(cfg.output_dir, Config.get_output_files())

    if result.status == "failed":
        logger.error(f"All {len(result.rows)} sweep points failed; see {Config.FAILURES_FILE}")
        return EXIT_SOLVER
    if result.status == "partial":
        logger.warning(f"{len(result.failures)} of {len(result.rows)} sweep points failed; see {Config.FAILURES_FILE}")
        return EXIT_PARTIAL

    logger.info(f"Experiment '{cfg.name}' completed: {len(result.rows)} rows")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> None:
    """Main entry point"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    sys.exit(simulate(args.config, args.out, args.workers, args.fock_cap, args.defaults))


if __name__ == "__main__":
    main()
