"""
Qutrit drive-line calibration and benchmarking toolkit

Calibrates rotation amplitudes of a simulated transmon behind a non-linear
drive line with N-pulse error amplification, and benchmarks the resulting
gates with randomized, purity and cross-entropy benchmarking.

Usage:
    python main.py calibrate npulse --config configs/npulse.env
    python main.py calibrate response-curve --config configs/response_curve.env
    python main.py bench pb --config configs/pb.env --profile fast
    python main.py bench xeb --config configs/xeb_random.env --out results/xeb
    python main.py sim --config configs/sim.env
    python main.py validate --config configs/pb.env
"""

import argparse
import os
import sys
from datetime import datetime, timezone

from loguru import logger

import config
from modules.errors import ConfigError, ToolkitError
from modules.experiments.device import SimulatedDevice
from modules.experiments.runs import result_record, run_protocol
from utils.file_utils import emit_curves, write_manifest, write_result_record, write_summary
from utils.logging_utils import setup_logging

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _common_flags(parser):
    parser.add_argument('--config', required=True, help='Experiment config file (dotenv syntax)')
    parser.add_argument('--out', help='Output directory (default: RESULTS_DIR/<protocol>-<config hash>)')
    parser.add_argument('--seed', type=int, help='Master seed, overrides SEED')
    parser.add_argument('--threads', type=int, help='Simulation worker threads, overrides THREADS')
    parser.add_argument('--profile', choices=config.PROFILES, help='Benchmark scale, overrides PROFILE')
    parser.add_argument('--log-level', default=config.LOG_LEVEL, help='Console and file log level')


def build_parser():
    parser = argparse.ArgumentParser(
        prog='qutrit-cal',
        description='Drive-line calibration and gate benchmarking on a simulated qutrit',
    )
    commands = parser.add_subparsers(dest='command', required=True)

    calibrate = commands.add_parser('calibrate', help='N-pulse calibration')
    calibrate.add_argument('protocol', choices=('npulse', 'response-curve'))
    _common_flags(calibrate)

    bench = commands.add_parser('bench', help='Randomized, purity or cross-entropy benchmarking')
    bench.add_argument('protocol', choices=('rb', 'pb', 'xeb'))
    _common_flags(bench)

    sim = commands.add_parser('sim', help='Simulate the SIM_GATES sequence')
    _common_flags(sim)

    validate = commands.add_parser('validate', help='Check a config file and exit')
    _common_flags(validate)
    return parser


def _overrides(args):
    overrides = {'SEED': args.seed, 'THREADS': args.threads, 'PROFILE': args.profile}
    if args.command == 'sim':
        overrides['PROTOCOL'] = 'sim'
    elif args.command in ('calibrate', 'bench'):
        overrides['PROTOCOL'] = args.protocol
    return overrides


def run(args):
    """Load, run and persist one experiment; returns the output directory or None for validate."""
    logger.info("Step 1: Loading configuration")
    cfg = config.load_experiment_config(args.config, _overrides(args))
    logger.info(f"Config {cfg.source} OK: protocol {cfg['PROTOCOL']}, device {cfg['DEVICE']}, "
                f"profile {cfg['PROFILE']}, seed {cfg['SEED']}, hash {cfg.config_hash[:12]}")
    if args.command == 'validate':
        return None

    started = datetime.now(timezone.utc).isoformat(timespec='seconds')
    out_dir = args.out or os.path.join(config.RESULTS_DIR, f"{cfg['PROTOCOL']}-{cfg.config_hash[:12]}")

    logger.info("Step 2: Building the simulated device")
    device = SimulatedDevice.from_config(cfg)

    logger.info(f"Step 3: Running {cfg['PROTOCOL']}")
    outcome = run_protocol(device)
    logger.debug(f"Superoperator cache: {len(device.backend.cache)} gates, "
                 f"{device.backend.cache.hits} hits, {device.backend.cache.misses} misses")

    logger.info(f"Step 4: Writing results to {out_dir}")
    files = [write_result_record(result_record(cfg, outcome), out_dir)]
    files += emit_curves(outcome.curves, out_dir, outcome.tables)
    files.append(write_summary(outcome.summary, out_dir))
    finished = datetime.now(timezone.utc).isoformat(timespec='seconds')
    write_manifest(out_dir, files, cfg.config_hash, config.TOOLKIT_VERSION, started, finished)
    return out_dir


def main(argv=None):
    """Entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, config.LOG_FILE)
    logger.info(f"=== Qutrit calibration toolkit {config.TOOLKIT_VERSION} ===")

    try:
        out_dir = run(args)
    except ConfigError as e:
        for problem in e.problems:
            logger.error(problem)
        print(e, file=sys.stderr)
        return EXIT_CONFIG
    except ToolkitError as e:
        logger.error(str(e))
        print(e, file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as e:
        logger.error(f"I/O error: {e}")
        print(f"[io] {e}", file=sys.stderr)
        return EXIT_RUNTIME

    if out_dir:
        logger.info(f"Done. Results in {out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
