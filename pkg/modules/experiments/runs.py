"""
Protocol runs behind the calibrate, bench and sim subcommands.

Every run returns a RunOutcome holding a JSON-ready record, the decay
curves and plot tables to emit, and one summary row per headline result.
Calibration prerequisites (pi first, then the angles a gate set needs)
run automatically before any benchmark.
"""

import re
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
from loguru import logger

import config
from modules.benchmarking.clifford import clifford_table
from modules.benchmarking.protocols import run_pb, run_rb, run_xeb
from modules.benchmarking.sequences import FIXED, RANDOM
from modules.calibration.gate_set import CALIBRATED, LINEAR, POLYNOMIAL
from modules.calibration.npulse import calibrate_angle, calibrate_pi
from modules.calibration.response_curve import calibration_order, reconstruct_response_curve
from modules.driveline.angle_model import amplitude_for_angle, angle_from_amplitude
from modules.driveline.transfer import apply_transfer, invert_transfer
from modules.errors import ConfigError, TransferRangeError
from modules.experiments.device import benchmark_settings, npulse_settings
from modules.readout.mitigation import mitigate
from modules.sim.gates import GateSpec, ideal_sequence_unitary, ideal_unitary
from modules.sim.superoperators import average_gate_infidelity, coherent_error_from_rotation
from utils.seeding import derive_seed

CLIFFORD_ANGLES = (90.0,)
SIM_TOKEN = re.compile(r"^([XYZI])(-?\d+(?:\.\d*)?)$")


@dataclass
class RunOutcome:
    """
    Everything one protocol run hands to the output writers.

    Attributes:
        protocol (str): Protocol name as in config.PROTOCOLS
        record (dict): JSON-ready protocol results
        curves (dict): File stem -> DecayCurve
        tables (dict): File stem -> (header, rows) for non-decay plot data
        summary (list): Flat rows for summary.csv
    """

    protocol: str
    record: Dict[str, object] = field(default_factory=dict)
    curves: Dict[str, object] = field(default_factory=dict)
    tables: Dict[str, tuple] = field(default_factory=dict)
    summary: List[Dict[str, object]] = field(default_factory=list)


def _with_pi(angles):
    return sorted({round(float(a), 9) for a in angles} | {180.0})


def calibrate_gate_set(device, gate_set, angles, seed):
    """
    Calibrate pi (Rabi sweep then N-pulse) and then every requested angle.

    Angles are handled in dependency order, so pi/k partners of complement
    angles are calibrated first.

    Args:
        device (SimulatedDevice): Device to calibrate on
        gate_set (GateSet): Calibrated-scaling gate set, updated in place
        angles (list): Angles in degrees; 180 is always included
        seed (int): Master seed of the calibration

    Returns:
        dict: theta -> CalibrationResult, in calibration order
    """
    settings = npulse_settings(device.cfg)
    results = {}
    for theta in calibration_order(_with_pi(angles)):
        if np.isclose(theta, 180.0):
            result = calibrate_pi(device.backend, gate_set, device.rates, settings, seed, device.confusion)
        else:
            result = calibrate_angle(theta, device.backend, gate_set, device.rates, settings, seed,
                                     device.confusion)
        results[float(theta)] = result
    return results


def linear_epsilon(theta, result):
    """
    Rotation error of the first calibration round, measured with the linearly
    scaled amplitude. Linear scaling is anchored at the calibrated pi, so the
    pi pulse itself has none.
    """
    if np.isclose(theta, 180.0):
        return 0.0
    return result.history[0] if result.history else result.epsilon


def clifford_expected_coherent_error(epsilons):
    """
    Average coherent error per physical pulse of the Clifford table.

    Args:
        epsilons (dict): Pulse angle -> over-rotation in degrees; missing angles count as exact

    Returns:
        float: Mean of (2/3) sin^2(eps/2) over every X pulse of the 24 Cliffords
    """
    angles = [a for gate in clifford_table() for kind, a in gate.decomposition if kind == "x"]
    return float(np.mean([coherent_error_from_rotation(epsilons.get(a, 0.0)) for a in angles]))


def random_angle_expected_coherent_error(model, step=1.0):
    """Coherent error of linear scaling averaged over uniform angles, from the fitted angle model."""
    thetas = np.arange(step / 2, 180.0, step)
    errors = [coherent_error_from_rotation(angle_from_amplitude(model, t / 180.0) - t) for t in thetas]
    return float(np.mean(errors))


def gate_errors(device, gate_set, angles):
    """Simulated average gate infidelity of each X rotation of a gate set."""
    errors = {}
    for theta in angles:
        gate = gate_set.x(theta)
        superop = device.backend.cache.get(gate)
        errors[f"{theta:g}"] = average_gate_infidelity(superop, ideal_unitary(gate))
    return errors


def run_npulse(device, seed):
    """N-pulse calibration of pi and of every CAL_ANGLES_DEG angle at PULSE_DURATION_NS."""
    cfg = device.cfg
    gate_set = device.gate_set(cfg['PULSE_DURATION_NS'])
    calibrations = calibrate_gate_set(device, gate_set, cfg['CAL_ANGLES_DEG'], seed)

    outcome = RunOutcome('npulse')
    entries = []
    for theta, result in calibrations.items():
        eps_linear = linear_epsilon(theta, result)
        entry = result.to_dict()
        entry["linear_epsilon"] = eps_linear
        entry["linear_coherent_error"] = coherent_error_from_rotation(eps_linear)
        entries.append(entry)
        outcome.tables[f"npulse_x{theta:g}"] = (("n", "p_e"), [(n, p) for n, p in result.measured])
        outcome.summary.append({
            "theta": theta,
            "variant": result.variant,
            "k": result.k,
            "epsilon": result.epsilon,
            "epsilon_stderr": result.epsilon_stderr,
            "iterations": result.iterations,
            "amplitude": gate_set.amplitude(theta),
            "linear_epsilon": eps_linear,
        })
    outcome.record = {
        "duration_ns": cfg['PULSE_DURATION_NS'],
        "calibrations": entries,
        "gate_set": gate_set.to_dict(),
        "gate_errors": gate_errors(device, gate_set, sorted(calibrations)),
    }
    return outcome


def run_response_curve(device, seed):
    """Calibrate CAL_ANGLES_DEG, fit the angle model and compare it with the ideal predistortion."""
    cfg = device.cfg
    gate_set = device.gate_set(cfg['PULSE_DURATION_NS'])
    curve = reconstruct_response_curve(
        _with_pi(cfg['CAL_ANGLES_DEG']), device.backend, gate_set, device.rates,
        npulse_settings(cfg), seed, device.confusion,
    )
    pi_at_qubit = apply_transfer(device.line, gate_set.a_pi)

    rows = []
    for p in curve.points:
        polynomial = gate_set.a_pi * amplitude_for_angle(curve.model, p.theta)
        try:
            ideal = invert_transfer(device.line, p.theta / 180.0 * pi_at_qubit)
        except TransferRangeError:
            ideal = float('nan')
        rows.append((p.theta, p.a_tilde, p.amplitude, p.compressed_amplitude, p.deviation,
                     p.compression, polynomial, ideal))

    outcome = RunOutcome('response-curve')
    outcome.tables["response_curve"] = (
        ("theta", "a_tilde", "amplitude", "compressed_amplitude", "deviation",
         "compression", "polynomial_amplitude", "ideal_amplitude"),
        rows,
    )
    outcome.tables["deviation_curve"] = (("a_tilde", "deviation"), curve.deviation_curve())
    record = curve.to_dict()
    record["polynomial_vs_ideal_mv"] = [
        {"theta": r[0], "polynomial_amplitude": r[6], "ideal_amplitude": r[7], "difference": r[6] - r[7]}
        for r in rows
    ]
    record["duration_ns"] = cfg['PULSE_DURATION_NS']
    outcome.record = record
    outcome.summary.append({
        "a": curve.model.a,
        "b": curve.model.b,
        "a_pi": curve.model.a_pi,
        "residual_max": curve.model.residual_max,
        "residual_rms": curve.model.residual_rms,
        "max_deviation": max((p.deviation for p in curve.points), key=abs),
        "linear_expected_E_coh": random_angle_expected_coherent_error(curve.model),
    })
    return outcome


def amplitude_scalings(cfg):
    """Scalings to benchmark; "both" pairs linear with the protocol's corrected scaling."""
    choice = cfg['AMPLITUDE_SCALING']
    if choice != 'both':
        return (choice,)
    if cfg['PROTOCOL'] == 'xeb' and cfg['XEB_MODE'] == RANDOM:
        return (LINEAR, POLYNOMIAL)
    return (LINEAR, CALIBRATED)


def benchmark_angles(cfg):
    """Angles the gate set must have calibrated before benchmarking."""
    if cfg['PROTOCOL'] in ('rb', 'pb'):
        return CLIFFORD_ANGLES
    if cfg['XEB_MODE'] == FIXED:
        return tuple(cfg['XEB_ANGLES_DEG'])
    return ()


def _curve_stem(label, name):
    return f"{label}_{name}"


def run_benchmark(device, seed):
    """
    RB, PB or XEB over every pulse duration and amplitude scaling of the config.

    Each duration gets its own calibration; sequences come from the master
    seed, so every duration and scaling is benchmarked on the same sequences.
    """
    cfg = device.cfg
    protocol = cfg['PROTOCOL']
    settings = benchmark_settings(cfg)
    scalings = amplitude_scalings(cfg)
    durations = tuple(cfg['PULSE_DURATIONS_NS']) or (cfg['PULSE_DURATION_NS'],)
    needs_curve = POLYNOMIAL in scalings
    angles = benchmark_angles(cfg)

    outcome = RunOutcome(protocol)
    preparations = []
    results = []
    for duration in durations:
        logger.info(f"Calibrating {duration:g}-ns gates ({', '.join(scalings)} scaling)")
        cal_seed = derive_seed(seed, f"calibration-{duration:g}ns")
        calibrated = device.gate_set(duration)
        calibrations = calibrate_gate_set(device, calibrated, angles, cal_seed)
        curve = None
        if needs_curve:
            curve = reconstruct_response_curve(
                _with_pi(cfg['CAL_ANGLES_DEG']), device.backend, calibrated, device.rates,
                npulse_settings(cfg), cal_seed, device.confusion, pi_calibrated=True,
            )
        preparations.append({
            "duration_ns": duration,
            "gate_set": calibrated.to_dict(),
            "calibrations": [c.to_dict() for c in calibrations.values()],
            "response_curve": curve.to_dict() if curve is not None else None,
        })
        linear_eps = {theta: linear_epsilon(theta, c) for theta, c in calibrations.items()}

        for scaling in scalings:
            gate_set = calibrated.copy(scaling=scaling)
            runs = _benchmark_runs(cfg, device, gate_set, settings, seed, linear_eps, curve)
            for label_suffix, result, expected, pulse_angles in runs:
                label = f"{protocol}_{duration:g}ns_{scaling}{label_suffix}"
                meta = {"duration_ns": duration, "scaling": scaling}
                if expected is not None and scaling == LINEAR:
                    meta["expected_E_coh"] = expected
                result = result.with_metadata(**meta)
                entry = result.to_dict()
                entry["label"] = label
                entry["gate_errors"] = gate_errors(device, gate_set, pulse_angles)
                results.append(entry)
                outcome.summary.append({"label": label, **result.summary()})
                for name, curve_data in result.curves.items():
                    outcome.curves[_curve_stem(label, name)] = curve_data

    outcome.record = {"preparations": preparations, "results": results}
    return outcome


def _benchmark_runs(cfg, device, gate_set, settings, seed, linear_eps, curve):
    """(label suffix, BenchmarkResult, expected linear E_coh, pulse angles) per run."""
    protocol = cfg['PROTOCOL']
    if protocol in ('rb', 'pb'):
        run = run_pb if protocol == 'pb' else run_rb
        result = run(device.backend, gate_set, settings, seed, device.confusion)
        return [("", result, clifford_expected_coherent_error(linear_eps), (90.0, 180.0))]

    if cfg['XEB_MODE'] == FIXED:
        runs = []
        for theta in cfg['XEB_ANGLES_DEG']:
            result = run_xeb(device.backend, gate_set, settings, seed, FIXED, theta=theta,
                             confusion=device.confusion)
            expected = coherent_error_from_rotation(linear_eps.get(round(float(theta), 9), 0.0))
            runs.append((f"_{theta:g}deg", result, expected, (theta,)))
        return runs

    result = run_xeb(device.backend, gate_set, settings, seed, RANDOM, confusion=device.confusion)
    expected = random_angle_expected_coherent_error(curve.model) if curve is not None else None
    return [("", result, expected, (45.0, 90.0, 135.0, 180.0))]


def parse_gate_list(text, gate_set):
    """
    Parse "X90,Z45,Y90,I20" into GateSpecs.

    X and Y take degrees, Z takes degrees of frame rotation, I takes an idle
    time in nanoseconds.

    Raises:
        ConfigError: On an unreadable token
    """
    gates = []
    for token in [t.strip() for t in text.split(',') if t.strip()]:
        match = SIM_TOKEN.match(token)
        if not match:
            raise ConfigError(f"SIM_GATES: cannot parse gate '{token}'")
        kind, value = match.group(1), float(match.group(2))
        if kind == 'X':
            gates.append(gate_set.x(value))
        elif kind == 'Y':
            gates.append(gate_set.y(value))
        elif kind == 'Z':
            gates.append(gate_set.z(value))
        else:
            gates.append(GateSpec.idle(value * 1e-9))
    return gates


def run_sim(device, seed):
    """Simulate SIM_GATES at nominal linear amplitudes and sample its readout."""
    cfg = device.cfg
    gate_set = device.gate_set(cfg['PULSE_DURATION_NS'], scaling=LINEAR)
    gates = parse_gate_list(cfg['SIM_GATES'], gate_set)
    populations = device.backend.populations(gates)
    record = device.backend.submit(gates, cfg['SIM_SHOTS'], derive_seed(seed, "sim"))
    mitigated = mitigate(record, device.confusion)
    ideal = ideal_sequence_unitary(gates)
    ideal_pe = float(abs(ideal[1, 0]) ** 2)
    logger.info(
        f"{cfg['SIM_GATES']}: p = ({populations[0]:.5f}, {populations[1]:.5f}, {populations[2]:.2e}), "
        f"ideal p_e = {ideal_pe:.5f}, counts {record.counts}"
    )

    outcome = RunOutcome('sim')
    outcome.record = {
        "gates": [{"label": g.label(), "amplitude": g.amplitude, "duration": g.duration} for g in gates],
        "populations": list(populations),
        "ideal_p_e": ideal_pe,
        "counts": record.to_dict(),
        "mitigated": mitigated.as_array().tolist(),
    }
    outcome.summary.append({
        "p_g": populations[0], "p_e": populations[1], "p_f": populations[2], "ideal_p_e": ideal_pe,
        "n_g": record.n_g, "n_e": record.n_e, "n_f": record.n_f,
    })
    return outcome


RUNNERS = {
    'npulse': run_npulse,
    'response-curve': run_response_curve,
    'rb': run_benchmark,
    'pb': run_benchmark,
    'xeb': run_benchmark,
    'sim': run_sim,
}


def run_protocol(device, seed=None):
    """Dispatch to the runner of device.cfg['PROTOCOL']."""
    protocol = device.cfg['PROTOCOL']
    if protocol not in RUNNERS:
        raise ConfigError(f"PROTOCOL: expected one of {', '.join(config.PROTOCOLS)}, got '{protocol}'")
    return RUNNERS[protocol](device, device.cfg['SEED'] if seed is None else seed)


def result_record(cfg, outcome):
    """Deterministic result record: no timestamps, keys sorted when written."""
    return {
        "toolkit_version": config.TOOLKIT_VERSION,
        "config_schema_version": config.CONFIG_SCHEMA_VERSION,
        "protocol": outcome.protocol,
        "config_hash": cfg.config_hash,
        "config": cfg.to_dict(),
        "results": outcome.record,
    }
