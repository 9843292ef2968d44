"""Tests for N-pulse sequences, the rotation-error fit and the calibration loops."""

import numpy as np
import pytest

from modules.bloch.npulse_model import npulse_forward_model
from modules.bloch.propagator import DecayRates
from modules.calibration.gate_set import CALIBRATED, LINEAR, POLYNOMIAL, GateSet
from modules.calibration.npulse import (
    CalibrationResult,
    NPulseSettings,
    calibrate_angle,
    calibrate_pi,
    correct_amplitude,
    fit_rotation_error,
    measure_npulse,
)
from modules.calibration.response_curve import ResponsePoint, calibration_order, reconstruct_response_curve
from modules.calibration.sequences import (
    COMPLEMENT,
    PI,
    PI_OVER_K,
    CalSequenceSpec,
    build_sequence,
    default_n_values,
    spec_for_angle,
    variant_for_angle,
)
from modules.driveline.angle_model import AngleModel
from modules.errors import CalibrationError
from modules.sim.gates import IDLE, X_GATE

NO_DECAY = DecayRates(0.0, 0.0)
TAU = 32e-9


def _synthetic(theta, epsilon, rates, **grid):
    spec = spec_for_angle(theta, **grid)
    alpha = (spec.target_angle + epsilon) / 180.0
    return spec, list(zip(spec.n_values, npulse_forward_model(alpha, spec, rates, TAU)))


@pytest.mark.parametrize("theta, expected", [
    (180.0, (PI, 1)),
    (90.0, (PI_OVER_K, 2)),
    (45.0, (PI_OVER_K, 4)),
    (18.0, (PI_OVER_K, 10)),
    (150.0, (COMPLEMENT, 6)),
    (135.0, (COMPLEMENT, 4)),
    (120.0, (COMPLEMENT, 3)),
])
def test_variant_for_angle(theta, expected):
    assert variant_for_angle(theta) == expected


def test_angle_without_sequence_rejected():
    with pytest.raises(CalibrationError):
        variant_for_angle(100.0)


def test_default_grids():
    assert len(default_n_values(PI)) == 31
    assert default_n_values(PI)[-1] == 150
    assert len(default_n_values(COMPLEMENT)) == 51


def test_sequence_lengths(gate_set):
    assert len(build_sequence(spec_for_angle(180.0), 10, gate_set)) == 11
    assert len(build_sequence(spec_for_angle(90.0), 10, gate_set)) == 21
    assert len(build_sequence(spec_for_angle(150.0), 3, gate_set)) == 7
    assert len(build_sequence(spec_for_angle(180.0), 0, gate_set)) == 1


def test_complement_sequence_uses_partner_pulse(gate_set):
    gates = build_sequence(spec_for_angle(150.0), 2, gate_set)
    assert [g.angle for g in gates] == [90.0, 30.0, 150.0, 30.0, 150.0]
    assert all(g.kind == X_GATE for g in gates)


def test_idle_gap_precedes_every_repeated_pulse():
    gates = build_sequence(spec_for_angle(180.0), 3, GateSet(235.0, 15e-9, idle_gap=5e-9))
    assert [g.kind for g in gates] == [X_GATE] + [IDLE, X_GATE] * 3


@pytest.mark.parametrize("kwargs", [
    {"variant": "pi", "k": 2, "n_values": (0, 5)},
    {"variant": "pi_over_k", "k": 1, "n_values": (0, 5)},
    {"variant": "pi", "n_values": (5, 5)},
    {"variant": "pi", "n_values": ()},
    {"variant": "complement", "k": 6, "n_values": (0, 3)},
])
def test_invalid_sequence_specs(kwargs):
    with pytest.raises(CalibrationError):
        CalSequenceSpec(**kwargs)


def test_fit_recovers_over_rotation_under_decay(device_a_rates):
    spec, measured = _synthetic(180.0, 0.9, device_a_rates)
    result = fit_rotation_error(measured, spec, device_a_rates, TAU)
    assert result.epsilon == pytest.approx(0.9, abs=1e-6)
    assert result.variant == PI


@pytest.mark.parametrize("theta, epsilon", [(90.0, 0.0), (45.0, -0.4), (150.0, -1.0), (135.0, 0.6)])
def test_fit_recovers_noise_free_errors(theta, epsilon):
    spec, measured = _synthetic(theta, epsilon, NO_DECAY)
    result = fit_rotation_error(measured, spec, NO_DECAY, TAU)
    assert result.epsilon == pytest.approx(epsilon, abs=1e-6)


def test_fit_with_shot_noise(device_a_rates):
    spec, measured = _synthetic(180.0, 0.9, device_a_rates)
    rng = np.random.default_rng(3)
    noisy = [(n, rng.binomial(4096, p) / 4096) for n, p in measured]
    result = fit_rotation_error(noisy, spec, device_a_rates, TAU)
    assert result.epsilon == pytest.approx(0.9, abs=0.05)
    assert 0 < result.epsilon_stderr < 0.05


def test_fit_needs_enough_repetition_counts():
    spec, measured = _synthetic(180.0, 0.9, NO_DECAY)
    with pytest.raises(CalibrationError):
        fit_rotation_error(measured[:5], spec, NO_DECAY, TAU)


def test_unidentifiable_error_rejected():
    with pytest.raises(CalibrationError):
        CalibrationResult(theta_target=180.0, epsilon=31.0, epsilon_stderr=0.1, alpha_fraction=1.17,
                          variant=PI, k=1, fit=None)


def test_correct_pi_amplitude():
    result = CalibrationResult(180.0, 0.9, 0.0, 180.9 / 180, PI, 1, fit=None)
    corrected = correct_amplitude(335.0, result, 180.0)
    assert corrected == pytest.approx(333.33, abs=0.01)
    assert corrected - 335.0 == pytest.approx(-1.7, abs=0.05)


def test_correct_complement_amplitude():
    current = 335.0 * 150.0 / 180.0
    result = CalibrationResult(150.0, -1.0, 0.0, 149.0 / 180, COMPLEMENT, 6, fit=None)
    assert correct_amplitude(current, result, 150.0) - current == pytest.approx(1.9, abs=0.05)


def test_stub_measurements_use_derived_seeds(stub_backend, gate_set):
    spec = spec_for_angle(180.0, n_max=20)
    measured = measure_npulse(stub_backend, gate_set, spec, 100, seed=5)
    assert [n for n, _ in measured] == [0, 5, 10, 15, 20]
    assert all(p == pytest.approx(0.5) for _, p in measured)
    seeds = [s for _, _, s in stub_backend.requests]
    assert len(set(seeds)) == len(seeds)


def test_perfect_gate_converges_in_one_round(stub_backend, gate_set):
    settings = NPulseSettings(shots=100, n_max=60)
    result = calibrate_angle(90.0, stub_backend, gate_set, NO_DECAY, settings, seed=1)
    assert result.iterations == 1
    assert abs(result.epsilon) < settings.tolerance
    assert gate_set.calibrated[90.0] == pytest.approx(117.5, abs=1e-3)


def test_gate_set_scaling_rules():
    gates = GateSet(240.0, 15e-9, angle_quantum=0.1)
    assert gates.amplitude(90.0) == pytest.approx(120.0)
    assert gates.amplitude(-45.0) == pytest.approx(-60.0)
    assert gates.x(45.04).angle == pytest.approx(45.0)

    gates.set_amplitude(90.0, 118.0)
    assert gates.amplitude(90.0) == pytest.approx(120.0)
    assert gates.copy(scaling=CALIBRATED).amplitude(90.0) == 118.0

    gates.set_amplitude(180.0, 236.0)
    assert gates.a_pi == 236.0

    with pytest.raises(CalibrationError):
        GateSet(240.0, 15e-9, scaling=POLYNOMIAL).amplitude(90.0)
    polynomial = GateSet(240.0, 15e-9, scaling=POLYNOMIAL, angle_model=AngleModel(a_pi=240.0))
    assert polynomial.amplitude(90.0) == pytest.approx(120.0)
    assert gates.scaling == LINEAR


def test_calibration_order_puts_partners_first():
    assert calibration_order([150.0, 90.0, 180.0, 45.0]) == [180.0, 90.0, 45.0, 30.0, 150.0]


def test_calibration_order_needs_pi():
    with pytest.raises(CalibrationError):
        calibration_order([90.0, 45.0])


def test_response_point_deviation():
    point = ResponsePoint(theta=90.0, a_tilde=0.49, amplitude=115.15, compressed_amplitude=117.5)
    assert point.deviation == pytest.approx(1.8)
    assert point.compression == pytest.approx(2.35)


def test_pi_calibration_on_coherent_device(coherent_device):
    settings = NPulseSettings(shots=2048, n_max=60, tolerance=0.1)
    gate_set = coherent_device.gate_set(15.0)
    result = calibrate_pi(coherent_device.backend, gate_set, coherent_device.rates, settings, seed=11,
                          confusion=coherent_device.confusion)
    assert abs(result.epsilon) < 0.1
    assert result.iterations <= settings.max_iterations
    assert gate_set.a_pi == pytest.approx(235.0, rel=0.05)


def test_response_curve_of_a_linear_line(stub_backend, gate_set):
    settings = NPulseSettings(shots=100, n_max=60)
    curve = reconstruct_response_curve([180.0, 90.0, 45.0, 150.0], stub_backend, gate_set, NO_DECAY, settings,
                                       seed=2, pi_calibrated=True)
    assert [p.theta for p in curve.points] == [45.0, 90.0, 150.0, 180.0]
    assert len(curve.calibrations) == 3
    assert max(abs(p.deviation) for p in curve.points) < settings.tolerance
    assert gate_set.angle_model is curve.model
    assert curve.model.residual_max < 0.1
