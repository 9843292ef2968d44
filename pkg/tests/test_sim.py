"""Tests for pulse synthesis, the Lindblad model and per-gate superoperators."""

import math

import numpy as np
import pytest

from modules.driveline.transfer import LINEAR, DriveLineTransfer
from modules.errors import SimulationError
from modules.experiments.device import SimulatedDevice
from modules.sim.gates import GateSpec, ideal_sequence_unitary, ideal_unitary
from modules.sim.linearization import rotation_angles
from modules.sim.pulses import PulseEnvelope, PulseSettings, envelope_area, synth_drag_envelope
from modules.sim.qutrit import (
    QutritModel,
    basis_density,
    evolve,
    idle_propagator,
    populations,
    unvectorize,
    vectorize,
    waveform_unitary,
)
from modules.sim.sequences import run_sequence, sequence_populations
from modules.sim.superoperators import (
    GateSuperoperator,
    SuperoperatorCache,
    average_gate_infidelity,
    coherent_error_from_rotation,
    gate_superoperator,
    qubit_block,
    unitary_superoperator,
)

ALPHA = -2 * math.pi * 183e6
SETTINGS = PulseSettings()
PAULIS = [np.array(m, dtype=complex).reshape(4) for m in ([[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]])]


def _envelope(amplitude=100.0, drag=0.0, phase=0.0):
    return PulseEnvelope.for_duration(15e-9, SETTINGS, drag_coefficient=drag, amplitude=amplitude, phase=phase)


def test_zero_amplitude_waveform_is_silent():
    assert np.all(synth_drag_envelope(_envelope(0.0, drag=1e-9)) == 0)


def test_peak_equals_amplitude():
    waveform = synth_drag_envelope(_envelope(235.0))
    assert waveform.size == 30
    assert np.max(waveform.real) == pytest.approx(235.0, rel=1e-12)


def test_no_drag_means_no_quadrature():
    assert np.all(synth_drag_envelope(_envelope(235.0, drag=0.0)).imag == 0)


def test_drag_quadrature_is_antisymmetric():
    waveform = synth_drag_envelope(_envelope(235.0, drag=-1 / (2 * ALPHA)))
    np.testing.assert_allclose(waveform.imag, -waveform.imag[::-1], atol=1e-9)


def test_phase_rotates_the_drive_axis():
    waveform = synth_drag_envelope(_envelope(235.0, phase=math.pi / 2))
    np.testing.assert_allclose(waveform.real, 0.0, atol=1e-9)
    assert np.max(waveform.imag) == pytest.approx(235.0)


def test_envelope_area_shorter_than_duration():
    area = envelope_area(_envelope())
    assert 0.3 * 15e-9 < area < 15e-9


def test_duration_must_match_sigma():
    with pytest.raises(SimulationError):
        PulseEnvelope(duration=15e-9, sigma=1e-9)


def test_drag_default_follows_anharmonicity():
    assert SETTINGS.drag_for(ALPHA) == pytest.approx(-1 / (2 * ALPHA))
    assert PulseSettings(drag_coefficient=0.0).drag_for(ALPHA) == 0.0


def test_relaxation_from_excited_state():
    model = QutritModel(anharmonicity=ALPHA, t1=10e-6, t2=20e-6)
    rho = unvectorize(idle_propagator(model, 10e-6) @ vectorize(basis_density(1)))
    p_g, p_e, p_f = populations(rho)
    assert p_e == pytest.approx(math.exp(-1.0), abs=1e-9)
    assert p_g == pytest.approx(1 - math.exp(-1.0), abs=1e-9)
    assert p_f == pytest.approx(0.0, abs=1e-12)


def test_idle_is_trace_preserving():
    model = QutritModel(anharmonicity=ALPHA, t1=10e-6, t2=8e-6)
    superop = GateSuperoperator(idle_propagator(model, 3e-6)).validate()
    assert superop.trace_error() < 1e-10


def test_evolution_keeps_a_valid_state():
    model = QutritModel(anharmonicity=ALPHA, t1=20e-6, t2=15e-6, drive_scale=1e6)
    rho = evolve(basis_density(0), synth_drag_envelope(_envelope(200.0, drag=1e-10)), model,
                 SETTINGS.sample_period)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)


def test_rk4_matches_exact_propagation():
    model = QutritModel(anharmonicity=ALPHA, t1=20e-6, t2=15e-6, drive_scale=1e6)
    waveform = synth_drag_envelope(_envelope(200.0))
    exact = evolve(basis_density(0), waveform, model, SETTINGS.sample_period, method="expm")
    rk4 = evolve(basis_density(0), waveform, model, SETTINGS.sample_period, substeps=16, method="rk4")
    np.testing.assert_allclose(rk4, exact, atol=1e-5)


def test_t2_above_twice_t1_rejected():
    with pytest.raises(SimulationError):
        QutritModel(anharmonicity=ALPHA, t1=10e-6, t2=25e-6)


def test_virtual_z_round_trip_is_identity():
    gates = [GateSpec.virtual_z(37.5), GateSpec.virtual_z(-37.5)]
    np.testing.assert_allclose(ideal_sequence_unitary(gates), np.eye(2), atol=1e-15)


def test_ideal_y_rotation():
    u = ideal_unitary(GateSpec.x(180.0, 0.0, 15e-9, phase=math.pi / 2))
    # Y(pi) maps g to e with a real amplitude
    assert u[1, 0] == pytest.approx(1.0, abs=1e-12)


def test_empty_sequence_stays_in_ground(coherent_device):
    assert sequence_populations([], coherent_device.backend.cache) == (1.0, 0.0, 0.0)


def test_nominal_pi_pulse_inverts_the_qubit(coherent_device):
    gate = GateSpec.x(180.0, 235.0, 15e-9)
    p_g, p_e, p_f = coherent_device.backend.populations([gate])
    assert p_e >= 0.999
    assert p_f <= 2e-4


def test_pi_pulse_with_device_b_lifetimes(fast_config):
    device = SimulatedDevice.from_config(fast_config(DEVICE='B', LINE_KIND='linear', READOUT_ERROR=0.0))
    p_g, p_e, p_f = device.backend.populations([GateSpec.x(180.0, 235.0, 15e-9)])
    assert p_e >= 0.999
    assert p_f <= 2e-4


def test_mis_set_amplitude_raises_infidelity(coherent_device):
    nominal = GateSpec.x(180.0, 235.0, 15e-9)
    low = GateSpec.x(180.0, 0.8 * 235.0, 15e-9)
    cache = coherent_device.backend.cache
    target = ideal_unitary(nominal)
    assert 0.0 <= average_gate_infidelity(cache.get(nominal), target) < average_gate_infidelity(cache.get(low), target)


def test_cache_reuses_superoperators(coherent_device):
    cache = SuperoperatorCache(coherent_device.line, coherent_device.model, coherent_device.pulse_settings)
    gate = GateSpec.x(90.0, 117.5, 15e-9)
    first = cache.get(gate)
    assert cache.get(gate) is first
    assert (cache.hits, cache.misses, len(cache)) == (1, 1, 1)
    cache.get(GateSpec.virtual_z(12.0))
    assert len(cache) == 1


def test_amplitude_without_duration_rejected(coherent_device):
    with pytest.raises(SimulationError):
        gate_superoperator(GateSpec.x(90.0, 10.0, 0.0), DriveLineTransfer(kind=LINEAR),
                           coherent_device.model, SETTINGS)


def test_coherent_error_of_over_rotation():
    assert coherent_error_from_rotation(0.0) == 0.0
    assert coherent_error_from_rotation(3.6) == pytest.approx(2 / 3 * math.sin(math.radians(1.8)) ** 2)
    assert coherent_error_from_rotation(3.6) == pytest.approx(6.58e-4, rel=1e-2)


def test_ideal_unitary_has_zero_infidelity():
    u = ideal_unitary(GateSpec.x(90.0, 0.0, 15e-9))
    qutrit = np.eye(3, dtype=complex)
    qutrit[:2, :2] = u
    assert average_gate_infidelity(unitary_superoperator(qutrit), u) == pytest.approx(0.0, abs=1e-12)


def _rotation_deg(superop):
    # the Pauli transfer matrix of a rotation by theta has trace 1 + 2 cos(theta)
    block = qubit_block(superop.matrix)
    trace = sum(0.5 * np.real(p.conj() @ block @ p) for p in PAULIS)
    return math.degrees(math.acos(np.clip((trace - 1) / 2, -1.0, 1.0)))


@pytest.mark.parametrize("theta", [10.0, 45.0, 90.0, 135.0, 170.0])
def test_rotation_is_linear_in_amplitude(coherent_device, theta):
    gate = GateSpec.x(theta, 235.0 * theta / 180.0, 15e-9)
    assert _rotation_deg(coherent_device.backend.cache.get(gate)) == pytest.approx(theta, abs=0.05)


def test_rotation_angles_follow_the_branch_past_pi():
    thetas = np.linspace(0.0, 1.9 * math.pi, 60)
    unitaries = []
    for theta in thetas:
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        u = np.eye(3, dtype=complex)
        # the global phase winds past pi before the last rotation
        u[:2, :2] = np.exp(0.3j * theta) * np.array([[c, -1j * s], [-1j * s, c]])
        unitaries.append(u)
    np.testing.assert_allclose(rotation_angles(unitaries), thetas, atol=1e-12)


def test_linearizer_is_odd_and_close_to_identity(coherent_device):
    cache = coherent_device.backend.cache
    linearizer = cache.linearizer(15e-9)
    assert cache.linearizer(15e-9) is linearizer
    # the reference pi amplitude rotates by exactly pi
    assert linearizer.rate * 235.0 == pytest.approx(math.pi, rel=1e-12)
    assert linearizer.drive_amplitude(0.0) == 0.0
    assert linearizer.drive_amplitude(-117.5) == -linearizer.drive_amplitude(117.5)
    assert linearizer.drive_amplitude(117.5) == pytest.approx(117.5, rel=0.03)


def test_linearizer_drive_reaches_the_requested_angle(coherent_device):
    model, settings = coherent_device.model, coherent_device.pulse_settings
    linearizer = coherent_device.backend.cache.linearizer(15e-9)
    unit = PulseEnvelope.for_duration(15e-9, settings, drag_coefficient=settings.drag_for(model.anharmonicity),
                                      amplitude=1.0)
    shape = synth_drag_envelope(unit)
    drive = linearizer.drive_amplitude(150.0)
    # a fine ramp up to the drive keeps the determinant phase on one branch
    ramp = [waveform_unitary(a * shape, model, 15e-9 / unit.n_samples) for a in np.linspace(0.0, drive, 40)]
    assert rotation_angles(ramp)[-1] == pytest.approx(linearizer.rate * 150.0, abs=1e-5)


def test_linearization_can_be_switched_off(coherent_device):
    settings = PulseSettings(linearize=False)
    assert SuperoperatorCache(coherent_device.line, coherent_device.model, settings).linearizer(15e-9) is None


def test_expm_rejects_substeps():
    model = QutritModel(anharmonicity=ALPHA, t1=20e-6, t2=15e-6, drive_scale=1e6)
    with pytest.raises(SimulationError, match="rk4"):
        evolve(basis_density(0), synth_drag_envelope(_envelope(200.0)), model, SETTINGS.sample_period, substeps=8)
    with pytest.raises(SimulationError, match="rk4"):
        PulseSettings(substeps=8)
    assert PulseSettings(method="rk4", substeps=8).substeps == 8


def test_halving_rk4_substep_leaves_pi_pulse_unchanged(device_b):
    gate = GateSpec.x(180.0, 235.0, 15e-9)
    line = DriveLineTransfer(kind=LINEAR)
    ground = vectorize(basis_density(0))
    finals = []
    for substeps in (16, 32):
        superop = gate_superoperator(gate, line, device_b.model, PulseSettings(method="rk4", substeps=substeps))
        finals.append(populations(unvectorize(superop.apply(ground))))
    np.testing.assert_allclose(finals[0], finals[1], atol=1e-7)


def test_two_half_pi_pulses_make_a_pi_pulse(coherent_device):
    backend = coherent_device.backend
    half = GateSpec.x(90.0, 117.5, 15e-9)
    twice = backend.populations([half, half])
    np.testing.assert_allclose(twice, backend.populations([GateSpec.x(180.0, 235.0, 15e-9)]), atol=1e-3)
    # same total duration as the two halves
    np.testing.assert_allclose(twice, backend.populations([GateSpec.x(180.0, 117.5, 30e-9)]), atol=1e-3)


def test_identity_sequence_decays_with_t1(fast_config):
    device = SimulatedDevice.from_config(fast_config(DEVICE='B', LINE_KIND='linear', READOUT_ERROR=0.0))
    pi = GateSpec.x(180.0, 235.0, 15e-9)
    gates = [pi] + [GateSpec.idle(15e-9)] * 4096
    expected = device.backend.populations([pi])[1] * math.exp(-4096 * 15e-9 / 60.9e-6)
    assert device.backend.populations(gates)[1] == pytest.approx(expected, abs=1e-4)

    record = run_sequence(gates, device.model, device.line, 200_000, seed=5, cache=device.backend.cache)
    assert record.n_e / record.shots == pytest.approx(expected, abs=5e-3)
