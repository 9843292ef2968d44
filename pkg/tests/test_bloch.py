"""Tests for the analytic Bloch propagator and the N-pulse forward model."""

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from modules.bloch.npulse_model import forward_model_batch, npulse_forward_model
from modules.bloch.propagator import (
    BlochYZ,
    DecayRates,
    RotationPulseModel,
    excited_population,
    idle,
    propagate,
)
from modules.calibration.sequences import spec_for_angle
from modules.errors import CalibrationError, ToolkitError

NO_DECAY = DecayRates(0.0, 0.0)
GROUND = BlochYZ(0.0, -1.0)


def test_pi_rotation_flips_ground_state():
    out = propagate(GROUND, RotationPulseModel(1.0, 20e-9), NO_DECAY)
    assert out.y == pytest.approx(0.0, abs=1e-12)
    assert out.z == pytest.approx(1.0, abs=1e-12)


def test_half_pi_rotation_goes_to_minus_y():
    out = propagate(GROUND, RotationPulseModel(0.5, 20e-9), NO_DECAY)
    assert out.y == pytest.approx(-1.0, abs=1e-12)
    assert out.z == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("omega, gamma1, gamma_phi", [
    (2e6, 1e5, 3e4),
    (5e3, 2e5, 1e6),      # overdamped branch
    (0.0, 1e5, 1e5),
])
def test_long_time_limit_is_the_fixed_point(omega, gamma1, gamma_phi):
    rates = DecayRates(gamma1, gamma_phi)
    t = 2e-3
    pulse = RotationPulseModel(omega * t / math.pi, t)
    out = propagate(BlochYZ(0.3, 0.4), pulse, rates)
    d = gamma1 * (gamma1 + 2 * gamma_phi) + 2 * omega ** 2
    assert out.y == pytest.approx(-2 * omega * gamma1 / d, abs=1e-9)
    assert out.z == pytest.approx(-gamma1 * (gamma1 + 2 * gamma_phi) / d, abs=1e-9)


def _bloch_rhs(omega, rates):
    g1, gp = rates.gamma1, rates.gamma_phi

    def rhs(_, v):
        y, z = v
        return [omega * z - (g1 / 2 + gp) * y, -omega * y - g1 * (z + 1)]

    return rhs


@pytest.mark.parametrize("seed", range(12))
def test_matches_numerical_integration(seed):
    rng = np.random.default_rng(seed)
    rates = DecayRates(rng.uniform(1e4, 1e6), rng.uniform(0.0, 1e6))
    # spans underdamped and overdamped drives
    omega = 10 ** rng.uniform(3, 8)
    t = rng.uniform(1e-8, 5e-6)
    start = BlochYZ(*rng.uniform(-0.6, 0.6, 2))
    out = propagate(start, RotationPulseModel(omega * t / math.pi, t), rates)
    ref = solve_ivp(_bloch_rhs(omega, rates), (0, t), [start.y, start.z], method="DOP853",
                    rtol=1e-12, atol=1e-13)
    assert out.y == pytest.approx(ref.y[0, -1], abs=1e-8)
    assert out.z == pytest.approx(ref.y[1, -1], abs=1e-8)


def _random_drive(rng):
    rates = DecayRates(rng.uniform(1e4, 1e6), rng.uniform(0.0, 1e6))
    omega = 10 ** rng.uniform(3, 8)
    t = rng.uniform(1e-8, 5e-6)
    return rates, omega, t


def test_matches_exact_linear_flow_over_many_draws():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        rates, omega, t = _random_drive(rng)
        g1, gp = rates.gamma1, rates.gamma_phi
        # (y, z, 1) evolves under a constant 3x3 generator
        generator = np.array([[-(g1 / 2 + gp), omega, 0.0], [-omega, -g1, -g1], [0.0, 0.0, 0.0]])
        y0, z0 = rng.uniform(-0.6, 0.6, 2)
        ref = expm(generator * t) @ [y0, z0, 1.0]
        out = propagate(BlochYZ(y0, z0), RotationPulseModel(omega * t / math.pi, t), rates)
        assert out.y == pytest.approx(ref[0], abs=1e-8)
        assert out.z == pytest.approx(ref[1], abs=1e-8)


@pytest.mark.parametrize("seed", range(20))
def test_propagation_composes(seed):
    rng = np.random.default_rng(seed)
    rates, omega, t = _random_drive(rng)
    split = rng.uniform(0.1, 0.9) * t
    start = BlochYZ(*rng.uniform(-0.6, 0.6, 2))

    def pulse(duration):
        return RotationPulseModel(omega * duration / math.pi, duration)

    whole = propagate(start, pulse(t), rates)
    parts = propagate(propagate(start, pulse(split), rates), pulse(t - split), rates)
    assert parts.y == pytest.approx(whole.y, abs=1e-10)
    assert parts.z == pytest.approx(whole.z, abs=1e-10)


@pytest.mark.parametrize("seed", range(20))
def test_dephasing_never_raises_purity(seed):
    rng = np.random.default_rng(100 + seed)
    rates = DecayRates(0.0, rng.uniform(1e4, 1e6))
    omega = 10 ** rng.uniform(3, 8)
    state = BlochYZ(*rng.uniform(-0.7, 0.7, 2))
    for t in rng.uniform(1e-8, 2e-6, 10):
        after = propagate(state, RotationPulseModel(omega * t / math.pi, t), rates)
        assert after.y ** 2 + after.z ** 2 <= state.y ** 2 + state.z ** 2 + 1e-12
        state = after


@pytest.mark.parametrize("seed", range(20))
def test_pure_states_stay_inside_the_sphere(seed):
    rng = np.random.default_rng(200 + seed)
    rates, omega, t = _random_drive(rng)
    angle = rng.uniform(0.0, 2 * math.pi)
    out = propagate(BlochYZ(math.sin(angle), math.cos(angle)), RotationPulseModel(omega * t / math.pi, t), rates)
    assert out.y ** 2 + out.z ** 2 <= 1.0 + 1e-12


def test_idle_relaxes_towards_ground():
    rates = DecayRates.from_times(10e-6, 20e-6)
    out = idle(BlochYZ(0.0, 1.0), 10e-6, rates)
    # p_e decays as exp(-t / T1)
    assert excited_population(out) == pytest.approx(math.exp(-1.0), abs=1e-12)


@pytest.mark.parametrize("z, p_e", [(-1.0, 0.0), (1.0, 1.0), (0.0, 0.5)])
def test_excited_population(z, p_e):
    assert excited_population(BlochYZ(0.0, z)) == p_e


def test_rates_from_times():
    rates = DecayRates.from_times(12.3e-6, 9.86e-6)
    assert rates.gamma1 == pytest.approx(1 / 12.3e-6)
    assert rates.gamma_phi == pytest.approx(1 / 9.86e-6 - 0.5 / 12.3e-6)
    assert DecayRates.from_times(math.inf, math.inf) == NO_DECAY


def test_t2_above_twice_t1_rejected():
    with pytest.raises(ToolkitError):
        DecayRates.from_times(10e-6, 25e-6)


def test_state_outside_sphere_rejected():
    with pytest.raises(ToolkitError):
        BlochYZ(0.9, 0.9)


def test_exact_pi_keeps_equator():
    spec = spec_for_angle(180.0)
    p_e = npulse_forward_model(1.0, spec, NO_DECAY, 32e-9)
    np.testing.assert_allclose(p_e, 0.5, atol=1e-12)


def test_exact_pi_over_two_keeps_equator():
    spec = spec_for_angle(90.0)
    assert spec.k == 2
    p_e = npulse_forward_model(0.5, spec, NO_DECAY, 32e-9)
    np.testing.assert_allclose(p_e, 0.5, atol=1e-12)


def test_over_rotation_oscillates_with_period_of_two_hundred_pulses(device_a_rates):
    spec = spec_for_angle(180.0, n_values=range(0, 151))
    p_e = npulse_forward_model(1 + 0.9 / 180, spec, NO_DECAY, 32e-9)
    # after N pulses the state has turned by N * 0.9 deg out of the equator
    n = np.arange(151)
    np.testing.assert_allclose(p_e, 0.5 + 0.5 * np.sin(np.deg2rad(0.9 * n)), atol=1e-9)

    damped = npulse_forward_model(1 + 0.9 / 180, spec, device_a_rates, 32e-9)
    assert damped[100] > 0.5
    assert abs(damped[100] - 0.5) < abs(p_e[100] - 0.5)


def test_batch_matches_single_evaluation(device_a_rates):
    spec = spec_for_angle(150.0)
    alphas = np.array([0.82, 150 / 180, 0.85])
    batch = forward_model_batch(alphas, spec, device_a_rates, 15e-9)
    for row, alpha in zip(batch, alphas):
        np.testing.assert_allclose(row, npulse_forward_model(alpha, spec, device_a_rates, 15e-9), atol=1e-14)


def test_unknown_sequence_rejected():
    with pytest.raises(CalibrationError):
        npulse_forward_model(1.0, "pi", NO_DECAY, 32e-9)
