"""Tests for the drive-line transfer and the amplitude-to-angle model."""

import math

import numpy as np
import pytest

from modules.driveline.angle_model import (
    AngleModel,
    amplitude_for_angle,
    angle_from_amplitude,
    fit_angle_model,
)
from modules.driveline.transfer import (
    LINEAR,
    ODD_POLYNOMIAL,
    TANH,
    DriveLineTransfer,
    apply_transfer,
    invert_transfer,
    tanh_saturation_for_error,
)
from modules.errors import AngleModelError, TransferRangeError


def test_linear_line_is_identity():
    line = DriveLineTransfer(kind=LINEAR)
    assert apply_transfer(line, 335.0) == 335.0
    assert apply_transfer(line, -120.5) == -120.5


def test_tanh_line_at_saturation_amplitude():
    line = DriveLineTransfer(kind=TANH, saturation=1000.0)
    assert apply_transfer(line, 1000.0) == pytest.approx(1000.0 * math.tanh(1.0), rel=1e-12)
    assert apply_transfer(line, 1000.0) == pytest.approx(761.594, abs=1e-3)


def test_tanh_line_compresses_and_is_odd():
    line = DriveLineTransfer(kind=TANH, saturation=587.5)
    for a in (50.0, 235.0, 700.0):
        out = apply_transfer(line, a)
        assert out < a
        assert apply_transfer(line, -a) == -out


def test_odd_polynomial_line():
    line = DriveLineTransfer(kind=ODD_POLYNOMIAL, coefficients=(1.0, -0.1, 0.0))
    assert apply_transfer(line, 1000.0) == pytest.approx(900.0)
    assert apply_transfer(line, 500.0) == pytest.approx(1000.0 * (0.5 - 0.1 * 0.125))


def test_non_monotonic_polynomial_rejected():
    with pytest.raises(TransferRangeError):
        DriveLineTransfer(kind=ODD_POLYNOMIAL, coefficients=(1.0, -0.5, 0.0))


def test_unknown_kind_rejected():
    with pytest.raises(TransferRangeError):
        DriveLineTransfer(kind="cubic")


def test_amplitude_beyond_range_rejected():
    line = DriveLineTransfer(kind=LINEAR, max_amplitude=1500.0)
    with pytest.raises(TransferRangeError):
        apply_transfer(line, 1500.5)


@pytest.mark.parametrize("line", [
    DriveLineTransfer(kind=LINEAR),
    DriveLineTransfer(kind=TANH, saturation=587.5),
    DriveLineTransfer(kind=ODD_POLYNOMIAL, coefficients=(1.0, -0.1, 0.01)),
])
@pytest.mark.parametrize("target", [-400.0, 0.0, 12.5, 235.0, 500.0])
def test_invert_transfer(line, target):
    programmed = invert_transfer(line, target)
    assert apply_transfer(line, programmed) == pytest.approx(target, abs=1e-9)


def test_invert_transfer_beyond_output_limit():
    line = DriveLineTransfer(kind=TANH, saturation=587.5)
    with pytest.raises(TransferRangeError):
        invert_transfer(line, 600.0)


def test_saturation_for_peak_over_rotation():
    a_pi = 235.0
    a_sat = tanh_saturation_for_error(a_pi, 3.6)
    r = a_pi / a_sat
    x = np.linspace(0.0, 1.0, 2001)
    peak = np.max(180.0 * (np.tanh(x * r) / np.tanh(r) - x))
    assert peak == pytest.approx(3.6, abs=1e-6)


def test_full_amplitude_is_always_pi():
    for a, b in [(0.0, 0.0), (0.01, -0.02), (-0.03, 0.05)]:
        assert angle_from_amplitude(AngleModel(a, b), 1.0) == pytest.approx(180.0, abs=1e-12)


def test_linear_angle_model():
    model = AngleModel()
    assert amplitude_for_angle(model, 90.0) == pytest.approx(0.5, abs=1e-12)
    assert angle_from_amplitude(model, 0.25) == pytest.approx(45.0)
    assert amplitude_for_angle(model, 0.0) == 0.0
    assert amplitude_for_angle(model, 180.0) == 1.0


def test_angle_model_is_odd():
    model = AngleModel(0.01, -0.02)
    for x in (0.1, 0.37, 0.8):
        assert angle_from_amplitude(model, -x) == pytest.approx(-angle_from_amplitude(model, x), abs=1e-12)


@pytest.mark.parametrize("theta", [1.0, 18.0, 45.0, 90.0, 135.0, 150.0, 179.5, -60.0])
def test_angle_model_round_trip(theta):
    model = AngleModel(0.01, -0.02)
    a_tilde = amplitude_for_angle(model, theta)
    assert angle_from_amplitude(model, a_tilde) == pytest.approx(theta, abs=1e-9)


def test_angle_outside_range_rejected():
    with pytest.raises(AngleModelError):
        amplitude_for_angle(AngleModel(), 181.0)


def test_non_monotonic_model_rejected():
    with pytest.raises(AngleModelError) as info:
        AngleModel(a=0.0, b=-1.0)
    assert info.value.b == -1.0


def test_fit_recovers_coefficients_from_exact_points():
    truth = AngleModel(0.01, -0.02)
    x = np.linspace(0.1, 1.0, 10)
    points = [(xi, angle_from_amplitude(truth, xi)) for xi in x]
    model = fit_angle_model(points, a_pi=235.0)
    assert model.a == pytest.approx(0.01, abs=1e-8)
    assert model.b == pytest.approx(-0.02, abs=1e-8)
    assert model.a_pi == 235.0
    assert model.residual_max < 1e-6


def test_fit_needs_a_point_near_pi():
    with pytest.raises(AngleModelError):
        fit_angle_model([(0.1, 18.0), (0.25, 45.0), (0.5, 90.0)], a_pi=235.0)


def test_fit_needs_three_amplitudes():
    with pytest.raises(AngleModelError):
        fit_angle_model([(0.5, 90.0), (1.0, 180.0)], a_pi=235.0)
