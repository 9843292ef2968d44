"""
Reconstruction of the amplitude-to-angle response of the drive line.
"""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from loguru import logger

from modules.calibration.sequences import COMPLEMENT, PI, PI_OVER_K, variant_for_angle
from modules.calibration.npulse import calibrate_angle, calibrate_pi
from modules.driveline.angle_model import fit_angle_model
from modules.errors import CalibrationError

DEFAULT_ANGLES = (18.0, 22.5, 30.0, 36.0, 45.0, 60.0, 90.0, 120.0, 135.0, 150.0, 180.0)


@dataclass(frozen=True)
class ResponsePoint:
    """
    One calibrated rotation.

    Attributes:
        theta (float): Rotation angle in degrees
        a_tilde (float): Calibrated amplitude over the calibrated pi amplitude
        amplitude (float): Calibrated amplitude in mV
        compressed_amplitude (float): A_C = theta/180 * A_pi, the amplitude linear scaling would use
    """

    theta: float
    a_tilde: float
    amplitude: float
    compressed_amplitude: float

    @property
    def deviation(self):
        """Over-rotation of linear scaling, theta - 180 * A~, in degrees."""
        return self.theta - 180.0 * self.a_tilde

    @property
    def compression(self):
        """A_C - A in mV."""
        return self.compressed_amplitude - self.amplitude


@dataclass(frozen=True)
class ResponseCurve:
    """
    Calibrated (A~, theta) points and the polynomial fitted to them.

    Attributes:
        points (list): ResponsePoint list sorted by A~, ending at (1, 180)
        model (AngleModel): Fitted angle model
        residual_max (float): Largest fit residual in degrees
        calibrations (list): CalibrationResult of every angle, in calibration order
    """

    points: List[ResponsePoint]
    model: object
    residual_max: float
    calibrations: List[object] = field(default_factory=list)

    def __post_init__(self):
        a = [p.a_tilde for p in self.points]
        if any(y < x for x, y in zip(a, a[1:])):
            raise CalibrationError("Response points must be sorted by normalised amplitude")
        if not self.points or not np.isclose(self.points[-1].theta, 180.0):
            raise CalibrationError("Response curve must include the pi point")

    def deviation_curve(self):
        """(A~, theta - 180 A~) including the (0, 0) endpoint."""
        return [(0.0, 0.0)] + [(p.a_tilde, p.deviation) for p in self.points]

    def to_dict(self):
        return {
            "model": self.model.to_dict(),
            "residual_max": self.residual_max,
            "points": [
                {
                    "theta": p.theta,
                    "a_tilde": p.a_tilde,
                    "amplitude": p.amplitude,
                    "compressed_amplitude": p.compressed_amplitude,
                    "deviation": p.deviation,
                }
                for p in self.points
            ],
            "calibrations": [c.to_dict() for c in self.calibrations],
        }


def calibration_order(angles):
    """
    Pi first, then the pi/k angles, then their complements.

    Complement angles can only be calibrated once their pi/k partner is.
    """
    rank = {PI: 0, PI_OVER_K: 1, COMPLEMENT: 2}
    keyed = []
    for theta in angles:
        if not 0 < theta <= 180:
            raise CalibrationError(f"Calibration angle {theta} outside (0, 180]")
        variant, k = variant_for_angle(theta)
        keyed.append((rank[variant], k, theta))
    if not any(np.isclose(t, 180.0) for _, _, t in keyed):
        raise CalibrationError("Calibration angles must include 180 degrees")
    ordered = [theta for _, _, theta in sorted(keyed)]
    pi_over_k = {k for r, k, _ in keyed if r == 1}
    for r, k, theta in keyed:
        if r == 2 and k not in pi_over_k:
            ordered.insert(ordered.index(theta), 180.0 / k)
            pi_over_k.add(k)
            logger.info(f"Adding {180.0 / k:g} deg as partner of {theta:g} deg")
    return ordered


def reconstruct_response_curve(angles, backend, gate_set, rates, settings, seed, confusion=None,
                               pi_calibrated=False):
    """
    Calibrate every angle and fit the angle model to the result.

    Args:
        angles (list): Target angles in degrees, within (0, 180], including 180
        backend (Backend): Measurement source
        gate_set (GateSet): Updated in place; receives the fitted angle model
        rates (DecayRates): Decay rates of the fit model
        settings (NPulseSettings): Calibration loop settings
        seed (int): Master seed
        confusion (ConfusionMatrix3, optional): Readout model
        pi_calibrated (bool): Skip the Rabi and pi calibration when already done

    Returns:
        ResponseCurve: Points, fitted model and per-angle calibrations
    """
    calibrations = []
    requested = {round(float(a), 9) for a in angles}
    for theta in calibration_order(angles):
        if np.isclose(theta, 180.0):
            if pi_calibrated:
                continue
            result = calibrate_pi(backend, gate_set, rates, settings, seed, confusion)
        else:
            result = calibrate_angle(theta, backend, gate_set, rates, settings, seed, confusion)
        if round(float(theta), 9) in requested:
            calibrations.append(result)

    a_pi = gate_set.a_pi
    points = []
    for theta in sorted(requested):
        amplitude = gate_set.calibrated.get(round(theta, 9), a_pi if np.isclose(theta, 180.0) else None)
        if amplitude is None:
            raise CalibrationError(f"No calibrated amplitude for {theta:g} deg")
        points.append(ResponsePoint(theta, amplitude / a_pi, amplitude, theta / 180.0 * a_pi))
    points.sort(key=lambda p: p.a_tilde)

    model = fit_angle_model([(p.a_tilde, p.theta) for p in points], a_pi)
    gate_set.angle_model = model
    worst = max(points, key=lambda p: abs(p.deviation))
    logger.info(
        f"Response curve: {len(points)} angles, largest linear-scaling deviation "
        f"{worst.deviation:+.3f} deg at A~ = {worst.a_tilde:.3f}"
    )
    return ResponseCurve(points=points, model=model, residual_max=model.residual_max,
                         calibrations=calibrations)
