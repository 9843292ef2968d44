"""
Amplitude bookkeeping for rotation gates.

A GateSet turns a requested rotation X(theta, phase) into a programmed
amplitude. Three scaling rules are supported:
    linear      A = A_pi * theta / 180
    calibrated  per-angle amplitudes found by N-pulse calibration
    polynomial  A = A_pi * A~(theta) from the fitted angle model
"""

import math

import numpy as np
from loguru import logger

from modules.driveline.angle_model import amplitude_for_angle
from modules.errors import CalibrationError
from modules.sim.gates import GateSpec

LINEAR = "linear"
CALIBRATED = "calibrated"
POLYNOMIAL = "polynomial"
SCALINGS = (LINEAR, CALIBRATED, POLYNOMIAL)


def _key(angle):
    return round(float(angle), 9)


class GateSet:
    """Programmed amplitudes of the X rotations of one pulse duration."""

    def __init__(self, a_pi, duration, scaling=LINEAR, angle_model=None, angle_quantum=None, idle_gap=0.0):
        """
        Initialize the gate set.

        Args:
            a_pi (float): Pi amplitude in mV
            duration (float): Pulse duration in seconds
            scaling (str): "linear", "calibrated" or "polynomial"
            angle_model (AngleModel, optional): Needed for polynomial scaling
            angle_quantum (float, optional): Requested angles are rounded to this step in degrees
            idle_gap (float): Idle time in seconds before every repeated calibration pulse
        """
        if scaling not in SCALINGS:
            raise CalibrationError(f"Unknown amplitude scaling '{scaling}'")
        if not a_pi > 0 or not duration > 0:
            raise CalibrationError("a_pi and duration must be positive")
        self.a_pi = float(a_pi)
        self.duration = float(duration)
        self.scaling = scaling
        self.angle_model = angle_model
        self.angle_quantum = angle_quantum
        self.idle_gap = float(idle_gap)
        self.calibrated = {}

    def copy(self, scaling=None, angle_model=None):
        """A new gate set sharing the calibration data, optionally with another scaling rule."""
        other = GateSet(self.a_pi, self.duration, scaling or self.scaling,
                        angle_model if angle_model is not None else self.angle_model,
                        self.angle_quantum, self.idle_gap)
        other.calibrated = dict(self.calibrated)
        return other

    def set_amplitude(self, angle, amplitude):
        """Store a calibrated amplitude; the 180-degree entry also redefines A_pi."""
        self.calibrated[_key(angle)] = float(amplitude)
        if math.isclose(angle, 180.0):
            self.a_pi = float(amplitude)
        logger.debug(f"Gate set: X{angle:g} -> {amplitude:.4f} mV")

    def quantize(self, angle):
        if not self.angle_quantum:
            return float(angle)
        return round(float(angle) / self.angle_quantum) * self.angle_quantum

    def amplitude(self, angle):
        """
        Programmed amplitude in mV of a rotation.

        Args:
            angle (float): Rotation angle in degrees, within [-180, 180]

        Returns:
            float: Amplitude, negative for negative angles
        """
        angle = self.quantize(angle)
        if angle == 0:
            return 0.0
        sign = math.copysign(1.0, angle)
        theta = abs(angle)
        if theta > 180.0 + 1e-9:
            raise CalibrationError(f"Rotation angle {angle} outside [-180, 180]")
        if self.scaling == CALIBRATED and _key(theta) in self.calibrated:
            return sign * self.calibrated[_key(theta)]
        if math.isclose(theta, 180.0):
            return sign * self.a_pi
        if self.scaling in (CALIBRATED, POLYNOMIAL) and self.angle_model is not None:
            return sign * self.a_pi * amplitude_for_angle(self.angle_model, theta)
        if self.scaling == POLYNOMIAL:
            raise CalibrationError("Polynomial scaling needs a fitted angle model")
        return sign * self.a_pi * theta / 180.0

    def x(self, angle, phase=0.0):
        """Physical rotation about the axis at `phase` radians (0 is X)."""
        angle = self.quantize(angle)
        return GateSpec.x(angle, self.amplitude(angle), self.duration, phase)

    def y(self, angle):
        return self.x(angle, np.pi / 2)

    @staticmethod
    def z(angle):
        return GateSpec.virtual_z(angle)

    def to_dict(self):
        return {
            "a_pi": self.a_pi,
            "duration": self.duration,
            "scaling": self.scaling,
            "calibrated": {f"{k:g}": v for k, v in sorted(self.calibrated.items())},
            "angle_model": self.angle_model.to_dict() if self.angle_model is not None else None,
        }
