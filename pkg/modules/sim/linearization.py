"""
Amplitude pre-compensation of the simulated drive.

Coupling to f Stark-shifts e and dresses the g-e transition, so the rotation
angle of a DRAG pulse bends away from kappa * amplitude * area as the amplitude
grows. A DriveLinearizer tabulates the coherent g-e rotation angle against
amplitude for one pulse length and inverts it. The simulated device then rotates
by kappa * amplitude * area and the drive line is the only non-linear element.
"""

import math

import numpy as np
from loguru import logger
from scipy.interpolate import CubicSpline

from modules.errors import SimulationError
from modules.sim.pulses import PulseEnvelope, envelope_area, synth_drag_envelope
from modules.sim.qutrit import waveform_unitary

GRID_POINTS = 97
# Reach of the table in radians; past it the amplitude ratio at the edge is reused.
MAX_ANGLE = 1.75 * math.pi


def rotation_angles(unitaries):
    """
    Rotation angles of the g-e blocks of a sequence of qutrit unitaries.

    Each block is brought to SU(2) by the square root of its determinant. The
    determinant phase is unwrapped along the sequence, so angles past pi stay on
    the right branch when the first unitary is near identity and neighbours are
    close.

    Args:
        unitaries (list): 3x3 unitaries ordered by increasing drive

    Returns:
        np.ndarray: Angles in radians, in [0, 2 pi]
    """
    blocks = np.array([np.asarray(u)[:2, :2] for u in unitaries])
    dets = np.linalg.det(blocks)
    root = np.sqrt(np.abs(dets)) * np.exp(0.5j * np.unwrap(np.angle(dets)))
    a = blocks[:, 0, 0] / root
    b = blocks[:, 1, 0] / root
    return 2.0 * np.arctan2(np.hypot(a.imag, np.abs(b)), a.real)


class DriveLinearizer:
    """
    Inverse of the simulated angle-versus-amplitude curve for one pulse length.

    Attributes:
        duration (float): Pulse length in seconds
        rate (float): Requested rotation in radians per mV at the qubit
    """

    def __init__(self, model, settings, duration):
        """
        Tabulate the coherent rotation angle of the pulse shape.

        Args:
            model (QutritModel): Device model; only its Hamiltonian is used
            settings (PulseSettings): Pulse shape settings
            duration (float): Pulse length in seconds

        Raises:
            SimulationError: If the angle does not grow monotonically with amplitude
        """
        unit = PulseEnvelope.for_duration(duration, settings, drag_coefficient=settings.drag_for(model.anharmonicity),
                                          amplitude=1.0)
        self.duration = duration
        self.rate = model.drive_scale * envelope_area(unit)

        shape = synth_drag_envelope(unit)
        amplitudes = np.linspace(0.0, MAX_ANGLE / self.rate, GRID_POINTS)
        angles = rotation_angles([waveform_unitary(a * shape, model, duration / unit.n_samples) for a in amplitudes])
        if np.any(np.diff(angles) <= 0):
            raise SimulationError(f"Rotation angle of a {duration * 1e9:g} ns pulse is not monotonic in amplitude")

        self._inverse = CubicSpline(angles, amplitudes)
        self._top_angle = float(angles[-1])
        self._edge_ratio = float(amplitudes[-1] * self.rate / angles[-1])
        pi_ratio = self.drive_amplitude(math.pi / self.rate) * self.rate / math.pi
        logger.debug(f"Drive linearizer {duration * 1e9:g} ns: pi takes {pi_ratio:.5f} x the linear amplitude")

    def drive_amplitude(self, amplitude):
        """Amplitude to synthesise so the pulse rotates by rate * amplitude."""
        target = self.rate * abs(amplitude)
        if target == 0:
            return 0.0
        if target >= self._top_angle:
            scaled = abs(amplitude) * self._edge_ratio
        else:
            scaled = float(self._inverse(target))
        return math.copysign(scaled, amplitude)
