"""
Gate descriptions exchanged between calibration, benchmarking and backends.
"""

from dataclasses import dataclass

import numpy as np

X_GATE = "x"
VIRTUAL_Z = "z"
IDLE = "idle"


@dataclass(frozen=True)
class GateSpec:
    """
    One element of a pulse sequence.

    Attributes:
        kind (str): "x" (physical DRAG pulse), "z" (virtual frame update) or "idle"
        angle (float): Requested rotation angle in degrees (X) or frame phase in degrees (Z)
        phase (float): Drive axis in radians; 0 is X, pi/2 is Y
        amplitude (float): Programmed envelope amplitude in mV, before the drive line
        duration (float): Pulse or idle length in seconds
    """

    kind: str
    angle: float = 0.0
    phase: float = 0.0
    amplitude: float = 0.0
    duration: float = 0.0

    @classmethod
    def x(cls, angle, amplitude, duration, phase=0.0):
        return cls(X_GATE, float(angle), float(phase), float(amplitude), float(duration))

    @classmethod
    def virtual_z(cls, angle):
        return cls(VIRTUAL_Z, float(angle))

    @classmethod
    def idle(cls, duration):
        return cls(IDLE, duration=float(duration))

    @property
    def is_physical(self):
        return self.kind == X_GATE

    @property
    def cache_key(self):
        return (self.kind, self.angle, self.phase, self.amplitude, self.duration)

    def label(self):
        if self.kind == VIRTUAL_Z:
            return f"Z{self.angle:g}"
        if self.kind == IDLE:
            return f"I{self.duration * 1e9:g}ns"
        axis = "Y" if np.isclose(self.phase, np.pi / 2) else "X"
        return f"{axis}{self.angle:g}"


def ideal_unitary(gate):
    """
    Ideal 2x2 action of a gate on the computational subspace.

    X(theta, phase) = exp(-i theta/2 (cos(phase) sx + sin(phase) sy)),
    Z(phi) = diag(1, exp(i phi)), idle = identity.

    Args:
        gate (GateSpec): The gate

    Returns:
        np.ndarray: 2x2 complex unitary
    """
    if gate.kind == VIRTUAL_Z:
        return np.diag([1.0, np.exp(1j * np.deg2rad(gate.angle))])
    if gate.kind == IDLE:
        return np.eye(2, dtype=complex)
    half = np.deg2rad(gate.angle) / 2
    off = -1j * np.sin(half)
    return np.array([
        [np.cos(half), off * np.exp(-1j * gate.phase)],
        [off * np.exp(1j * gate.phase), np.cos(half)],
    ])


def ideal_sequence_unitary(gates):
    """Product of ideal_unitary over a sequence, first gate applied first."""
    u = np.eye(2, dtype=complex)
    for gate in gates:
        u = ideal_unitary(gate) @ u
    return u
