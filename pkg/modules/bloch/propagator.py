"""
Closed-form two-level propagator for a resonant x drive with T1/T2 decay.

Bloch components use z = p_e - p_g (ground state at z = -1). Under a constant
Rabi rate Omega the yz components obey
    dy/dt =  Omega z - (Gamma1/2 + Gamma_phi) y
    dz/dt = -Omega y - Gamma1 (z + 1)
whose solution is a damped 2x2 rotation about the fixed point
    y* = -2 Omega Gamma1 / D,  z* = -Gamma1 (Gamma1 + 2 Gamma_phi) / D,
    D = Gamma1 (Gamma1 + 2 Gamma_phi) + 2 Omega^2.
"""

import math
from dataclasses import dataclass

import numpy as np

from modules.errors import ToolkitError

MODULE = "bloch-analytic"


@dataclass(frozen=True)
class DecayRates:
    """
    Relaxation and pure-dephasing rates in 1/s.

    Attributes:
        gamma1 (float): 1/T1
        gamma_phi (float): 1/T2 - 1/(2 T1)
    """

    gamma1: float
    gamma_phi: float

    def __post_init__(self):
        if self.gamma1 < 0 or self.gamma_phi < 0:
            raise ToolkitError(
                f"Decay rates must be non-negative (gamma1={self.gamma1}, gamma_phi={self.gamma_phi})",
                module=MODULE,
            )

    @classmethod
    def from_times(cls, t1, t2):
        """
        Build rates from T1 and T2 (seconds). Infinite times give zero rates.

        Raises:
            ToolkitError: If T2 > 2 T1
        """
        gamma1 = 0.0 if math.isinf(t1) else 1.0 / t1
        inv_t2 = 0.0 if math.isinf(t2) else 1.0 / t2
        gamma_phi = inv_t2 - gamma1 / 2
        if gamma_phi < -1e-12 * max(gamma1, 1.0):
            raise ToolkitError(f"T2 ({t2}) must not exceed 2*T1 ({2 * t1})", module=MODULE)
        return cls(gamma1, max(gamma_phi, 0.0))


@dataclass(frozen=True)
class BlochYZ:
    """y and z components of the Bloch vector."""

    y: float
    z: float

    def __post_init__(self):
        if self.y ** 2 + self.z ** 2 > 1 + 1e-9:
            raise ToolkitError(f"Bloch vector ({self.y}, {self.z}) lies outside the sphere", module=MODULE)


@dataclass(frozen=True)
class RotationPulseModel:
    """
    Square-pulse equivalent of a rotation.

    Attributes:
        alpha_fraction (float): Rotation angle as a fraction of pi
        tau (float): Duration in seconds; Omega = alpha_fraction * pi / tau
    """

    alpha_fraction: float
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ToolkitError(f"Pulse duration must be positive, got {self.tau}", module=MODULE)

    @property
    def omega(self):
        return self.alpha_fraction * math.pi / self.tau


def affine_step(omega, t, rates):
    """
    Affine map (M, c) with (y, z)(t) = M @ (y, z)(0) + c for constant drive.

    Works elementwise on numpy arrays of omega so that many pulse amplitudes can
    be propagated at once. The imaginary-nu branch uses cosh and sinh/kappa.

    Args:
        omega: Rabi rate(s) in rad/s (float or array)
        t (float): Evolution time in seconds
        rates (DecayRates): Decay rates

    Returns:
        tuple: (m11, m12, m21, m22, cy, cz), each shaped like omega
    """
    omega = np.asarray(omega, dtype=float)
    g1, gp = rates.gamma1, rates.gamma_phi
    g = (g1 - 2 * gp) / 4
    nu_sq = omega ** 2 - g ** 2

    d = (3 * g1 + 2 * gp) / 4
    pos = nu_sq > 0
    nu = np.sqrt(np.abs(nu_sq))
    arg = nu * t
    small = arg < 1e-6
    safe_nu = np.where(small, 1.0, nu)

    # decay * cos(nu t) and decay * sin(nu t)/nu; the hyperbolic branch is
    # written with exponentials so cosh never overflows before the decay applies.
    decay = math.exp(-d * t)
    grow = np.exp(np.where(pos, 0.0, (nu - d) * t))
    shrink = np.exp(np.where(pos, 0.0, -(nu + d) * t))
    dc = np.where(pos, decay * np.cos(arg), 0.5 * (grow + shrink))
    ds = np.where(pos, decay * np.sin(arg), 0.5 * (grow - shrink)) / safe_nu
    # Series in nu^2, valid on both branches.
    dc = np.where(small, decay * (1 - nu_sq * t ** 2 / 2), dc)
    ds = np.where(small, decay * t * (1 - nu_sq * t ** 2 / 6), ds)

    m11 = dc + ds * g
    m12 = ds * omega
    m21 = -m12
    m22 = dc - ds * g

    denom = g1 * (g1 + 2 * gp) + 2 * omega ** 2
    safe = np.where(denom > 0, denom, 1.0)
    shift_y = np.where(denom > 0, 2 * omega * g1 / safe, 0.0)
    shift_z = np.where(denom > 0, g1 * (g1 + 2 * gp) / safe, 0.0)

    # tilde(t) = M tilde(0) with tilde = state + shift
    cy = m11 * shift_y + m12 * shift_z - shift_y
    cz = m21 * shift_y + m22 * shift_z - shift_z
    return m11, m12, m21, m22, cy, cz


def propagate(state, pulse, rates):
    """
    Evolve a yz Bloch vector through one square-equivalent pulse.

    Args:
        state (BlochYZ): Initial y, z
        pulse (RotationPulseModel): Rotation fraction and duration
        rates (DecayRates): Decay rates

    Returns:
        BlochYZ: State after the pulse
    """
    m11, m12, m21, m22, cy, cz = affine_step(pulse.omega, pulse.tau, rates)
    y = float(m11 * state.y + m12 * state.z + cy)
    z = float(m21 * state.y + m22 * state.z + cz)
    return BlochYZ(y, z)


def idle(state, t, rates):
    """Pure decay for a time t (Omega = 0)."""
    if t <= 0:
        return state
    m11, m12, m21, m22, cy, cz = affine_step(0.0, t, rates)
    return BlochYZ(float(m11 * state.y + m12 * state.z + cy), float(m21 * state.y + m22 * state.z + cz))


def excited_population(state):
    """p_e = (1 + z) / 2."""
    return (1.0 + state.z) / 2.0
