"""
Three-level Lindblad model of a driven transmon.

Rotating frame of the g-e transition, basis (g, e, f):
    H(t) = alpha |f><f| + 1/2 (Omega(t) a^dag + Omega(t)^* a)
    Omega(t) = drive_scale * waveform(t)
Collapse operators: g<-e at 1/T1, e<-f at ef_relaxation_scale/T1 and
number-operator dephasing at Gamma_phi = 1/T2 - 1/(2 T1), the f coherence
dephasing ef_dephasing_scale times faster than e.

Superoperators act on row-major vectorised density matrices,
vec(A rho B) = (A kron B^T) vec(rho).
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from loguru import logger
from scipy.linalg import expm

from modules.errors import SimulationError

DIM = 3
LOWERING = np.array([[0, 1, 0], [0, 0, math.sqrt(2)], [0, 0, 0]], dtype=complex)
RAISING = LOWERING.conj().T
IDENTITY = np.eye(DIM, dtype=complex)

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-9
EIGEN_TOL = 1e-9
RK4_SUBSTEPS = 4


@dataclass(frozen=True)
class QutritModel:
    """
    Physical parameters of the simulated device.

    Attributes:
        anharmonicity (float): alpha in rad/s, negative for a transmon
        t1 (float): Energy relaxation time in seconds (math.inf disables it)
        t2 (float): Coherence time in seconds (math.inf disables dephasing)
        ef_relaxation_scale (float): f->e relaxation rate in units of 1/T1
        ef_dephasing_scale (float): g-f coherence dephasing in units of Gamma_phi
        drive_scale (float): Rabi rate in rad/s per mV reaching the qubit
        confusion (ConfusionMatrix3, optional): Readout model
    """

    anharmonicity: float
    t1: float
    t2: float
    ef_relaxation_scale: float = 2.0
    ef_dephasing_scale: float = 4.0
    drive_scale: float = 1.0
    confusion: Optional[object] = None

    def __post_init__(self):
        if self.anharmonicity == 0:
            raise SimulationError("anharmonicity must be non-zero")
        if not self.t1 > 0 or not self.t2 > 0:
            raise SimulationError("T1 and T2 must be positive")
        if self.t2 > 2 * self.t1 * (1 + 1e-12):
            raise SimulationError(f"T2 ({self.t2}) must not exceed 2*T1 ({2 * self.t1})")
        if self.ef_relaxation_scale < 0 or self.ef_dephasing_scale < 0:
            raise SimulationError("f-level scale factors must be non-negative")

    @property
    def gamma1(self):
        return 0.0 if math.isinf(self.t1) else 1.0 / self.t1

    @property
    def gamma_phi(self):
        inv_t2 = 0.0 if math.isinf(self.t2) else 1.0 / self.t2
        return max(inv_t2 - self.gamma1 / 2, 0.0)

    def collapse_operators(self):
        ops = []
        if self.gamma1 > 0:
            ops.append(math.sqrt(self.gamma1) * np.outer(_ket(0), _ket(1)))
            if self.ef_relaxation_scale > 0:
                ops.append(math.sqrt(self.ef_relaxation_scale * self.gamma1) * np.outer(_ket(1), _ket(2)))
        if self.gamma_phi > 0:
            # D[sqrt(2 Gamma_phi) n] dephases the (i, j) coherence at Gamma_phi (n_i - n_j)^2.
            number = np.diag([0.0, 1.0, math.sqrt(self.ef_dephasing_scale)]).astype(complex)
            ops.append(math.sqrt(2 * self.gamma_phi) * number)
        return ops

    def hamiltonian(self, omega):
        """Rotating-frame Hamiltonian in rad/s for a complex Rabi rate omega."""
        h = np.zeros((DIM, DIM), dtype=complex)
        h[2, 2] = self.anharmonicity
        return h + 0.5 * (omega * RAISING + np.conj(omega) * LOWERING)

    def with_confusion(self, confusion):
        return QutritModel(self.anharmonicity, self.t1, self.t2, self.ef_relaxation_scale,
                           self.ef_dephasing_scale, self.drive_scale, confusion)


def _ket(i):
    v = np.zeros(DIM, dtype=complex)
    v[i] = 1.0
    return v


def basis_density(i):
    """|i><i| for i in {0: g, 1: e, 2: f}."""
    return np.outer(_ket(i), _ket(i))


def vectorize(rho):
    return np.asarray(rho, dtype=complex).reshape(DIM * DIM)


def unvectorize(vec):
    return np.asarray(vec, dtype=complex).reshape(DIM, DIM)


def populations(rho):
    """(p_g, p_e, p_f) as real numbers."""
    return tuple(float(x) for x in np.real(np.diag(rho)))


def validate_density_matrix(rho, context="state"):
    """
    Check the density-matrix invariants.

    Raises:
        SimulationError: If rho is not Hermitian, not unit trace or not positive
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (DIM, DIM):
        raise SimulationError(f"{context}: expected a 3x3 matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise SimulationError(f"{context}: density matrix is not Hermitian")
    trace = np.trace(rho).real
    if abs(trace - 1.0) > TRACE_TOL:
        raise SimulationError(f"{context}: trace {trace:.12f} differs from 1")
    smallest = np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)))
    if smallest < -EIGEN_TOL:
        raise SimulationError(f"{context}: negative eigenvalue {smallest:.3e}")
    return rho


def liouvillian(model, omega):
    """9x9 generator of the master equation for a constant Rabi rate."""
    h = model.hamiltonian(omega)
    gen = -1j * (np.kron(h, IDENTITY) - np.kron(IDENTITY, h.T))
    for c in model.collapse_operators():
        cdc = c.conj().T @ c
        gen = gen + np.kron(c, c.conj()) - 0.5 * np.kron(cdc, IDENTITY) - 0.5 * np.kron(IDENTITY, cdc.T)
    return gen


def _rk4_step_matrix(gen, h):
    # Four-stage Runge-Kutta applied to dS/dt = L S with L constant over the step.
    x = gen * h
    eye = np.eye(x.shape[0], dtype=complex)
    x2 = x @ x
    return eye + x + x2 / 2 + x2 @ x / 6 + x2 @ x2 / 24


def sample_propagator(gen, dt, substeps, method):
    """Propagator of one held sample of length dt; substeps only apply to rk4."""
    if method == "expm":
        if substeps is not None:
            raise SimulationError("substeps only apply to the rk4 integrator, expm is exact per sample")
        return expm(gen * dt)
    if method != "rk4":
        raise SimulationError(f"Unknown integration method '{method}'")
    substeps = RK4_SUBSTEPS if substeps is None else substeps
    if substeps < 1:
        raise SimulationError(f"substeps must be >= 1, got {substeps}")
    step = _rk4_step_matrix(gen, dt / substeps)
    return np.linalg.matrix_power(step, substeps)


def waveform_propagator(waveform, model, sample_period, substeps=None, method="expm"):
    """
    Superoperator of a sampled waveform, each sample held for one period.

    Args:
        waveform (np.ndarray): Complex samples in mV at the qubit
        model (QutritModel): Device model
        sample_period (float): Hold time of each sample in seconds
        substeps (int, optional): RK4 substeps per sample; rejected by "expm"
        method (str): "expm" or "rk4"

    Returns:
        np.ndarray: 9x9 complex superoperator
    """
    prop = np.eye(DIM * DIM, dtype=complex)
    for sample in np.asarray(waveform, dtype=complex):
        gen = liouvillian(model, model.drive_scale * sample)
        prop = sample_propagator(gen, sample_period, substeps, method) @ prop
    return prop


def waveform_unitary(waveform, model, sample_period):
    """3x3 unitary of a sampled waveform with decoherence switched off."""
    u = IDENTITY.copy()
    for sample in np.asarray(waveform, dtype=complex):
        energies, vectors = np.linalg.eigh(model.hamiltonian(model.drive_scale * sample))
        u = (vectors * np.exp(-1j * energies * sample_period)) @ vectors.conj().T @ u
    return u


def idle_propagator(model, duration):
    """Free decay for a duration in seconds."""
    if duration <= 0:
        return np.eye(DIM * DIM, dtype=complex)
    return expm(liouvillian(model, 0.0) * duration)


def evolve(rho0, waveform, model, sample_period, substeps=None, method="expm"):
    """
    Evolve a density matrix under a sampled drive waveform.

    Args:
        rho0 (np.ndarray): Initial 3x3 density matrix
        waveform (np.ndarray): Complex samples in mV at the qubit
        model (QutritModel): Device model
        sample_period (float): Sample period in seconds
        substeps (int, optional): RK4 substeps per sample; rejected by "expm"
        method (str): "expm" or "rk4"

    Returns:
        np.ndarray: Final density matrix

    Raises:
        SimulationError: If the input or output state is not a valid density matrix
    """
    validate_density_matrix(rho0, "initial state")
    prop = waveform_propagator(waveform, model, sample_period, substeps, method)
    rho = unvectorize(prop @ vectorize(rho0))
    logger.debug(f"Evolved {len(waveform)} samples, populations {populations(rho)}")
    return validate_density_matrix(rho, "evolved state")
