"""
Per-gate superoperators and their cache.
"""

import threading
from dataclasses import dataclass

import numpy as np
from loguru import logger

from modules.driveline.transfer import apply_transfer
from modules.errors import SimulationError
from modules.sim.gates import IDLE, VIRTUAL_Z, X_GATE
from modules.sim.linearization import DriveLinearizer
from modules.sim.pulses import PulseEnvelope, synth_drag_envelope
from modules.sim.qutrit import DIM, idle_propagator, waveform_propagator

TP_TOL = 1e-8
CP_TOL = 1e-7
# Row-major vec indices of rho_gg, rho_ge, rho_eg, rho_ee.
QUBIT_INDICES = [0, 1, 3, 4]
_TRACE_ROW = np.eye(DIM, dtype=complex).reshape(DIM * DIM)


def choi_matrix(matrix):
    """Choi matrix sum_kl |k><l| (x) E(|k><l|) of a row-major superoperator."""
    return np.asarray(matrix).reshape(DIM, DIM, DIM, DIM).transpose(2, 0, 3, 1).reshape(DIM * DIM, DIM * DIM)


@dataclass(frozen=True, eq=False)
class GateSuperoperator:
    """
    9x9 map acting on vectorised qutrit density matrices.

    Attributes:
        matrix (np.ndarray): Superoperator, row-major vectorisation
        label (str): Gate identity (angle, phase, amplitude)
    """

    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (DIM * DIM, DIM * DIM):
            raise SimulationError(f"Superoperator {self.label} has shape {m.shape}")
        object.__setattr__(self, "matrix", m)

    def trace_error(self):
        return float(np.max(np.abs(_TRACE_ROW @ self.matrix - _TRACE_ROW)))

    def min_choi_eigenvalue(self):
        choi = choi_matrix(self.matrix)
        return float(np.min(np.linalg.eigvalsh(0.5 * (choi + choi.conj().T))))

    def validate(self):
        """
        Raises:
            SimulationError: If the map is not trace preserving or not completely positive
        """
        if self.trace_error() > TP_TOL:
            raise SimulationError(f"{self.label}: not trace preserving ({self.trace_error():.2e})")
        if self.min_choi_eigenvalue() < -CP_TOL:
            raise SimulationError(f"{self.label}: Choi eigenvalue {self.min_choi_eigenvalue():.2e} < 0")
        return self

    def apply(self, vec):
        return self.matrix @ vec


def unitary_superoperator(unitary, label=""):
    """U rho U^dag as a superoperator, U kron conj(U) in row-major vec."""
    u = np.asarray(unitary, dtype=complex)
    return GateSuperoperator(np.kron(u, u.conj()), label)


def virtual_z_superoperator(angle_deg):
    """Exact frame update diag(1, e^{i phi}, e^{2 i phi})."""
    phi = np.deg2rad(angle_deg)
    u = np.diag(np.exp(1j * phi * np.arange(DIM)))
    return unitary_superoperator(u, f"Z{angle_deg:g}")


def identity_superoperator():
    return GateSuperoperator(np.eye(DIM * DIM, dtype=complex), "I")


def gate_superoperator(gate, line, model, settings, linearizer=None):
    """
    Simulate one gate and return its superoperator.

    Physical pulses pass their amplitude through the drive line, then through
    the amplitude pre-compensation when settings.linearize is on, before the
    DRAG waveform is synthesised and integrated.

    Args:
        gate (GateSpec): The gate
        line (DriveLineTransfer): Ground-truth drive line
        model (QutritModel): Device model
        settings (PulseSettings): Pulse shape and integration settings
        linearizer (DriveLinearizer, optional): Pre-compensation for the gate's
            duration; built on the fly when needed and not given

    Returns:
        GateSuperoperator: Validated superoperator

    Raises:
        TransferRangeError: If the amplitude is outside the line range
        SimulationError: If the result is not a valid channel
    """
    if gate.kind == VIRTUAL_Z:
        return virtual_z_superoperator(gate.angle)
    if gate.kind == IDLE:
        return GateSuperoperator(idle_propagator(model, gate.duration), gate.label()).validate()
    if gate.kind != X_GATE:
        raise SimulationError(f"Unknown gate kind '{gate.kind}'")
    if gate.duration <= 0:
        if gate.amplitude != 0:
            raise SimulationError(f"Pulse {gate.label()} has amplitude but no duration")
        return identity_superoperator()

    distorted = apply_transfer(line, gate.amplitude)
    if settings.linearize:
        linearizer = linearizer or DriveLinearizer(model, settings, gate.duration)
        distorted = linearizer.drive_amplitude(distorted)
    envelope = PulseEnvelope.for_duration(
        gate.duration,
        settings,
        drag_coefficient=settings.drag_for(model.anharmonicity),
        amplitude=distorted,
        phase=gate.phase,
    )
    waveform = synth_drag_envelope(envelope)
    matrix = waveform_propagator(waveform, model, gate.duration / envelope.n_samples,
                                 settings.substeps, settings.method)
    label = f"{gate.label()}@{gate.amplitude:.6f}mV/{gate.duration * 1e9:g}ns"
    return GateSuperoperator(matrix, label).validate()


class SuperoperatorCache:
    """Thread-safe exact-match cache of gate superoperators."""

    def __init__(self, line, model, settings):
        """
        Initialize the cache.

        Args:
            line (DriveLineTransfer): Drive line used for every entry
            model (QutritModel): Device model used for every entry
            settings (PulseSettings): Pulse settings used for every entry
        """
        self.line = line
        self.model = model
        self.settings = settings
        self._entries = {}
        self._linearizers = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, gate):
        # Frame updates take continuous phases and are exact; they bypass the cache.
        if gate.kind == VIRTUAL_Z:
            return virtual_z_superoperator(gate.angle)
        key = gate.cache_key
        with self._lock:
            entry = self._entries.get(key)
            if entry is not None:
                self.hits += 1
                return entry
        # Simulate outside the lock; a concurrent duplicate computes the same map.
        linearizer = self.linearizer(gate.duration) if gate.kind == X_GATE and gate.duration > 0 else None
        entry = gate_superoperator(gate, self.line, self.model, self.settings, linearizer)
        with self._lock:
            self.misses += 1
            entry = self._entries.setdefault(key, entry)
            if len(self._entries) % 500 == 0:
                logger.debug(f"Superoperator cache holds {len(self._entries)} gates")
        return entry

    def linearizer(self, duration):
        """Shared amplitude pre-compensation for one pulse length, None when disabled."""
        if not self.settings.linearize:
            return None
        with self._lock:
            found = self._linearizers.get(duration)
        if found is None:
            found = DriveLinearizer(self.model, self.settings, duration)
            with self._lock:
                found = self._linearizers.setdefault(duration, found)
        return found

    def __len__(self):
        return len(self._entries)


def qubit_block(matrix):
    """Restriction of a superoperator to the computational subspace."""
    return np.asarray(matrix)[np.ix_(QUBIT_INDICES, QUBIT_INDICES)]


def average_gate_infidelity(superop, ideal_unitary):
    """
    Average gate infidelity of a simulated gate against a 2x2 target.

    Uses the computational block of the superoperator; population lost to f
    lowers the process fidelity.

    Args:
        superop (GateSuperoperator): Simulated gate
        ideal_unitary (np.ndarray): 2x2 target unitary

    Returns:
        float: 1 - F_avg with F_avg = (2 F_pro + 1) / 3
    """
    u = np.asarray(ideal_unitary, dtype=complex)
    target = np.kron(u, u.conj())
    f_pro = float(np.real(np.trace(target.conj().T @ qubit_block(superop.matrix)))) / 4.0
    return 1.0 - (2.0 * f_pro + 1.0) / 3.0


def coherent_error_from_rotation(epsilon_deg):
    """Average infidelity (2/3) sin^2(eps/2) of a pure over-rotation by eps degrees."""
    return 2.0 / 3.0 * np.sin(np.deg2rad(epsilon_deg) / 2) ** 2
