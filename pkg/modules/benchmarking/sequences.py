"""
Random sequences for randomized, purity and cross-entropy benchmarking.

Tomography conventions (measured quantities are p_e - p_g of the qubit
subspace, ground state at -1):
    sz: no pre-pulse           sz = -r_z
    sy: X90 pre-pulse          sy = -r_y
    sx: Y90 pre-pulse          sx = +r_x
where r is the standard Bloch vector (|g> at r_z = +1). The purity only
uses squares, so the signs never enter the analysis.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from modules.benchmarking.clifford import clifford_table
from modules.errors import BenchmarkError
from modules.sim.gates import GateSpec, ideal_sequence_unitary

TOMOGRAPHY_AXES = ("z", "y", "x")
FIXED = "fixed"
RANDOM = "random"


def log_lengths(max_length, include_zero=False):
    """Powers of two up to max_length, with max_length appended if it is not one."""
    if max_length < 1:
        raise BenchmarkError(f"Largest sequence length must be positive, got {max_length}")
    lengths = [0] if include_zero else []
    m = 1
    while m <= max_length:
        lengths.append(m)
        m *= 2
    if lengths[-1] != max_length:
        lengths.append(int(max_length))
    return tuple(lengths)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class RBSequence:
    """
    Random Clifford sequence with its recovery.

    Attributes:
        cliffords (tuple): Clifford indices of the body
        recovery (int): Index of the Clifford returning the ideal state to |g>
    """

    cliffords: Tuple[int, ...]
    recovery: int

    @property
    def length(self):
        return len(self.cliffords)

    def gates(self, gate_set, with_recovery=True):
        table = clifford_table()
        indices = list(self.cliffords) + ([self.recovery] if with_recovery else [])
        return [g for i in indices for g in table[i].gates(gate_set)]

    def ideal_gates(self, with_recovery=True):
        table = clifford_table()
        indices = list(self.cliffords) + ([self.recovery] if with_recovery else [])
        return [g for i in indices for g in table[i].ideal_gates()]


def generate_rb_sequence(m, seed):
    """
    m uniformly random Cliffords and their recovery Clifford.

    Args:
        m (int): Number of Cliffords, >= 0
        seed (int or np.random.Generator): Random stream

    Returns:
        RBSequence: Body indices and recovery index
    """
    if m < 0:
        raise BenchmarkError(f"Sequence length must be non-negative, got {m}")
    table = clifford_table()
    body = tuple(int(i) for i in _rng(seed).integers(0, len(table), size=int(m)))
    return RBSequence(body, table.recovery(body))


def tomography_gates(axis, gate_set):
    """Pre-measurement pulse measuring the given axis."""
    if axis == "z":
        return []
    if axis == "y":
        return [gate_set.x(90.0)]
    if axis == "x":
        return [gate_set.y(90.0)]
    raise BenchmarkError(f"Unknown tomography axis '{axis}'")


@dataclass(frozen=True)
class PBSequences:
    """
    Clifford body without recovery, measured along z, y and x.

    Attributes:
        body (RBSequence): The Clifford body (its recovery is not played)
    """

    body: RBSequence

    def gates(self, gate_set):
        """{axis: gate list} for the three tomography settings."""
        base = self.body.gates(gate_set, with_recovery=False)
        return {axis: base + tomography_gates(axis, gate_set) for axis in TOMOGRAPHY_AXES}


def generate_pb_sequence(m, seed):
    """
    Purity-benchmarking sequences: the RB body for the same seed, ending in
    one tomography pulse per axis.

    Returns:
        PBSequences: Body shared by the three tomography settings
    """
    return PBSequences(generate_rb_sequence(m, seed))


def estimate_purity(sx, sy, sz):
    """P = sx^2 + sy^2 + sz^2."""
    for name, value in (("sx", sx), ("sy", sy), ("sz", sz)):
        if np.any(np.abs(value) > 1 + 1e-9):
            raise BenchmarkError(f"{name} outside [-1, 1]")
    return sx ** 2 + sy ** 2 + sz ** 2


@dataclass(frozen=True)
class XEBSequence:
    """
    Cycles of X(theta_i) followed by virtual Z(phi_i).

    Attributes:
        cycles (list): (theta, phi) pairs in degrees
    """

    cycles: List[Tuple[float, float]]

    @property
    def length(self):
        return len(self.cycles)

    def gates(self, gate_set):
        return [g for theta, phi in self.cycles for g in (gate_set.x(theta), gate_set.z(phi))]

    def ideal_probabilities(self):
        """(p_g, p_e) of the ideal sequence from |g>."""
        gates = [g for theta, phi in self.cycles
                 for g in (GateSpec.x(theta, 0.0, 0.0), GateSpec.virtual_z(phi))]
        u = ideal_sequence_unitary(gates)
        p_g = float(abs(u[0, 0]) ** 2)
        return p_g, 1.0 - p_g


def generate_xeb_sequence(m, mode, seed, theta=None, angle_quantum=None):
    """
    m XEB cycles.

    Args:
        m (int): Number of cycles
        mode (str): "fixed" (every X rotates by theta) or "random" (theta ~ U(0, 180))
        seed (int or np.random.Generator): Random stream
        theta (float, optional): Fixed rotation angle in degrees
        angle_quantum (float, optional): Random angles are rounded to this step in degrees

    Returns:
        XEBSequence: The cycles; phi ~ U(0, 360) always
    """
    if m < 0:
        raise BenchmarkError(f"Sequence length must be non-negative, got {m}")
    rng = _rng(seed)
    if mode == FIXED:
        if theta is None:
            raise BenchmarkError("Fixed-angle XEB needs theta")
        thetas = np.full(m, float(theta))
    elif mode == RANDOM:
        thetas = rng.uniform(0.0, 180.0, size=m)
    else:
        raise BenchmarkError(f"Unknown XEB mode '{mode}'")
    if angle_quantum:
        thetas = np.round(thetas / angle_quantum) * angle_quantum
    phis = rng.uniform(0.0, 360.0, size=m)
    return XEBSequence([(float(t), float(p)) for t, p in zip(thetas, phis)])
