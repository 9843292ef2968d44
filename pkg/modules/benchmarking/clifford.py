"""
Single-qubit Clifford group decomposed into X pulses and virtual Z gates.

Every element is written as Z(a) X(b) Z(c), a, c in {0, 90, 180, 270} and
b in {0, 90, 180}; the first decomposition found with the fewest physical
pulses is kept.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

from modules.errors import BenchmarkError
from modules.sim.gates import GateSpec, ideal_sequence_unitary

PUBLISHED_N_BAR = 1.125
_Z_ANGLES = (0.0, 90.0, 180.0, 270.0)
_X_ANGLES = (0.0, 180.0, 90.0)


def phase_key(unitary, decimals=8):
    """Hashable representation of a 2x2 unitary up to global phase."""
    u = np.asarray(unitary, dtype=complex).ravel()
    pivot = u[np.argmax(np.abs(u) > 1e-6)]
    v = u * np.conj(pivot) / abs(pivot)
    return tuple(np.round(v.real, decimals) + 0.0) + tuple(np.round(v.imag, decimals) + 0.0)


def equal_up_to_phase(u, v, tol=1e-12):
    """True if u = e^{i phi} v."""
    overlap = abs(np.trace(np.asarray(u).conj().T @ np.asarray(v))) / 2
    return abs(overlap - 1.0) < tol


@dataclass(frozen=True, eq=False)
class CliffordGate:
    """
    One Clifford.

    Attributes:
        index (int): Position in the table, 0 is the identity
        unitary (np.ndarray): 2x2 unitary on the computational subspace
        decomposition (tuple): ("x", angle) and ("z", angle) steps, first applied first
    """

    index: int
    unitary: np.ndarray
    decomposition: Tuple[Tuple[str, float], ...]

    @property
    def n_pulses(self):
        return sum(1 for kind, _ in self.decomposition if kind == "x")

    def ideal_gates(self):
        """Decomposition as zero-amplitude GateSpecs, for ideal-unitary evaluation."""
        return [GateSpec.x(a, 0.0, 0.0) if kind == "x" else GateSpec.virtual_z(a)
                for kind, a in self.decomposition]

    def gates(self, gate_set):
        """Decomposition realised with a gate set's amplitudes."""
        return [gate_set.x(a) if kind == "x" else gate_set.z(a) for kind, a in self.decomposition]


class CliffordTable:
    """The 24 Cliffords with multiplication and inverse lookups."""

    def __init__(self, gates):
        self.gates = list(gates)
        if len(self.gates) != 24:
            raise BenchmarkError(f"Clifford table has {len(self.gates)} elements, expected 24")
        self._index = {phase_key(g.unitary): g.index for g in self.gates}
        self.n_bar = float(np.mean([g.n_pulses for g in self.gates]))
        self._products = {}

    def __len__(self):
        return len(self.gates)

    def __getitem__(self, i):
        return self.gates[i]

    def __iter__(self):
        return iter(self.gates)

    def index_of(self, unitary):
        key = phase_key(unitary)
        if key not in self._index:
            raise BenchmarkError("Unitary is not a Clifford")
        return self._index[key]

    def compose(self, first, second):
        """Index of the Clifford equal to `first` followed by `second`."""
        key = (first, second)
        if key not in self._products:
            self._products[key] = self.index_of(self.gates[second].unitary @ self.gates[first].unitary)
        return self._products[key]

    def inverse(self, index):
        return self.index_of(self.gates[index].unitary.conj().T)

    def recovery(self, indices):
        """Clifford undoing a sequence of Clifford indices."""
        net = 0
        for i in indices:
            net = self.compose(net, i)
        return self.inverse(net)


@lru_cache(maxsize=1)
def clifford_table():
    """
    Build the Clifford table.

    Returns:
        CliffordTable: 24 elements; table.n_bar is the mean number of X pulses
    """
    found = {}
    for b in _X_ANGLES:
        for c in _Z_ANGLES:
            for a in _Z_ANGLES:
                steps = []
                if c:
                    steps.append(("z", c))
                if b:
                    steps.append(("x", b))
                if a:
                    steps.append(("z", a))
                probe = CliffordGate(-1, np.eye(2), tuple(steps))
                u = ideal_sequence_unitary(probe.ideal_gates())
                key = phase_key(u)
                if key not in found:
                    found[key] = (u, tuple(steps))
    gates = [CliffordGate(i, u, steps) for i, (u, steps) in enumerate(found.values())]
    return CliffordTable(gates)
