"""
Measurement-source contract.
Calibration and benchmarking code talks to a Backend only: submit a gate
list, receive a ShotRecord.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass

from loguru import logger

from modules.errors import CapabilityError


@dataclass(frozen=True)
class Capabilities:
    """
    What a backend accepts.

    Attributes:
        max_sequence_length (int): Largest number of gates in one sequence
        max_shots (int): Largest shot count per sequence
    """

    max_sequence_length: int = 100_000
    max_shots: int = 1_000_000


class Backend(ABC):
    """Something that runs gate sequences and returns single-shot counts."""

    def __init__(self, capabilities=None):
        self.capabilities = capabilities or Capabilities()

    def check(self, sequence, shots):
        """
        Raises:
            CapabilityError: If the request exceeds the capability descriptor
        """
        if len(sequence) > self.capabilities.max_sequence_length:
            raise CapabilityError(
                f"Sequence of {len(sequence)} gates exceeds the limit of "
                f"{self.capabilities.max_sequence_length}"
            )
        if shots < 1 or shots > self.capabilities.max_shots:
            raise CapabilityError(f"{shots} shots outside [1, {self.capabilities.max_shots}]")

    def submit(self, sequence, shots, seed):
        """
        Run one sequence.

        Args:
            sequence (list): GateSpec list
            shots (int): Number of single-shot acquisitions
            seed (int): Seed of the measurement noise

        Returns:
            ShotRecord: Counts; identical for identical (sequence, shots, seed)
        """
        self.check(sequence, shots)
        return self._run(list(sequence), int(shots), seed)

    def submit_batch(self, sequences, shots, seeds):
        """Run several sequences; records come back in submission order."""
        sequences = [list(s) for s in sequences]
        seeds = list(seeds)
        if len(seeds) != len(sequences):
            raise CapabilityError(f"{len(sequences)} sequences but {len(seeds)} seeds")
        for sequence in sequences:
            self.check(sequence, shots)
        logger.debug(f"Submitting batch of {len(sequences)} sequences")
        return self._run_batch(sequences, int(shots), seeds)

    def _run_batch(self, sequences, shots, seeds):
        return [self._run(s, shots, seed) for s, seed in zip(sequences, seeds)]

    @abstractmethod
    def _run(self, sequence, shots, seed):
        """Execute one validated request."""
