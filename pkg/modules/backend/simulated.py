"""
Backend backed by the three-level simulator.
"""

import math
from concurrent.futures import ThreadPoolExecutor

from loguru import logger

from modules.backend.base import Backend
from modules.sim.sequences import run_sequence, sequence_populations
from modules.sim.superoperators import SuperoperatorCache


class SimulatedBackend(Backend):
    """Runs sequences on the qutrit simulator behind a non-linear drive line."""

    def __init__(self, model, line, settings, capabilities=None, threads=1):
        """
        Initialize the simulated backend.

        Args:
            model (QutritModel): Device model, including its readout confusion
            line (DriveLineTransfer): Ground-truth drive line
            settings (PulseSettings): Pulse shape and integration settings
            capabilities (Capabilities, optional): Limits on submissions
            threads (int): Worker threads for batch submission
        """
        super().__init__(capabilities)
        self.model = model
        self.line = line
        self.settings = settings
        self.threads = max(1, int(threads))
        self.cache = SuperoperatorCache(line, model, settings)
        logger.debug(
            f"Simulated backend: T1={model.t1 * 1e6:.1f} us, T2={model.t2 * 1e6:.1f} us, "
            f"alpha/2pi={model.anharmonicity / (2 * math.pi * 1e6):.1f} MHz, line={line.kind}"
        )

    def _run(self, sequence, shots, seed):
        return run_sequence(sequence, self.model, self.line, shots, seed, cache=self.cache)

    def _run_batch(self, sequences, shots, seeds):
        if self.threads == 1 or len(sequences) < 2:
            return super()._run_batch(sequences, shots, seeds)
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(lambda args: self._run(args[0], shots, args[1]), zip(sequences, seeds)))

    def populations(self, sequence):
        """Noise-free (p_g, p_e, p_f) of a sequence, for diagnostics and tests."""
        self.check(sequence, 1)
        return sequence_populations(list(sequence), self.cache)
