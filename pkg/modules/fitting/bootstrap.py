"""
Sequence-level bootstrap for error bars.
Resamples random sequences with replacement and re-runs an analysis on each
resample; the spread of the outcomes is the reported uncertainty.
"""

from dataclasses import dataclass

import numpy as np
from loguru import logger

from modules.errors import FitError, ToolkitError


@dataclass(frozen=True)
class SequenceResampler:
    """
    Resampling plan over random-sequence indices.

    Attributes:
        data (np.ndarray): Per-sequence data, first axis indexes sequences
        seed (int): Seed of the resampling stream
    """

    data: np.ndarray
    seed: int = 0

    @property
    def n_sequences(self):
        return int(np.asarray(self.data).shape[0])

    def draw(self, rng):
        """Return one resample (rows drawn with replacement)."""
        idx = rng.integers(0, self.n_sequences, size=self.n_sequences)
        return np.asarray(self.data)[idx]


def bootstrap_uncertainty(resampler, analysis, repeats):
    """
    Mean and standard deviation of an analysis over bootstrap resamples.

    Args:
        resampler (SequenceResampler): Resampling plan
        analysis: Callable mapping resampled data to a scalar
        repeats (int): Number of resamples, at least 2

    Returns:
        tuple: (mean, std) of the successful resamples

    Raises:
        FitError: If repeats < 2 or more than half of the resamples fail
    """
    if repeats < 2:
        raise FitError(f"bootstrap needs at least 2 repeats, got {repeats}")

    rng = np.random.default_rng(resampler.seed)
    outcomes = []
    failures = 0
    for _ in range(repeats):
        sample = resampler.draw(rng)
        try:
            value = float(analysis(sample))
        except (ToolkitError, ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
            failures += 1
            logger.debug(f"Bootstrap resample discarded: {e}")
            continue
        if not np.isfinite(value):
            failures += 1
            continue
        outcomes.append(value)

    if failures:
        logger.warning(f"Bootstrap discarded {failures}/{repeats} resamples")
    if failures * 2 > repeats or len(outcomes) < 2:
        raise FitError(f"Bootstrap failed on {failures} of {repeats} resamples")

    values = np.asarray(outcomes)
    return float(np.mean(values)), float(np.std(values, ddof=1))
