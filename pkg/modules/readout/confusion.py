"""
Three-state readout model and single-shot sampling.
"""

from dataclasses import dataclass

import numpy as np
from loguru import logger

from modules.errors import ReadoutError

STATES = ("g", "e", "f")


@dataclass(frozen=True, eq=False)
class ConfusionMatrix3:
    """
    Assignment probabilities, entry (i, j) = P(assigned j | prepared i).

    Attributes:
        matrix (np.ndarray): 3x3 row-stochastic matrix
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise ReadoutError(f"Confusion matrix must be 3x3, got {m.shape}")
        if np.any(m < 0) or np.any(m > 1):
            raise ReadoutError("Confusion entries must lie in [0, 1]")
        if np.max(np.abs(m.sum(axis=1) - 1.0)) > 1e-12:
            raise ReadoutError(f"Confusion rows must sum to 1, got {m.sum(axis=1).tolist()}")
        cond = float(np.linalg.cond(m))
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "condition_number", cond)
        if not cond < 1e12:
            logger.warning("Confusion matrix is singular; mitigation is unavailable")
        elif cond > 10:
            logger.warning(f"Confusion matrix is poorly conditioned (cond={cond:.1f})")

    @property
    def invertible(self):
        return self.condition_number < 1e12

    @classmethod
    def identity(cls):
        return cls(np.eye(3))

    def to_list(self):
        return self.matrix.tolist()


def default_confusion(assignment_error=0.04):
    """
    Symmetric confusion matrix: each state is misassigned with total
    probability assignment_error, split equally between the other two labels.
    """
    if not 0 <= assignment_error < 2.0 / 3.0:
        raise ReadoutError(f"assignment_error must lie in [0, 2/3), got {assignment_error}")
    off = assignment_error / 2
    m = np.full((3, 3), off)
    np.fill_diagonal(m, 1.0 - assignment_error)
    return ConfusionMatrix3(m)


@dataclass(frozen=True)
class ShotRecord:
    """
    Counts of single-shot outcomes.

    Attributes:
        n_g (int): Shots assigned to g
        n_e (int): Shots assigned to e
        n_f (int): Shots assigned to f
    """

    n_g: int
    n_e: int
    n_f: int

    def __post_init__(self):
        if min(self.n_g, self.n_e, self.n_f) < 0:
            raise ReadoutError(f"Counts must be non-negative: {self.counts}")

    @property
    def counts(self):
        return (self.n_g, self.n_e, self.n_f)

    @property
    def shots(self):
        return self.n_g + self.n_e + self.n_f

    def frequencies(self):
        if self.shots == 0:
            raise ReadoutError("Empty shot record")
        return np.asarray(self.counts, dtype=float) / self.shots

    def to_dict(self):
        return {"n_g": self.n_g, "n_e": self.n_e, "n_f": self.n_f}


def check_populations(populations, tol=1e-9):
    """Validate and clip tiny negative populations; returns a normalised array."""
    p = np.asarray(populations, dtype=float)
    if p.shape != (3,):
        raise ReadoutError(f"Expected (p_g, p_e, p_f), got shape {p.shape}")
    if np.any(p < -tol):
        raise ReadoutError(f"Negative population in {p.tolist()}")
    if abs(p.sum() - 1.0) > tol:
        raise ReadoutError(f"Populations sum to {p.sum():.12f}, not 1")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def assignment_probabilities(populations, confusion):
    """Outcome distribution confusion^T p."""
    return confusion.matrix.T @ check_populations(populations)


def sample_readout(populations, confusion, shots, rng):
    """
    Draw single-shot outcomes for a state.

    Args:
        populations (tuple): (p_g, p_e, p_f) summing to 1
        confusion (ConfusionMatrix3): Assignment model
        shots (int): Number of shots
        rng (np.random.Generator): Random stream

    Returns:
        ShotRecord: Sampled counts

    Raises:
        ReadoutError: On invalid populations
    """
    probs = assignment_probabilities(populations, confusion)
    probs = np.clip(probs, 0.0, None)
    counts = rng.multinomial(int(shots), probs / probs.sum())
    return ShotRecord(int(counts[0]), int(counts[1]), int(counts[2]))
