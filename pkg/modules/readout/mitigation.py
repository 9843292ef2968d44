"""
Readout-error mitigation and qubit-subspace renormalisation.
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np
from loguru import logger

from modules.errors import ReadoutError

CLIP_WARNING_LEVEL = 0.05


@dataclass(frozen=True)
class MitigatedPopulations:
    """
    Populations recovered from a shot record.

    Iterates as (p_g, p_e, p_f).

    Attributes:
        p_g (float): Ground population
        p_e (float): Excited population
        p_f (float): Second excited population
        clip_magnitude (float): Total negative weight removed before renormalising
        warnings (list): Diagnostics raised during mitigation
    """

    p_g: float
    p_e: float
    p_f: float
    clip_magnitude: float = 0.0
    warnings: List[str] = field(default_factory=list)

    def __iter__(self):
        return iter((self.p_g, self.p_e, self.p_f))

    def as_array(self):
        return np.array([self.p_g, self.p_e, self.p_f])


def mitigate(record, confusion):
    """
    Invert the confusion matrix on the empirical frequencies.

    Negative components are clipped to zero and the vector renormalised; a
    clip above 0.05 is attached to the result as a warning.

    Args:
        record (ShotRecord): Measured counts
        confusion (ConfusionMatrix3): Assignment model

    Returns:
        MitigatedPopulations: Estimated (p_g, p_e, p_f)
    """
    if not confusion.invertible:
        raise ReadoutError("Cannot mitigate with a singular confusion matrix")
    freqs = record.frequencies()
    try:
        p = np.linalg.solve(confusion.matrix.T, freqs)
    except np.linalg.LinAlgError as e:
        raise ReadoutError(f"Cannot invert confusion matrix: {e}") from e

    clip = float(-np.sum(p[p < 0]))
    warnings = []
    if clip > 0:
        p = np.clip(p, 0.0, None)
        p = p / p.sum()
        if clip > CLIP_WARNING_LEVEL:
            message = f"Mitigation clipped {clip:.3f} of probability; readout model may not match"
            logger.warning(message)
            warnings.append(message)
    return MitigatedPopulations(float(p[0]), float(p[1]), float(p[2]), clip, warnings)


def renormalize_computational(populations):
    """
    Renormalise (p_g, p_e) to the qubit subspace.

    Args:
        populations (tuple): (p_g, p_e, p_f)

    Returns:
        tuple: (p_g', p_e') with p_g' + p_e' = 1

    Raises:
        ReadoutError: If p_g + p_e <= 1e-12
    """
    p_g, p_e, _ = populations
    total = p_g + p_e
    if total <= 1e-12:
        raise ReadoutError(f"No population left in the qubit subspace (p_g + p_e = {total:.3e})")
    return p_g / total, p_e / total
