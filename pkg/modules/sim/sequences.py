"""
Sequence execution on the qutrit simulator.
"""

import numpy as np

from modules.readout.confusion import ConfusionMatrix3, sample_readout
from modules.sim.pulses import PulseSettings
from modules.sim.qutrit import basis_density, validate_density_matrix, vectorize, unvectorize
from modules.sim.superoperators import SuperoperatorCache

POPULATION_TOL = 1e-8


def final_state(gates, cache):
    """
    Density matrix after a gate list applied to |g><g|, first gate first.

    Args:
        gates (list): GateSpec list
        cache (SuperoperatorCache): Source of per-gate superoperators

    Returns:
        np.ndarray: 3x3 density matrix
    """
    vec = vectorize(basis_density(0))
    for gate in gates:
        vec = cache.get(gate).apply(vec)
    return unvectorize(vec)


def sequence_populations(gates, cache):
    """(p_g, p_e, p_f) after a gate list, tiny numerical negatives clipped."""
    rho = final_state(gates, cache)
    p = np.real(np.diag(rho))
    if np.any(p < -POPULATION_TOL) or abs(p.sum() - 1.0) > POPULATION_TOL:
        validate_density_matrix(rho, f"state after {len(gates)} gates")
    p = np.clip(p, 0.0, None)
    return tuple(float(x) for x in p / p.sum())


def run_sequence(gates, model, line, shots, seed, cache=None, settings=None):
    """
    Simulate a gate list and sample its single-shot readout.

    Args:
        gates (list): GateSpec list
        model (QutritModel): Device model; its confusion matrix drives the readout
        line (DriveLineTransfer): Ground-truth drive line
        shots (int): Number of shots
        seed (int): Seed of the readout stream
        cache (SuperoperatorCache, optional): Shared cache; built on the fly if omitted
        settings (PulseSettings, optional): Needed only when no cache is given

    Returns:
        ShotRecord: Sampled counts
    """
    if cache is None:
        cache = SuperoperatorCache(line, model, settings or PulseSettings())
    populations = sequence_populations(gates, cache)
    confusion = model.confusion if model.confusion is not None else ConfusionMatrix3.identity()
    rng = np.random.default_rng(seed)
    return sample_readout(populations, confusion, shots, rng)

