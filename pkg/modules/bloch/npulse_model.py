"""
Analytic forward model of an N-pulse calibration measurement.
"""

import math

import numpy as np

from modules.bloch.propagator import affine_step
from modules.calibration.sequences import CalSequenceSpec
from modules.errors import CalibrationError


def npulse_forward_model(alpha_fraction, sequence, rates, tau, n_values=None, gap=0.0):
    """
    Predicted p_e of an N-pulse sequence for one pulse fraction.

    Args:
        alpha_fraction (float): Fraction of pi realised by the pulse under calibration
        sequence (CalSequenceSpec): Sequence variant and partner fractions
        rates (DecayRates): Decay rates used by the model
        tau (float): Pulse duration in seconds
        n_values (sequence, optional): N values; defaults to sequence.n_values
        gap (float): Idle time between pulses in seconds

    Returns:
        np.ndarray: p_e for every requested N
    """
    return forward_model_batch(np.atleast_1d(float(alpha_fraction)), sequence, rates, tau,
                               n_values=n_values, gap=gap)[0]


def forward_model_batch(alphas, sequence, rates, tau, n_values=None, gap=0.0):
    """
    Vectorised forward model over many candidate fractions.

    Starts in the ground state, applies an exact X90 initialisation, then the
    repetition groups of the sequence, recording p_e = (1 + z)/2 after each
    requested number of groups.

    Args:
        alphas (np.ndarray): Candidate fractions of pi, shape (n_alpha,)
        sequence (CalSequenceSpec): Sequence description
        rates (DecayRates): Decay rates
        tau (float): Pulse duration in seconds
        n_values (sequence, optional): N values; defaults to sequence.n_values
        gap (float): Idle time between pulses in seconds

    Returns:
        np.ndarray: p_e, shape (n_alpha, len(n_values))
    """
    if not isinstance(sequence, CalSequenceSpec):
        raise CalibrationError(f"Unknown sequence variant {sequence!r}")
    alphas = np.asarray(alphas, dtype=float)
    n_values = sequence.n_values if n_values is None else tuple(int(n) for n in n_values)
    wanted = set(n_values)

    def step(fraction):
        omega = np.broadcast_to(np.asarray(fraction, dtype=float) * math.pi / tau, alphas.shape)
        return affine_step(omega, tau, rates)

    idle_map = affine_step(np.zeros_like(alphas), gap, rates) if gap > 0 else None

    def apply(maps, y, z):
        m11, m12, m21, m22, cy, cz = maps
        return m11 * y + m12 * z + cy, m21 * y + m22 * z + cz

    y = np.zeros_like(alphas)
    z = -np.ones_like(alphas)
    y, z = apply(step(0.5), y, z)

    group = [step(f) for f in sequence.group_fractions(alphas)]
    out = np.empty((alphas.size, len(n_values)))
    column = {n: i for i, n in enumerate(n_values)}
    n_max = max(n_values)
    for n in range(n_max + 1):
        if n in wanted:
            out[:, column[n]] = (1.0 + z) / 2.0
        if n == n_max:
            break
        for maps in group:
            if idle_map is not None:
                y, z = apply(idle_map, y, z)
            y, z = apply(maps, y, z)
    return out
