"""
Cross-entropy benchmarking estimators for one qubit.
"""

import math

import numpy as np
from loguru import logger

from modules.benchmarking.analysis import fit_decay
from modules.errors import BenchmarkError, FitError

PROBABILITY_CLAMP = 1e-12
DEGENERATE_TOL = 1e-12
MIN_PURITY_SEQUENCES = 10
PUBLISHED = "published"
DEPOLARIZING = "depolarizing"


def porter_thomas_variance(n_qubits=1):
    """(2^n - 1) / (2^2n (2^n + 1)); 1/12 for one qubit."""
    d = 2 ** n_qubits
    return (d - 1) / (d * d * (d + 1))


def xeb_error_factor(n_qubits=1, convention=PUBLISHED):
    """
    Conversion between the per-cycle decay base and the error per cycle.

    "published" uses (4^n/(4^n - 1)) (2^n/(2^n - 1)), which is 8/3 for one qubit.
    "depolarizing" uses 2^n/(2^n - 1), the factor that makes a depolarizing
    channel of average infidelity E decay as 1 - factor * E.
    """
    d = 2 ** n_qubits
    if convention == PUBLISHED:
        return (d * d / (d * d - 1)) * (d / (d - 1))
    if convention == DEPOLARIZING:
        return d / (d - 1)
    raise BenchmarkError(f"Unknown XEB error convention '{convention}'")


def _as_distributions(values):
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise BenchmarkError(f"Expected (p_g, p_e) rows, got shape {arr.shape}")
    return arr


def clamp_probabilities(r):
    return np.clip(np.asarray(r, dtype=float), PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)


def cross_entropy(q, r, clamp=True):
    """
    S(Q, R) = -sum q_i ln r_i over all outcomes, divided by the number of sequences.

    Args:
        q (array): (p_g, p_e) row or (K, 2) rows
        r (array): Reference distribution of the same shape
        clamp (bool): Clamp r to [1e-12, 1 - 1e-12] before the logarithm

    Returns:
        float: Cross-entropy per sequence

    Raises:
        BenchmarkError: If r is zero where q is positive (only possible without clamping)
    """
    q = _as_distributions(q)
    r = _as_distributions(r)
    if q.shape != r.shape:
        raise BenchmarkError(f"Distribution shapes differ: {q.shape} vs {r.shape}")
    if clamp:
        r = clamp_probabilities(r)
    elif np.any((r <= 0) & (q > 0)):
        raise BenchmarkError("Reference probability is zero where the sample is not")
    with np.errstate(divide="ignore"):
        logs = np.where(q > 0, np.log(np.where(r > 0, r, 1.0)), 0.0)
    return float(-np.sum(q * logs) / q.shape[0])


def _entropy_terms(measured, ideal):
    measured = _as_distributions(measured)
    ideal = _as_distributions(ideal)
    if measured.shape != ideal.shape:
        raise BenchmarkError(f"{measured.shape[0]} measured vs {ideal.shape[0]} ideal sequences")
    logs = np.log(clamp_probabilities(ideal))
    s_incoh = -0.5 * np.sum(logs, axis=1)
    s_meas = -np.sum(measured * logs, axis=1)
    s_ideal = -np.sum(ideal * logs, axis=1)
    return s_incoh, s_meas, s_ideal


def xeb_fidelity_terms(measured, ideal):
    """
    Per-sequence contributions whose mean is the XEB fidelity.

    Returns:
        np.ndarray: One term per sequence, all NaN if the denominator is degenerate
    """
    s_incoh, s_meas, s_ideal = _entropy_terms(measured, ideal)
    denominator = float(np.mean(s_incoh - s_ideal))
    if denominator < DEGENERATE_TOL:
        return np.full(s_incoh.shape, np.nan)
    return (s_incoh - s_meas) / denominator


def xeb_fidelity(measured, ideal):
    """
    Average XEB sequence fidelity at one length.

    F = [S(Q_incoh, Q_ideal) - S(Q_meas, Q_ideal)] / [S(Q_incoh, Q_ideal) - S(Q_ideal, Q_ideal)]
    with Q_incoh = (1/2, 1/2).

    Args:
        measured (array): (K, 2) measured (p_g, p_e)
        ideal (array): (K, 2) ideal (p_g, p_e)

    Returns:
        float: F, or NaN when the ideal distribution is indistinguishable from Q_incoh
    """
    terms = xeb_fidelity_terms(measured, ideal)
    if np.isnan(terms).all():
        logger.warning("XEB point flagged: ideal and incoherent distributions coincide")
        return math.nan
    return float(np.mean(terms))


def xeb_purity_terms(p_e, shots=None):
    """
    Per-sequence contributions whose mean is the XEB purity.

    Args:
        p_e (array): Measured excited population of each sequence
        shots (int, optional): Shots per sequence; subtracts the binomial
            sampling variance when given

    Returns:
        np.ndarray: One term per sequence
    """
    p_e = np.asarray(p_e, dtype=float)
    k = p_e.size
    if k < MIN_PURITY_SEQUENCES:
        raise BenchmarkError(f"XEB purity needs at least {MIN_PURITY_SEQUENCES} sequences, got {k}")
    terms = (p_e - np.mean(p_e)) ** 2 * k / (k - 1)
    if shots:
        terms = terms - p_e * (1.0 - p_e) / (shots - 1)
    return terms / porter_thomas_variance(1)


def xeb_purity(p_e, shots=None):
    """
    P = Var(Q_meas) / Var(Q_PT) at one length.

    Args:
        p_e (array): Measured excited population of each sequence, at least 10
        shots (int, optional): Removes shot-noise variance when given

    Returns:
        float: Purity estimate
    """
    return float(np.mean(xeb_purity_terms(p_e, shots)))


def fit_xeb(lengths, f_means, purity_means, n_qubits=1, convention=PUBLISHED, f_stds=None, purity_stds=None):
    """
    Fit the XEB fidelity and square-root purity decays.

    F(m) = A (1 - c E)^m + B and sqrt(P)(m) = A' (1 - c E_inc)^m + B', with
    c = xeb_error_factor(n_qubits, convention). Lengths whose F is NaN are
    excluded from the F fit.

    Returns:
        tuple: (DecayAnalysis of F with error = E, DecayAnalysis of sqrt(P) with error = E_inc)
    """
    factor = xeb_error_factor(n_qubits, convention)
    f_means = np.asarray(f_means, dtype=float)
    flagged = np.count_nonzero(~np.isfinite(f_means))
    if flagged:
        logger.warning(f"XEB fit excludes {flagged} flagged length(s)")
    purity_means = np.asarray(purity_means, dtype=float)
    if np.any(purity_means < 0):
        logger.debug("Negative purity estimates clipped to zero before the square root")
    sqrt_purity = np.sqrt(np.clip(purity_means, 0.0, None))
    sqrt_stds = None
    if purity_stds is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            sqrt_stds = np.where(sqrt_purity > 0, np.asarray(purity_stds) / (2 * sqrt_purity), 0.0)

    def to_error(base):
        return (1.0 - base) / factor

    def slope(_):
        return -1.0 / factor

    try:
        fidelity = fit_decay(lengths, f_means, f_stds, to_error, slope, "XEB fidelity")
        purity = fit_decay(lengths, sqrt_purity, sqrt_stds, to_error, slope, "XEB purity")
    except BenchmarkError as e:
        raise FitError(f"XEB decay fit rejected: {e}") from e
    return fidelity, purity


def decay_base_for_error(error, n_qubits=1, convention=PUBLISHED):
    """Decay base 1 - c E of an error per cycle."""
    return 1.0 - xeb_error_factor(n_qubits, convention) * error
