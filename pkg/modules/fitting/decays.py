"""
Exponential decay fits shared by the RB, PB and XEB analyses.
"""

import numpy as np

from modules.fitting.least_squares import CurveFitProblem, exp_decay_guess, fit_least_squares


def exponential_decay(params, m):
    """y(m) = A * rate**m + B with params = (A, rate, B)."""
    a, rate, b = params
    return a * np.power(rate, m) + b


def fit_exponential_decay(lengths, values, weights=None):
    """
    Fit y(m) = A * rate**m + B with the rate bounded to (0, 1].

    Args:
        lengths (array): Sequence lengths m
        values (array): Mean ordinate per length
        weights (array, optional): Positive weights per point

    Returns:
        FitOutcome: params = (A, rate, B)
    """
    lengths = np.asarray(lengths, dtype=float)
    values = np.asarray(values, dtype=float)
    a0, rate0, b0 = exp_decay_guess(lengths, values)
    problem = CurveFitProblem(
        model=exponential_decay,
        x=lengths,
        y=values,
        weights=weights,
        initial_guess=[a0, rate0, b0],
        bounds=([-np.inf, 1e-9, -np.inf], [np.inf, 1.0, np.inf]),
    )
    return fit_least_squares(problem)
