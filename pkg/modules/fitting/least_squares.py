"""
Nonlinear least-squares fitting.
Thin, validated wrapper around scipy's trust-region solver shared by every
analysis in the toolkit.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.optimize import least_squares

from modules.errors import FitError, NonFiniteModelError

# Solver settings: central differences with step max(1e-7, 1e-7*|p|),
# relative step 1e-10, relative cost decrease 1e-12, at most 500 iterations.
DIFF_STEP = 1e-7
XTOL = 1e-10
FTOL = 1e-12
GTOL = 1e-12
MAX_ITERATIONS = 500


@dataclass(frozen=True)
class CurveFitProblem:
    """
    A weighted curve-fitting problem.

    Attributes:
        model: Callable (params, x) -> y evaluated on the whole abscissa array
        x (np.ndarray): Abscissa values
        y (np.ndarray): Ordinate values
        initial_guess (np.ndarray): Starting parameter vector
        weights (np.ndarray, optional): Strictly positive weights (1/sigma^2)
        bounds (tuple, optional): (lower, upper) arrays, one entry per parameter
        absolute_sigma (bool): Treat weights as absolute inverse variances
            instead of rescaling the covariance by the reduced chi-square
    """

    model: Callable[[np.ndarray, np.ndarray], np.ndarray]
    x: np.ndarray
    y: np.ndarray
    initial_guess: np.ndarray
    weights: Optional[np.ndarray] = None
    bounds: Optional[Tuple[Sequence[float], Sequence[float]]] = None
    absolute_sigma: bool = False

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        p0 = np.atleast_1d(np.asarray(self.initial_guess, dtype=float))
        if x.shape[0] != y.shape[0]:
            raise FitError(f"x and y lengths differ ({x.shape[0]} vs {y.shape[0]})")
        if self.weights is None:
            w = np.ones_like(y)
        else:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != y.shape:
                raise FitError("weights must have the same shape as y")
            if np.any(~(w > 0)):
                raise FitError("weights must be strictly positive")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "initial_guess", p0)

        if self.bounds is not None:
            lower = np.broadcast_to(np.asarray(self.bounds[0], dtype=float), p0.shape).copy()
            upper = np.broadcast_to(np.asarray(self.bounds[1], dtype=float), p0.shape).copy()
            if np.any(lower >= upper):
                raise FitError("each lower bound must be below its upper bound")
            if np.any(p0 < lower) or np.any(p0 > upper):
                raise FitError(f"initial guess {p0.tolist()} lies outside the bounds")
            object.__setattr__(self, "bounds", (lower, upper))

    @classmethod
    def from_points(cls, model, points, initial_guess, bounds=None, absolute_sigma=False):
        """
        Build a problem from a list of (abscissa, ordinate, weight) tuples.

        Args:
            model: Callable (params, x) -> y
            points (list): (x, y, weight) tuples
            initial_guess (sequence): Starting parameter vector
            bounds (tuple, optional): (lower, upper)
            absolute_sigma (bool): See class docstring

        Returns:
            CurveFitProblem: The problem
        """
        arr = np.asarray(points, dtype=float)
        return cls(model=model, x=arr[:, 0], y=arr[:, 1], weights=arr[:, 2],
                   initial_guess=initial_guess, bounds=bounds, absolute_sigma=absolute_sigma)


@dataclass(frozen=True)
class FitOutcome:
    """Result of fit_least_squares."""

    params: np.ndarray
    covariance: np.ndarray
    residual_norm: float
    converged: bool
    n_evaluations: int = 0
    message: str = ""
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def stderr(self):
        """Standard errors of the parameters (sqrt of the covariance diagonal)."""
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


def fit_least_squares(problem):
    """
    Minimise the weighted sum of squared residuals of a curve-fitting problem.

    Args:
        problem (CurveFitProblem): The problem to solve

    Returns:
        FitOutcome: Local minimiser, covariance, residual norm and convergence flag

    Raises:
        FitError: If the problem is underdetermined or the model is not finite
            at the initial guess
        NonFiniteModelError: If the model produces NaN/inf during iteration
    """
    n_points = problem.y.shape[0]
    n_params = problem.initial_guess.shape[0]
    if n_points < n_params:
        raise FitError(f"Underdetermined fit: {n_points} points for {n_params} parameters")

    sqrt_w = np.sqrt(problem.weights)

    def residuals(params):
        model = np.asarray(problem.model(params, problem.x), dtype=float)
        if not np.all(np.isfinite(model)):
            raise NonFiniteModelError(params)
        return sqrt_w * (model - problem.y)

    try:
        residuals(problem.initial_guess)
    except NonFiniteModelError as e:
        raise FitError(f"Model is not finite at the initial guess {e.params}") from e

    bounds = problem.bounds if problem.bounds is not None else (-np.inf, np.inf)
    result = least_squares(
        residuals,
        problem.initial_guess,
        jac="3-point",
        bounds=bounds,
        method="trf",
        diff_step=DIFF_STEP,
        xtol=XTOL,
        ftol=FTOL,
        gtol=GTOL,
        max_nfev=MAX_ITERATIONS * (n_params + 1),
    )

    covariance = _covariance(result.jac, result.fun, n_points, n_params, problem.absolute_sigma)
    converged = result.status > 0
    if not converged:
        logger.debug(f"Fit stopped without convergence: {result.message}")

    return FitOutcome(
        params=np.asarray(result.x, dtype=float),
        covariance=covariance,
        residual_norm=float(np.sqrt(np.sum(result.fun ** 2))),
        converged=bool(converged),
        n_evaluations=int(result.nfev),
        message=str(result.message),
        residuals=np.asarray(result.fun, dtype=float),
    )


def _covariance(jac, fun, n_points, n_params, absolute_sigma):
    # Moore-Penrose inverse of J^T J via the SVD of J, as scipy's curve_fit does.
    _, s, vt = np.linalg.svd(jac, full_matrices=False)
    threshold = np.finfo(float).eps * max(jac.shape) * (s[0] if s.size else 0.0)
    s = s[s > threshold]
    vt = vt[: s.size]
    cov = (vt.T / s ** 2) @ vt
    if not absolute_sigma:
        dof = n_points - n_params
        if dof > 0:
            cov = cov * (np.sum(fun ** 2) / dof)
        else:
            cov = np.full((n_params, n_params), np.inf)
            return cov
    full = np.zeros((n_params, n_params))
    full[: cov.shape[0], : cov.shape[1]] = cov
    return 0.5 * (full + full.T)


def exp_decay_guess(x, y):
    """
    Initial guess (A, rate, B) for y = A * rate**x + B.

    B is the mean of the last decile of ordinates, A the first ordinate minus B,
    and the rate comes from a log-linear regression of |y - B|.

    Args:
        x (array): Abscissa (e.g. sequence lengths)
        y (array): Ordinates

    Returns:
        tuple: (A, rate, B)
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    order = np.argsort(x)
    x, y = x[order], y[order]
    tail = max(1, int(np.ceil(0.1 * y.size)))
    b = float(np.mean(y[-tail:]))
    a = float(y[0] - b)

    dev = np.abs(y - b)
    mask = dev > 1e-12
    mask[-tail:] = False
    rate = 0.99
    if np.count_nonzero(mask) >= 2 and np.ptp(x[mask]) > 0:
        slope, _ = np.polyfit(x[mask], np.log(dev[mask]), 1)
        rate = float(np.exp(slope))
    rate = float(np.clip(rate, 1e-6, 1.0 - 1e-12))
    return a, rate, b
