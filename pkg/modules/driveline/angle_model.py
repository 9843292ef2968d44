"""
Fifth-order odd polynomial relating normalised amplitude to rotation angle.

    theta(A~) = 180 * (1 + b (A~^2 - 1) + a (A~^4 - 1)) * A~,   A~ = A / A_pi

The correction terms vanish at A~ = 1, so the pi point is pinned whatever
(a, b) the fit returns.
"""

from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy.optimize import brentq

from modules.errors import AngleModelError
from modules.fitting.least_squares import CurveFitProblem, fit_least_squares

VALIDITY_LIMIT = 1.2
MONOTONIC_GRID = 4001


def _theta(params, a_tilde):
    a, b = params
    a_tilde = np.asarray(a_tilde, dtype=float)
    return 180.0 * (1.0 + b * (a_tilde ** 2 - 1.0) + a * (a_tilde ** 4 - 1.0)) * a_tilde


@dataclass(frozen=True)
class AngleModel:
    """
    Polynomial amplitude-to-angle model.

    Attributes:
        a (float): Fifth-order coefficient
        b (float): Third-order coefficient
        a_pi (float): Amplitude in mV of a pi rotation
        residual_max (float): Largest absolute fit residual in degrees (0 when not fitted)
        residual_rms (float): RMS fit residual in degrees
    """

    a: float = 0.0
    b: float = 0.0
    a_pi: float = 1.0
    residual_max: float = 0.0
    residual_rms: float = 0.0

    def __post_init__(self):
        if not self.a_pi > 0:
            raise AngleModelError(f"a_pi must be positive, got {self.a_pi}", self.a, self.b)
        grid = np.linspace(0.0, 1.0, MONOTONIC_GRID)
        if np.any(np.diff(_theta((self.a, self.b), grid)) <= 0):
            raise AngleModelError(
                f"Angle model (a={self.a:.6g}, b={self.b:.6g}) is not strictly increasing on [0, 1]",
                self.a, self.b,
            )

    def to_dict(self):
        return {
            "a": self.a,
            "b": self.b,
            "a_pi": self.a_pi,
            "residual_max": self.residual_max,
            "residual_rms": self.residual_rms,
        }


def angle_from_amplitude(model, a_tilde):
    """
    Rotation angle in degrees for a normalised amplitude.

    Args:
        model (AngleModel): The model
        a_tilde (float): A / A_pi, within +-1.2

    Returns:
        float: theta in degrees
    """
    if abs(a_tilde) > VALIDITY_LIMIT:
        logger.warning(f"Normalised amplitude {a_tilde:.4f} lies outside the fitted region")
    return float(_theta((model.a, model.b), a_tilde))


def amplitude_for_angle(model, theta):
    """
    Normalised amplitude producing a rotation angle.

    Bracketed root search on [-1, 1]; the model is monotonic there by construction.

    Args:
        model (AngleModel): The model
        theta (float): Target angle in degrees, within [-180, 180]

    Returns:
        float: A~ with angle_from_amplitude(model, A~) == theta
    """
    if abs(theta) > 180.0 + 1e-12:
        raise AngleModelError(f"Angle {theta} outside [-180, 180] degrees", model.a, model.b)
    if theta == 0:
        return 0.0
    if np.isclose(abs(theta), 180.0, rtol=0, atol=1e-13):
        return float(np.sign(theta))
    root = brentq(lambda x: _theta((model.a, model.b), x) - theta, -1.0, 1.0,
                  xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return float(root)


def fit_angle_model(points, a_pi):
    """
    Fit (a, b) to calibrated (A~, theta) points.

    Args:
        points (list): (A~, theta in degrees) pairs; at least three distinct A~, one near 1
        a_pi (float): Pi amplitude in mV that normalised the amplitudes

    Returns:
        AngleModel: Fitted model with residual statistics

    Raises:
        AngleModelError: On too few points or if the fitted model is not monotonic
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 3 or np.unique(arr[:, 0]).size < 3:
        raise AngleModelError("fit_angle_model needs at least three distinct amplitudes")
    if not np.any(np.abs(arr[:, 0] - 1.0) < 0.05):
        raise AngleModelError("fit_angle_model needs a point near A~ = 1")

    problem = CurveFitProblem(model=_theta, x=arr[:, 0], y=arr[:, 1], initial_guess=[0.0, 0.0])
    outcome = fit_least_squares(problem)
    a, b = (float(p) for p in outcome.params)
    residuals = arr[:, 1] - _theta((a, b), arr[:, 0])
    logger.info(f"Angle model fit: a={a:.6g}, b={b:.6g}, max residual {np.max(np.abs(residuals)):.4f} deg")
    return AngleModel(
        a=a,
        b=b,
        a_pi=float(a_pi),
        residual_max=float(np.max(np.abs(residuals))),
        residual_rms=float(np.sqrt(np.mean(residuals ** 2))),
    )
