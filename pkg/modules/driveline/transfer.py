"""
Ground-truth amplitude transfer of the simulated drive line.
Maps the programmed envelope amplitude (mV at the AWG) to the amplitude that
actually reaches the qubit.
"""

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from loguru import logger
from scipy.optimize import brentq

from modules.errors import TransferRangeError

LINEAR = "linear"
TANH = "tanh-compression"
ODD_POLYNOMIAL = "odd-polynomial"
KINDS = (LINEAR, TANH, ODD_POLYNOMIAL)


@dataclass(frozen=True)
class DriveLineTransfer:
    """
    Odd, strictly increasing amplitude transfer f(A).

    Attributes:
        kind (str): "linear", "tanh-compression" or "odd-polynomial"
        saturation (float): A_sat in mV for f(A) = A_sat tanh(A / A_sat)
        coefficients (tuple): (c1, c3, c5) for f(A) = c1 A + c3 A^3 + c5 A^5, A in units of full_scale
        max_amplitude (float): Largest |A| in mV the line accepts
        full_scale (float): Amplitude unit in mV for the polynomial and for reporting
    """

    kind: str = TANH
    saturation: float = 1825.0
    coefficients: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    max_amplitude: float = 1500.0
    full_scale: float = 1000.0
    _check_points: int = field(default=2001, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise TransferRangeError(f"Unknown transfer kind '{self.kind}'")
        if self.kind == TANH and not self.saturation > 0:
            raise TransferRangeError("tanh saturation amplitude must be positive")
        if not self.max_amplitude > 0:
            raise TransferRangeError("max_amplitude must be positive")
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        grid = np.linspace(0.0, self.max_amplitude, self._check_points)
        values = self._evaluate(grid)
        if np.any(np.diff(values) <= 0):
            raise TransferRangeError(
                f"{self.kind} transfer is not strictly increasing on [0, {self.max_amplitude}] mV"
            )

    def _evaluate(self, amplitude):
        amplitude = np.asarray(amplitude, dtype=float)
        if self.kind == LINEAR:
            return amplitude.copy()
        if self.kind == TANH:
            return self.saturation * np.tanh(amplitude / self.saturation)
        c1, c3, c5 = self.coefficients
        u = amplitude / self.full_scale
        return self.full_scale * (c1 * u + c3 * u ** 3 + c5 * u ** 5)

    def to_dict(self):
        return {
            "kind": self.kind,
            "saturation": self.saturation,
            "coefficients": list(self.coefficients),
            "max_amplitude": self.max_amplitude,
            "full_scale": self.full_scale,
        }


def apply_transfer(line, amplitude):
    """
    Amplitude reaching the qubit for a programmed amplitude.

    Args:
        line (DriveLineTransfer): The drive line
        amplitude (float): Programmed amplitude in mV

    Returns:
        float: Distorted amplitude in mV

    Raises:
        TransferRangeError: If |amplitude| exceeds the configured range
    """
    if abs(amplitude) > line.max_amplitude * (1 + 1e-12):
        raise TransferRangeError(
            f"Amplitude {amplitude:.3f} mV outside the line range +-{line.max_amplitude} mV"
        )
    return float(line._evaluate(amplitude))


def invert_transfer(line, target):
    """
    Programmed amplitude that makes the line output a target amplitude (f^-1).

    Args:
        line (DriveLineTransfer): The drive line
        target (float): Desired amplitude at the qubit in mV

    Returns:
        float: Amplitude to program in mV

    Raises:
        TransferRangeError: If the target is beyond f(max_amplitude)
    """
    if target == 0:
        return 0.0
    top = apply_transfer(line, line.max_amplitude)
    if abs(target) > top:
        raise TransferRangeError(f"Target {target:.3f} mV exceeds the line output limit {top:.3f} mV")
    sign = np.sign(target)
    root = brentq(lambda a: apply_transfer(line, a) - abs(target), 0.0, line.max_amplitude,
                  xtol=1e-13, rtol=1e-15, maxiter=200)
    logger.debug(f"Inverse transfer: {target:.4f} mV at qubit needs {sign * root:.4f} mV")
    return float(sign * root)


def tanh_saturation_for_error(pi_amplitude, max_error_deg):
    """
    Saturation amplitude giving a target peak over-rotation under linear scaling.

    With a calibrated pi amplitude, linear scaling to x*A_pi rotates by
    180 tanh(x r)/tanh(r) instead of 180 x, r = A_pi / A_sat. Solves for r so the
    largest deviation over x in [0, 1] equals max_error_deg.

    Args:
        pi_amplitude (float): Calibrated pi amplitude in mV
        max_error_deg (float): Desired peak over-rotation in degrees

    Returns:
        float: A_sat in mV
    """
    x = np.linspace(0.0, 1.0, 2001)

    def peak(r):
        return float(np.max(180.0 * (np.tanh(x * r) / np.tanh(r) - x))) - max_error_deg

    r = brentq(peak, 1e-3, 5.0, xtol=1e-12)
    return pi_amplitude / r
