"""
DRAG pulse synthesis.
Produces the sampled complex envelope an AWG would play for one rotation.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from loguru import logger

from modules.errors import SimulationError


@dataclass(frozen=True)
class PulseSettings:
    """
    Shape settings shared by every physical pulse of a run.

    Attributes:
        truncation (float): Gaussian truncated at +-truncation*sigma
        drag_coefficient (float, optional): Quadrature weight in seconds;
            None means -1/(2*anharmonicity)
        sample_period (float): AWG sample period in seconds
        substeps (int, optional): RK4 substeps per sample, None for the default;
            must stay None with "expm"
        method (str): "expm" (exact per held sample) or "rk4"
        linearize (bool): Pre-compensate amplitudes so the g-e rotation angle
            is linear in the amplitude reaching the qubit
    """

    truncation: float = 2.5
    drag_coefficient: Optional[float] = None
    sample_period: float = 0.5e-9
    substeps: Optional[int] = None
    method: str = "expm"
    linearize: bool = True

    def __post_init__(self):
        if not self.truncation > 0:
            raise SimulationError(f"truncation must be positive, got {self.truncation}")
        if not self.sample_period > 0:
            raise SimulationError(f"sample_period must be positive, got {self.sample_period}")
        if self.method not in ("expm", "rk4"):
            raise SimulationError(f"Unknown integration method '{self.method}'")
        if self.method == "expm" and self.substeps is not None:
            raise SimulationError("substeps only apply to the rk4 integrator")
        if self.substeps is not None and self.substeps < 1:
            raise SimulationError(f"substeps must be >= 1, got {self.substeps}")

    def drag_for(self, anharmonicity):
        if self.drag_coefficient is not None:
            return self.drag_coefficient
        return -1.0 / (2.0 * anharmonicity)


@dataclass(frozen=True)
class PulseEnvelope:
    """
    Truncated Gaussian DRAG envelope.

    Attributes:
        duration (float): Pulse length in seconds, equal to 2*truncation*sigma
        sigma (float): Gaussian standard deviation in seconds
        truncation (float): Truncation in units of sigma
        drag_coefficient (float): Quadrature weight on dI/dt, in seconds
        amplitude (float): Peak in-phase amplitude in mV
        phase (float): Drive axis in radians
        sample_period (float): Sample period in seconds
    """

    duration: float
    sigma: float
    truncation: float = 2.5
    drag_coefficient: float = 0.0
    amplitude: float = 0.0
    phase: float = 0.0
    sample_period: float = 0.5e-9

    def __post_init__(self):
        if not self.duration > 0 or not self.sigma > 0:
            raise SimulationError("Pulse duration and sigma must be positive")
        if not np.isclose(self.duration, 2 * self.truncation * self.sigma, rtol=1e-9):
            raise SimulationError(
                f"duration {self.duration} != 2*truncation*sigma ({2 * self.truncation * self.sigma})"
            )
        ratio = self.duration / self.sample_period
        if round(ratio) < 1 or abs(ratio - round(ratio)) >= 1.0:
            raise SimulationError(
                f"Sample period {self.sample_period} does not fit duration {self.duration}"
            )
        if not np.isclose(ratio, round(ratio), atol=1e-6):
            logger.debug(f"Duration {self.duration} rounded to {round(ratio)} samples")

    @classmethod
    def for_duration(cls, duration, settings, drag_coefficient, amplitude=0.0, phase=0.0):
        return cls(
            duration=duration,
            sigma=duration / (2 * settings.truncation),
            truncation=settings.truncation,
            drag_coefficient=drag_coefficient,
            amplitude=amplitude,
            phase=phase,
            sample_period=settings.sample_period,
        )

    @property
    def n_samples(self):
        return int(round(self.duration / self.sample_period))

    @property
    def sample_times(self):
        """Sample midpoints measured from the pulse centre."""
        dt = self.duration / self.n_samples
        return (np.arange(self.n_samples) + 0.5) * dt - self.duration / 2


def _unit_shape(spec):
    t = spec.sample_times
    edge = np.exp(-spec.truncation ** 2 / 2)
    g = np.exp(-t ** 2 / (2 * spec.sigma ** 2))
    shape = g - edge
    derivative = -t / spec.sigma ** 2 * g
    peak = np.max(shape)
    return shape / peak, derivative / peak


def envelope_area(spec):
    """Integral in seconds of the peak-normalised in-phase shape."""
    shape, _ = _unit_shape(spec)
    return float(np.sum(shape) * spec.duration / spec.n_samples)


def synth_drag_envelope(spec):
    """
    Sampled complex DRAG waveform of a pulse.

    The in-phase part is the baseline-subtracted Gaussian, normalised so the
    largest sample equals the amplitude; the quadrature part is
    drag_coefficient times its time derivative.

    Args:
        spec (PulseEnvelope): Pulse description

    Returns:
        np.ndarray: Complex samples in mV, one per sample period
    """
    shape, derivative = _unit_shape(spec)
    in_phase = spec.amplitude * shape
    quadrature = spec.drag_coefficient * spec.amplitude * derivative
    return (in_phase + 1j * quadrature) * np.exp(1j * spec.phase)
