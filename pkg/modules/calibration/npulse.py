"""
N-pulse rotation-error calibration.

Measure p_e after N repetition groups, fit the pulse's rotation fraction with
the analytic two-level model, scale the amplitude, repeat.
"""

from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger

from modules.bloch.npulse_model import forward_model_batch
from modules.calibration.sequences import build_sequence, spec_for_angle
from modules.errors import CalibrationError, FitError
from modules.fitting.least_squares import CurveFitProblem, fit_least_squares
from modules.readout.confusion import ConfusionMatrix3
from modules.readout.mitigation import mitigate, renormalize_computational
from modules.sim.gates import GateSpec
from utils.seeding import derive_seed

MAX_ABS_EPSILON = 30.0
MIN_N_VALUES = 8


@dataclass(frozen=True)
class NPulseSettings:
    """
    Knobs of the calibration loop.

    Attributes:
        shots (int): Shots per N value
        n_max (int): Largest repetition count
        n_step (int): N step of the pi and pi/k variants
        n_step_complement (int): N step of the complement variant
        tolerance (float): Convergence threshold on |eps| in degrees
        max_iterations (int): Measure-fit-correct rounds before giving up
        scan_deg (float): Half-width in degrees of the coarse eps scan before the fit
        rabi_points (int): Amplitudes in the Rabi sweep
        rabi_span (float): Relative half-width of the Rabi sweep
        gap (float): Idle time in seconds before each repeated pulse
    """

    shots: int = 4096
    n_max: int = 150
    n_step: int = 5
    n_step_complement: int = 3
    tolerance: float = 0.05
    max_iterations: int = 5
    scan_deg: float = 5.0
    rabi_points: int = 21
    rabi_span: float = 0.3
    gap: float = 0.0

    def grid(self):
        return {"n_max": self.n_max, "step": self.n_step, "step_complement": self.n_step_complement}


@dataclass(frozen=True)
class CalibrationResult:
    """
    Outcome of fitting (and optionally correcting) one rotation.

    Attributes:
        theta_target (float): Target angle in degrees
        epsilon (float): Fitted rotation error in degrees
        epsilon_stderr (float): Standard error of epsilon from the fit covariance
        alpha_fraction (float): Fitted rotation as a fraction of pi
        variant (str): N-pulse variant used
        k (int): Split factor of the variant
        fit (FitOutcome): Underlying least-squares outcome
        measured (list): (N, p_e) points that were fitted
        amplitude_before (float): Amplitude that produced the data, mV
        amplitude_after (float): Corrected amplitude, mV
        iterations (int): Calibration rounds run
        history (list): Fitted epsilon of every round
    """

    theta_target: float
    epsilon: float
    epsilon_stderr: float
    alpha_fraction: float
    variant: str
    k: int
    fit: object
    measured: List[Tuple[int, float]] = field(default_factory=list)
    amplitude_before: Optional[float] = None
    amplitude_after: Optional[float] = None
    iterations: int = 0
    history: List[float] = field(default_factory=list)

    def __post_init__(self):
        if not abs(self.epsilon) < MAX_ABS_EPSILON:
            raise CalibrationError(f"|eps| = {abs(self.epsilon):.2f} deg is not identifiable")

    def with_amplitude(self, amplitude_before):
        """Copy carrying the amplitude that produced the data and its correction."""
        after = correct_amplitude(amplitude_before, self, self.theta_target)
        return replace(self, amplitude_before=float(amplitude_before), amplitude_after=after)

    def to_dict(self):
        return {
            "theta_target": self.theta_target,
            "epsilon": self.epsilon,
            "epsilon_stderr": self.epsilon_stderr,
            "alpha_fraction": self.alpha_fraction,
            "variant": self.variant,
            "k": self.k,
            "amplitude_before": self.amplitude_before,
            "amplitude_after": self.amplitude_after,
            "iterations": self.iterations,
            "history": list(self.history),
            "converged_fit": bool(self.fit.converged),
        }


def measure_excited_population(backend, sequences, shots, seeds, confusion=None):
    """
    Submit sequences and return the mitigated, qubit-renormalised p_e of each.

    Args:
        backend (Backend): Measurement source
        sequences (list): GateSpec lists
        shots (int): Shots per sequence
        seeds (list): One seed per sequence
        confusion (ConfusionMatrix3, optional): Readout model used for mitigation

    Returns:
        np.ndarray: p_e per sequence
    """
    confusion = confusion or ConfusionMatrix3.identity()
    records = backend.submit_batch(sequences, shots, seeds)
    return np.array([renormalize_computational(tuple(mitigate(r, confusion)))[1] for r in records])


def measure_npulse(backend, gate_set, spec, shots, seed, confusion=None):
    """
    Run the N-pulse sequence at every N of a spec.

    Returns:
        list: (N, p_e) pairs
    """
    sequences = [build_sequence(spec, n, gate_set) for n in spec.n_values]
    seeds = [derive_seed(seed, f"npulse-{spec.variant}-{spec.k}", n) for n in spec.n_values]
    p_e = measure_excited_population(backend, sequences, shots, seeds, confusion)
    return list(zip(spec.n_values, (float(p) for p in p_e)))


def fit_rotation_error(measured, spec, rates, tau, gap=0.0, scan_deg=5.0):
    """
    Fit the rotation fraction of the pulse under calibration.

    A coarse scan over eps in [-scan_deg, scan_deg] picks the starting point,
    then a bounded least-squares fit refines it.

    Args:
        measured (list): (N, p_e) pairs, at least 8 distinct N
        spec (CalSequenceSpec): Sequence that produced the data
        rates (DecayRates): Independently measured decay rates
        tau (float): Pulse duration in seconds
        gap (float): Idle time between pulses in seconds
        scan_deg (float): Half-width of the coarse scan in degrees

    Returns:
        CalibrationResult: eps = alpha * 180 - theta_target, without amplitudes

    Raises:
        CalibrationError: On too little data, a non-converged fit or |eps| >= 30 deg
    """
    data = np.asarray(measured, dtype=float)
    if data.ndim != 2 or np.unique(data[:, 0]).size < MIN_N_VALUES:
        raise CalibrationError(f"Need at least {MIN_N_VALUES} distinct N values")
    if np.any(data[:, 1] < 0) or np.any(data[:, 1] > 1):
        raise CalibrationError("Measured p_e must lie in [0, 1]")

    order = np.argsort(data[:, 0])
    n_values = tuple(int(n) for n in data[order, 0])
    p_e = data[order, 1]
    theta = spec.target_angle
    target = theta / 180.0

    def model(params, x):
        return forward_model_batch(np.atleast_1d(params[0]), spec, rates, tau, n_values, gap)[0]

    pulses = max(spec.pulses_under_test(max(n_values)), 1)
    step = 45.0 / pulses
    scan = np.arange(-scan_deg, scan_deg + step / 2, step)
    alphas = target + scan / 180.0
    alphas = alphas[alphas > 0]
    sse = np.sum((forward_model_batch(alphas, spec, rates, tau, n_values, gap) - p_e) ** 2, axis=1)
    start = float(alphas[int(np.argmin(sse))])
    logger.debug(f"eps scan over {alphas.size} points starts the fit at {start * 180 - theta:+.4f} deg")

    limit = (MAX_ABS_EPSILON - 1e-6) / 180.0
    lower = max(target - limit, 1e-6)
    upper = min(target + limit, 2.0)
    problem = CurveFitProblem(model=model, x=np.asarray(n_values, dtype=float), y=p_e,
                              initial_guess=[start], bounds=([lower], [upper]))
    try:
        outcome = fit_least_squares(problem)
    except FitError as e:
        raise CalibrationError(f"Rotation-error fit failed for {theta:g} deg: {e}") from e
    if not outcome.converged:
        raise CalibrationError(
            f"Rotation-error fit for {theta:g} deg did not converge: {outcome.message}",
            history=[{"params": outcome.params.tolist(), "residual_norm": outcome.residual_norm}],
        )

    alpha = float(outcome.params[0])
    epsilon = alpha * 180.0 - theta
    if not abs(epsilon) < MAX_ABS_EPSILON:
        raise CalibrationError(f"Fitted eps = {epsilon:.2f} deg rejected as non-identifiable")
    return CalibrationResult(
        theta_target=theta,
        epsilon=epsilon,
        epsilon_stderr=float(outcome.stderr[0] * 180.0),
        alpha_fraction=alpha,
        variant=spec.variant,
        k=spec.k,
        fit=outcome,
        measured=list(zip(n_values, (float(p) for p in p_e))),
    )


def correct_amplitude(current, result, theta_target):
    """
    First-order amplitude correction current * theta / (theta + eps).

    Raises:
        CalibrationError: If theta + eps <= 0
    """
    denominator = theta_target + result.epsilon
    if denominator <= 0:
        raise CalibrationError(f"Cannot correct: theta + eps = {denominator:.3f} deg")
    return float(current) * theta_target / denominator


def rabi_calibrate(backend, gate_set, settings, seed, confusion=None):
    """
    Coarse pi-amplitude calibration from a single-pulse amplitude sweep.

    The peak of p_e is refined by a parabola through the five points around
    the best sample.

    Args:
        backend (Backend): Measurement source
        gate_set (GateSet): Updated in place with the new pi amplitude
        settings (NPulseSettings): Sweep size and shots
        seed (int): Master seed
        confusion (ConfusionMatrix3, optional): Readout model

    Returns:
        float: Pi amplitude in mV
    """
    nominal = gate_set.a_pi
    amplitudes = np.linspace(nominal * (1 - settings.rabi_span), nominal * (1 + settings.rabi_span),
                             settings.rabi_points)
    sequences = [[GateSpec.x(180.0, a, gate_set.duration)] for a in amplitudes]
    seeds = [derive_seed(seed, "rabi", i) for i in range(len(amplitudes))]
    p_e = measure_excited_population(backend, sequences, settings.shots, seeds, confusion)

    best = int(np.argmax(p_e))
    lo, hi = max(best - 2, 0), min(best + 3, len(amplitudes))
    a_pi = float(amplitudes[best])
    if hi - lo >= 3:
        c2, c1, _ = np.polyfit(amplitudes[lo:hi], p_e[lo:hi], 2)
        vertex = -c1 / (2 * c2) if c2 < 0 else None
        if vertex is not None and amplitudes[lo] <= vertex <= amplitudes[hi - 1]:
            a_pi = float(vertex)
    logger.info(f"Rabi calibration: A_pi {nominal:.2f} -> {a_pi:.2f} mV (peak p_e {p_e[best]:.4f})")
    gate_set.set_amplitude(180.0, a_pi)
    return a_pi


def calibrate_angle(theta_target, backend, gate_set, rates, settings, seed,
                    confusion=None, tau=None, reference_fraction=None):
    """
    Iterate measure, fit and correct until |eps| < tolerance.

    Args:
        theta_target (float): Target angle in degrees
        backend (Backend): Measurement source
        gate_set (GateSet): Updated in place with the corrected amplitude
        rates (DecayRates): Decay rates of the fit model
        settings (NPulseSettings): Loop settings
        seed (int): Master seed
        confusion (ConfusionMatrix3, optional): Readout model
        tau (float, optional): Pulse duration; defaults to the gate set's
        reference_fraction (float, optional): Partner fraction of the complement variant

    Returns:
        CalibrationResult: Last round, with iteration count and eps history

    Raises:
        CalibrationError: If the loop does not converge within max_iterations
    """
    tau = gate_set.duration if tau is None else tau
    spec = spec_for_angle(theta_target, reference_fraction=reference_fraction, **settings.grid())
    history = []
    for iteration in range(1, settings.max_iterations + 1):
        before = gate_set.amplitude(theta_target)
        measured = measure_npulse(backend, gate_set, spec, settings.shots,
                                  derive_seed(seed, f"cal-{theta_target:g}", iteration), confusion)
        result = fit_rotation_error(measured, spec, rates, tau, settings.gap, settings.scan_deg)
        result = result.with_amplitude(before)
        history.append(result.epsilon)
        gate_set.set_amplitude(theta_target, result.amplitude_after)
        logger.info(
            f"X{theta_target:g} round {iteration}: eps = {result.epsilon:+.4f} deg, "
            f"A {before:.3f} -> {result.amplitude_after:.3f} mV"
        )
        if len(history) > 1 and abs(history[-1]) >= abs(history[-2]):
            logger.warning(f"X{theta_target:g}: |eps| did not decrease ({history[-2]:+.4f} -> {history[-1]:+.4f})")
        if abs(result.epsilon) < settings.tolerance:
            return replace(result, iterations=iteration, history=history)
    raise CalibrationError(
        f"X{theta_target:g} did not reach |eps| < {settings.tolerance} deg in {settings.max_iterations} rounds",
        history=history,
    )


def calibrate_pi(backend, gate_set, rates, settings, seed, confusion=None):
    """Rabi sweep followed by N-pulse calibration of the pi rotation."""
    rabi_calibrate(backend, gate_set, settings, seed, confusion)
    return calibrate_angle(180.0, backend, gate_set, rates, settings, seed, confusion)
