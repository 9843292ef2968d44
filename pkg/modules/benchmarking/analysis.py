"""
Decay analyses of randomized and purity benchmarking, and the leakage
rate-equation fit shared by every protocol.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Dict, Optional

import numpy as np
from loguru import logger

from modules.benchmarking.clifford import PUBLISHED_N_BAR
from modules.errors import BenchmarkError, FitError
from modules.fitting.decays import fit_exponential_decay
from modules.fitting.least_squares import CurveFitProblem, exp_decay_guess, fit_least_squares

RB = "rb"
PB = "pb"
XEB_FIXED = "xeb-fixed"
XEB_RANDOM = "xeb-random"
PROTOCOLS = (RB, PB, XEB_FIXED, XEB_RANDOM)


@dataclass(frozen=True)
class DecayCurve:
    """
    Per-length statistics of one benchmarked quantity.

    Attributes:
        name (str): Quantity name, used as the curve file stem
        lengths (np.ndarray): Sequence lengths m
        mean (np.ndarray): Mean over sequences at each length
        std (np.ndarray): Standard deviation over sequences at each length
        n_sequences (np.ndarray): Sequences contributing at each length
    """

    name: str
    lengths: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    n_sequences: np.ndarray

    @classmethod
    def from_samples(cls, name, lengths, samples):
        """
        Build a curve from an (n_sequences, n_lengths) sample matrix; NaN entries are skipped.
        """
        samples = np.atleast_2d(np.asarray(samples, dtype=float))
        lengths = np.asarray(lengths, dtype=float)
        if samples.shape[1] != lengths.size:
            raise BenchmarkError(f"{name}: {samples.shape[1]} columns for {lengths.size} lengths")
        counts = np.sum(np.isfinite(samples), axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = np.array([np.mean(col[np.isfinite(col)]) if c else np.nan
                             for col, c in zip(samples.T, counts)])
            std = np.array([np.std(col[np.isfinite(col)], ddof=1) if c > 1 else 0.0
                            for col, c in zip(samples.T, counts)])
        return cls(name, lengths, mean, std, counts.astype(int))

    def to_dict(self):
        return {
            "lengths": self.lengths.tolist(),
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "n_sequences": self.n_sequences.tolist(),
        }


@dataclass(frozen=True)
class DecayAnalysis:
    """
    Exponential fit of one decay and the error derived from it.

    Attributes:
        lengths (np.ndarray): Sequence lengths used in the fit
        means (np.ndarray): Per-length means
        stds (np.ndarray): Per-length standard deviations
        fit (FitOutcome): params = (A, base, B)
        base (float): Fitted decay base (alpha, u or lambda)
        base_stderr (float): Standard error of the base
        error (float): Derived error per gate
        error_stderr (float): Standard error of the derived error
    """

    lengths: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    fit: object
    base: float
    base_stderr: float
    error: float
    error_stderr: float

    def __post_init__(self):
        if not 0 < self.base <= 1:
            raise BenchmarkError(f"Decay base {self.base} outside (0, 1]")

    def to_dict(self):
        return {
            "base": self.base,
            "base_stderr": self.base_stderr,
            "error": self.error,
            "error_stderr": self.error_stderr,
            "amplitude": float(self.fit.params[0]),
            "offset": float(self.fit.params[2]),
            "converged": bool(self.fit.converged),
        }


def fit_decay(lengths, means, stds, to_error, to_error_slope, label):
    lengths = np.asarray(lengths, dtype=float)
    means = np.asarray(means, dtype=float)
    stds = np.zeros_like(means) if stds is None else np.asarray(stds, dtype=float)
    keep = np.isfinite(means)
    if np.count_nonzero(keep) < 3:
        raise FitError(f"{label} fit needs at least 3 finite points, got {np.count_nonzero(keep)}")
    outcome = fit_exponential_decay(lengths[keep], means[keep])
    base = float(outcome.params[1])
    base_stderr = float(outcome.stderr[1])
    error = to_error(base)
    error_stderr = abs(to_error_slope(base)) * base_stderr
    logger.debug(f"{label} fit: base = {base:.6f} +- {base_stderr:.2e}, error = {error:.3e}")
    return DecayAnalysis(lengths[keep], means[keep], stds[keep], outcome, base, base_stderr,
                         error, error_stderr)


def fit_rb(lengths, sz_means, n_bar, sz_stds=None):
    """
    Fit <sz>(m) = A * alpha**m + B and convert to E = (1 - alpha) / (2 N).

    Args:
        lengths (array): Numbers of Cliffords m
        sz_means (array): Mean <sz> per length
        n_bar (float): Physical pulses per Clifford
        sz_stds (array, optional): Spread per length, carried for reporting

    Returns:
        DecayAnalysis: error = E
    """
    return fit_decay(lengths, sz_means, sz_stds,
                     lambda a: (1.0 - a) / (2.0 * n_bar),
                     lambda a: -1.0 / (2.0 * n_bar),
                     "RB")


def fit_pb(lengths, purity_means, n_bar, purity_stds=None):
    """
    Fit <P>(m) = A' * u**m + B' and convert to E_inc = (1 - sqrt(u)) / (2 N).

    Returns:
        DecayAnalysis: error = E_inc
    """
    return fit_decay(lengths, purity_means, purity_stds,
                     lambda u: (1.0 - math.sqrt(u)) / (2.0 * n_bar),
                     lambda u: -1.0 / (4.0 * math.sqrt(u) * n_bar),
                     "PB")


def leakage_population(params, m):
    """p_f(m) = l/(l+s) (1 - exp(-(l+s) m)) + p0 exp(-(l+s) m)."""
    l, s, p0 = params
    rate = l + s
    m = np.asarray(m, dtype=float)
    decay = np.exp(-rate * m)
    if rate > 1e-300:
        growth = -np.expm1(-rate * m) / rate
    else:
        growth = m
    return l * growth + p0 * decay


@dataclass(frozen=True)
class LeakageFit:
    """
    Rate-equation fit of the f-state population.

    Attributes:
        l (float): Leakage rate per Clifford or cycle
        s (float): Seepage rate back to the qubit subspace
        p0 (float): p_f before the first gate
        L (float): Leakage per physical gate, l / N
        l_stderr (float): Standard error of l
        L_stderr (float): Standard error of L
        fit (FitOutcome): Underlying outcome
    """

    l: float
    s: float
    p0: float
    L: float
    l_stderr: float
    L_stderr: float
    fit: object = None

    @property
    def asymptote(self):
        return self.l / (self.l + self.s)

    def to_dict(self):
        return {"l": self.l, "s": self.s, "p0": self.p0, "L": self.L,
                "l_stderr": self.l_stderr, "L_stderr": self.L_stderr}


def _leakage_guesses(m, p):
    # Decay-based: read (l + s) from an exponential approach to the plateau.
    a, rate, b = exp_decay_guess(m, p)
    gamma = max(-math.log(rate), 1e-9)
    l = float(np.clip(b * gamma, 1e-12, 1.0))
    decay_guess = [l, float(np.clip(gamma - l, 0.0, 1.0)), float(np.clip(a + b, 0.0, 1.0))]

    # Linear-based: initial slope gives l, plateau gives l/(l+s).
    half = max(2, m.size // 2)
    slope, intercept = np.polyfit(m[:half], p[:half], 1)
    l = float(np.clip(slope, 1e-12, 1.0))
    plateau = max(float(np.max(p)), 1e-6)
    linear_guess = [l, float(np.clip(l / plateau - l, 0.0, 1.0)), float(np.clip(intercept, 0.0, 1.0))]
    return decay_guess, linear_guess


def fit_leakage(lengths, pf_means, n_bar):
    """
    Fit the leakage rate equation.

    Two starting points (decay-based and slope-based) are tried and the one
    with the lower residual is kept.

    Args:
        lengths (array): Sequence lengths m
        pf_means (array): Mean f-state population per length
        n_bar (float): Physical pulses per Clifford (1 for XEB cycles)

    Returns:
        LeakageFit: Rates and L = l / n_bar

    Raises:
        FitError: If no starting point converges or the fit has l + s <= 0
    """
    m = np.asarray(lengths, dtype=float)
    p = np.asarray(pf_means, dtype=float)
    keep = np.isfinite(p)
    m, p = m[keep], p[keep]
    if m.size < 3:
        raise FitError(f"Leakage fit needs at least 3 points, got {m.size}")
    order = np.argsort(m)
    m, p = m[order], p[order]

    best = None
    for guess in _leakage_guesses(m, p):
        problem = CurveFitProblem(model=leakage_population, x=m, y=p, initial_guess=guess,
                                  bounds=([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]))
        try:
            outcome = fit_least_squares(problem)
        except FitError as e:
            logger.debug(f"Leakage fit from {guess} failed: {e}")
            continue
        if best is None or outcome.residual_norm < best.residual_norm:
            best = outcome
    if best is None:
        raise FitError("Leakage fit failed from every starting point")

    l, s, p0 = (float(v) for v in best.params)
    if not l + s > 0:
        raise BenchmarkError(f"Leakage fit rejected: l + s = {l + s:.3e}")
    l_stderr = float(best.stderr[0])
    return LeakageFit(l, s, p0, l / n_bar, l_stderr, l_stderr / n_bar, best)


@dataclass(frozen=True)
class BenchmarkResult:
    """
    Per-gate errors of one benchmarking run.

    Attributes:
        protocol (str): "rb", "pb", "xeb-fixed" or "xeb-random"
        E (float): Total error per gate
        E_stderr (float): Its uncertainty
        E_inc (float, optional): Incoherent error per gate
        E_inc_stderr (float, optional): Its uncertainty
        L (float, optional): Leakage per gate
        L_stderr (float, optional): Its uncertainty
        leak_fit (LeakageFit, optional): Rate-equation fit
        n_bar (float): Normalisation used for the per-gate numbers
        alt_n_bar (float, optional): Second normalisation reported alongside
        E_coh_stderr (float, optional): Overrides the quadrature sum, e.g. from a bootstrap
        curves (dict): DecayCurve by name
        analyses (dict): DecayAnalysis by name
        uncertainty (str): "fit" or "bootstrap"
        metadata (dict): Protocol-specific extras (angle, scaling, duration)
    """

    protocol: str
    E: float
    E_stderr: float
    E_inc: Optional[float] = None
    E_inc_stderr: Optional[float] = None
    L: Optional[float] = None
    L_stderr: Optional[float] = None
    leak_fit: Optional[LeakageFit] = None
    n_bar: float = 1.0
    alt_n_bar: Optional[float] = None
    E_coh_stderr: Optional[float] = None
    curves: Dict[str, DecayCurve] = field(default_factory=dict)
    analyses: Dict[str, DecayAnalysis] = field(default_factory=dict)
    uncertainty: str = "fit"
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise BenchmarkError(f"Unknown protocol '{self.protocol}'")
        if self.E < 0 and abs(self.E) > 2 * self.E_stderr:
            logger.warning(f"{self.protocol}: E = {self.E:.3e} is negative beyond 2 sigma")

    @property
    def E_coh(self):
        if self.E_inc is None:
            return None
        return self.E - self.E_inc

    @property
    def E_coh_uncertainty(self):
        if self.E_inc is None:
            return None
        if self.E_coh_stderr is not None:
            return self.E_coh_stderr
        return math.hypot(self.E_stderr, self.E_inc_stderr or 0.0)

    def renormalized(self, n_bar):
        """The per-gate numbers under another pulses-per-Clifford normalisation."""
        scale = self.n_bar / n_bar

        def rescale(value):
            return None if value is None else value * scale

        return {
            "n_bar": n_bar,
            "E": rescale(self.E),
            "E_stderr": rescale(self.E_stderr),
            "E_inc": rescale(self.E_inc),
            "E_inc_stderr": rescale(self.E_inc_stderr),
            "E_coh": rescale(self.E_coh),
            "E_coh_stderr": rescale(self.E_coh_uncertainty),
            "L": rescale(self.L),
            "L_stderr": rescale(self.L_stderr),
        }

    def with_metadata(self, **extra):
        return replace(self, metadata={**self.metadata, **extra})

    def summary(self):
        """Flat record of the headline numbers."""
        return {
            "protocol": self.protocol,
            "E": self.E,
            "E_stderr": self.E_stderr,
            "E_inc": self.E_inc,
            "E_inc_stderr": self.E_inc_stderr,
            "E_coh": self.E_coh,
            "E_coh_stderr": self.E_coh_uncertainty,
            "L": self.L,
            "L_stderr": self.L_stderr,
            "n_bar": self.n_bar,
            "uncertainty": self.uncertainty,
            **self.metadata,
        }

    def to_dict(self):
        record = self.summary()
        record["leak_fit"] = self.leak_fit.to_dict() if self.leak_fit is not None else None
        record["fits"] = {name: a.to_dict() for name, a in sorted(self.analyses.items())}
        if self.alt_n_bar is not None:
            record["alternative_normalization"] = self.renormalized(self.alt_n_bar)
        return record


def clifford_result(protocol, rb, leak_fit, n_bar, pb=None, curves=None, alt_n_bar=PUBLISHED_N_BAR):
    """Assemble an RB or PB BenchmarkResult from its fits."""
    analyses = {"rb": rb}
    if pb is not None:
        analyses["pb"] = pb
    return BenchmarkResult(
        protocol=protocol,
        E=rb.error,
        E_stderr=rb.error_stderr,
        E_inc=pb.error if pb is not None else None,
        E_inc_stderr=pb.error_stderr if pb is not None else None,
        L=leak_fit.L if leak_fit is not None else None,
        L_stderr=leak_fit.L_stderr if leak_fit is not None else None,
        leak_fit=leak_fit,
        n_bar=n_bar,
        alt_n_bar=alt_n_bar,
        curves=dict(curves or {}),
        analyses=analyses,
    )
