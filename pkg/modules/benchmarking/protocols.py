"""
RB, PB and XEB runs against a Backend.

Every random sequence draws from its own stream keyed by (seed, protocol
tag, length, index), so runs with more sequences or different amplitude
scalings share the sequences they have in common.
"""

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from loguru import logger

from modules.benchmarking.analysis import (
    PB,
    RB,
    XEB_FIXED,
    XEB_RANDOM,
    BenchmarkResult,
    DecayCurve,
    clifford_result,
    fit_leakage,
    fit_pb,
    fit_rb,
)
from modules.benchmarking.clifford import PUBLISHED_N_BAR, clifford_table
from modules.benchmarking.sequences import (
    FIXED,
    TOMOGRAPHY_AXES,
    estimate_purity,
    generate_pb_sequence,
    generate_xeb_sequence,
)
from modules.benchmarking.xeb import PUBLISHED, fit_xeb, xeb_fidelity_terms, xeb_purity_terms
from modules.errors import BenchmarkError, ToolkitError
from modules.fitting.bootstrap import SequenceResampler, bootstrap_uncertainty
from modules.readout.confusion import ConfusionMatrix3
from modules.readout.mitigation import mitigate, renormalize_computational
from utils.seeding import derive_seed, stream


@dataclass(frozen=True)
class BenchmarkSettings:
    """
    Scale and analysis options of one benchmarking run.

    Attributes:
        lengths (tuple): Sequence lengths m (Cliffords or cycles)
        n_sequences (int): Random sequences per length
        shots (int): Shots per sequence
        bootstrap_repeats (int): Resamples for the error bars; 0 keeps the fit covariance
        alt_n_bar (float, optional): Second pulses-per-Clifford normalisation to report
        n_bar_override (float, optional): Replaces the table's pulses-per-Clifford as main normalisation
        debias_shots (bool): Remove the binomial shot-noise bias from purities
        xeb_convention (str): "published" (8/3) or "depolarizing" (2) decay-to-error factor
        purity_min_length (int): Shortest XEB length used in the purity fit
    """

    lengths: Tuple[int, ...]
    n_sequences: int
    shots: int
    bootstrap_repeats: int = 0
    alt_n_bar: Optional[float] = PUBLISHED_N_BAR
    n_bar_override: Optional[float] = None
    debias_shots: bool = True
    xeb_convention: str = PUBLISHED
    purity_min_length: int = 16

    def __post_init__(self):
        lengths = tuple(int(m) for m in self.lengths)
        if len(lengths) < 3 or lengths[0] < 0 or any(b <= a for a, b in zip(lengths, lengths[1:])):
            raise BenchmarkError("Need at least 3 strictly increasing non-negative lengths")
        object.__setattr__(self, "lengths", lengths)
        if self.n_sequences < 1 or self.shots < 2:
            raise BenchmarkError("n_sequences must be >= 1 and shots >= 2")

    @property
    def n_bar(self):
        return self.n_bar_override if self.n_bar_override else clifford_table().n_bar


def measure_populations(backend, sequences, shots, seeds, confusion=None):
    """
    Submit a batch and return mitigated (p_g, p_e, p_f) rows in submission order.
    """
    confusion = confusion or ConfusionMatrix3.identity()
    records = backend.submit_batch(sequences, shots, seeds)
    return np.array([mitigate(r, confusion).as_array() for r in records])


def qubit_sz(populations):
    """p_e - p_g after renormalising to the qubit subspace, per row."""
    rows = [renormalize_computational(tuple(p)) for p in np.atleast_2d(populations)]
    return np.array([pe - pg for pg, pe in rows])


def debiased_purity(sx, sy, sz, shots):
    """
    Purity with the binomial sampling bias removed.

    Each squared expectation from n shots overestimates s^2 by (1 - s^2)/n;
    (n P - 3)/(n - 1) undoes it for the sum of three.
    """
    purity = estimate_purity(sx, sy, sz)
    return (shots * purity - 3.0) / (shots - 1.0)


def _grid(settings):
    return [(i, j, m) for i in range(settings.n_sequences) for j, m in enumerate(settings.lengths)]


def _clifford_bodies(settings, seed):
    return {(i, j): generate_pb_sequence(m, stream(seed, f"clifford-{m}", i))
            for i, j, m in _grid(settings)}


def _bootstrap(settings, seed, data, analysis, label):
    resampler = SequenceResampler(data, seed=derive_seed(seed, "bootstrap"))
    _, std = bootstrap_uncertainty(resampler, analysis, settings.bootstrap_repeats)
    logger.debug(f"Bootstrap {label}: std = {std:.3e} over {settings.bootstrap_repeats} resamples")
    return std


def _leakage(lengths, pf_samples, n_bar, label):
    try:
        return fit_leakage(lengths, np.mean(pf_samples, axis=0), n_bar)
    except ToolkitError as e:
        logger.warning(f"{label} leakage fit failed: {e}")
        return None


def run_clifford_benchmark(backend, gate_set, settings, seed, confusion=None, purity=True):
    """
    Randomized benchmarking, with purity benchmarking on the same Clifford bodies.

    The RB sequences (body plus recovery) give E and, through p_f, the
    leakage; the three tomography variants of each body give the purity
    decay and E_inc.

    Args:
        backend (Backend): Measurement source
        gate_set (GateSet): Amplitudes of the X90/X180 pulses
        settings (BenchmarkSettings): Scale and analysis options
        seed (int): Master seed
        confusion (ConfusionMatrix3, optional): Readout model for mitigation
        purity (bool): Also run the tomography sequences

    Returns:
        BenchmarkResult: protocol "pb" when purity is True, else "rb"
    """
    lengths = np.asarray(settings.lengths, dtype=float)
    n_seq, n_len = settings.n_sequences, len(settings.lengths)
    n_bar = settings.n_bar
    bodies = _clifford_bodies(settings, seed)
    grid = _grid(settings)

    logger.info(f"Running {'PB' if purity else 'RB'}: {n_seq} sequences x {n_len} lengths, "
                f"{settings.shots} shots, N = {n_bar:.4f} pulses/Clifford")
    sequences = [bodies[(i, j)].body.gates(gate_set) for i, j, _ in grid]
    seeds = [derive_seed(seed, f"rb-readout-{m}", i) for i, _, m in grid]
    pops = measure_populations(backend, sequences, settings.shots, seeds, confusion)
    sz_rb = qubit_sz(pops).reshape(n_seq, n_len)
    pf = pops[:, 2].reshape(n_seq, n_len)

    curves = {
        "rb_sz": DecayCurve.from_samples("rb_sz", lengths, sz_rb),
        "rb_pf": DecayCurve.from_samples("rb_pf", lengths, pf),
    }
    rb = fit_rb(lengths, curves["rb_sz"].mean, n_bar, curves["rb_sz"].std)
    leak = _leakage(lengths, pf, n_bar, "RB")

    pb = None
    samples = [sz_rb]
    if purity:
        axes = {}
        for axis in TOMOGRAPHY_AXES:
            tomo = [bodies[(i, j)].gates(gate_set)[axis] for i, j, _ in grid]
            tomo_seeds = [derive_seed(seed, f"pb-{axis}-readout-{m}", i) for i, _, m in grid]
            axis_pops = measure_populations(backend, tomo, settings.shots, tomo_seeds, confusion)
            axes[axis] = qubit_sz(axis_pops).reshape(n_seq, n_len)
            logger.debug(f"PB tomography axis {axis} done")
        if settings.debias_shots:
            purities = debiased_purity(axes["x"], axes["y"], axes["z"], settings.shots)
        else:
            purities = estimate_purity(axes["x"], axes["y"], axes["z"])
        curves["pb_purity"] = DecayCurve.from_samples("pb_purity", lengths, purities)
        pb = fit_pb(lengths, curves["pb_purity"].mean, n_bar, curves["pb_purity"].std)
        samples.append(purities)

    result = clifford_result(PB if purity else RB, rb, leak, n_bar, pb=pb, curves=curves,
                             alt_n_bar=settings.alt_n_bar)

    if settings.bootstrap_repeats:
        data = np.stack(samples, axis=1)

        def total(sample):
            return fit_rb(lengths, np.mean(sample[:, 0], axis=0), n_bar).error

        def incoherent(sample):
            return fit_pb(lengths, np.mean(sample[:, 1], axis=0), n_bar).error

        updates = {"E_stderr": _bootstrap(settings, seed, data, total, "E"), "uncertainty": "bootstrap"}
        if purity:
            updates["E_inc_stderr"] = _bootstrap(settings, seed, data, incoherent, "E_inc")
            updates["E_coh_stderr"] = _bootstrap(
                settings, seed, data, lambda s: total(s) - incoherent(s), "E_coh")
        result = replace(result, **updates)

    _log_result(result)
    return result


def run_rb(backend, gate_set, settings, seed, confusion=None):
    """Randomized benchmarking only: E and L."""
    return run_clifford_benchmark(backend, gate_set, settings, seed, confusion, purity=False)


def run_pb(backend, gate_set, settings, seed, confusion=None):
    """Randomized plus purity benchmarking: E, E_inc, E_coh and L."""
    return run_clifford_benchmark(backend, gate_set, settings, seed, confusion, purity=True)


def _xeb_means(lengths, data, shots, min_purity_length):
    # data[..., :] = (p_g, p_e, ideal p_g, ideal p_e) per sequence and length
    f_terms = np.stack([xeb_fidelity_terms(data[:, j, :2], data[:, j, 2:]) for j in range(len(lengths))], axis=1)
    p_terms = np.stack([xeb_purity_terms(data[:, j, 1], shots) for j in range(len(lengths))], axis=1)
    f_means = np.array([np.nan if np.isnan(col).all() else np.mean(col) for col in f_terms.T])
    p_means = np.mean(p_terms, axis=0)
    p_means = np.where(np.asarray(lengths) >= min_purity_length, p_means, np.nan)
    return f_terms, p_terms, f_means, p_means


def run_xeb(backend, gate_set, settings, seed, mode, theta=None, confusion=None):
    """
    Cross-entropy benchmarking with cycles X(theta_i) Z(phi_i).

    Args:
        backend (Backend): Measurement source
        gate_set (GateSet): Amplitude scaling under test
        settings (BenchmarkSettings): Scale and analysis options
        seed (int): Master seed
        mode (str): "fixed" or "random"
        theta (float, optional): Rotation angle of fixed mode, degrees
        confusion (ConfusionMatrix3, optional): Readout model for mitigation

    Returns:
        BenchmarkResult: E, E_inc, E_coh and L per physical gate
    """
    if mode == FIXED and theta is None:
        raise BenchmarkError("Fixed-angle XEB needs theta")
    lengths = np.asarray(settings.lengths, dtype=float)
    n_seq, n_len = settings.n_sequences, len(settings.lengths)
    grid = _grid(settings)
    tag = f"xeb-{mode}-{theta:g}" if mode == FIXED else f"xeb-{mode}"
    logger.info(f"Running XEB ({mode}{'' if theta is None else f', {theta:g} deg'}, "
                f"{gate_set.scaling} scaling): {n_seq} sequences x {n_len} lengths")

    cycles = [generate_xeb_sequence(m, mode, stream(seed, f"{tag}-{m}", i), theta, gate_set.angle_quantum)
              for i, _, m in grid]
    seeds = [derive_seed(seed, f"{tag}-readout-{m}", i) for i, _, m in grid]
    pops = measure_populations(backend, [c.gates(gate_set) for c in cycles], settings.shots, seeds, confusion)
    measured = np.array([renormalize_computational(tuple(p)) for p in pops])
    ideal = np.array([c.ideal_probabilities() for c in cycles])
    data = np.concatenate([measured, ideal], axis=1).reshape(n_seq, n_len, 4)
    pf = pops[:, 2].reshape(n_seq, n_len)

    shots = settings.shots if settings.debias_shots else None
    f_terms, p_terms, f_means, p_means = _xeb_means(lengths, data, shots, settings.purity_min_length)
    flagged = [int(m) for m, f in zip(settings.lengths, f_means) if np.isnan(f)]
    if flagged:
        logger.warning(f"XEB lengths {flagged} flagged: ideal distribution indistinguishable from uniform")
    curves = {
        "xeb_fidelity": DecayCurve.from_samples("xeb_fidelity", lengths, f_terms),
        "xeb_purity": DecayCurve.from_samples("xeb_purity", lengths, p_terms),
        "xeb_pf": DecayCurve.from_samples("xeb_pf", lengths, pf),
    }
    fidelity, purity = fit_xeb(lengths, f_means, p_means, convention=settings.xeb_convention,
                               f_stds=curves["xeb_fidelity"].std, purity_stds=curves["xeb_purity"].std)
    leak = _leakage(lengths, pf, 1.0, "XEB")

    result = BenchmarkResult(
        protocol=XEB_FIXED if mode == FIXED else XEB_RANDOM,
        E=fidelity.error,
        E_stderr=fidelity.error_stderr,
        E_inc=purity.error,
        E_inc_stderr=purity.error_stderr,
        L=leak.L if leak is not None else None,
        L_stderr=leak.L_stderr if leak is not None else None,
        leak_fit=leak,
        n_bar=1.0,
        curves=curves,
        analyses={"xeb_fidelity": fidelity, "xeb_purity": purity},
        metadata={"mode": mode, "theta": theta, "scaling": gate_set.scaling},
    )

    if settings.bootstrap_repeats:
        def errors(sample):
            _, _, f, p = _xeb_means(lengths, sample, shots, settings.purity_min_length)
            fid, pur = fit_xeb(lengths, f, p, convention=settings.xeb_convention)
            return fid.error, pur.error

        result = replace(
            result,
            E_stderr=_bootstrap(settings, seed, data, lambda s: errors(s)[0], "E"),
            E_inc_stderr=_bootstrap(settings, seed, data, lambda s: errors(s)[1], "E_inc"),
            E_coh_stderr=_bootstrap(settings, seed, data, lambda s: float(np.subtract(*errors(s))), "E_coh"),
            uncertainty="bootstrap",
        )

    _log_result(result)
    return result


def _log_result(result):
    parts = [f"E = {result.E:.3e} +- {result.E_stderr:.1e}"]
    if result.E_inc is not None:
        parts.append(f"E_inc = {result.E_inc:.3e} +- {result.E_inc_stderr:.1e}")
        parts.append(f"E_coh = {result.E_coh:.3e} +- {result.E_coh_uncertainty:.1e}")
    if result.L is not None and math.isfinite(result.L):
        parts.append(f"L = {result.L:.2e}")
    logger.info(f"{result.protocol}: " + ", ".join(parts))
