"""
Simulated device and gate sets built from an experiment config.
"""

import math
from dataclasses import dataclass

from loguru import logger

from modules.backend.simulated import SimulatedBackend
from modules.benchmarking.protocols import BenchmarkSettings
from modules.benchmarking.sequences import log_lengths
from modules.bloch.propagator import DecayRates
from modules.calibration.gate_set import CALIBRATED, GateSet
from modules.calibration.npulse import NPulseSettings
from modules.driveline.transfer import DriveLineTransfer, apply_transfer
from modules.readout.confusion import default_confusion
from modules.sim.pulses import PulseEnvelope, PulseSettings, envelope_area
from modules.sim.qutrit import QutritModel

NS = 1e-9
US = 1e-6


def build_line(cfg):
    return DriveLineTransfer(
        kind=cfg['LINE_KIND'],
        saturation=cfg['LINE_SATURATION_MV'],
        coefficients=tuple(cfg['LINE_COEFFICIENTS']),
        max_amplitude=cfg['LINE_MAX_MV'],
        full_scale=cfg['LINE_FULL_SCALE_MV'],
    )


def build_pulse_settings(cfg):
    return PulseSettings(
        truncation=cfg['PULSE_TRUNCATION'],
        drag_coefficient=cfg['DRAG_COEFFICIENT'],
        sample_period=cfg['SAMPLE_PERIOD_NS'] * NS,
        substeps=cfg['SUBSTEPS'],
        method=cfg['INTEGRATOR'],
        linearize=cfg['PULSE_LINEARIZATION'],
    )


def drive_scale(cfg, line, settings):
    """
    Rabi rate per mV at the qubit, kappa = pi / (f(A_pi) * area).

    The reference pi amplitude through the line, integrated over the
    reference envelope, gives exactly a pi rotation of the two-level system.
    """
    reference = PulseEnvelope.for_duration(cfg['TAU_REF_NS'] * NS, settings, drag_coefficient=0.0)
    at_qubit = apply_transfer(line, cfg['A_PI_REF_MV'])
    return math.pi / (at_qubit * envelope_area(reference))


def build_model(cfg, line, settings):
    return QutritModel(
        anharmonicity=2 * math.pi * cfg['ANHARMONICITY_MHZ'] * 1e6,
        t1=cfg['T1_US'] * US,
        t2=cfg['T2_US'] * US,
        ef_relaxation_scale=cfg['EF_RELAXATION_SCALE'],
        ef_dephasing_scale=cfg['EF_DEPHASING_SCALE'],
        drive_scale=drive_scale(cfg, line, settings),
        confusion=default_confusion(cfg['READOUT_ERROR']),
    )


def build_rates(cfg):
    """Decay rates assumed by the N-pulse fit model."""
    t1 = cfg['MODEL_T1_US'] if cfg['MODEL_T1_US'] is not None else cfg['T1_US']
    t2 = cfg['MODEL_T2_US'] if cfg['MODEL_T2_US'] is not None else cfg['T2_US']
    return DecayRates.from_times(t1 * US, t2 * US)


def npulse_settings(cfg):
    return NPulseSettings(
        shots=cfg['CAL_SHOTS'],
        n_max=cfg['N_MAX'],
        n_step=cfg['N_STEP'],
        n_step_complement=cfg['N_STEP_COMPLEMENT'],
        tolerance=cfg['CAL_TOLERANCE_DEG'],
        max_iterations=cfg['CAL_MAX_ITERATIONS'],
        scan_deg=cfg['CAL_SCAN_DEG'],
        rabi_points=cfg['RABI_POINTS'],
        rabi_span=cfg['RABI_SPAN'],
        gap=cfg['IDLE_GAP_NS'] * NS,
    )


def benchmark_settings(cfg):
    return BenchmarkSettings(
        lengths=log_lengths(cfg['BENCH_MAX_LENGTH']),
        n_sequences=cfg['BENCH_SEQUENCES'],
        shots=cfg['BENCH_SHOTS'],
        bootstrap_repeats=cfg['BOOTSTRAP_REPEATS'],
        alt_n_bar=cfg['ALT_N_BAR'],
        n_bar_override=cfg['N_BAR_OVERRIDE'],
        debias_shots=cfg['DEBIAS_SHOTS'],
        xeb_convention=cfg['XEB_ERROR_CONVENTION'],
        purity_min_length=cfg['PURITY_MIN_LENGTH'],
    )


def nominal_pi_amplitude(cfg, duration_ns):
    """Starting pi amplitude for a pulse length, scaled from the reference length."""
    return cfg['A_PI_REF_MV'] * cfg['TAU_REF_NS'] / duration_ns


@dataclass(frozen=True)
class SimulatedDevice:
    """
    Everything a protocol needs to talk to the simulated qutrit.

    Attributes:
        cfg (ExperimentConfig): Source settings
        line (DriveLineTransfer): Ground-truth drive line
        pulse_settings (PulseSettings): Pulse shape and integrator
        model (QutritModel): Device model with its readout confusion
        backend (SimulatedBackend): Measurement source
        rates (DecayRates): Rates assumed by the calibration fits
    """

    cfg: object
    line: DriveLineTransfer
    pulse_settings: PulseSettings
    model: QutritModel
    backend: SimulatedBackend
    rates: DecayRates

    @classmethod
    def from_config(cls, cfg):
        line = build_line(cfg)
        settings = build_pulse_settings(cfg)
        model = build_model(cfg, line, settings)
        backend = SimulatedBackend(model, line, settings, threads=cfg['THREADS'])
        logger.info(
            f"Device {cfg['DEVICE']}: alpha/2pi = {cfg['ANHARMONICITY_MHZ']:g} MHz, T1 = {cfg['T1_US']:g} us, "
            f"T2 = {cfg['T2_US']:g} us, line {line.kind}, kappa = {model.drive_scale:.4e} rad/s/mV"
        )
        return cls(cfg, line, settings, model, backend, build_rates(cfg))

    @property
    def confusion(self):
        return self.model.confusion

    def gate_set(self, duration_ns, scaling=CALIBRATED):
        """Uncalibrated gate set at the nominal pi amplitude of a pulse length."""
        return GateSet(
            a_pi=nominal_pi_amplitude(self.cfg, duration_ns),
            duration=duration_ns * NS,
            scaling=scaling,
            angle_quantum=self.cfg['ANGLE_QUANTUM_DEG'],
            idle_gap=self.cfg['IDLE_GAP_NS'] * NS,
        )
