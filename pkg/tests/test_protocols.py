"""Tests for the RB, PB and XEB runners against test backends."""

import math
from dataclasses import replace

import numpy as np
import pytest

from modules.benchmarking.protocols import (
    BenchmarkSettings,
    debiased_purity,
    qubit_sz,
    run_pb,
    run_rb,
    run_xeb,
)
from modules.benchmarking.sequences import FIXED, RANDOM, log_lengths
from modules.benchmarking.xeb import DEPOLARIZING, PUBLISHED
from modules.calibration.gate_set import POLYNOMIAL, GateSet
from modules.driveline.angle_model import AngleModel
from modules.errors import BenchmarkError

E_TRUE = 1e-3
LAMBDA = 1 - 2 * E_TRUE


def _agree(a, sigma_a, b, sigma_b, scale=E_TRUE):
    return abs(a - b) < max(3 * math.hypot(sigma_a, sigma_b), 0.1 * scale)


@pytest.fixture(scope="module")
def clifford_settings():
    return BenchmarkSettings(lengths=log_lengths(1024), n_sequences=20, shots=512)


@pytest.fixture(scope="module")
def xeb_settings():
    return BenchmarkSettings(lengths=log_lengths(512), n_sequences=40, shots=512, xeb_convention=DEPOLARIZING)


@pytest.fixture(scope="module")
def pb_result(clifford_settings, make_depolarizing_backend):
    backend = make_depolarizing_backend(LAMBDA, leak=1e-4)
    return run_pb(backend, GateSet(235.0, 15e-9), clifford_settings, seed=31)


@pytest.fixture(scope="module")
def xeb_result(xeb_settings, make_depolarizing_backend):
    return run_xeb(make_depolarizing_backend(LAMBDA), GateSet(235.0, 15e-9), xeb_settings, seed=32, mode=RANDOM)


@pytest.fixture
def xeb_stub_settings():
    return BenchmarkSettings(lengths=(16, 32, 64, 128), n_sequences=10, shots=64)


def test_settings_validation():
    with pytest.raises(BenchmarkError):
        BenchmarkSettings(lengths=(1, 2), n_sequences=5, shots=100)
    with pytest.raises(BenchmarkError):
        BenchmarkSettings(lengths=(1, 4, 2), n_sequences=5, shots=100)
    with pytest.raises(BenchmarkError):
        BenchmarkSettings(lengths=(1, 2, 4), n_sequences=0, shots=100)
    assert BenchmarkSettings(lengths=(1, 2, 4), n_sequences=1, shots=2).n_bar == pytest.approx(20 / 24)
    assert BenchmarkSettings(lengths=(1, 2, 4), n_sequences=1, shots=2, n_bar_override=1.875).n_bar == 1.875


def test_qubit_sz_ignores_leaked_population():
    np.testing.assert_allclose(qubit_sz([(0.45, 0.45, 0.1), (0.9, 0.0, 0.1)]), [0.0, -1.0])


def test_debiased_purity_of_a_mixed_state():
    shots = 1000
    rng = np.random.default_rng(0)
    # the maximally mixed state reads +-1 with equal odds on every axis
    s = [2 * rng.binomial(shots, 0.5, 5000) / shots - 1 for _ in range(3)]
    assert np.mean(debiased_purity(*s, shots)) == pytest.approx(0.0, abs=2e-3)


def test_pb_submits_four_settings_per_sequence(stub_backend, gate_set):
    settings = BenchmarkSettings(lengths=(1, 2, 4), n_sequences=3, shots=100)
    run_pb(stub_backend, gate_set, settings, seed=1)
    assert len(stub_backend.requests) == 4 * 3 * 3
    assert {shots for _, shots, _ in stub_backend.requests} == {100}


def test_sequences_shared_across_scalings(stub_backend, gate_set, xeb_stub_settings):
    run_xeb(stub_backend, gate_set, xeb_stub_settings, seed=9, mode=FIXED, theta=90.0)
    linear = list(stub_backend.requests)
    stub_backend.requests.clear()
    polynomial = gate_set.copy(scaling=POLYNOMIAL, angle_model=AngleModel(a_pi=235.0))
    run_xeb(stub_backend, polynomial, xeb_stub_settings, seed=9, mode=FIXED, theta=90.0)
    assert stub_backend.requests == linear


def test_fixed_xeb_needs_an_angle(stub_backend, gate_set, xeb_stub_settings):
    with pytest.raises(BenchmarkError):
        run_xeb(stub_backend, gate_set, xeb_stub_settings, seed=0, mode=FIXED)


def test_rb_recovers_depolarizing_error(clifford_settings, gate_set, depolarizing_backend):
    result = run_rb(depolarizing_backend, gate_set, clifford_settings, seed=30)
    assert result.protocol == "rb"
    assert result.E_inc is None
    assert _agree(result.E, result.E_stderr, E_TRUE, 0.0)
    assert set(result.curves) == {"rb_sz", "rb_pf"}


def test_pb_total_and_incoherent_errors(pb_result):
    assert _agree(pb_result.E, pb_result.E_stderr, E_TRUE, 0.0)
    assert _agree(pb_result.E_inc, pb_result.E_inc_stderr, E_TRUE, 0.0, scale=2 * E_TRUE)
    assert abs(pb_result.E_coh) < max(3 * pb_result.E_coh_uncertainty, 0.3 * E_TRUE)


def test_pb_reports_leakage_per_pulse(pb_result):
    assert pb_result.L == pytest.approx(1e-4, rel=0.2)
    assert set(pb_result.curves) == {"rb_sz", "rb_pf", "pb_purity"}


def test_pb_alternative_normalization(pb_result):
    alt = pb_result.to_dict()["alternative_normalization"]
    assert alt["n_bar"] == 1.125
    assert alt["E"] == pytest.approx(pb_result.E * (20 / 24) / 1.125)


def test_xeb_matches_depolarizing_error(xeb_result):
    assert xeb_result.protocol == "xeb-random"
    assert xeb_result.n_bar == 1.0
    assert _agree(xeb_result.E, xeb_result.E_stderr, E_TRUE, 0.0)


def test_protocols_agree_on_total_error(pb_result, xeb_result):
    assert _agree(pb_result.E, pb_result.E_stderr, xeb_result.E, xeb_result.E_stderr)


def test_published_convention_scales_xeb_error(xeb_settings, xeb_result, make_depolarizing_backend):
    published = run_xeb(make_depolarizing_backend(LAMBDA), GateSet(235.0, 15e-9),
                        replace(xeb_settings, xeb_convention=PUBLISHED), seed=32, mode=RANDOM)
    assert published.E == pytest.approx(0.75 * xeb_result.E, rel=1e-6)


def test_bootstrap_replaces_fit_uncertainty(gate_set, make_depolarizing_backend):
    settings = BenchmarkSettings(lengths=log_lengths(256), n_sequences=8, shots=256, bootstrap_repeats=20)
    result = run_rb(make_depolarizing_backend(0.99), gate_set, settings, seed=4)
    assert result.uncertainty == "bootstrap"
    assert result.E_stderr > 0
