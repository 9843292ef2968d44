import numpy as np
import pytest

import config
from modules.backend.base import Backend
from modules.bloch.propagator import DecayRates
from modules.calibration.gate_set import GateSet
from modules.experiments.device import SimulatedDevice
from modules.readout.confusion import ConfusionMatrix3, ShotRecord, sample_readout
from modules.sim.gates import X_GATE, ideal_sequence_unitary

DEVICE_A_RATES = DecayRates.from_times(12.3e-6, 9.86e-6)


class StubBackend(Backend):
    """Returns the same record for every request and remembers what it was asked."""

    def __init__(self, record=ShotRecord(50, 50, 0)):
        super().__init__()
        self.record = record
        self.requests = []

    def _run(self, sequence, shots, seed):
        self.requests.append((len(sequence), shots, seed))
        total = sum(self.record.counts)
        scaled = [c * shots // total for c in self.record.counts]
        scaled[0] += shots - sum(scaled)
        return ShotRecord(*scaled)


class DepolarizingBackend(Backend):
    """
    Ideal gates followed by a depolarizing channel of strength lam per X pulse.
    A pulse then has average gate infidelity (1 - lam) / 2.
    """

    def __init__(self, lam, leak=0.0):
        super().__init__()
        self.lam = lam
        self.leak = leak

    def populations(self, sequence):
        n = sum(1 for g in sequence if g.kind == X_GATE)
        u = ideal_sequence_unitary(sequence)
        shrink = self.lam ** n
        p_e = shrink * abs(u[1, 0]) ** 2 + (1 - shrink) / 2
        p_f = self.leak * n
        return ((1 - p_e) * (1 - p_f), p_e * (1 - p_f), p_f)

    def _run(self, sequence, shots, seed):
        return sample_readout(self.populations(sequence), ConfusionMatrix3.identity(), shots,
                              np.random.default_rng(seed))


@pytest.fixture
def stub_backend():
    return StubBackend()


@pytest.fixture
def depolarizing_backend():
    # E = (1 - lam) / 2 = 1e-3 per pulse
    return DepolarizingBackend(0.998)


@pytest.fixture(scope="session")
def make_depolarizing_backend():
    return DepolarizingBackend


@pytest.fixture
def gate_set():
    return GateSet(a_pi=235.0, duration=15e-9)


@pytest.fixture
def device_a_rates():
    return DEVICE_A_RATES


def make_config(**values):
    """Resolved config from typed values, with the fast profile unless overridden."""
    given = {'PROFILE': 'fast', **values}
    return config.resolve(given)


@pytest.fixture
def fast_config():
    return make_config


@pytest.fixture
def coherent_device():
    """Device B with decoherence pushed out of reach and ideal readout, behind a linear line."""
    cfg = make_config(DEVICE='B', T1_US=1e9, T2_US=1e9, READOUT_ERROR=0.0, LINE_KIND='linear')
    return SimulatedDevice.from_config(cfg)


@pytest.fixture
def device_b():
    return SimulatedDevice.from_config(make_config(DEVICE='B'))


@pytest.fixture(autouse=True)
def _no_log_file(monkeypatch):
    monkeypatch.setattr(config, 'LOG_FILE', None)

