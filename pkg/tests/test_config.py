"""Tests for experiment config parsing, presets and validation."""

import pytest

import config
from modules.driveline.transfer import tanh_saturation_for_error
from modules.errors import ConfigError


def _write(tmp_path, text, name="exp.env"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_defaults_resolve_device_b():
    cfg = config.resolve({})
    assert cfg['DEVICE'] == 'B'
    assert cfg['A_PI_REF_MV'] == 235.0
    assert cfg['LINE_SATURATION_MV'] == pytest.approx(tanh_saturation_for_error(235.0, 3.6))
    assert cfg['LINE_SATURATION_MV'] == pytest.approx(235.0 / 0.4, rel=0.01)
    assert cfg['BENCH_SEQUENCES'] == 50


def test_device_a_preset():
    cfg = config.resolve({'DEVICE': 'A'})
    assert cfg['T1_US'] == 12.3
    assert cfg['T2_US'] == 9.86
    assert cfg['LINE_SATURATION_MV'] == pytest.approx(tanh_saturation_for_error(730.0, 3.6))


def test_given_values_beat_presets():
    cfg = config.resolve({'DEVICE': 'A', 'T1_US': 20.0, 'BENCH_SHOTS': 100})
    assert cfg['T1_US'] == 20.0
    assert cfg['BENCH_SHOTS'] == 100


def test_fast_profile_scales_per_protocol_family():
    clifford = config.resolve({'PROFILE': 'fast', 'PROTOCOL': 'pb'})
    random_xeb = config.resolve({'PROFILE': 'fast', 'PROTOCOL': 'xeb', 'XEB_MODE': 'random'})
    assert (clifford['BENCH_SEQUENCES'], clifford['BENCH_MAX_LENGTH']) == (20, 256)
    assert random_xeb['BENCH_SEQUENCES'] == 60
    assert clifford['BOOTSTRAP_REPEATS'] == 0


def test_parse_values_collects_every_problem():
    with pytest.raises(ConfigError) as info:
        config.parse_values({'T1_USS': '12', 'SEED': 'abc', 'DEVICE': 'C', 'DEBIAS_SHOTS': 'maybe'})
    problems = info.value.problems
    assert len(problems) == 4
    assert "T1_USS: unknown key" in problems
    assert any(p.startswith("SEED: expected int") for p in problems)


def test_parse_lists_and_optional_values():
    values = config.parse_values({'CAL_ANGLES_DEG': '180, 90,45', 'DRAG_COEFFICIENT': '', 'PULSE_DURATIONS_NS': ''})
    assert values == {'CAL_ANGLES_DEG': (180.0, 90.0, 45.0), 'DRAG_COEFFICIENT': None, 'PULSE_DURATIONS_NS': ()}


def test_missing_required_value():
    with pytest.raises(ConfigError, match="SEED: missing value"):
        config.parse_values({'SEED': ''})


def test_lifetime_constraint():
    with pytest.raises(ConfigError) as info:
        config.resolve({'T1_US': 10.0, 'T2_US': 25.0})
    assert info.value.problems == ["T2_US: must not exceed 2*T1_US (20), got 25"]


@pytest.mark.parametrize("given, key", [
    ({'READOUT_ERROR': 0.7}, 'READOUT_ERROR'),
    ({'BOOTSTRAP_REPEATS': 1}, 'BOOTSTRAP_REPEATS'),
    ({'CAL_ANGLES_DEG': (0.0,)}, 'CAL_ANGLES_DEG'),
    ({'PROTOCOL': 'xeb', 'BENCH_SEQUENCES': 5}, 'BENCH_SEQUENCES'),
    ({'CONFIG_SCHEMA_VERSION': 2}, 'CONFIG_SCHEMA_VERSION'),
    ({'ANHARMONICITY_MHZ': 0.0}, 'ANHARMONICITY_MHZ'),
    ({'LINE_PEAK_ERROR_DEG': 120.0}, 'LINE_PEAK_ERROR_DEG'),
    ({'LINE_SATURATION_MV': -5.0}, 'LINE_SATURATION_MV'),
    ({'SUBSTEPS': 8}, 'SUBSTEPS'),
    ({'INTEGRATOR': 'rk4', 'SUBSTEPS': 0}, 'SUBSTEPS'),
])
def test_constraint_violations(given, key):
    with pytest.raises(ConfigError) as info:
        config.resolve(given)
    assert info.value.problems[0].startswith(f"{key}:")


def test_load_file_with_overrides(tmp_path):
    path = _write(tmp_path, "# device A run\nPROTOCOL=rb\nDEVICE=A\nSEED=5\nCAL_SHOTS=1024\n")
    cfg = config.load_experiment_config(path, {'SEED': 9, 'THREADS': None})
    assert cfg['SEED'] == 9
    assert cfg['THREADS'] == config.DEFAULT_THREADS
    assert cfg['CAL_SHOTS'] == 1024
    assert cfg.source == path
    assert cfg.given['DEVICE'] == 'A'


def test_load_rejects_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="file not found"):
        config.load_experiment_config(str(tmp_path / "nope.env"))


def test_unknown_override_rejected(tmp_path):
    path = _write(tmp_path, "PROTOCOL=rb\n")
    with pytest.raises(ConfigError, match="BOGUS: unknown key"):
        config.load_experiment_config(path, {'BOGUS': 1})


def test_config_hash_tracks_values():
    base = config.resolve({'DEVICE': 'A'})
    assert base.config_hash == config.resolve({'DEVICE': 'A'}).config_hash
    assert base.config_hash != base.with_overrides(SEED=1).config_hash
    # presets resolve to the same values whether given or defaulted
    assert base.config_hash == config.resolve({'DEVICE': 'A', 'T1_US': 12.3}).config_hash


def test_with_overrides_reapplies_presets():
    cfg = config.resolve({'DEVICE': 'A'}).with_overrides(DEVICE='B')
    assert cfg['T1_US'] == 60.9


def test_config_values_are_read_only():
    cfg = config.resolve({})
    with pytest.raises(TypeError):
        cfg.values['SEED'] = 3


def test_describe_schema_lists_every_key():
    rows = config.describe_schema()
    assert [r[0] for r in rows] == list(config.SCHEMA)
    assert ('T1_US', 'float', None, 'us', 'measured lifetime') in rows


def test_saturation_follows_peak_error():
    mild = config.resolve({'LINE_PEAK_ERROR_DEG': 1.0})
    strong = config.resolve({'LINE_PEAK_ERROR_DEG': 10.0})
    assert mild['LINE_SATURATION_MV'] > strong['LINE_SATURATION_MV']
    # an explicit saturation wins over the derived one
    assert config.resolve({'LINE_SATURATION_MV': 900.0})['LINE_SATURATION_MV'] == 900.0


def test_rk4_substeps():
    assert config.resolve({})['SUBSTEPS'] is None
    assert config.resolve({'INTEGRATOR': 'rk4', 'SUBSTEPS': 8})['SUBSTEPS'] == 8
