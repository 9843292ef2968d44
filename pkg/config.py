"""
Configuration settings for the calibration and benchmarking toolkit.
Ambient settings come from the environment (.env file if present);
experiment settings come from a dotenv-syntax config file validated
against SCHEMA.
"""

import hashlib
import json
import os
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Mapping, Optional

from dotenv import dotenv_values, load_dotenv

from modules.driveline.transfer import tanh_saturation_for_error
from modules.errors import ConfigError

# Load environment variables from .env file
load_dotenv()

# Results settings
RESULTS_DIR = os.getenv('RESULTS_DIR', 'results')

# Logging settings
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
LOG_FILE = os.getenv('LOG_FILE', 'logs/qutrit_cal.log')

# Run defaults, overridable per config file and per CLI flag
DEFAULT_SEED = int(os.getenv('DEFAULT_SEED', 20230419))
DEFAULT_THREADS = int(os.getenv('DEFAULT_THREADS', 1))
DEFAULT_PROFILE = os.getenv('DEFAULT_PROFILE', 'paper')

TOOLKIT_VERSION = '0.3.0'
CONFIG_SCHEMA_VERSION = 1

PROTOCOLS = ('npulse', 'response-curve', 'rb', 'pb', 'xeb', 'sim')
PROFILES = ('paper', 'fast')

# Range of LINE_PEAK_ERROR_DEG a tanh line can realise
MIN_LINE_PEAK_ERROR_DEG = 0.01
MAX_LINE_PEAK_ERROR_DEG = 90.0


@dataclass(frozen=True)
class Field:
    """
    One experiment-config key.

    Attributes:
        type (str): "int", "float", "str", "bool", "floats" or "ints"
        default: Value when neither the file, the device preset nor the profile sets it
        unit (str): Physical unit, empty for dimensionless
        provenance (str): Where the default comes from
        choices (tuple): Allowed values for str fields
        optional (bool): An empty value means "unset" (None)
    """

    type: str
    default: Any
    unit: str = ''
    provenance: str = 'assumption'
    choices: tuple = ()
    optional: bool = False


SCHEMA = {
    # Run
    'CONFIG_SCHEMA_VERSION': Field('int', CONFIG_SCHEMA_VERSION, provenance='toolkit'),
    'PROTOCOL': Field('str', 'pb', choices=PROTOCOLS, provenance='toolkit'),
    'SEED': Field('int', DEFAULT_SEED, provenance='toolkit'),
    'THREADS': Field('int', DEFAULT_THREADS, provenance='toolkit'),
    'PROFILE': Field('str', DEFAULT_PROFILE, choices=PROFILES, provenance='toolkit'),

    # Device (presets per DEVICE; any value can be overridden)
    'DEVICE': Field('str', 'B', choices=('A', 'B'), provenance='measured device presets'),
    'ANHARMONICITY_MHZ': Field('float', None, 'MHz', 'measured anharmonicity alpha/2pi'),
    'T1_US': Field('float', None, 'us', 'measured lifetime'),
    'T2_US': Field('float', None, 'us', 'measured Ramsey (A) or echo (B) decay time'),
    'EF_RELAXATION_SCALE': Field('float', 2.0, '1/T1', 'harmonic-oscillator matrix element'),
    'EF_DEPHASING_SCALE': Field('float', 4.0, 'Gamma_phi', 'number-operator dephasing'),
    'READOUT_ERROR': Field('float', None, '', 'measured three-state assignment error'),
    'A_PI_REF_MV': Field('float', None, 'mV', 'measured 15-ns pi amplitude'),
    'TAU_REF_NS': Field('float', 15.0, 'ns', 'reference pulse length of the pi amplitude'),

    # Drive line
    'LINE_KIND': Field('str', 'tanh-compression', choices=('linear', 'tanh-compression', 'odd-polynomial'),
                       provenance='mixer-amplifier compression of the drive chain'),
    'LINE_SATURATION_MV': Field('float', None, 'mV', 'derived from LINE_PEAK_ERROR_DEG when unset', optional=True),
    'LINE_PEAK_ERROR_DEG': Field('float', 3.6, 'deg', 'peak over-rotation of linear scaling through a tanh line'),
    'LINE_COEFFICIENTS': Field('floats', (1.0, 0.0, 0.0), '', 'assumption'),
    'LINE_MAX_MV': Field('float', 1500.0, 'mV', 'assumption'),
    'LINE_FULL_SCALE_MV': Field('float', 1000.0, 'mV', 'assumption'),

    # Pulses
    'PULSE_DURATION_NS': Field('float', 15.0, 'ns', 'shortest benchmarked gate'),
    'PULSE_TRUNCATION': Field('float', 2.5, 'sigma', 'Gaussian truncated at +-2.5 sigma'),
    'DRAG_COEFFICIENT': Field('float', None, 's', '-1/(2 alpha)', optional=True),
    'SAMPLE_PERIOD_NS': Field('float', 0.5, 'ns', 'assumption (2 GS/s AWG)'),
    'SUBSTEPS': Field('int', None, '', 'RK4 substeps per sample, 4 when unset; rk4 only', optional=True),
    'INTEGRATOR': Field('str', 'expm', choices=('expm', 'rk4'), provenance='assumption'),
    'PULSE_LINEARIZATION': Field('bool', True, '', 'amplitude pre-compensation of the f-level Stark bend'),

    # N-pulse calibration
    'CAL_ANGLES_DEG': Field('floats', (18.0, 22.5, 30.0, 36.0, 45.0, 60.0, 90.0, 120.0, 135.0, 150.0, 180.0),
                            'deg', 'response-curve angle set'),
    'CAL_SHOTS': Field('int', 4096, '', 'single-shot acquisitions per point'),
    'N_MAX': Field('int', 150, '', 'largest repetition count used for calibration'),
    'N_STEP': Field('int', 5, '', 'assumption'),
    'N_STEP_COMPLEMENT': Field('int', 3, '', 'assumption'),
    'CAL_TOLERANCE_DEG': Field('float', 0.05, 'deg', 'assumption'),
    'CAL_MAX_ITERATIONS': Field('int', 5, '', 'assumption'),
    'CAL_SCAN_DEG': Field('float', 5.0, 'deg', 'assumption'),
    'RABI_POINTS': Field('int', 21, '', 'assumption'),
    'RABI_SPAN': Field('float', 0.3, '', 'assumption'),
    'IDLE_GAP_NS': Field('float', 0.0, 'ns', 'idle time between repeated pulses'),
    'MODEL_T1_US': Field('float', None, 'us', 'independently measured T1; device value if unset', optional=True),
    'MODEL_T2_US': Field('float', None, 'us', 'independently measured T2; device value if unset', optional=True),

    # Benchmarking
    'BENCH_SEQUENCES': Field('int', None, '', 'profile'),
    'BENCH_MAX_LENGTH': Field('int', None, '', 'profile'),
    'BENCH_SHOTS': Field('int', None, '', 'profile'),
    'BOOTSTRAP_REPEATS': Field('int', None, '', 'profile'),
    'PULSE_DURATIONS_NS': Field('floats', (), 'ns', 'duration sweep; PULSE_DURATION_NS if empty'),
    'AMPLITUDE_SCALING': Field('str', 'calibrated', choices=('linear', 'calibrated', 'polynomial', 'both'),
                               provenance='linear vs N-pulse-calibrated vs fitted-polynomial amplitudes'),
    'XEB_MODE': Field('str', 'fixed', choices=('fixed', 'random'), provenance='fixed-angle and random-angle cycles'),
    'XEB_ANGLES_DEG': Field('floats', (45.0, 60.0, 90.0, 135.0, 150.0), 'deg', 'fixed-angle benchmark set'),
    'ANGLE_QUANTUM_DEG': Field('float', 0.1, 'deg', 'assumption', optional=True),
    'N_BAR_OVERRIDE': Field('float', None, '', 'table average if unset', optional=True),
    'ALT_N_BAR': Field('float', 1.125, '', 'published pulses-per-Clifford average', optional=True),
    'XEB_ERROR_CONVENTION': Field('str', 'published', choices=('published', 'depolarizing'), provenance='published decay-to-error factor 8/3'),
    'PURITY_MIN_LENGTH': Field('int', 16, '', 'assumption'),
    'DEBIAS_SHOTS': Field('bool', True, '', 'assumption'),

    # Single-sequence simulation
    'SIM_GATES': Field('str', 'X90,Z45,X180', provenance='toolkit'),
    'SIM_SHOTS': Field('int', 4096, provenance='toolkit'),
}

DEVICE_PRESETS = {
    'A': {'ANHARMONICITY_MHZ': -153.0, 'T1_US': 12.3, 'T2_US': 9.86, 'READOUT_ERROR': 0.03,
          'A_PI_REF_MV': 730.0},
    'B': {'ANHARMONICITY_MHZ': -183.0, 'T1_US': 60.9, 'T2_US': 67.3, 'READOUT_ERROR': 0.04,
          'A_PI_REF_MV': 235.0},
}

# Sequences, longest length, shots and bootstrap repeats per protocol family
PROFILE_PRESETS = {
    'paper': {
        'clifford': (50, 4096, 4096, 100),
        'xeb-fixed': (200, 4096, 4096, 100),
        'xeb-random': (400, 2048, 8192, 100),
    },
    'fast': {
        'clifford': (20, 256, 1024, 0),
        'xeb-fixed': (40, 256, 1024, 0),
        'xeb-random': (60, 256, 1024, 0),
    },
}

_TRUE = ('1', 'true', 'yes', 'on')
_FALSE = ('0', 'false', 'no', 'off')


def _parse(spec, raw):
    text = raw.strip()
    if spec.type == 'str':
        if spec.choices and text not in spec.choices:
            raise ValueError(f"expected one of {', '.join(spec.choices)}, got '{text}'")
        return text
    if spec.type == 'bool':
        if text.lower() in _TRUE:
            return True
        if text.lower() in _FALSE:
            return False
        raise ValueError(f"expected bool, got '{text}'")
    if spec.type in ('floats', 'ints'):
        cast = float if spec.type == 'floats' else int
        items = [t.strip() for t in text.split(',') if t.strip()]
        try:
            return tuple(cast(t) for t in items)
        except ValueError:
            raise ValueError(f"expected comma-separated {spec.type[:-1]}s, got '{text}'") from None
    cast = float if spec.type == 'float' else int
    try:
        return cast(text)
    except ValueError:
        raise ValueError(f"expected {spec.type}, got '{text}'") from None


def profile_family(protocol, xeb_mode):
    if protocol == 'xeb':
        return f'xeb-{xeb_mode}'
    return 'clifford'


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Validated, fully resolved experiment settings.

    Attributes:
        values (Mapping): Every SCHEMA key with its resolved value
        given (Mapping): The keys the user set, before presets were applied
        source (str, optional): Path of the config file
    """

    values: Mapping[str, Any]
    given: Mapping[str, Any] = field(default_factory=dict, compare=False)
    source: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'values', MappingProxyType(dict(self.values)))
        object.__setattr__(self, 'given', MappingProxyType(dict(self.given)))

    def __getitem__(self, key):
        return self.values[key]

    def to_dict(self):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in sorted(self.values.items())}

    def with_overrides(self, **overrides):
        """New config with some keys replaced; presets are re-applied to the rest."""
        return resolve({**self.given, **overrides}, self.source)

    @property
    def config_hash(self):
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def resolve(given, source=None):
    """
    Fill defaults, device presets and profile scales, then check cross-field constraints.

    Args:
        given (dict): Parsed values set by the user; presets never replace them
        source (str, optional): Config file path

    Returns:
        ExperimentConfig: Resolved config

    Raises:
        ConfigError: With one field-path diagnostic per problem
    """
    resolved = {key: spec.default for key, spec in SCHEMA.items()}
    resolved.update(given)

    for key, value in DEVICE_PRESETS[resolved['DEVICE']].items():
        if given.get(key) is None:
            resolved[key] = value
    if resolved['LINE_SATURATION_MV'] is None and _saturation_derivable(resolved):
        resolved['LINE_SATURATION_MV'] = tanh_saturation_for_error(resolved['A_PI_REF_MV'],
                                                                   resolved['LINE_PEAK_ERROR_DEG'])

    family = profile_family(resolved['PROTOCOL'], resolved['XEB_MODE'])
    scale = PROFILE_PRESETS[resolved['PROFILE']][family]
    for key, value in zip(('BENCH_SEQUENCES', 'BENCH_MAX_LENGTH', 'BENCH_SHOTS', 'BOOTSTRAP_REPEATS'), scale):
        if given.get(key) is None:
            resolved[key] = value

    problems = _check_constraints(resolved)
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(resolved, given, source)


def _saturation_derivable(v):
    return v['A_PI_REF_MV'] > 0 and MIN_LINE_PEAK_ERROR_DEG <= v['LINE_PEAK_ERROR_DEG'] < MAX_LINE_PEAK_ERROR_DEG


def _check_constraints(v):
    problems = []
    if v['CONFIG_SCHEMA_VERSION'] != CONFIG_SCHEMA_VERSION:
        problems.append(f"CONFIG_SCHEMA_VERSION: expected {CONFIG_SCHEMA_VERSION}, got {v['CONFIG_SCHEMA_VERSION']}")
    for key in ('T1_US', 'T2_US', 'A_PI_REF_MV', 'TAU_REF_NS', 'PULSE_DURATION_NS', 'SAMPLE_PERIOD_NS',
                'LINE_MAX_MV', 'PULSE_TRUNCATION'):
        if not v[key] > 0:
            problems.append(f"{key}: must be positive, got {v[key]}")
    if v['LINE_SATURATION_MV'] is not None and not v['LINE_SATURATION_MV'] > 0:
        problems.append(f"LINE_SATURATION_MV: must be positive, got {v['LINE_SATURATION_MV']}")
    if not MIN_LINE_PEAK_ERROR_DEG <= v['LINE_PEAK_ERROR_DEG'] < MAX_LINE_PEAK_ERROR_DEG:
        problems.append(f"LINE_PEAK_ERROR_DEG: must lie in [{MIN_LINE_PEAK_ERROR_DEG:g}, "
                        f"{MAX_LINE_PEAK_ERROR_DEG:g}), got {v['LINE_PEAK_ERROR_DEG']}")
    if v['SUBSTEPS'] is not None:
        if v['INTEGRATOR'] != 'rk4':
            problems.append("SUBSTEPS: only applies to INTEGRATOR=rk4")
        elif v['SUBSTEPS'] < 1:
            problems.append(f"SUBSTEPS: must be at least 1, got {v['SUBSTEPS']}")
    for key in ('CAL_SHOTS', 'N_MAX', 'N_STEP', 'N_STEP_COMPLEMENT', 'CAL_MAX_ITERATIONS',
                'BENCH_SEQUENCES', 'BENCH_MAX_LENGTH', 'BENCH_SHOTS', 'SIM_SHOTS', 'THREADS'):
        if v[key] < 1:
            problems.append(f"{key}: must be at least 1, got {v[key]}")
    if v['BOOTSTRAP_REPEATS'] < 0 or v['BOOTSTRAP_REPEATS'] == 1:
        problems.append(f"BOOTSTRAP_REPEATS: must be 0 or at least 2, got {v['BOOTSTRAP_REPEATS']}")
    if v['T1_US'] > 0 and v['T2_US'] > 2 * v['T1_US']:
        problems.append(f"T2_US: must not exceed 2*T1_US ({2 * v['T1_US']:g}), got {v['T2_US']:g}")
    if v['ANHARMONICITY_MHZ'] == 0:
        problems.append("ANHARMONICITY_MHZ: must be non-zero")
    if not 0 <= v['READOUT_ERROR'] < 2 / 3:
        problems.append(f"READOUT_ERROR: must lie in [0, 2/3), got {v['READOUT_ERROR']}")
    if not 0 < v['CAL_TOLERANCE_DEG'] < 30:
        problems.append(f"CAL_TOLERANCE_DEG: must lie in (0, 30), got {v['CAL_TOLERANCE_DEG']}")
    for angle in v['CAL_ANGLES_DEG']:
        if not 0 < angle <= 180:
            problems.append(f"CAL_ANGLES_DEG: {angle:g} outside (0, 180]")
    for angle in v['XEB_ANGLES_DEG']:
        if not 0 < angle <= 180:
            problems.append(f"XEB_ANGLES_DEG: {angle:g} outside (0, 180]")
    for duration in v['PULSE_DURATIONS_NS']:
        if not duration > 0:
            problems.append(f"PULSE_DURATIONS_NS: {duration:g} must be positive")
    if v['PROTOCOL'] == 'xeb' and v['XEB_MODE'] == 'fixed' and not v['XEB_ANGLES_DEG']:
        problems.append("XEB_ANGLES_DEG: fixed-angle XEB needs at least one angle")
    if v['PROTOCOL'] == 'xeb' and v['BENCH_SEQUENCES'] < 10:
        problems.append(f"BENCH_SEQUENCES: XEB purity needs at least 10 sequences, got {v['BENCH_SEQUENCES']}")
    if v['LINE_KIND'] == 'odd-polynomial' and len(v['LINE_COEFFICIENTS']) != 3:
        problems.append("LINE_COEFFICIENTS: odd-polynomial line needs three coefficients")
    return problems


def parse_values(raw):
    """
    Parse raw key-value strings against SCHEMA.

    Args:
        raw (dict): KEY -> string (None for a key written without a value)

    Returns:
        dict: KEY -> typed value

    Raises:
        ConfigError: Listing every unknown key and every type error
    """
    problems = []
    values = {}
    for key, text in raw.items():
        spec = SCHEMA.get(key)
        if spec is None:
            problems.append(f"{key}: unknown key")
            continue
        if text is None or not text.strip():
            if spec.optional or spec.type in ('floats', 'ints'):
                values[key] = None if spec.optional else ()
                continue
            problems.append(f"{key}: missing value")
            continue
        try:
            values[key] = _parse(spec, text)
        except ValueError as e:
            problems.append(f"{key}: {e}")
    if problems:
        raise ConfigError(problems)
    return values


def load_experiment_config(path, overrides=None):
    """
    Read, validate and resolve an experiment config file.

    Args:
        path (str): dotenv-syntax file
        overrides (dict, optional): KEY -> typed value from the command line

    Returns:
        ExperimentConfig: Resolved config

    Raises:
        ConfigError: On a missing file, unknown keys, type errors or violated constraints
    """
    if not os.path.isfile(path):
        raise ConfigError(f"config: file not found: {path}")
    values = parse_values(dotenv_values(path, interpolate=False))
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    unknown = [k for k in overrides if k not in SCHEMA]
    if unknown:
        raise ConfigError([f"{k}: unknown key" for k in unknown])
    values.update(overrides)
    return resolve(values, path)


def describe_schema():
    """Rows (key, type, default, unit, provenance) documenting every key."""
    return [(key, spec.type, spec.default, spec.unit, spec.provenance) for key, spec in SCHEMA.items()]
