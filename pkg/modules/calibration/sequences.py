"""
N-pulse error-amplification sequences.

Three variants amplify the rotation error of the pulse under calibration:
    Pi             init X90, then N x [X(180 + eps)]
    PiOverK(k)     init X90, then N x [k x X(180/k + eps)]
    Complement(k)  init X90, then N x [X(180/k) calibrated, X(180 - 180/k + eps)]
In every variant one group adds up to a pi rotation, so a perfect gate keeps
the qubit on the equator and p_e stays at 0.5.
"""

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from modules.errors import CalibrationError
from modules.sim.gates import GateSpec

PI = "pi"
PI_OVER_K = "pi_over_k"
COMPLEMENT = "complement"
VARIANTS = (PI, PI_OVER_K, COMPLEMENT)


@dataclass(frozen=True)
class CalSequenceSpec:
    """
    Which N-pulse sequence to run and at which repetition counts.

    Attributes:
        variant (str): One of "pi", "pi_over_k", "complement"
        k (int): Split factor (1 for the pi variant, >= 2 otherwise)
        n_values (tuple): Strictly increasing, non-negative repetition counts N
        reference_fractions (tuple): Fractions of pi of the calibrated partner
            pulses; the complement variant needs exactly one (normally 1/k)
    """

    variant: str
    k: int = 1
    n_values: Tuple[int, ...] = field(default_factory=tuple)
    reference_fractions: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise CalibrationError(f"Unknown sequence variant '{self.variant}'")
        if self.variant == PI and self.k != 1:
            raise CalibrationError("The pi variant has k = 1")
        if self.variant != PI and self.k < 2:
            raise CalibrationError(f"{self.variant} needs k >= 2, got {self.k}")
        n_values = tuple(int(n) for n in self.n_values)
        if not n_values:
            raise CalibrationError("n_values must not be empty")
        if n_values[0] < 0 or any(b <= a for a, b in zip(n_values, n_values[1:])):
            raise CalibrationError("n_values must be non-negative and strictly increasing")
        object.__setattr__(self, "n_values", n_values)
        fractions = tuple(float(f) for f in self.reference_fractions)
        if self.variant == COMPLEMENT and len(fractions) != 1:
            raise CalibrationError(
                f"Complement({self.k}) needs the calibrated pi/{self.k} fraction as reference"
            )
        object.__setattr__(self, "reference_fractions", fractions)

    @property
    def target_angle(self):
        """Target rotation angle (degrees) of the pulse under calibration."""
        if self.variant == PI:
            return 180.0
        if self.variant == PI_OVER_K:
            return 180.0 / self.k
        return 180.0 - 180.0 / self.k

    @property
    def partner_angle(self):
        """Angle (degrees) of the calibrated partner pulse, complement variant only."""
        return 180.0 / self.k if self.variant == COMPLEMENT else None

    def group_fractions(self, alpha_fraction):
        """Fractions of pi of the pulses in one repetition group."""
        if self.variant == PI:
            return [alpha_fraction]
        if self.variant == PI_OVER_K:
            return [alpha_fraction] * self.k
        return [self.reference_fractions[0], alpha_fraction]

    def pulses_under_test(self, n):
        """Number of pulses of the calibrated gate after n groups."""
        return n * (self.k if self.variant == PI_OVER_K else 1)


def variant_for_angle(theta):
    """
    Pick the N-pulse variant that calibrates a rotation angle.

    Args:
        theta (float): Target angle in degrees, in (0, 180]

    Returns:
        tuple: (variant, k)

    Raises:
        CalibrationError: If theta is neither 180/k nor 180 - 180/k for an integer k
    """
    if np.isclose(theta, 180.0):
        return PI, 1
    ratio = 180.0 / theta
    if np.isclose(ratio, round(ratio), atol=1e-9) and round(ratio) >= 2:
        return PI_OVER_K, int(round(ratio))
    ratio = 180.0 / (180.0 - theta)
    if np.isclose(ratio, round(ratio), atol=1e-9) and round(ratio) >= 2:
        return COMPLEMENT, int(round(ratio))
    raise CalibrationError(f"No N-pulse sequence calibrates {theta} degrees")


def default_n_values(variant, n_max=150, step=5, step_complement=3):
    """N grid 0..n_max in steps of 5 (3 for the complement variant)."""
    use = step_complement if variant == COMPLEMENT else step
    return tuple(range(0, int(n_max) + 1, int(use)))


def spec_for_angle(theta, n_values=None, reference_fraction=None, **grid):
    """
    Build the CalSequenceSpec for a target angle.

    Args:
        theta (float): Target angle in degrees
        n_values (sequence, optional): Explicit N grid
        reference_fraction (float, optional): Calibrated partner fraction for the
            complement variant; defaults to 1/k
        **grid: n_max, step, step_complement forwarded to default_n_values

    Returns:
        CalSequenceSpec: The spec
    """
    variant, k = variant_for_angle(theta)
    if n_values is None:
        n_values = default_n_values(variant, **grid)
    refs = ()
    if variant == COMPLEMENT:
        refs = (1.0 / k if reference_fraction is None else reference_fraction,)
    return CalSequenceSpec(variant=variant, k=k, n_values=tuple(n_values), reference_fractions=refs)


def build_sequence(spec, n, gate_set):
    """
    Realise the pulse list of one N-pulse measurement.

    The initialisation X90 uses whatever amplitude the gate set currently holds;
    its error is not amplified and is ignored by the fit model.

    Args:
        spec (CalSequenceSpec): Sequence description
        n (int): Number of repetition groups (0 gives the init pulse only)
        gate_set (GateSet): Source of pulse amplitudes

    Returns:
        list: GateSpec list
    """
    if n < 0:
        raise CalibrationError(f"N must be non-negative, got {n}")
    gates = [gate_set.x(90.0)]
    target = gate_set.x(spec.target_angle)
    if spec.variant == PI:
        group = [target]
    elif spec.variant == PI_OVER_K:
        group = [target] * spec.k
    else:
        group = [gate_set.x(spec.partner_angle), target]
    gap = getattr(gate_set, "idle_gap", 0.0)
    if gap > 0:
        group = [g for pulse in group for g in (GateSpec.idle(gap), pulse)]
    return gates + group * int(n)
