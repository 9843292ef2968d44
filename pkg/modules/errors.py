"""
Exception hierarchy for the toolkit.
Every error carries the tag of the module that raised it so the CLI can
report `[module] message` and pick the right exit code.
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""

    module = "toolkit"

    def __init__(self, message, module=None):
        super().__init__(message)
        if module is not None:
            self.module = module

    def __str__(self):
        return f"[{self.module}] {super().__str__()}"


class ConfigError(ToolkitError):
    """Experiment configuration failed validation."""

    module = "cli"

    def __init__(self, problems):
        """
        Args:
            problems (list): Field-path diagnostics, one string per problem
        """
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class FitError(ToolkitError):
    """A least-squares fit could not be carried out or did not converge."""

    module = "fitting"

    def __init__(self, message, outcome=None):
        super().__init__(message)
        self.outcome = outcome


class NonFiniteModelError(FitError):
    """The model returned NaN or inf during a fit."""

    def __init__(self, params):
        self.params = list(params)
        super().__init__(f"Model output is not finite at parameters {self.params}")


class SimulationError(ToolkitError):
    """The qutrit simulator produced an invalid state or superoperator."""

    module = "qutrit-sim"


class ReadoutError(ToolkitError):
    """Invalid populations or confusion matrix."""

    module = "readout"


class TransferRangeError(ToolkitError):
    """Amplitude outside the configured drive-line range."""

    module = "driveline"


class AngleModelError(ToolkitError):
    """Fitted angle model is not monotonic on [0, 1]."""

    module = "driveline"

    def __init__(self, message, a=None, b=None):
        super().__init__(message)
        self.a = a
        self.b = b


class CalibrationError(ToolkitError):
    """N-pulse calibration failed (rejected fit or no convergence)."""

    module = "npulse-cal"

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class CapabilityError(ToolkitError):
    """A submission exceeds the backend's capability descriptor."""

    module = "sim-backend-adapter"


class BenchmarkError(ToolkitError):
    """Benchmark analysis failed."""

    module = "benchmarking"
