"""
Exception hierarchy for the QD-MNP simulator
"""


class SimulationError(Exception):
    """Base class for every error raised by the simulator"""


class ConfigError(SimulationError, ValueError):
    """Invalid configuration file or command-line argument"""


class ParameterError(SimulationError, ValueError):
    """A parameter record violates its type invariants"""


class TableParseError(SimulationError, ValueError):
    """Malformed row in a permittivity table"""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class TableValidationError(SimulationError, ValueError):
    """Permittivity table parsed but violates its invariants"""


class OutOfDomainError(SimulationError, ValueError):
    """Requested energy lies outside the tabulated range"""


class NoResonanceError(SimulationError):
    """Re eps_m + 2 eps_b never changes sign in the table"""


class ModelViolationError(SimulationError):
    """Quasi-mode reduction is invalid for this material"""


class DimensionError(SimulationError, ValueError):
    """Operators or states live on different Hilbert spaces"""


class NonUniqueSteadyStateError(SimulationError):
    """Bordered steady-state system is singular"""


class ConvergenceError(SimulationError):
    """A solver finished with a residual above tolerance"""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class StiffnessError(SimulationError):
    """Time step underflow during propagation"""


class GridError(SimulationError, ValueError):
    """Invalid or too short time grid"""


class UndefinedCorrelationError(SimulationError):
    """Normalising intensity too small for a correlation function"""


class FockCutoffError(SimulationError):
    """Observable did not converge below the Fock cutoff cap"""


class NumericalDegeneracyError(SimulationError):
    """Singular linear-response system"""


class MeanFieldConvergenceError(ConvergenceError):
    """Damped mean-field iteration did not reach its fixed point"""


class NotFoundError(SimulationError):
    """Requested spectral feature not present in a scan"""
