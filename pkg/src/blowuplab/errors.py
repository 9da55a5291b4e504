"""Exception types shared across the package."""


class BlowupLabError(Exception):
    """Base class for all library errors."""


class DomainError(BlowupLabError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ChartDomainError(DomainError):
    """Point not admissible for the requested chart or transition map."""


class SingularMapError(DomainError):
    """Map evaluated on its singular locus (e.g. r = 0 when recovering a)."""


class SingularCoefficientError(DomainError):
    """A chart coefficient such as a**(-3/2) is evaluated below its floor."""


class ResonanceError(BlowupLabError, ArithmeticError):
    """Homological operator is singular or too badly conditioned."""


class StiffnessError(BlowupLabError, RuntimeError):
    """Integrator step size collapsed before reaching the requested time."""


class ConfigError(BlowupLabError, ValueError):
    """Invalid run configuration (violated parameter constraint, bad key)."""
